//! Batch experiment runner: parse a game, run a learning procedure, audit
//! the trace, and emit convergence tables.

use clap::{Args, Parser, Subcommand};
use fcelab_core::audit::{
    empirical_signal, validate_signal_weights, EmpiricalSignal, TraceAudit,
};
use fcelab_core::format::builtin::builtin_game;
use fcelab_core::format::parse_game;
use fcelab_core::game::GameTree;
use fcelab_core::learn::{resume, run_efce, run_fce, LearnConfig, PlayTrace, Procedure};
use serde_json::json;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

/// Learn correlating signals in extensive-form games and audit them
/// against four correlated-equilibrium refinements.
#[derive(Parser)]
#[command(name = "fcelab", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a learning procedure and write the trace, regret trajectories,
    /// and a summary.
    Run(RunArgs),
    /// Check a signal file against all four equilibrium definitions.
    Verify(VerifyArgs),
    /// Check the regret decomposition inequalities on a recorded trace.
    Gapcheck(GapcheckArgs),
}

#[derive(Args)]
struct RunArgs {
    /// Game file path, or `builtin:<name>`.
    #[arg(long)]
    game: String,
    /// Learning procedure.
    #[arg(long, value_parser = parse_proc)]
    proc: Procedure,
    /// Number of timesteps.
    #[arg(long)]
    steps: u64,
    /// Seed, or a comma-separated list for a sweep. Falls back to the
    /// FCELAB_SEED environment variable, then 0.
    #[arg(long)]
    seed: Option<String>,
    /// Flat override of the regret-matching normalizer.
    #[arg(long)]
    mu: Option<f64>,
    /// Audit cadence: every k steps (k must divide --steps), 0 for a
    /// final-only audit. Default: geometric checkpoints at powers of two.
    #[arg(long)]
    audit_every: Option<u64>,
    /// Output directory.
    #[arg(long, default_value = "out")]
    out: PathBuf,
    /// Worker threads for a seed sweep.
    #[arg(long, default_value_t = 1)]
    jobs: usize,
    /// Cap on exhaustive enumeration inside the verifiers.
    #[arg(long, default_value_t = 1_000_000)]
    profile_cap: u64,
    /// Abort when the learner holds more regret rows than this.
    #[arg(long, default_value_t = 10_000_000)]
    row_cap: u64,
    /// Rewrite the trace file every k steps (0: only at the end).
    #[arg(long, default_value_t = 0)]
    checkpoint_every: u64,
}

#[derive(Args)]
struct VerifyArgs {
    /// Game file path, or `builtin:<name>`.
    #[arg(long)]
    game: String,
    /// Signal file: lines of `weight <w> profile <infoset>=<action> ...`.
    #[arg(long)]
    signal: PathBuf,
    /// Every epsilon must be at most this for exit code 0.
    #[arg(long, default_value_t = 1e-9)]
    threshold: f64,
    #[arg(long, default_value_t = 1_000_000)]
    profile_cap: u64,
}

#[derive(Args)]
struct GapcheckArgs {
    /// Game file path, or `builtin:<name>`.
    #[arg(long)]
    game: String,
    /// Trace file recorded by `run`.
    #[arg(long)]
    trace: PathBuf,
    #[arg(long, default_value_t = 1_000_000)]
    profile_cap: u64,
}

fn parse_proc(s: &str) -> Result<Procedure, String> {
    s.parse()
}

struct Failure {
    code: u8,
    message: String,
}

impl Failure {
    fn new(code: u8, message: impl Into<String>) -> Self {
        Failure { code, message: message.into() }
    }
}

type CmdResult = Result<u8, Failure>;

fn main() -> ExitCode {
    let cli = Cli::parse();
    let outcome = match &cli.command {
        Command::Run(args) => cmd_run(args),
        Command::Verify(args) => cmd_verify(args),
        Command::Gapcheck(args) => cmd_gapcheck(args),
    };
    match outcome {
        Ok(code) => ExitCode::from(code),
        Err(failure) => {
            eprintln!("{}", failure.message);
            ExitCode::from(failure.code)
        }
    }
}

/// Loads `builtin:<name>` or a file, reporting diagnostics as
/// `file:line:col: code: message` on failure.
fn load_game(source: &str) -> Result<GameTree, Failure> {
    if let Some(name) = source.strip_prefix("builtin:") {
        return builtin_game(name).map_err(|e| Failure::new(2, e.to_string()));
    }
    let text = fs::read_to_string(source)
        .map_err(|e| Failure::new(2, format!("{source}: {e}")))?;
    parse_game(&text).map_err(|diag| Failure::new(2, format!("{source}:{diag}")))
}

fn seeds_of(args: &RunArgs) -> Result<Vec<u64>, Failure> {
    let source = match &args.seed {
        Some(s) => s.clone(),
        None => std::env::var("FCELAB_SEED").unwrap_or_else(|_| "0".to_string()),
    };
    source
        .split(',')
        .map(|tok| {
            tok.trim()
                .parse::<u64>()
                .map_err(|_| Failure::new(2, format!("bad seed `{tok}`")))
        })
        .collect()
}

fn cmd_run(args: &RunArgs) -> CmdResult {
    let game = load_game(&args.game)?;
    if args.steps == 0 {
        return Err(Failure::new(2, "--steps must be at least 1"));
    }
    if let Some(k) = args.audit_every {
        if k > 0 && !args.steps.is_multiple_of(k) {
            return Err(Failure::new(2, format!("--audit-every {k} does not divide --steps")));
        }
    }
    let seeds = seeds_of(args)?;
    let multi = seeds.len() > 1;
    let jobs = args.jobs.max(1).min(seeds.len());
    let failures: Vec<Failure> = std::thread::scope(|scope| {
        let game = &game;
        let mut handles = Vec::new();
        for chunk in seeds.chunks(seeds.len().div_ceil(jobs)) {
            handles.push(scope.spawn(move || {
                let mut failures = Vec::new();
                for &seed in chunk {
                    let dir = if multi {
                        args.out.join(format!("seed-{seed}"))
                    } else {
                        args.out.clone()
                    };
                    if let Err(failure) = run_one(game, args, seed, &dir) {
                        failures.push(failure);
                    }
                }
                failures
            }));
        }
        handles.into_iter().flat_map(|h| h.join().expect("worker panicked")).collect()
    });
    match failures.into_iter().next() {
        None => Ok(0),
        Some(failure) => Err(failure),
    }
}

fn run_one(game: &GameTree, args: &RunArgs, seed: u64, dir: &Path) -> Result<(), Failure> {
    let config = LearnConfig { mu_override: args.mu, row_cap: args.row_cap };
    fs::create_dir_all(dir).map_err(|e| Failure::new(2, format!("{}: {e}", dir.display())))?;
    let start = Instant::now();

    let runner = |game: &GameTree, steps: u64, seed: u64, config: &LearnConfig| match args.proc {
        Procedure::Fce => run_fce(game, steps, seed, config),
        Procedure::Efce => run_efce(game, steps, seed, config),
    };
    let trace_path = dir.join("trace.txt");
    let learner_failure = |e: fcelab_core::learn::LearnError| {
        Failure::new(3, format!("seed {seed}: {e}"))
    };
    let trace = if args.checkpoint_every == 0 {
        runner(game, args.steps, seed, &config).map_err(learner_failure)?
    } else {
        let mut trace =
            runner(game, args.steps.min(args.checkpoint_every), seed, &config)
                .map_err(learner_failure)?;
        write_trace(&trace, &trace_path)?;
        while trace.len() < args.steps {
            let extra = args.checkpoint_every.min(args.steps - trace.len());
            trace = resume(game, &trace, extra).map_err(learner_failure)?;
            write_trace(&trace, &trace_path)?;
        }
        trace
    };
    write_trace(&trace, &trace_path)?;

    let checkpoints = match args.audit_every {
        Some(0) => vec![args.steps],
        Some(k) => (1..=args.steps / k).map(|i| i * k).collect(),
        None => {
            let mut points = Vec::new();
            let mut t = 1;
            while t < args.steps {
                points.push(t);
                t *= 2;
            }
            points.push(args.steps);
            points
        }
    };
    let audit_failure = |e: fcelab_core::audit::AuditError| {
        let code = if matches!(e, fcelab_core::audit::AuditError::Cap(_)) { 3 } else { 2 };
        Failure::new(code, format!("seed {seed}: {e}"))
    };
    let mut csv = String::from("step,family,key,avg_positive_regret\n");
    for &t in &checkpoints {
        let audit = TraceAudit::from_trace_prefix(game, &trace, t).map_err(audit_failure)?;
        for entry in audit.regret_report().entries {
            csv += &format!("{t},{},{},{}\n", entry.family.as_str(), entry.key, entry.value);
        }
    }
    fs::write(dir.join("regrets.csv"), csv)
        .map_err(|e| Failure::new(2, format!("regrets.csv: {e}")))?;

    let audit = TraceAudit::from_trace(game, &trace).map_err(audit_failure)?;
    let signal = empirical_signal(&trace).map_err(audit_failure)?;
    let epsilons = TraceAudit::from_signal(game, &signal, args.profile_cap)
        .map_err(audit_failure)?
        .epsilon_report();
    let summary = json!({
        "game": game.name(),
        "proc": args.proc.as_str(),
        "steps": args.steps,
        "seed": seed,
        "payoff_range": game.payoff_range_max(),
        "wall_clock_seconds": start.elapsed().as_secs_f64(),
        "distinct_profiles": signal.support_size(),
        "epsilons": {
            "afce": epsilons.afce,
            "efce": epsilons.efce,
            "ace": epsilons.ace,
            "fce": epsilons.fce,
            "fce_local": epsilons.fce_local,
        },
        "max_regrets": {
            "cfir": audit.max_cfir_pos().0,
            "ar": audit.max_agent_regret(),
            "ir": audit.max_internal_regret(),
            "cfr": audit.max_counterfactual_regret_pos(),
        },
    });
    let mut file = fs::File::create(dir.join("summary.json"))
        .map_err(|e| Failure::new(2, format!("summary.json: {e}")))?;
    serde_json::to_writer_pretty(&mut file, &summary)
        .map_err(|e| Failure::new(2, format!("summary.json: {e}")))?;
    writeln!(file).ok();
    println!(
        "seed {seed}: T={} fce_local={:.6} afce={:.6} efce={:.6} ace={:.6} fce={:.6} ({:.2}s)",
        args.steps,
        epsilons.fce_local,
        epsilons.afce,
        epsilons.efce,
        epsilons.ace,
        epsilons.fce,
        start.elapsed().as_secs_f64()
    );
    Ok(())
}

fn write_trace(trace: &PlayTrace, path: &Path) -> Result<(), Failure> {
    let mut file = fs::File::create(path)
        .map_err(|e| Failure::new(2, format!("{}: {e}", path.display())))?;
    trace
        .write_to(&mut file)
        .map_err(|e| Failure::new(2, format!("{}: {e}", path.display())))
}

fn cmd_verify(args: &VerifyArgs) -> CmdResult {
    let game = load_game(&args.game)?;
    let text = fs::read_to_string(&args.signal)
        .map_err(|e| Failure::new(2, format!("{}: {e}", args.signal.display())))?;
    let signal = parse_signal(&game, &text)
        .map_err(|msg| Failure::new(2, format!("{}: {msg}", args.signal.display())))?;
    validate_signal_weights(&signal).map_err(|e| Failure::new(2, e.to_string()))?;
    let audit = TraceAudit::from_signal(&game, &signal, args.profile_cap).map_err(|e| {
        let code =
            if matches!(e, fcelab_core::audit::AuditError::Cap(_)) { 3 } else { 2 };
        Failure::new(code, e.to_string())
    })?;
    let report = audit.epsilon_report();
    println!("afce_epsilon      {:.9}", report.afce);
    println!("efce_epsilon      {:.9}", report.efce);
    println!("ace_epsilon       {:.9}", report.ace);
    println!("fce_epsilon       {:.9}", report.fce);
    println!("fce_local_epsilon {:.9}", report.fce_local);
    println!("payoff_range      {:.9}", report.payoff_range);
    println!(
        "nesting chain (fce >= ace >= efce >= afce): {}",
        if report.nesting_ok(1e-9) { "holds" } else { "violated" }
    );
    let ok = report.max_epsilon() <= args.threshold;
    println!(
        "thresholds: {} (max epsilon {:.9} vs {:.9})",
        if ok { "met" } else { "not met" },
        report.max_epsilon(),
        args.threshold
    );
    Ok(if ok { 0 } else { 1 })
}

/// Signal file grammar: `weight <w> profile <infoset>=<action> ...`, one
/// complete profile per line; `#` comments. Infosets resolve by bare label
/// when unambiguous, or by the qualified `p<N>/<label>` form.
fn parse_signal(game: &GameTree, text: &str) -> Result<EmpiricalSignal, String> {
    let mut entries = Vec::new();
    for (lineno, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let mut tokens = line.split_whitespace();
        let bad = |msg: String| format!("line {}: {msg}", lineno + 1);
        if tokens.next() != Some("weight") {
            return Err(bad("expected `weight <w> profile ...`".into()));
        }
        let weight: f64 = tokens
            .next()
            .and_then(|w| w.parse().ok())
            .ok_or_else(|| bad("bad weight".into()))?;
        if tokens.next() != Some("profile") {
            return Err(bad("expected `profile` after the weight".into()));
        }
        let mut choices = vec![usize::MAX; game.num_infosets()];
        for assign in tokens {
            let (label, action) = assign
                .split_once('=')
                .ok_or_else(|| bad(format!("expected `<infoset>=<action>`, found `{assign}`")))?;
            let infoset = resolve_infoset(game, label).map_err(&bad)?;
            let info = game.infoset(infoset);
            let action_idx = info
                .actions
                .iter()
                .position(|a| a == action)
                .ok_or_else(|| bad(format!("infoset `{label}` has no action `{action}`")))?;
            choices[infoset.index()] = action_idx;
        }
        if let Some(missing) = choices.iter().position(|&c| c == usize::MAX) {
            return Err(bad(format!(
                "profile is incomplete: no action for infoset `{}`",
                game.qualified_label(fcelab_core::InfosetId(missing as u32))
            )));
        }
        entries.push((choices, weight));
    }
    if entries.is_empty() {
        return Err("signal file has no profiles".to_string());
    }
    Ok(EmpiricalSignal::new(entries))
}

fn resolve_infoset(game: &GameTree, label: &str) -> Result<fcelab_core::InfosetId, String> {
    let qualified: Vec<_> =
        game.infoset_ids().filter(|&i| game.qualified_label(i) == label).collect();
    if let [unique] = qualified[..] {
        return Ok(unique);
    }
    let bare: Vec<_> =
        game.infoset_ids().filter(|&i| game.infoset(i).label == label).collect();
    match bare[..] {
        [unique] => Ok(unique),
        [] => Err(format!("unknown infoset `{label}`")),
        _ => Err(format!(
            "infoset label `{label}` is ambiguous; qualify it as `p<N>/{label}`"
        )),
    }
}

fn cmd_gapcheck(args: &GapcheckArgs) -> CmdResult {
    let game = load_game(&args.game)?;
    let text = fs::read_to_string(&args.trace)
        .map_err(|e| Failure::new(2, format!("{}: {e}", args.trace.display())))?;
    let trace = PlayTrace::from_text(&text)
        .map_err(|e| Failure::new(2, format!("{}: {e}", args.trace.display())))?;
    if game.num_pure_profiles() > args.profile_cap as u128 {
        return Err(Failure::new(
            3,
            format!(
                "game too large for exhaustive oracle: {} profiles exceed cap {}",
                game.num_pure_profiles(),
                args.profile_cap
            ),
        ));
    }
    let audit = TraceAudit::from_trace(&game, &trace)
        .map_err(|e| Failure::new(2, e.to_string()))?;
    let report = audit.decomposition_gaps();
    println!(
        "{} inequalities checked at tolerance {:.0e}; max gap {:.3e}",
        report.entries.len(),
        report.tolerance,
        report.max_gap()
    );
    for violation in report.violations() {
        println!(
            "violated: {} at {} (gap {:.3e})",
            violation.kind.as_str(),
            violation.key,
            violation.gap
        );
    }
    Ok(if report.ok() { 0 } else { 1 })
}
