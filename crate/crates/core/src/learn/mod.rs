//! Repeated-play learning procedures.
//!
//! Both learners are uncoupled: a player's choice at timestep `t` is a
//! deterministic function of her own payoff observations, her own past
//! choices, and her own random stream. Each player draws from an
//! independent counter-based stream, and chance has its own, so a finished
//! run can be resumed bit-identically from its trace: the regret state is
//! rebuilt by replaying the recorded profiles (accumulation is
//! deterministic) and the streams are restored by word position.

mod efce;
mod fce;
mod trace;

pub use trace::{PlayTrace, StepRecord, TraceError, TRACE_FORMAT_VERSION};

use crate::game::{GameTree, InfosetId, PureProfile};
use efce::EfceRunner;
use fce::FceRunner;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha12Rng;
use serde::{Deserialize, Serialize};

/// Which learning procedure produced a run.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Procedure {
    /// Main procedure keyed by signal histories; converges to forgiving
    /// correlated equilibria. Memory grows with the number of distinct
    /// realized histories, at most one new row per infoset per step.
    Fce,
    /// Low-memory variant keyed by last observed recommendations on the
    /// path and by (ancestor, action, infoset) triples off it; converges
    /// to extensive-form correlated equilibria with state size polynomial
    /// in the game, independent of the horizon.
    Efce,
}

impl Procedure {
    pub fn as_str(self) -> &'static str {
        match self {
            Procedure::Fce => "fce",
            Procedure::Efce => "efce",
        }
    }
}

impl std::str::FromStr for Procedure {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "fce" => Ok(Procedure::Fce),
            "efce" => Ok(Procedure::Efce),
            other => Err(format!("unknown procedure `{other}`, expected `fce` or `efce`")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LearnConfig {
    /// Flat override of the regret-matching normalizer; the default policy
    /// is `2 * |A(I)| * (owner's payoff range)` per infoset, which keeps
    /// the switching probabilities a sub-distribution for every reachable
    /// regret magnitude.
    pub mu_override: Option<f64>,
    /// Abort the run when the learner would hold more regret rows than
    /// this.
    pub row_cap: u64,
}

impl Default for LearnConfig {
    fn default() -> Self {
        LearnConfig { mu_override: None, row_cap: 10_000_000 }
    }
}

#[derive(Debug, thiserror::Error)]
pub enum LearnError {
    #[error("learner memory cap exceeded at step {step}: {rows} regret rows > cap {cap}")]
    RowCapExceeded { step: u64, rows: u64, cap: u64 },
    #[error("trace was recorded on `{trace_game}` ({trace_infosets} infosets), not `{game}`")]
    GameMismatch { trace_game: String, trace_infosets: usize, game: String },
}

/// Default regret-matching normalizer for an infoset: the smallest
/// constant that keeps the switching probabilities a sub-distribution for
/// every reachable regret magnitude. Each average paired regret is bounded
/// by the owner's payoff range, and an action has `|A(I)| - 1` departure
/// targets.
pub fn default_mu(game: &GameTree, infoset: InfosetId) -> f64 {
    let range = game.payoff_range(game.player_of(infoset));
    let mu = (game.action_count(infoset) as f64 - 1.0) * range;
    if mu > 0.0 {
        mu
    } else {
        1.0
    }
}

fn mu_for(game: &GameTree, config: &LearnConfig, infoset: InfosetId) -> f64 {
    match config.mu_override {
        Some(mu) => mu,
        None => default_mu(game, infoset),
    }
}

/// One independent stream per player plus one for chance. Streams are
/// counter-based, so a saved word position restores them exactly.
struct Streams {
    players: Vec<ChaCha12Rng>,
    chance: ChaCha12Rng,
}

impl Streams {
    fn fresh(seed: u64, players: usize) -> Self {
        let stream_rng = |stream: u64| {
            let mut rng = ChaCha12Rng::seed_from_u64(seed);
            rng.set_stream(stream);
            rng
        };
        Streams {
            players: (0..players).map(|p| stream_rng(p as u64 + 1)).collect(),
            chance: stream_rng(0),
        }
    }

    fn restore(seed: u64, players: usize, positions: &[u128]) -> Self {
        let mut streams = Self::fresh(seed, players);
        for (rng, &pos) in streams.players.iter_mut().zip(positions) {
            rng.set_word_pos(pos);
        }
        streams.chance.set_word_pos(positions[players]);
        streams
    }

    fn positions(&self) -> Vec<u128> {
        let mut out: Vec<u128> = self.players.iter().map(|r| r.get_word_pos()).collect();
        out.push(self.chance.get_word_pos());
        out
    }

    /// Realizes every chance node for one timestep, in node order.
    fn sample_chance(&mut self, game: &GameTree) -> Vec<usize> {
        game.chance_nodes()
            .iter()
            .map(|node| {
                let mut u: f64 = self.chance.random();
                for (i, &p) in node.probs.iter().enumerate() {
                    if u < p {
                        return i;
                    }
                    u -= p;
                }
                node.probs.len() - 1
            })
            .collect()
    }
}

enum Runner {
    Fce(FceRunner),
    Efce(EfceRunner),
}

impl Runner {
    fn new(game: &GameTree, procedure: Procedure) -> Self {
        match procedure {
            Procedure::Fce => Runner::Fce(FceRunner::new(game)),
            Procedure::Efce => Runner::Efce(EfceRunner::new(game)),
        }
    }

    fn live_step(
        &mut self,
        game: &GameTree,
        config: &LearnConfig,
        streams: &mut Streams,
    ) -> StepRecord {
        match self {
            Runner::Fce(r) => r.live_step(game, config, streams),
            Runner::Efce(r) => r.live_step(game, config, streams),
        }
    }

    fn replay_step(&mut self, game: &GameTree, record: &StepRecord) {
        match self {
            Runner::Fce(r) => r.replay_step(game, record),
            Runner::Efce(r) => r.replay_step(game, record),
        }
    }

    fn row_count(&self) -> u64 {
        match self {
            Runner::Fce(r) => r.row_count(),
            Runner::Efce(r) => r.row_count(),
        }
    }
}

fn drive(
    game: &GameTree,
    runner: &mut Runner,
    config: &LearnConfig,
    streams: &mut Streams,
    trace: &mut PlayTrace,
    extra: u64,
) -> Result<(), LearnError> {
    for _ in 0..extra {
        let record = runner.live_step(game, config, streams);
        trace.steps.push(record);
        let rows = runner.row_count();
        if rows > config.row_cap {
            return Err(LearnError::RowCapExceeded {
                step: trace.steps.len() as u64,
                rows,
                cap: config.row_cap,
            });
        }
    }
    trace.rng_positions = streams.positions();
    Ok(())
}

fn run(
    game: &GameTree,
    procedure: Procedure,
    steps: u64,
    seed: u64,
    config: &LearnConfig,
) -> Result<PlayTrace, LearnError> {
    let mut runner = Runner::new(game, procedure);
    let mut streams = Streams::fresh(seed, game.num_players());
    let mut trace = PlayTrace::empty(game, procedure, seed, config.clone());
    drive(game, &mut runner, config, &mut streams, &mut trace, steps)?;
    Ok(trace)
}

/// Runs the main procedure for `steps` timesteps.
///
/// Each timestep every player independently traverses her infosets in
/// depth-first preorder (so ancestors are chosen first), keys an internal
/// regret row by (infoset, partial signal history, last action under that
/// partial history), and selects through it. After all players have chosen
/// and chance is realized, every row keyed by a realized signal history at
/// a reachable infoset accumulates the one-shot gains.
///
/// All infosets are traversed, including off-path ones, because the
/// reachability gate references off-path choices and the recorded profile
/// must be complete.
pub fn run_fce(
    game: &GameTree,
    steps: u64,
    seed: u64,
    config: &LearnConfig,
) -> Result<PlayTrace, LearnError> {
    run(game, Procedure::Fce, steps, seed, config)
}

/// Runs the low-memory procedure for `steps` timesteps.
///
/// Part 1: at each observed infoset the player selects through an internal
/// regret row keyed by her last observed action there and accumulates it
/// with observation-gated one-shot gains. Part 2: at each off-path infoset
/// she selects through an external regret row keyed by (closest on-path
/// own ancestor, her action there, infoset), accumulating reachability-
/// gated gains; with no such ancestor she plays uniformly at random.
pub fn run_efce(
    game: &GameTree,
    steps: u64,
    seed: u64,
    config: &LearnConfig,
) -> Result<PlayTrace, LearnError> {
    run(game, Procedure::Efce, steps, seed, config)
}

fn check_trace(game: &GameTree, trace: &PlayTrace) -> Result<(), LearnError> {
    if trace.game_name != game.name()
        || trace.infosets != game.num_infosets()
        || trace.players != game.num_players()
        || trace.chance_nodes != game.chance_nodes().len()
    {
        return Err(LearnError::GameMismatch {
            trace_game: trace.game_name.clone(),
            trace_infosets: trace.infosets,
            game: game.name().to_string(),
        });
    }
    Ok(())
}

/// Extends a finished run by `extra` steps, bit-identically to an
/// uninterrupted run of the combined length: the learner state is rebuilt
/// by replaying the recorded steps and the random streams resume from
/// their saved word positions.
pub fn resume(game: &GameTree, trace: &PlayTrace, extra: u64) -> Result<PlayTrace, LearnError> {
    check_trace(game, trace)?;
    let mut runner = Runner::new(game, trace.procedure);
    for record in &trace.steps {
        runner.replay_step(game, record);
    }
    let mut streams = Streams::restore(trace.seed, game.num_players(), &trace.rng_positions);
    let config = trace.config.clone();
    let mut out = trace.clone();
    drive(game, &mut runner, &config, &mut streams, &mut out, extra)?;
    Ok(out)
}

/// Number of regret rows the main procedure holds after replaying `trace`;
/// grows at most one row per infoset per step.
pub fn fce_state_rows(game: &GameTree, trace: &PlayTrace) -> Result<u64, LearnError> {
    check_trace(game, trace)?;
    let mut runner = FceRunner::new(game);
    for record in &trace.steps {
        runner.replay_step(game, record);
    }
    Ok(runner.row_count())
}

/// (internal, external) row counts of the low-memory procedure after
/// replaying `trace`; bounded by the game size, independent of the horizon.
pub fn efce_state_rows(game: &GameTree, trace: &PlayTrace) -> Result<(u64, u64), LearnError> {
    check_trace(game, trace)?;
    let mut runner = EfceRunner::new(game);
    for record in &trace.steps {
        runner.replay_step(game, record);
    }
    Ok(runner.rows_by_kind())
}

fn realized_payoffs(game: &GameTree, profile: &PureProfile) -> Vec<f64> {
    game.playout(profile).to_vec()
}
