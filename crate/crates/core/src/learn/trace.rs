//! Recorded runs and their on-disk format.
//!
//! Traces serialize to a line-delimited text format, version-tagged on the
//! first line. Identical (game, procedure, steps, seed, config) runs
//! produce byte-identical files.

use super::{LearnConfig, Procedure};
use crate::game::{GameTree, PureProfile};
use std::io::{self, BufRead, Write};

pub const TRACE_FORMAT_VERSION: u32 = 1;

/// One timestep: the complete profile (a choice at every infoset, on and
/// off the path), the realized outcome of every chance node, and the
/// realized payoff vector.
#[derive(Debug, Clone, PartialEq)]
pub struct StepRecord {
    pub choices: Vec<usize>,
    pub chance: Vec<usize>,
    pub payoffs: Vec<f64>,
}

impl StepRecord {
    pub fn profile(&self) -> PureProfile {
        PureProfile { choices: self.choices.clone(), chance: Some(self.chance.clone()) }
    }
}

/// The ordered record of profiles produced by a learning run, together
/// with the seed, config snapshot, and final random-stream positions
/// needed to resume it exactly.
#[derive(Debug, Clone, PartialEq)]
pub struct PlayTrace {
    pub game_name: String,
    pub players: usize,
    pub infosets: usize,
    pub chance_nodes: usize,
    pub procedure: Procedure,
    pub seed: u64,
    pub config: LearnConfig,
    pub steps: Vec<StepRecord>,
    /// Word position of each stream at the end of the run: one per player,
    /// then chance.
    pub rng_positions: Vec<u128>,
}

impl PlayTrace {
    pub fn empty(game: &GameTree, procedure: Procedure, seed: u64, config: LearnConfig) -> Self {
        PlayTrace {
            game_name: game.name().to_string(),
            players: game.num_players(),
            infosets: game.num_infosets(),
            chance_nodes: game.chance_nodes().len(),
            procedure,
            seed,
            config,
            steps: Vec::new(),
            rng_positions: vec![0; game.num_players() + 1],
        }
    }

    /// Wraps externally produced complete profiles as a trace, computing
    /// the realized payoffs by playout. Scripted and fuzz-generated traces
    /// audit exactly like recorded ones.
    pub fn from_profiles(
        game: &GameTree,
        procedure: Procedure,
        seed: u64,
        profiles: &[PureProfile],
    ) -> Self {
        let mut trace = Self::empty(game, procedure, seed, LearnConfig::default());
        for profile in profiles {
            trace.steps.push(StepRecord {
                choices: profile.choices.clone(),
                chance: profile.chance.clone().unwrap_or_default(),
                payoffs: game.playout(profile).to_vec(),
            });
        }
        trace
    }

    pub fn len(&self) -> u64 {
        self.steps.len() as u64
    }

    pub fn is_empty(&self) -> bool {
        self.steps.is_empty()
    }

    pub fn write_to<W: Write>(&self, mut w: W) -> io::Result<()> {
        writeln!(w, "fcetrace {TRACE_FORMAT_VERSION}")?;
        writeln!(w, "game {}", self.game_name)?;
        writeln!(w, "shape {} {} {}", self.players, self.infosets, self.chance_nodes)?;
        writeln!(w, "proc {}", self.procedure.as_str())?;
        writeln!(w, "seed {}", self.seed)?;
        let mu = match self.config.mu_override {
            Some(v) => v.to_string(),
            None => "default".to_string(),
        };
        writeln!(w, "config mu={mu} rowcap={}", self.config.row_cap)?;
        let positions: Vec<String> = self.rng_positions.iter().map(u128::to_string).collect();
        writeln!(w, "rngpos {}", positions.join(" "))?;
        let join_usize =
            |v: &[usize]| v.iter().map(usize::to_string).collect::<Vec<_>>().join(" ");
        for step in &self.steps {
            let payoffs: Vec<String> = step.payoffs.iter().map(f64::to_string).collect();
            writeln!(
                w,
                "s {} |{} | {}",
                join_usize(&step.choices),
                if step.chance.is_empty() {
                    String::new()
                } else {
                    format!(" {}", join_usize(&step.chance))
                },
                payoffs.join(" ")
            )?;
        }
        Ok(())
    }

    pub fn to_text(&self) -> String {
        let mut out = Vec::new();
        self.write_to(&mut out).expect("writing to a Vec cannot fail");
        String::from_utf8(out).expect("trace text is ASCII")
    }

    pub fn read_from<R: BufRead>(r: R) -> Result<Self, TraceError> {
        let mut lines = r.lines().enumerate();
        let mut next_line = |what: &str| -> Result<(usize, String), TraceError> {
            match lines.next() {
                Some((n, Ok(line))) => Ok((n + 1, line)),
                Some((_, Err(e))) => Err(TraceError::Io(e)),
                None => Err(TraceError::Format {
                    line: 0,
                    message: format!("missing {what} line"),
                }),
            }
        };
        let bad = |line: usize, message: String| TraceError::Format { line, message };

        let (n, header) = next_line("version")?;
        let version = header
            .strip_prefix("fcetrace ")
            .ok_or_else(|| bad(n, "expected `fcetrace <version>`".into()))?;
        if version.trim() != TRACE_FORMAT_VERSION.to_string() {
            return Err(TraceError::Version { found: version.trim().to_string() });
        }
        let (n, game_line) = next_line("game")?;
        let game_name = game_line
            .strip_prefix("game ")
            .ok_or_else(|| bad(n, "expected `game <name>`".into()))?
            .to_string();
        let (n, shape) = next_line("shape")?;
        let nums: Vec<usize> = shape
            .strip_prefix("shape ")
            .map(|s| s.split_whitespace().filter_map(|t| t.parse().ok()).collect())
            .unwrap_or_default();
        if nums.len() != 3 {
            return Err(bad(n, "expected `shape <players> <infosets> <chance>`".into()));
        }
        let (n, proc_line) = next_line("proc")?;
        let procedure: Procedure = proc_line
            .strip_prefix("proc ")
            .ok_or_else(|| bad(n, "expected `proc <fce|efce>`".into()))?
            .parse()
            .map_err(|e: String| bad(n, e))?;
        let (n, seed_line) = next_line("seed")?;
        let seed: u64 = seed_line
            .strip_prefix("seed ")
            .and_then(|s| s.trim().parse().ok())
            .ok_or_else(|| bad(n, "expected `seed <u64>`".into()))?;
        let (n, config_line) = next_line("config")?;
        let config = parse_config(&config_line).ok_or_else(|| {
            bad(n, "expected `config mu=<default|f64> rowcap=<u64>`".into())
        })?;
        let (n, pos_line) = next_line("rngpos")?;
        let rng_positions: Vec<u128> = pos_line
            .strip_prefix("rngpos ")
            .map(|s| s.split_whitespace().filter_map(|t| t.parse().ok()).collect())
            .unwrap_or_default();
        if rng_positions.len() != nums[0] + 1 {
            return Err(bad(n, format!("expected {} rng positions", nums[0] + 1)));
        }

        let mut steps = Vec::new();
        for (n, line) in lines {
            let line = line.map_err(TraceError::Io)?;
            if line.trim().is_empty() {
                continue;
            }
            let body = line
                .strip_prefix("s ")
                .ok_or_else(|| bad(n + 1, "expected step line `s ... | ... | ...`".into()))?;
            let parts: Vec<&str> = body.split('|').collect();
            if parts.len() != 3 {
                return Err(bad(n + 1, "step line needs 3 `|`-separated segments".into()));
            }
            let parse_usizes = |s: &str| -> Option<Vec<usize>> {
                s.split_whitespace().map(|t| t.parse().ok()).collect()
            };
            let choices = parse_usizes(parts[0])
                .filter(|v| v.len() == nums[1])
                .ok_or_else(|| bad(n + 1, "bad choices segment".into()))?;
            let chance = parse_usizes(parts[1])
                .filter(|v| v.len() == nums[2])
                .ok_or_else(|| bad(n + 1, "bad chance segment".into()))?;
            let payoffs: Option<Vec<f64>> =
                parts[2].split_whitespace().map(|t| t.parse().ok()).collect();
            let payoffs = payoffs
                .filter(|v| v.len() == nums[0])
                .ok_or_else(|| bad(n + 1, "bad payoffs segment".into()))?;
            steps.push(StepRecord { choices, chance, payoffs });
        }
        Ok(PlayTrace {
            game_name,
            players: nums[0],
            infosets: nums[1],
            chance_nodes: nums[2],
            procedure,
            seed,
            config,
            steps,
            rng_positions,
        })
    }

    pub fn from_text(text: &str) -> Result<Self, TraceError> {
        Self::read_from(text.as_bytes())
    }
}

fn parse_config(line: &str) -> Option<LearnConfig> {
    let rest = line.strip_prefix("config ")?;
    let mut mu_override = None;
    let mut row_cap = None;
    for token in rest.split_whitespace() {
        let (key, value) = token.split_once('=')?;
        match key {
            "mu" => {
                mu_override = if value == "default" {
                    Some(None)
                } else {
                    Some(Some(value.parse().ok()?))
                }
            }
            "rowcap" => row_cap = Some(value.parse().ok()?),
            _ => return None,
        }
    }
    Some(LearnConfig { mu_override: mu_override?, row_cap: row_cap? })
}

#[derive(Debug, thiserror::Error)]
pub enum TraceError {
    #[error(transparent)]
    Io(#[from] io::Error),
    #[error("trace line {line}: {message}")]
    Format { line: usize, message: String },
    #[error("unsupported trace format version `{found}`, expected {TRACE_FORMAT_VERSION}")]
    Version { found: String },
}
