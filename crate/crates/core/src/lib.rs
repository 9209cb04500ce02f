//! Uncoupled learning dynamics for finite extensive-form games of perfect
//! recall, together with brute-force and dynamic-programming verifiers that
//! certify empirical play against four correlated-equilibrium refinements
//! (agent-form, extensive-form, autonomous, and forgiving).
//!
//! The crate is organized around five modules:
//!
//! - [`game`]: the immutable game tree and the combinatorial primitives on
//!   pure strategy profiles (observation, reachability, action overrides,
//!   signal histories, deviation utilities).
//! - [`format`](mod@format): a line-oriented text format for game trees
//!   plus the built-in benchmark games.
//! - [`regret`]: internal and external regret-matching rows, the two
//!   action-selection subroutines the learners are built from.
//! - [`learn`]: the repeated-play procedures. `run_fce` converges to
//!   forgiving correlated equilibria; `run_efce` is the low-memory variant
//!   converging to extensive-form correlated equilibria.
//! - [`audit`]: regret computation over recorded traces, empirical signal
//!   extraction, the four equilibrium verifiers, and the regret
//!   decomposition inequality checks.

pub mod audit;
pub mod format;
pub mod game;
pub mod learn;
pub mod regret;

pub use game::{GameTree, InfosetId, NodeId, PureProfile};
pub use learn::{run_efce, run_fce, LearnConfig, PlayTrace, Procedure};
