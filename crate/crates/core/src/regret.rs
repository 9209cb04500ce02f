//! The two action-selection subroutines the learners delegate to: internal
//! regret matching (repeat the previous action or depart to `b` with
//! probability proportional to the positive regret for not having switched
//! to `b`) and external regret matching (play `b` with probability
//! proportional to its positive regret).
//!
//! Rows store cumulative sums; averaging by visit count happens at read
//! time, so each update is O(actions).

use rand::Rng;

/// Internal-regret state over one action set: a cumulative regret
/// accumulator r(a→b) per ordered action pair, a visit count, and the last
/// action played.
#[derive(Debug, Clone)]
pub struct InternalRegretRow {
    actions: usize,
    /// Row-major `actions x actions`; the diagonal stays zero.
    regrets: Vec<f64>,
    visits: u64,
    last: Option<usize>,
}

impl InternalRegretRow {
    pub fn new(actions: usize) -> Self {
        assert!(actions > 0);
        InternalRegretRow { actions, regrets: vec![0.0; actions * actions], visits: 0, last: None }
    }

    /// Row whose conditioning action is already known, as when the row is
    /// keyed by a signal history that ends in `last`.
    pub fn with_last(actions: usize, last: usize) -> Self {
        assert!(last < actions);
        let mut row = Self::new(actions);
        row.last = Some(last);
        row
    }

    pub fn actions(&self) -> usize {
        self.actions
    }

    pub fn visits(&self) -> u64 {
        self.visits
    }

    pub fn last(&self) -> Option<usize> {
        self.last
    }

    pub fn regret(&self, from: usize, to: usize) -> f64 {
        self.regrets[from * self.actions + to]
    }

    /// Largest time-averaged positive regret over all ordered pairs,
    /// averaging by the given horizon.
    pub fn max_avg_positive(&self, horizon: u64) -> f64 {
        if horizon == 0 {
            return 0.0;
        }
        self.regrets.iter().cloned().fold(0.0, f64::max) / horizon as f64
    }

    /// Selects the next action. With last action `a`, departs to `b != a`
    /// with probability `max(0, r(a→b)) / (visits * mu)` and stays at `a`
    /// with the remainder; the caller's mu policy guarantees the switching
    /// mass is at most 1. On a first visit with no history the action is
    /// uniform random.
    pub fn step<R: Rng>(&self, mu: f64, rng: &mut R) -> usize {
        assert!(mu > 0.0, "mu must be positive");
        let Some(a) = self.last else {
            return rng.random_range(0..self.actions);
        };
        if self.visits == 0 {
            return a;
        }
        let scale = 1.0 / (self.visits as f64 * mu);
        let mut u: f64 = rng.random();
        for b in 0..self.actions {
            if b == a {
                continue;
            }
            let p = self.regret(a, b).max(0.0) * scale;
            if u < p {
                return b;
            }
            u -= p;
        }
        a
    }

    /// Adds one observation: `deltas[b]` is the gain from having switched
    /// the played action to `b`. Only the played action's pair row moves,
    /// matching the regret definitions, and the diagonal stays exactly zero.
    pub fn accumulate(&mut self, played: usize, deltas: &[f64]) {
        assert_eq!(deltas.len(), self.actions, "delta arity mismatch");
        assert!(played < self.actions);
        for (b, &d) in deltas.iter().enumerate() {
            if b != played {
                self.regrets[played * self.actions + b] += d;
            }
        }
        self.visits += 1;
        self.last = Some(played);
    }
}

/// External-regret state over one action set: a cumulative regret
/// accumulator per action and a visit count.
#[derive(Debug, Clone)]
pub struct ExternalRegretRow {
    regrets: Vec<f64>,
    visits: u64,
}

impl ExternalRegretRow {
    pub fn new(actions: usize) -> Self {
        assert!(actions > 0);
        ExternalRegretRow { regrets: vec![0.0; actions], visits: 0 }
    }

    pub fn actions(&self) -> usize {
        self.regrets.len()
    }

    pub fn visits(&self) -> u64 {
        self.visits
    }

    pub fn regret(&self, action: usize) -> f64 {
        self.regrets[action]
    }

    /// Plays `b` with probability proportional to `max(0, r(b))`; uniform
    /// random when no regret is positive.
    pub fn step<R: Rng>(&self, rng: &mut R) -> usize {
        let total: f64 = self.regrets.iter().map(|r| r.max(0.0)).sum();
        if total <= 0.0 {
            return rng.random_range(0..self.regrets.len());
        }
        let mut u: f64 = rng.random::<f64>() * total;
        for (b, r) in self.regrets.iter().enumerate() {
            let p = r.max(0.0);
            if u < p {
                return b;
            }
            u -= p;
        }
        self.regrets.len() - 1
    }

    pub fn accumulate(&mut self, deltas: &[f64]) {
        assert_eq!(deltas.len(), self.regrets.len(), "delta arity mismatch");
        for (r, &d) in self.regrets.iter_mut().zip(deltas) {
            *r += d;
        }
        self.visits += 1;
    }
}
