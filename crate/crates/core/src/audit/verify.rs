//! The four equilibrium verifiers.
//!
//! Each verifier reports the largest expected gain any deviation in its
//! family achieves against the audited distribution, in payoff units; the
//! distribution satisfies the corresponding equilibrium definition within
//! `eps` iff the verifier value is at most `eps`.
//!
//! Inner maxima run by backward induction (best fixed continuation for the
//! extensive-form check, best deviation plan over (infoset, signal
//! history) pairs for the autonomous and forgiving checks), which equals
//! exhaustive enumeration over the deviation family.

use super::{AuditError, EmpiricalSignal, EpsilonReport, TraceAudit};
use crate::game::{GameTree, InfosetId};
use std::collections::BTreeMap;

impl TraceAudit<'_> {
    /// Agent-form check: best one-shot deviation at an observed
    /// recommendation, returning to the recommendations afterward.
    pub fn afce_epsilon(&self) -> f64 {
        let mut best = f64::NEG_INFINITY;
        for infoset in self.game.infoset_ids() {
            let i = infoset.index();
            let n = self.game.action_count(infoset);
            let mut sums = vec![vec![0.0; n]; n];
            for play in &self.plays {
                if play.observed[i] {
                    let a = play.profile.choice(infoset);
                    for b in 0..n {
                        sums[a][b] += play.weight * play.deltas[i][b];
                    }
                }
            }
            for row in &sums {
                for &v in row {
                    best = best.max(v);
                }
            }
        }
        best
    }

    /// Extensive-form check: best fixed continuation strategy after
    /// observing (infoset, recommendation), receiving no recommendations
    /// afterward.
    pub fn efce_epsilon(&self) -> f64 {
        let mut best = f64::NEG_INFINITY;
        for infoset in self.game.infoset_ids() {
            let i = infoset.index();
            for a in 0..self.game.action_count(infoset) {
                let mut states = Vec::new();
                let mut baseline = 0.0;
                for (idx, play) in self.plays.iter().enumerate() {
                    if play.observed[i] && play.profile.choice(infoset) == a {
                        states.push((play.start[i].unwrap(), idx, play.weight));
                        baseline += play.weight * play.base[i];
                    }
                }
                let value = if states.is_empty() {
                    0.0
                } else {
                    self.best_response(&states, None) - baseline
                };
                best = best.max(value);
            }
        }
        best
    }

    /// Autonomous check: best deviation plan after observing an (infoset,
    /// signal history) pair, with recommendations continuing to arrive.
    /// Every group value is nonnegative (the plan that keeps following the
    /// recommendations gains zero), so unrealized pairs never matter.
    pub fn ace_epsilon(&self) -> f64 {
        self.plan_epsilon(false)
    }

    /// Forgiving check: like the autonomous check but conditioned on
    /// reachability instead of observation, so recommendation histories
    /// the player did not follow constrain the signal too.
    pub fn fce_epsilon(&self) -> f64 {
        self.plan_epsilon(true)
    }

    fn plan_epsilon(&self, reachable_gate: bool) -> f64 {
        type Group = (Vec<(crate::game::NodeId, usize, f64)>, f64);
        let mut groups: BTreeMap<(InfosetId, &[usize]), Group> = BTreeMap::new();
        for (idx, play) in self.plays.iter().enumerate() {
            for infoset in self.game.infoset_ids() {
                let i = infoset.index();
                let gated = if reachable_gate { play.reachable[i] } else { play.observed[i] };
                if !gated {
                    continue;
                }
                let entry = groups
                    .entry((infoset, play.history[i].as_slice()))
                    .or_insert_with(|| (Vec::new(), 0.0));
                entry.0.push((play.start[i].unwrap(), idx, play.weight));
                entry.1 += play.weight * play.base[i];
            }
        }
        let mut best: f64 = 0.0;
        for (states, baseline) in groups.values() {
            best = best.max(self.plan_value(states) - baseline);
        }
        best
    }

    /// One-shot form of the forgiving check: best single-action deviation
    /// per (infoset, signal history) pair under the reachability gate.
    /// Zero iff [`Self::fce_epsilon`] is zero.
    pub fn fce_local_epsilon(&self) -> f64 {
        self.max_cfir_pos().0
    }

    pub fn epsilon_report(&self) -> EpsilonReport {
        EpsilonReport {
            afce: self.afce_epsilon(),
            efce: self.efce_epsilon(),
            ace: self.ace_epsilon(),
            fce: self.fce_epsilon(),
            fce_local: self.fce_local_epsilon(),
            payoff_range: self.game.payoff_range_max(),
        }
    }
}

/// Agent-form correlated equilibrium epsilon of a signal.
pub fn afce_epsilon(
    game: &GameTree,
    signal: &EmpiricalSignal,
    profile_cap: u64,
) -> Result<f64, AuditError> {
    Ok(TraceAudit::from_signal(game, signal, profile_cap)?.afce_epsilon())
}

/// Extensive-form correlated equilibrium epsilon of a signal.
pub fn efce_epsilon(
    game: &GameTree,
    signal: &EmpiricalSignal,
    profile_cap: u64,
) -> Result<f64, AuditError> {
    Ok(TraceAudit::from_signal(game, signal, profile_cap)?.efce_epsilon())
}

/// Autonomous correlated equilibrium epsilon of a signal.
pub fn ace_epsilon(
    game: &GameTree,
    signal: &EmpiricalSignal,
    profile_cap: u64,
) -> Result<f64, AuditError> {
    Ok(TraceAudit::from_signal(game, signal, profile_cap)?.ace_epsilon())
}

/// Forgiving correlated equilibrium epsilon of a signal.
pub fn fce_epsilon(
    game: &GameTree,
    signal: &EmpiricalSignal,
    profile_cap: u64,
) -> Result<f64, AuditError> {
    Ok(TraceAudit::from_signal(game, signal, profile_cap)?.fce_epsilon())
}

/// One-shot forgiving epsilon of a signal.
pub fn fce_local_epsilon(
    game: &GameTree,
    signal: &EmpiricalSignal,
    profile_cap: u64,
) -> Result<f64, AuditError> {
    Ok(TraceAudit::from_signal(game, signal, profile_cap)?.fce_local_epsilon())
}

/// All five epsilons of a signal in one pass.
pub fn epsilon_report(
    game: &GameTree,
    signal: &EmpiricalSignal,
    profile_cap: u64,
) -> Result<EpsilonReport, AuditError> {
    Ok(TraceAudit::from_signal(game, signal, profile_cap)?.epsilon_report())
}

/// Rejects signals whose weights do not sum to one.
pub fn validate_signal_weights(signal: &EmpiricalSignal) -> Result<(), AuditError> {
    let sum = signal.total_weight();
    if (sum - 1.0).abs() > super::SIGNAL_WEIGHT_TOLERANCE {
        return Err(AuditError::BadWeights { sum, tolerance: super::SIGNAL_WEIGHT_TOLERANCE });
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::format::builtin::builtin_game;
    use crate::game::PureProfile;

    const CAP: u64 = 1_000_000;

    #[test]
    fn battle_of_sexes_signals() {
        let game = builtin_game("battle_of_sexes_seq").unwrap();
        // Point mass on a pure Nash point: no profitable deviation anywhere.
        let nash = EmpiricalSignal::point_mass(vec![0, 0]); // (O, o)
        let report = epsilon_report(&game, &nash, CAP).unwrap();
        assert!(report.afce.abs() < 1e-12);
        assert!(report.efce.abs() < 1e-12);
        assert!(report.ace.abs() < 1e-12);
        assert!(report.fce.abs() < 1e-12);
        // Uniform over the two coordinated profiles: the classic strictly
        // mixing correlated equilibrium.
        let correlated =
            EmpiricalSignal::new(vec![(vec![0, 0], 0.5), (vec![1, 1], 0.5)]);
        let report = epsilon_report(&game, &correlated, CAP).unwrap();
        assert!(report.afce.abs() < 1e-12, "afce {}", report.afce);
        assert!(report.fce.abs() < 1e-12, "fce {}", report.fce);
        // Point mass on an anti-coordinated profile: strictly positive.
        let bad = EmpiricalSignal::point_mass(vec![0, 1]); // (O, f)
        let report = epsilon_report(&game, &bad, CAP).unwrap();
        assert!(report.afce > 0.5, "afce {}", report.afce);
        assert!(report.fce >= report.afce - 1e-12);
    }

    /// Normal-form correlated-equilibrium epsilon computed directly from
    /// the payoff tables, as an independent oracle for one-shot games.
    fn normal_form_ce_epsilon(game: &crate::game::GameTree, h: &EmpiricalSignal) -> f64 {
        let mut best = f64::NEG_INFINITY;
        for i in game.infoset_ids() {
            let owner = game.player_of(i);
            for a in 0..game.action_count(i) {
                for b in 0..game.action_count(i) {
                    let mut sum = 0.0;
                    for (choices, w) in h.entries() {
                        if choices[i.index()] != a {
                            continue;
                        }
                        let s = PureProfile::new(choices.clone());
                        let mut dev = s.clone();
                        dev.set_choice(i, b);
                        sum += w * (game.playout(&dev)[owner] - game.playout(&s)[owner]);
                    }
                    best = best.max(sum);
                }
            }
        }
        best
    }

    #[test]
    fn one_shot_games_collapse_to_the_normal_form() {
        for name in ["matching_pennies", "battle_of_sexes_seq"] {
            let game = builtin_game(name).unwrap();
            let signals = [
                EmpiricalSignal::point_mass(vec![0, 1]),
                EmpiricalSignal::new(vec![(vec![0, 0], 0.5), (vec![1, 1], 0.5)]),
                EmpiricalSignal::new(vec![
                    (vec![0, 0], 0.25),
                    (vec![0, 1], 0.25),
                    (vec![1, 0], 0.25),
                    (vec![1, 1], 0.25),
                ]),
                EmpiricalSignal::new(vec![(vec![0, 1], 0.7), (vec![1, 0], 0.3)]),
            ];
            for h in &signals {
                let ce = normal_form_ce_epsilon(&game, h);
                let report = epsilon_report(&game, h, CAP).unwrap();
                for (family, value) in [
                    ("afce", report.afce),
                    ("efce", report.efce),
                    ("ace", report.ace),
                    ("fce", report.fce),
                    ("fce_local", report.fce_local),
                ] {
                    assert!(
                        (value - ce).abs() < 1e-9,
                        "{name} {family}: {value} vs normal-form {ce}"
                    );
                }
                assert!(report.nesting_ok(1e-9));
            }
        }
    }

    #[test]
    fn uniform_matching_pennies_signal_is_an_equilibrium() {
        let game = builtin_game("matching_pennies").unwrap();
        let uniform = EmpiricalSignal::new(vec![
            (vec![0, 0], 0.25),
            (vec![0, 1], 0.25),
            (vec![1, 0], 0.25),
            (vec![1, 1], 0.25),
        ]);
        let report = epsilon_report(&game, &uniform, CAP).unwrap();
        assert!(report.afce.abs() < 1e-12);
        assert!(report.fce.abs() < 1e-12);
    }

    #[test]
    fn fce_dominates_ace_termwise() {
        let game = builtin_game("gated_entry").unwrap();
        let signals = [
            EmpiricalSignal::point_mass(vec![1, 0]),
            EmpiricalSignal::new(vec![(vec![0, 0], 0.5), (vec![1, 1], 0.5)]),
            EmpiricalSignal::new(vec![(vec![1, 0], 0.9), (vec![0, 1], 0.1)]),
        ];
        for h in &signals {
            let report = epsilon_report(&game, h, CAP).unwrap();
            assert!(report.fce + 1e-12 >= report.ace);
            assert!(report.ace + 1e-12 >= report.efce);
            assert!(report.fce_local <= report.fce + 1e-12);
        }
    }

    #[test]
    fn chance_marginalization_matches_manual_expansion() {
        let game = builtin_game("kuhn_poker").unwrap();
        // A lopsided signal over three strategic profiles.
        let h = EmpiricalSignal::new(vec![
            (vec![0; 12], 0.5),
            (vec![1; 12], 0.3),
            (vec![0, 1, 0, 1, 0, 1, 0, 1, 0, 1, 0, 1], 0.2),
        ]);
        let audit = TraceAudit::from_signal(&game, &h, CAP).unwrap();
        // Manual oracle: afce term for every (I, a, b), expanding the
        // chance node explicitly and weighting by outcome probability.
        let realizations = game.enumerate_chance_realizations(CAP).unwrap();
        let mut manual_best = f64::NEG_INFINITY;
        for i in game.infoset_ids() {
            for a in 0..game.action_count(i) {
                for b in 0..game.action_count(i) {
                    let mut sum = 0.0;
                    for (choices, w) in h.entries() {
                        for (chance, p) in &realizations {
                            let s =
                                PureProfile::with_chance(choices.clone(), chance.clone());
                            if !game.observed(&s, i, a) {
                                continue;
                            }
                            let dev = game.override_action(&s, i, b);
                            sum += w * p
                                * (game.utility_reach(i, &dev, &s)
                                    - game.utility_reach(i, &s, &s));
                        }
                    }
                    manual_best = manual_best.max(sum);
                }
            }
        }
        assert!(
            (audit.afce_epsilon() - manual_best).abs() < 1e-12,
            "{} vs {}",
            audit.afce_epsilon(),
            manual_best
        );
    }
}
