//! Regret computation and equilibrium verification over recorded play.
//!
//! Everything here is a pure function of (game, trace-or-signal). A
//! [`TraceAudit`] precomputes, for every distinct weighted play and every
//! infoset, the observation and reachability gates, the realized signal
//! history, and the one-shot deviation gains; the regret families and the
//! four equilibrium verifiers are then weighted sums and small
//! best-response recursions over that table.
//!
//! Traces audit against their realized chance; probability distributions
//! over strategic profiles audit in expectation, by crossing each profile
//! with every joint chance realization and its probability.

mod decomp;
mod report;
mod verify;

pub use decomp::{GapEntry, GapKind, GapReport, GAP_TOLERANCE};
pub use report::{EpsilonReport, RegretEntry, RegretFamily, RegretReport};
pub use verify::{
    ace_epsilon, afce_epsilon, efce_epsilon, epsilon_report, fce_epsilon, fce_local_epsilon,
    validate_signal_weights,
};

use crate::game::{CapExceeded, GameTree, InfosetId, NodeId, NodeKind, PureProfile};
use crate::learn::PlayTrace;
use std::collections::{BTreeMap, HashMap};

/// Frequency distribution of the strategic profiles realized by a run: the
/// empirical correlating signal. Chance realizations are marginalized out;
/// verifiers reintroduce chance in expectation.
#[derive(Debug, Clone, PartialEq)]
pub struct EmpiricalSignal {
    /// Profile choices -> weight, in first-occurrence order.
    entries: Vec<(Vec<usize>, f64)>,
}

impl EmpiricalSignal {
    pub fn new(entries: Vec<(Vec<usize>, f64)>) -> Self {
        EmpiricalSignal { entries }
    }

    pub fn point_mass(choices: Vec<usize>) -> Self {
        EmpiricalSignal { entries: vec![(choices, 1.0)] }
    }

    pub fn entries(&self) -> &[(Vec<usize>, f64)] {
        &self.entries
    }

    pub fn total_weight(&self) -> f64 {
        self.entries.iter().map(|(_, w)| w).sum()
    }

    pub fn support_size(&self) -> usize {
        self.entries.len()
    }
}

/// h^T: normalized frequency table over the realized strategic profiles.
pub fn empirical_signal(trace: &PlayTrace) -> Result<EmpiricalSignal, AuditError> {
    if trace.steps.is_empty() {
        return Err(AuditError::EmptyTrace);
    }
    let share = 1.0 / trace.steps.len() as f64;
    let mut index: HashMap<Vec<usize>, usize> = HashMap::new();
    let mut entries: Vec<(Vec<usize>, f64)> = Vec::new();
    for step in &trace.steps {
        match index.get(&step.choices) {
            Some(&i) => entries[i].1 += share,
            None => {
                index.insert(step.choices.clone(), entries.len());
                entries.push((step.choices.clone(), share));
            }
        }
    }
    Ok(EmpiricalSignal { entries })
}

#[derive(Debug, thiserror::Error)]
pub enum AuditError {
    #[error("cannot audit an empty trace")]
    EmptyTrace,
    #[error(transparent)]
    Cap(#[from] CapExceeded),
    #[error("signal weights sum to {sum}, expected 1 within {tolerance}")]
    BadWeights { sum: f64, tolerance: f64 },
    #[error("signal profile is malformed: {detail}")]
    BadProfile { detail: String },
    #[error("trace does not match the game (`{trace_game}` vs `{game}`)")]
    GameMismatch { trace_game: String, game: String },
}

pub const SIGNAL_WEIGHT_TOLERANCE: f64 = 1e-6;

/// Per-play, per-infoset precomputed gates and deviation gains.
struct PlayRow {
    profile: PureProfile,
    weight: f64,
    observed: Vec<bool>,
    reachable: Vec<bool>,
    /// Member node the owner can reach, when any.
    start: Vec<Option<NodeId>>,
    /// u(I, s): payoff when the owner routes to the infoset and everyone
    /// follows the profile; 0 when unreachable.
    base: Vec<f64>,
    /// u(I, s|_{I→b}) − u(I, s_I) per action; zeros when unreachable.
    deltas: Vec<Vec<f64>>,
    /// Realized signal history entries per infoset.
    history: Vec<Vec<usize>>,
}

/// Weighted complete plays plus the precomputed table the regret families
/// and verifiers are evaluated from.
pub struct TraceAudit<'g> {
    game: &'g GameTree,
    plays: Vec<PlayRow>,
    /// Number of recorded steps when built from a trace; 1 for signals
    /// (weights already normalized).
    horizon: u64,
}

impl<'g> TraceAudit<'g> {
    /// Audits a full trace; weights are step counts divided by the horizon.
    pub fn from_trace(game: &'g GameTree, trace: &PlayTrace) -> Result<Self, AuditError> {
        Self::from_trace_prefix(game, trace, trace.steps.len() as u64)
    }

    /// Audits the first `steps` records of a trace.
    pub fn from_trace_prefix(
        game: &'g GameTree,
        trace: &PlayTrace,
        steps: u64,
    ) -> Result<Self, AuditError> {
        if trace.game_name != game.name() || trace.infosets != game.num_infosets() {
            return Err(AuditError::GameMismatch {
                trace_game: trace.game_name.clone(),
                game: game.name().to_string(),
            });
        }
        let steps = (steps as usize).min(trace.steps.len());
        if steps == 0 {
            return Err(AuditError::EmptyTrace);
        }
        let share = 1.0 / steps as f64;
        let mut index: HashMap<(Vec<usize>, Vec<usize>), usize> = HashMap::new();
        let mut weighted: Vec<(PureProfile, f64)> = Vec::new();
        for step in &trace.steps[..steps] {
            let key = (step.choices.clone(), step.chance.clone());
            match index.get(&key) {
                Some(&i) => weighted[i].1 += share,
                None => {
                    index.insert(key, weighted.len());
                    weighted.push((step.profile(), share));
                }
            }
        }
        Ok(Self::prepare(game, weighted, steps as u64))
    }

    /// Audits a probability distribution over strategic profiles, crossing
    /// each profile with every joint chance realization so that all
    /// utilities are expectations over chance.
    pub fn from_signal(
        game: &'g GameTree,
        signal: &EmpiricalSignal,
        profile_cap: u64,
    ) -> Result<Self, AuditError> {
        let realizations = game.enumerate_chance_realizations(profile_cap)?;
        if signal.entries.len() as u128 * realizations.len() as u128 > profile_cap as u128 {
            return Err(AuditError::Cap(CapExceeded {
                required: signal.entries.len() as u128 * realizations.len() as u128,
                cap: profile_cap,
            }));
        }
        let mut weighted = Vec::with_capacity(signal.entries.len() * realizations.len());
        for (choices, weight) in &signal.entries {
            if *weight < 0.0 {
                return Err(AuditError::BadProfile {
                    detail: format!("negative weight {weight}"),
                });
            }
            let probe = PureProfile::new(choices.clone());
            if !probe.validate(game) {
                return Err(AuditError::BadProfile {
                    detail: format!(
                        "profile has {} choices, game has {} infosets",
                        choices.len(),
                        game.num_infosets()
                    ),
                });
            }
            if *weight == 0.0 {
                continue;
            }
            for (chance, prob) in &realizations {
                if *prob == 0.0 {
                    continue;
                }
                let profile = if game.has_chance() {
                    PureProfile::with_chance(choices.clone(), chance.clone())
                } else {
                    PureProfile::new(choices.clone())
                };
                weighted.push((profile, weight * prob));
            }
        }
        Ok(Self::prepare(game, weighted, 1))
    }

    fn prepare(game: &'g GameTree, weighted: Vec<(PureProfile, f64)>, horizon: u64) -> Self {
        let m = game.num_infosets();
        let plays = weighted
            .into_iter()
            .map(|(profile, weight)| {
                let mut observed = vec![false; m];
                let mut reachable = vec![false; m];
                let mut start = vec![None; m];
                let mut base = vec![0.0; m];
                let mut deltas = Vec::with_capacity(m);
                let mut history = Vec::with_capacity(m);
                for infoset in game.infoset_ids() {
                    let i = infoset.index();
                    start[i] = game.reachable_node(&profile, infoset);
                    reachable[i] = start[i].is_some();
                    observed[i] = reachable[i] && game.observed_infoset(&profile, infoset);
                    if reachable[i] {
                        base[i] = game.utility_reach(infoset, &profile, &profile);
                    }
                    deltas.push(game.one_shot_deltas(infoset, &profile));
                    history.push(game.signal_history(&profile, infoset).entries);
                }
                PlayRow { profile, weight, observed, reachable, start, base, deltas, history }
            })
            .collect();
        TraceAudit { game, plays, horizon }
    }

    pub fn game(&self) -> &GameTree {
        self.game
    }

    pub fn horizon(&self) -> u64 {
        self.horizon
    }

    pub fn distinct_plays(&self) -> usize {
        self.plays.len()
    }

    fn assert_related(&self, anchor: InfosetId, target: InfosetId) {
        assert_eq!(
            self.game.player_of(anchor),
            self.game.player_of(target),
            "anchor and target must share an owner"
        );
        assert!(
            self.game.descendants(anchor).contains(&target),
            "target must be a descendant of the anchor"
        );
    }

    fn observed_with(&self, play: &PlayRow, infoset: InfosetId, action: usize) -> bool {
        play.observed[infoset.index()] && play.profile.choice(infoset) == action
    }

    /// CFR^T(I^P, a, I, b): observation- and reachability-gated average
    /// one-shot gain of switching to `b` at the target.
    pub fn counterfactual_regret(
        &self,
        anchor: InfosetId,
        action: usize,
        target: InfosetId,
        switch_to: usize,
    ) -> f64 {
        self.assert_related(anchor, target);
        self.plays
            .iter()
            .filter(|p| self.observed_with(p, anchor, action) && p.reachable[target.index()])
            .map(|p| p.weight * p.deltas[target.index()][switch_to])
            .sum()
    }

    /// CFR^{T+}(I^P, a, I) = max_b max(0, CFR^T(I^P, a, I, b)).
    pub fn counterfactual_regret_pos(
        &self,
        anchor: InfosetId,
        action: usize,
        target: InfosetId,
    ) -> f64 {
        (0..self.game.action_count(target))
            .map(|b| self.counterfactual_regret(anchor, action, target, b))
            .fold(0.0, f64::max)
            + 0.0
    }

    /// ER^T(I^P, a, I): best fixed continuation from the target against the
    /// gated weighted plays, minus following the recommendations. Computed
    /// by backward induction over the owner's infosets, which equals the
    /// exhaustive maximum over continuation strategies.
    pub fn external_regret(&self, anchor: InfosetId, action: usize, target: InfosetId) -> f64 {
        self.assert_related(anchor, target);
        let mut states = Vec::new();
        let mut baseline = 0.0;
        for (idx, play) in self.plays.iter().enumerate() {
            if self.observed_with(play, anchor, action) && play.reachable[target.index()] {
                states.push((play.start[target.index()].unwrap(), idx, play.weight));
                baseline += play.weight * play.base[target.index()];
            }
        }
        if states.is_empty() {
            return 0.0;
        }
        self.best_response(&states, None) - baseline
    }

    pub fn external_regret_pos(
        &self,
        anchor: InfosetId,
        action: usize,
        target: InfosetId,
    ) -> f64 {
        self.external_regret(anchor, action, target).max(0.0) + 0.0
    }

    /// Average CFIR(I, ā, b): reachability-gated, conditioned on the
    /// realized signal history equalling `history`.
    pub fn counterfactual_internal_regret(
        &self,
        target: InfosetId,
        history: &[usize],
        switch_to: usize,
    ) -> f64 {
        assert_eq!(history.len(), self.game.infoset(target).ancestry.len() + 1);
        self.plays
            .iter()
            .filter(|p| p.reachable[target.index()] && p.history[target.index()] == history)
            .map(|p| p.weight * p.deltas[target.index()][switch_to])
            .sum()
    }

    /// Average CFIR^{T+}(I, ā) = max_b; never negative because the history's
    /// own final action gains exactly zero.
    pub fn counterfactual_internal_regret_pos(
        &self,
        target: InfosetId,
        history: &[usize],
    ) -> f64 {
        (0..self.game.action_count(target))
            .map(|b| self.counterfactual_internal_regret(target, history, b))
            .fold(0.0, f64::max)
            + 0.0
    }

    /// Cumulative CFIR over the horizon rather than the average.
    pub fn counterfactual_internal_regret_cumulative(
        &self,
        target: InfosetId,
        history: &[usize],
        switch_to: usize,
    ) -> f64 {
        self.counterfactual_internal_regret(target, history, switch_to) * self.horizon as f64
    }

    /// AR^{T+}(I, a): the degenerate counterfactual regret with the anchor
    /// at the infoset itself, so the gate is plain observation.
    pub fn agent_regret(&self, infoset: InfosetId, action: usize) -> f64 {
        self.counterfactual_regret_pos(infoset, action, infoset)
    }

    /// IR^{T+}(I, a): best deviation constrained to differ from `action` at
    /// the infoset, observation-gated; never negative because reverting to
    /// the recommendation is always available (every term vanishes).
    pub fn internal_regret(&self, infoset: InfosetId, action: usize) -> f64 {
        let mut states = Vec::new();
        let mut baseline = 0.0;
        for (idx, play) in self.plays.iter().enumerate() {
            if self.observed_with(play, infoset, action) {
                states.push((play.start[infoset.index()].unwrap(), idx, play.weight));
                baseline += play.weight * play.base[infoset.index()];
            }
        }
        if states.is_empty() {
            return 0.0;
        }
        let mut best: f64 = 0.0;
        for b in 0..self.game.action_count(infoset) {
            if b == action {
                continue;
            }
            best = best.max(self.best_response(&states, Some(b)) - baseline);
        }
        best + 0.0
    }

    /// Average positive CFIR for every realized (infoset, signal history)
    /// pair, in deterministic key order.
    pub fn cfir_pos_by_key(&self) -> Vec<((InfosetId, Vec<usize>), f64)> {
        let mut grouped: BTreeMap<(InfosetId, &[usize]), Vec<f64>> = BTreeMap::new();
        for play in &self.plays {
            for infoset in self.game.infoset_ids() {
                let i = infoset.index();
                if !play.reachable[i] {
                    continue;
                }
                let acc = grouped
                    .entry((infoset, &play.history[i]))
                    .or_insert_with(|| vec![0.0; self.game.action_count(infoset)]);
                for (slot, &d) in acc.iter_mut().zip(&play.deltas[i]) {
                    *slot += play.weight * d;
                }
            }
        }
        grouped
            .into_iter()
            .map(|((infoset, history), sums)| {
                ((infoset, history.to_vec()), sums.iter().cloned().fold(0.0, f64::max))
            })
            .collect()
    }

    /// Largest average positive CFIR over every realized (infoset, signal
    /// history) pair; unrealized pairs contribute zero.
    pub fn max_cfir_pos(&self) -> (f64, Option<(InfosetId, Vec<usize>)>) {
        let mut best = 0.0;
        let mut arg = None;
        for (key, value) in self.cfir_pos_by_key() {
            if value > best {
                best = value;
                arg = Some(key);
            }
        }
        (best, arg)
    }

    /// Largest AR^{T+} over all (infoset, action) pairs.
    pub fn max_agent_regret(&self) -> f64 {
        self.game
            .infoset_ids()
            .flat_map(|i| (0..self.game.action_count(i)).map(move |a| (i, a)))
            .map(|(i, a)| self.agent_regret(i, a))
            .fold(0.0, f64::max)
    }

    /// Largest IR^{T+} over all (infoset, action) pairs.
    pub fn max_internal_regret(&self) -> f64 {
        self.game
            .infoset_ids()
            .flat_map(|i| (0..self.game.action_count(i)).map(move |a| (i, a)))
            .map(|(i, a)| self.internal_regret(i, a))
            .fold(0.0, f64::max)
    }

    /// Largest CFR^{T+} over proper (anchor, action, target) triples.
    pub fn max_counterfactual_regret_pos(&self) -> f64 {
        let mut best: f64 = 0.0;
        for anchor in self.game.infoset_ids() {
            for target in self.game.descendants(anchor) {
                if *target == anchor {
                    continue;
                }
                for a in 0..self.game.action_count(anchor) {
                    best = best.max(self.counterfactual_regret_pos(anchor, a, *target));
                }
            }
        }
        best
    }

    /// Best-response value over the owner's infoset tree: each weighted
    /// state carries a play; at each infoset group one action is chosen for
    /// the whole group (states the owner cannot distinguish), then states
    /// advance through the other players' and chance's moves. Perfect
    /// recall makes sibling infoset groups independent, so the recursion
    /// equals the exhaustive maximum over pure continuations.
    fn best_response(&self, states: &[(NodeId, usize, f64)], restrict: Option<usize>) -> f64 {
        let infoset = match self.game.node(states[0].0).kind {
            NodeKind::Decision { infoset } => infoset,
            _ => unreachable!("best-response states sit at decision nodes"),
        };
        let owner = self.game.player_of(infoset);
        let actions = self.game.action_count(infoset);
        let mut best = f64::NEG_INFINITY;
        for b in 0..actions {
            if restrict.is_some_and(|r| r != b) {
                continue;
            }
            let mut value = 0.0;
            let mut groups: BTreeMap<InfosetId, Vec<(NodeId, usize, f64)>> = BTreeMap::new();
            for &(node, play, w) in states {
                match self.advance(self.game.node(node).children[b], play, owner) {
                    Advance::Terminal(payoff) => value += w * payoff,
                    Advance::Decision(at, next) => {
                        groups.entry(next).or_default().push((at, play, w))
                    }
                }
            }
            for group in groups.values() {
                value += self.best_response(group, None);
            }
            best = best.max(value);
        }
        best
    }

    /// Walks through other players' and chance's moves (fixed by the play)
    /// until the owner acts again or the game ends.
    fn advance(&self, mut at: NodeId, play: usize, owner: usize) -> Advance {
        let profile = &self.plays[play].profile;
        loop {
            let node = self.game.node(at);
            at = match &node.kind {
                NodeKind::Terminal { payoffs } => return Advance::Terminal(payoffs[owner]),
                NodeKind::Decision { infoset } if self.game.player_of(*infoset) == owner => {
                    return Advance::Decision(at, *infoset)
                }
                NodeKind::Decision { infoset } => node.children[profile.choice(*infoset)],
                NodeKind::Chance { chance } => node.children[profile.chance_outcome(*chance)],
            };
        }
    }

    /// Deviation-plan value: like [`Self::best_response`], but states group
    /// by (infoset, realized signal history), because a plan may condition
    /// on the recommendations received so far; one action is chosen per
    /// group.
    fn plan_value(&self, states: &[(NodeId, usize, f64)]) -> f64 {
        let infoset = match self.game.node(states[0].0).kind {
            NodeKind::Decision { infoset } => infoset,
            _ => unreachable!("plan states sit at decision nodes"),
        };
        let owner = self.game.player_of(infoset);
        let mut best = f64::NEG_INFINITY;
        for b in 0..self.game.action_count(infoset) {
            let mut value = 0.0;
            let mut groups: BTreeMap<(InfosetId, &[usize]), Vec<(NodeId, usize, f64)>> =
                BTreeMap::new();
            for &(node, play, w) in states {
                match self.advance(self.game.node(node).children[b], play, owner) {
                    Advance::Terminal(payoff) => value += w * payoff,
                    Advance::Decision(at, next) => groups
                        .entry((next, &self.plays[play].history[next.index()]))
                        .or_default()
                        .push((at, play, w)),
                }
            }
            for group in groups.values() {
                value += self.plan_value(group);
            }
            best = best.max(value);
        }
        best
    }
}

enum Advance {
    Terminal(f64),
    Decision(NodeId, InfosetId),
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::format::builtin::builtin_game;
    use crate::learn::Procedure;

    fn label(game: &GameTree, name: &str) -> InfosetId {
        game.infoset_ids().find(|&i| game.infoset(i).label == name).unwrap()
    }

    fn scripted(game: &GameTree, choices: &[Vec<usize>]) -> PlayTrace {
        let profiles: Vec<PureProfile> =
            choices.iter().map(|c| PureProfile::new(c.clone())).collect();
        PlayTrace::from_profiles(game, Procedure::Fce, 0, &profiles)
    }

    #[test]
    fn empirical_signal_basics() {
        let game = builtin_game("matching_pennies").unwrap();
        let point = scripted(&game, &vec![vec![0, 0]; 10]);
        let h = empirical_signal(&point).unwrap();
        assert_eq!(h.support_size(), 1);
        assert_eq!(h.entries()[0].0, vec![0, 0]);
        assert!((h.entries()[0].1 - 1.0).abs() < 1e-9);

        let alternating = scripted(&game, &[vec![0, 0], vec![1, 1], vec![0, 0], vec![1, 1]]);
        let h = empirical_signal(&alternating).unwrap();
        assert_eq!(h.support_size(), 2);
        assert!((h.entries()[0].1 - 0.5).abs() < 1e-12);
        assert!((h.total_weight() - 1.0).abs() < 1e-12);

        let empty = scripted(&game, &[]);
        assert!(matches!(empirical_signal(&empty), Err(AuditError::EmptyTrace)));
    }

    #[test]
    fn counterfactual_regret_hand_sums() {
        let game = builtin_game("matching_pennies").unwrap();
        let (i1, i2) = (label(&game, "I1"), label(&game, "I2"));
        // All four joint profiles once: the uniform signal has no regret.
        let trace =
            scripted(&game, &[vec![0, 0], vec![0, 1], vec![1, 0], vec![1, 1]]);
        let audit = TraceAudit::from_trace(&game, &trace).unwrap();
        // Player 2 recommended h: (1/4)[(u2(H,t)-u2(H,h)) + (u2(T,t)-u2(T,h))]
        //                       = (1/4)[(1-(-1)) + (-1-1)] = 0.
        assert!((audit.counterfactual_regret(i2, 0, i2, 1) - 0.0).abs() < 1e-12);
        assert!((audit.counterfactual_regret(i2, 1, i2, 0) - 0.0).abs() < 1e-12);
        assert!((audit.counterfactual_regret(i1, 0, i1, 1) - 0.0).abs() < 1e-12);
        assert_eq!(audit.agent_regret(i2, 0), 0.0);

        // 100 repeats of (H, h): player 2 gains 2 by switching to t, player
        // 1 is already best-responding.
        let trace = scripted(&game, &vec![vec![0, 0]; 100]);
        let audit = TraceAudit::from_trace(&game, &trace).unwrap();
        assert!((audit.agent_regret(i2, 0) - 2.0).abs() < 1e-12);
        assert_eq!(audit.agent_regret(i1, 0), 0.0);
        // Deviation equal to play is always zero; empty filters too.
        assert_eq!(audit.counterfactual_regret(i2, 0, i2, 0), 0.0);
        assert_eq!(audit.counterfactual_regret(i2, 1, i2, 0), 0.0);
    }

    #[test]
    fn cfir_six_step_hand_sum() {
        let game = builtin_game("two_stage_solo").unwrap();
        let (i1, i2) = (label(&game, "I1"), label(&game, "I2"));
        // Payoffs: (A,C) -> 0, (A,D) -> 2, B -> 1.
        let trace = scripted(
            &game,
            &[vec![0, 0], vec![0, 1], vec![1, 0], vec![1, 1], vec![0, 0], vec![1, 1]],
        );
        let audit = TraceAudit::from_trace(&game, &trace).unwrap();
        // History (A,C) at I2 realized at steps 1 and 5; switching to D
        // gains 2 each time: average 4/6.
        assert!((audit.counterfactual_internal_regret(i2, &[0, 0], 1) - 4.0 / 6.0).abs() < 1e-12);
        assert!(
            (audit.counterfactual_internal_regret_cumulative(i2, &[0, 0], 1) - 4.0).abs() < 1e-12
        );
        // Identity deviation is exactly zero.
        assert_eq!(audit.counterfactual_internal_regret(i2, &[0, 0], 0), 0.0);
        // History (A,D): switching to C loses 2 per step: average -2/6.
        assert!((audit.counterfactual_internal_regret(i2, &[0, 1], 0) + 2.0 / 6.0).abs() < 1e-12);
        // Unmatched history contributes nothing.
        assert_eq!(audit.counterfactual_internal_regret_pos(i2, &[1, 0]), 2.0 / 6.0);
        // At the root infoset: history (A) at steps 1, 2, 5 with one-shot
        // gains 1-0, 1-2, 1-0: average 1/6.
        assert!((audit.counterfactual_internal_regret(i1, &[0], 1) - 1.0 / 6.0).abs() < 1e-12);
        // max over realized pairs: history (B,C)/(B,D) at I2 is reachable
        // with gains up to 2 (playing D instead of the recommended C while
        // the profile sits at B).
        let (max_cfir, witness) = audit.max_cfir_pos();
        assert!(max_cfir > 0.0);
        assert!(witness.is_some());
    }

    #[test]
    fn external_regret_single_infoset_equals_cfr() {
        let game = builtin_game("matching_pennies").unwrap();
        let i2 = label(&game, "I2");
        let trace = scripted(&game, &vec![vec![0, 0]; 5]);
        let audit = TraceAudit::from_trace(&game, &trace).unwrap();
        assert!(
            (audit.external_regret(i2, 0, i2) - audit.counterfactual_regret_pos(i2, 0, i2)).abs()
                < 1e-12
        );
        // Never-observed anchor action: empty filter, zero regret.
        assert_eq!(audit.external_regret(i2, 1, i2), 0.0);
    }

    #[test]
    fn external_regret_backward_induction_equals_exhaustive() {
        // Three-infoset solo game with distinct terminal values.
        let game = crate::format::parse_game(
            "game solo3 players 1\n\
             node r player 1 infoset I1 { A -> x, B -> y }\n\
             node x player 1 infoset I2 { C -> t1, D -> t2 }\n\
             node y player 1 infoset I3 { E -> t3, F -> t4 }\n\
             node t1 terminal { 0.3 }\n\
             node t2 terminal { 1.7 }\n\
             node t3 terminal { -0.4 }\n\
             node t4 terminal { 0.9 }\n",
        )
        .unwrap();
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha12Rng::seed_from_u64(42);
        let steps: Vec<Vec<usize>> = (0..50)
            .map(|_| (0..3).map(|i| rng.random_range(0..game.action_count(InfosetId(i)))).collect())
            .collect();
        let trace = scripted(&game, &steps);
        let audit = TraceAudit::from_trace(&game, &trace).unwrap();
        for anchor in game.infoset_ids() {
            for a in 0..game.action_count(anchor) {
                for &target in game.descendants(anchor) {
                    let dp = audit.external_regret(anchor, a, target);
                    let exhaustive = exhaustive_external(&game, &trace, anchor, a, target);
                    assert!(
                        (dp - exhaustive).abs() < 1e-9,
                        "{anchor}:{a}->{target}: dp {dp} vs exhaustive {exhaustive}"
                    );
                }
            }
        }
    }

    /// Brute-force ER: maximize over every assignment of the owner's
    /// infosets, evaluating the gated utility difference step by step.
    fn exhaustive_external(
        game: &GameTree,
        trace: &PlayTrace,
        anchor: InfosetId,
        action: usize,
        target: InfosetId,
    ) -> f64 {
        let owner = game.player_of(anchor);
        let own: Vec<InfosetId> = game.player_infosets(owner).to_vec();
        let mut best = f64::NEG_INFINITY;
        let mut assignment = vec![0usize; own.len()];
        loop {
            let mut total = 0.0;
            for step in &trace.steps {
                let s = step.profile();
                if !(game.observed(&s, anchor, action) && game.reachable(&s, target)) {
                    continue;
                }
                let mut deviation = s.clone();
                for (k, &i) in own.iter().enumerate() {
                    deviation.set_choice(i, assignment[k]);
                }
                total += game.utility_reach(target, &deviation, &s)
                    - game.utility_reach(target, &s, &s);
            }
            best = best.max(total / trace.steps.len() as f64);
            let mut pos = own.len();
            loop {
                if pos == 0 {
                    return best;
                }
                pos -= 1;
                assignment[pos] += 1;
                if assignment[pos] < game.action_count(own[pos]) {
                    break;
                }
                assignment[pos] = 0;
            }
        }
    }

    #[test]
    fn internal_regret_cases() {
        let game = builtin_game("matching_pennies").unwrap();
        let (i1, i2) = (label(&game, "I1"), label(&game, "I2"));
        let trace = scripted(&game, &vec![vec![0, 0]; 20]);
        let audit = TraceAudit::from_trace(&game, &trace).unwrap();
        // Binary one-shot: the only constrained deviation is the other
        // action, so IR = AR.
        assert_eq!(audit.internal_regret(i2, 0), audit.agent_regret(i2, 0));
        assert_eq!(audit.internal_regret(i1, 0), audit.agent_regret(i1, 0));
        // Never observed: zero.
        assert_eq!(audit.internal_regret(i2, 1), 0.0);
        // IR never goes negative: reverting to the recommendation is free.
        assert!(audit.internal_regret(i1, 0) >= 0.0);
    }

    #[test]
    fn decomposition_gaps_hold_on_scripted_traces() {
        let game = builtin_game("two_stage_solo").unwrap();
        let trace = scripted(
            &game,
            &[vec![0, 0], vec![0, 1], vec![1, 0], vec![1, 1], vec![0, 1], vec![1, 0]],
        );
        let audit = TraceAudit::from_trace(&game, &trace).unwrap();
        let report = audit.decomposition_gaps();
        assert!(report.ok(), "violations: {:?}", report.violations());
        // One-shot game: the bound collapses to IR <= AR, with equality.
        let mp = builtin_game("matching_pennies").unwrap();
        let trace = scripted(&mp, &[vec![0, 0], vec![1, 0], vec![0, 1]]);
        let audit = TraceAudit::from_trace(&mp, &trace).unwrap();
        for entry in &audit.decomposition_gaps().entries {
            assert!(entry.gap <= GAP_TOLERANCE);
            if matches!(entry.kind, GapKind::InternalVsAgentPlusExternal) {
                assert!(entry.gap.abs() <= GAP_TOLERANCE, "IR = AR on one-shot games");
            }
        }
    }
}
