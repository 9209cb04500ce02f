//! Operations on games and pure strategy profiles: path-of-play queries,
//! action overrides, signal histories, and the deviation utilities that
//! every regret family is built from.

use super::{GameTree, InfosetId, NodeId, NodeKind, PureProfile};
use std::collections::BTreeMap;
use std::fmt;

/// The sequence of recommended actions along an infoset's player-view
/// ancestry, including the recommendation at the infoset itself.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct SignalHistory {
    pub infoset: InfosetId,
    pub entries: Vec<usize>,
}

impl SignalHistory {
    /// The recommendation at the infoset itself.
    pub fn last(&self) -> usize {
        *self.entries.last().expect("signal history is never empty")
    }
}

/// A contingent rule assigning an action to every (infoset, signal history)
/// pair of one player: the deviation object of the autonomous and forgiving
/// equilibrium definitions.
pub trait DeviationPlan {
    /// `None` when the plan is undefined at the pair.
    fn action(&self, infoset: InfosetId, history: &[usize]) -> Option<usize>;
}

/// Explicit table-backed deviation plan.
#[derive(Debug, Clone, Default)]
pub struct MapPlan {
    pub entries: BTreeMap<(InfosetId, Vec<usize>), usize>,
}

impl MapPlan {
    pub fn insert(&mut self, infoset: InfosetId, history: Vec<usize>, action: usize) {
        self.entries.insert((infoset, history), action);
    }
}

impl DeviationPlan for MapPlan {
    fn action(&self, infoset: InfosetId, history: &[usize]) -> Option<usize> {
        self.entries.get(&(infoset, history.to_vec())).copied()
    }
}

impl<F> DeviationPlan for F
where
    F: Fn(InfosetId, &[usize]) -> Option<usize>,
{
    fn action(&self, infoset: InfosetId, history: &[usize]) -> Option<usize> {
        self(infoset, history)
    }
}

/// A deviation plan was consulted at a pair it does not cover.
#[derive(Debug, Clone, thiserror::Error)]
pub struct PlanError {
    pub infoset: InfosetId,
    pub history: Vec<usize>,
}

impl fmt::Display for PlanError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "deviation plan undefined at ({}, {:?})", self.infoset, self.history)
    }
}

impl GameTree {
    fn assert_profile(&self, s: &PureProfile) {
        debug_assert!(s.validate(self), "profile does not match the game");
        assert!(
            !self.has_chance() || s.chance.is_some(),
            "game has chance nodes but the profile carries no realization"
        );
    }

    /// Walks the path of play, selecting at each decision node via
    /// `choose`, and returns the terminal node reached.
    fn walk<F: FnMut(InfosetId) -> usize>(&self, s: &PureProfile, mut choose: F) -> NodeId {
        let mut at = self.root();
        loop {
            let node = self.node(at);
            at = match &node.kind {
                NodeKind::Terminal { .. } => return at,
                NodeKind::Decision { infoset } => node.children[choose(*infoset)],
                NodeKind::Chance { chance } => node.children[s.chance_outcome(*chance)],
            };
        }
    }

    fn terminal_payoffs(&self, node: NodeId) -> &[f64] {
        match &self.node(node).kind {
            NodeKind::Terminal { payoffs } => payoffs,
            _ => unreachable!("walk always ends at a terminal"),
        }
    }

    /// Payoff vector when everyone plays `s` (with its realized chance).
    pub fn playout(&self, s: &PureProfile) -> &[f64] {
        self.assert_profile(s);
        let t = self.walk(s, |i| s.choice(i));
        self.terminal_payoffs(t)
    }

    fn on_path(&self, s: &PureProfile, target: InfosetId) -> bool {
        let mut at = self.root();
        loop {
            let node = self.node(at);
            at = match &node.kind {
                NodeKind::Terminal { .. } => return false,
                NodeKind::Decision { infoset } => {
                    if *infoset == target {
                        return true;
                    }
                    node.children[s.choice(*infoset)]
                }
                NodeKind::Chance { chance } => node.children[s.chance_outcome(*chance)],
            };
        }
    }

    /// O(s, I, a): 1 iff `s` recommends `action` at `infoset` and the
    /// infoset lies on the path of play under `s`.
    pub fn observed(&self, s: &PureProfile, infoset: InfosetId, action: usize) -> bool {
        self.assert_profile(s);
        assert!(action < self.action_count(infoset), "unknown action id");
        s.choice(infoset) == action && self.on_path(s, infoset)
    }

    /// O(s, I): 1 iff the infoset lies on the path of play under `s`.
    pub fn observed_infoset(&self, s: &PureProfile, infoset: InfosetId) -> bool {
        self.assert_profile(s);
        self.on_path(s, infoset)
    }

    /// The unique member node of `infoset` the owner can put on the path of
    /// play while everyone else (and chance) stays fixed by `s`, or `None`
    /// when the others' play blocks every member node.
    ///
    /// Under perfect recall the owner's required moves are exactly the
    /// ancestry actions, so at most one member node qualifies.
    pub fn reachable_node(&self, s: &PureProfile, infoset: InfosetId) -> Option<NodeId> {
        self.assert_profile(s);
        let owner = self.player_of(infoset);
        'member: for &member in &self.infoset(infoset).nodes {
            let mut at = member;
            while let Some((parent, action)) = self.node(at).parent {
                match &self.node(parent).kind {
                    NodeKind::Decision { infoset: j } => {
                        if self.player_of(*j) != owner && s.choice(*j) != action {
                            continue 'member;
                        }
                    }
                    NodeKind::Chance { chance } => {
                        if s.chance_outcome(*chance) != action {
                            continue 'member;
                        }
                    }
                    NodeKind::Terminal { .. } => unreachable!(),
                }
                at = parent;
            }
            return Some(member);
        }
        None
    }

    /// R(s, I): 1 iff the owner can play so that `infoset` is observed,
    /// everyone else fixed by `s`.
    pub fn reachable(&self, s: &PureProfile, infoset: InfosetId) -> bool {
        self.reachable_node(s, infoset).is_some()
    }

    /// s|_{I→b}: everyone plays `s`, except the owner routes to `infoset`
    /// and plays `action` there. When the others' play blocks the infoset,
    /// everyone plays `s` unchanged.
    pub fn override_action(
        &self,
        s: &PureProfile,
        infoset: InfosetId,
        action: usize,
    ) -> PureProfile {
        assert!(action < self.action_count(infoset), "unknown action id");
        let mut out = self.reach_profile(s, infoset);
        if self.reachable(s, infoset) {
            out.set_choice(infoset, action);
        }
        out
    }

    /// s_I: everyone plays `s`, except the owner routes to `infoset` (her
    /// choice at the infoset itself stays `s`'s).
    pub fn reach_profile(&self, s: &PureProfile, infoset: InfosetId) -> PureProfile {
        if !self.reachable(s, infoset) {
            return s.clone();
        }
        let mut out = s.clone();
        for &(anc, a) in &self.infoset(infoset).ancestry {
            out.set_choice(anc, a);
        }
        out
    }

    /// N(s, I, a): where the owner next acts under s|_{I→a}, or `None` when
    /// she never acts again or cannot reach the infoset at all.
    pub fn next_infoset(
        &self,
        s: &PureProfile,
        infoset: InfosetId,
        action: usize,
    ) -> Option<InfosetId> {
        self.assert_profile(s);
        assert!(action < self.action_count(infoset), "unknown action id");
        self.reachable_node(s, infoset)?;
        let owner = self.player_of(infoset);
        let ancestry = &self.infoset(infoset).ancestry;
        let mut passed = false;
        let mut at = self.root();
        loop {
            let node = self.node(at);
            at = match &node.kind {
                NodeKind::Terminal { .. } => return None,
                NodeKind::Chance { chance } => node.children[s.chance_outcome(*chance)],
                NodeKind::Decision { infoset: j } => {
                    if passed && self.player_of(*j) == owner {
                        return Some(*j);
                    }
                    let a = if *j == infoset {
                        passed = true;
                        action
                    } else if let Some(&(_, a)) = ancestry.iter().find(|&&(i, _)| i == *j) {
                        a
                    } else {
                        s.choice(*j)
                    };
                    node.children[a]
                }
            };
        }
    }

    /// S(s, I): recommendations along the infoset's ancestry plus the
    /// recommendation at the infoset itself.
    pub fn signal_history(&self, s: &PureProfile, infoset: InfosetId) -> SignalHistory {
        let mut entries = self.partial_signal_history(s, infoset);
        entries.push(s.choice(infoset));
        SignalHistory { infoset, entries }
    }

    /// S(s, I) without its final entry.
    pub fn partial_signal_history(&self, s: &PureProfile, infoset: InfosetId) -> Vec<usize> {
        self.infoset(infoset)
            .ancestry
            .iter()
            .map(|&(anc, _)| s.choice(anc))
            .collect()
    }

    /// S(I): every signal history some profile realizes at the infoset.
    /// Profiles assign actions freely at each infoset, so this is the
    /// cartesian product over the ancestry action sets and A(I).
    pub fn all_signal_histories(&self, infoset: InfosetId) -> Vec<Vec<usize>> {
        let mut radices: Vec<usize> = self
            .infoset(infoset)
            .ancestry
            .iter()
            .map(|&(anc, _)| self.action_count(anc))
            .collect();
        radices.push(self.action_count(infoset));
        let mut out = Vec::new();
        let mut current = vec![0usize; radices.len()];
        loop {
            out.push(current.clone());
            let mut pos = current.len();
            loop {
                if pos == 0 {
                    return out;
                }
                pos -= 1;
                current[pos] += 1;
                if current[pos] < radices[pos] {
                    break;
                }
                current[pos] = 0;
            }
        }
    }

    /// Playout payoff to the owner when she routes to `infoset`, plays
    /// `at_target` there, and follows `s` below; everyone else follows `s`.
    /// The caller guarantees the infoset is reachable under `s`.
    fn reach_playout(&self, infoset: InfosetId, s: &PureProfile, at_target: usize) -> f64 {
        let owner = self.player_of(infoset);
        let ancestry = &self.infoset(infoset).ancestry;
        let t = self.walk(s, |j| {
            if j == infoset {
                at_target
            } else if self.player_of(j) == owner {
                ancestry
                    .iter()
                    .find(|&&(i, _)| i == j)
                    .map(|&(_, a)| a)
                    .unwrap_or_else(|| s.choice(j))
            } else {
                s.choice(j)
            }
        });
        self.terminal_payoffs(t)[owner]
    }

    /// u(I, s1, s2): payoff to the owner of `infoset` when everyone else
    /// follows `follow`, the owner routes to the infoset and then plays
    /// `deviate` from it onward (including at the infoset). Zero when the
    /// others' play blocks the infoset.
    pub fn utility_reach(
        &self,
        infoset: InfosetId,
        deviate: &PureProfile,
        follow: &PureProfile,
    ) -> f64 {
        self.assert_profile(follow);
        if !self.reachable(follow, infoset) {
            return 0.0;
        }
        let owner = self.player_of(infoset);
        let ancestry = &self.infoset(infoset).ancestry;
        let t = self.walk(follow, |j| {
            if self.player_of(j) == owner {
                ancestry
                    .iter()
                    .find(|&&(i, _)| i == j)
                    .map(|&(_, a)| a)
                    .unwrap_or_else(|| deviate.choice(j))
            } else {
                follow.choice(j)
            }
        });
        self.terminal_payoffs(t)[owner]
    }

    /// u(I, s|_{I→b}) = u(I, s|_{I→b}, s|_{I→b}): route to the infoset,
    /// play `action` there, follow `s` below. Zero when unreachable.
    pub fn one_shot_value(&self, infoset: InfosetId, action: usize, s: &PureProfile) -> f64 {
        self.assert_profile(s);
        assert!(action < self.action_count(infoset), "unknown action id");
        if !self.reachable(s, infoset) {
            return 0.0;
        }
        self.reach_playout(infoset, s, action)
    }

    /// Per-action one-shot gains u(I, s|_{I→b}) − u(I, s_I), the shared
    /// integrand of the AR, CFR, and CFIR regret families. All zeros when
    /// the infoset is unreachable under `s`: the observation and
    /// reachability gates zero those terms before any utility is read.
    pub fn one_shot_deltas(&self, infoset: InfosetId, s: &PureProfile) -> Vec<f64> {
        self.assert_profile(s);
        let n = self.action_count(infoset);
        if !self.reachable(s, infoset) {
            return vec![0.0; n];
        }
        let played = s.choice(infoset);
        let base = self.reach_playout(infoset, s, played);
        (0..n)
            .map(|b| if b == played { 0.0 } else { self.reach_playout(infoset, s, b) - base })
            .collect()
    }

    /// u(I, d, s): the owner routes to `infoset` and then follows the
    /// deviation plan, consulting it with the recommendations the mediator
    /// would show, S(s, ·); everyone else follows `s` throughout. When the
    /// others' play blocks the infoset, everyone simply plays `s`.
    pub fn utility_deviation<P: DeviationPlan>(
        &self,
        infoset: InfosetId,
        plan: &P,
        s: &PureProfile,
    ) -> Result<f64, PlanError> {
        self.assert_profile(s);
        let owner = self.player_of(infoset);
        if !self.reachable(s, infoset) {
            return Ok(self.playout(s)[owner]);
        }
        let ancestry = &self.infoset(infoset).ancestry;
        let mut at = self.root();
        loop {
            let node = self.node(at);
            at = match &node.kind {
                NodeKind::Terminal { payoffs } => return Ok(payoffs[owner]),
                NodeKind::Chance { chance } => node.children[s.chance_outcome(*chance)],
                NodeKind::Decision { infoset: j } => {
                    let a = if self.player_of(*j) != owner {
                        s.choice(*j)
                    } else if let Some(&(_, a)) = ancestry.iter().find(|&&(i, _)| i == *j) {
                        a
                    } else {
                        let hist = self.signal_history(s, *j);
                        match plan.action(*j, &hist.entries) {
                            Some(a) => a,
                            None => {
                                return Err(PlanError { infoset: *j, history: hist.entries })
                            }
                        }
                    };
                    node.children[a]
                }
            };
        }
    }
}
