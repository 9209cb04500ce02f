//! The low-memory procedure: internal regret matching on the path of play,
//! external regret matching off it.

use super::{mu_for, realized_payoffs, LearnConfig, StepRecord, Streams};
use crate::game::{GameTree, InfosetId, NodeKind, PureProfile};
use crate::regret::{ExternalRegretRow, InternalRegretRow};
use rand::Rng;
use std::collections::HashMap;

pub(super) struct EfceRunner {
    /// Part 1: (infoset, action played last time it was observed) -> row.
    internal: HashMap<(InfosetId, usize), InternalRegretRow>,
    /// Part 2: (closest on-path own ancestor, action there, infoset) -> row.
    external: HashMap<(InfosetId, usize, InfosetId), ExternalRegretRow>,
    /// Action played the last time each infoset was observed.
    last_observed: HashMap<InfosetId, usize>,
    // Per-step scratch, indexed by infoset.
    on_path: Vec<bool>,
    part2_key: Vec<Option<(InfosetId, usize)>>,
}

impl EfceRunner {
    pub(super) fn new(game: &GameTree) -> Self {
        EfceRunner {
            internal: HashMap::new(),
            external: HashMap::new(),
            last_observed: HashMap::new(),
            on_path: vec![false; game.num_infosets()],
            part2_key: vec![None; game.num_infosets()],
        }
    }

    pub(super) fn row_count(&self) -> u64 {
        (self.internal.len() + self.external.len()) as u64
    }

    pub(super) fn rows_by_kind(&self) -> (u64, u64) {
        (self.internal.len() as u64, self.external.len() as u64)
    }

    pub(super) fn live_step(
        &mut self,
        game: &GameTree,
        config: &LearnConfig,
        streams: &mut Streams,
    ) -> StepRecord {
        let chance = streams.sample_chance(game);
        let mut choices = vec![usize::MAX; game.num_infosets()];
        self.on_path.fill(false);
        self.part2_key.fill(None);

        // Part 1: walk the path of play root to leaf, choosing at each
        // observed infoset through the row keyed by the last observed
        // action there.
        let mut at = game.root();
        loop {
            let node = game.node(at);
            at = match &node.kind {
                NodeKind::Terminal { .. } => break,
                NodeKind::Chance { chance: k } => node.children[chance[*k]],
                NodeKind::Decision { infoset } => {
                    let infoset = *infoset;
                    let player = game.player_of(infoset);
                    let actions = game.action_count(infoset);
                    let rng = &mut streams.players[player];
                    let last = match self.last_observed.get(&infoset) {
                        Some(&a) => a,
                        None => rng.random_range(0..actions),
                    };
                    let choice = match self.internal.get(&(infoset, last)) {
                        Some(row) => row.step(mu_for(game, config, infoset), rng),
                        None => last,
                    };
                    choices[infoset.index()] = choice;
                    self.on_path[infoset.index()] = true;
                    node.children[choice]
                }
            };
        }

        // Part 2: an off-path infoset whose closest on-path own ancestor
        // was left by a different action keys an external row on that
        // (ancestor, action, infoset) triple: only she herself eliminated
        // the infoset, and the row learns how she would have wanted to
        // play there.
        //
        // When instead her ancestor action leads toward the infoset (or no
        // own ancestor is on the path), someone else blocked it, and the
        // reachability gate is zero at every step such a key fires, so an
        // external row could never learn anything. She then plays exactly
        // as she would when observed, through the part-1 row: the
        // completion must not depend on whether the infoset is on the
        // path, or the counterfactual gains read by the other players'
        // rows acquire a persistent bias no regret matcher can drive out.
        for player in 0..game.num_players() {
            for &infoset in game.player_infosets(player) {
                if self.on_path[infoset.index()] {
                    continue;
                }
                let actions = game.action_count(infoset);
                let anchor = self.closest_on_path_ancestor(game, infoset, &choices);
                let rng = &mut streams.players[player];
                let choice = match anchor {
                    Some((anc, played)) => match self.external.get(&(anc, played, infoset)) {
                        Some(row) => row.step(rng),
                        None => rng.random_range(0..actions),
                    },
                    None => {
                        let last = match self.last_observed.get(&infoset) {
                            Some(&a) => a,
                            None => rng.random_range(0..actions),
                        };
                        match self.internal.get(&(infoset, last)) {
                            Some(row) => row.step(mu_for(game, config, infoset), rng),
                            None => last,
                        }
                    }
                };
                choices[infoset.index()] = choice;
                self.part2_key[infoset.index()] = anchor;
            }
        }

        let profile = PureProfile { choices, chance: Some(chance) };
        let payoffs = realized_payoffs(game, &profile);
        self.accumulate(game, &profile);
        StepRecord {
            choices: profile.choices,
            chance: profile.chance.unwrap_or_default(),
            payoffs,
        }
    }

    pub(super) fn replay_step(&mut self, game: &GameTree, record: &StepRecord) {
        let profile = record.profile();
        self.on_path.fill(false);
        self.part2_key.fill(None);
        let mut at = game.root();
        loop {
            let node = game.node(at);
            at = match &node.kind {
                NodeKind::Terminal { .. } => break,
                NodeKind::Chance { chance: k } => node.children[record.chance[*k]],
                NodeKind::Decision { infoset } => {
                    self.on_path[infoset.index()] = true;
                    node.children[record.choices[infoset.index()]]
                }
            };
        }
        for infoset in game.infoset_ids() {
            if !self.on_path[infoset.index()] {
                self.part2_key[infoset.index()] =
                    self.closest_on_path_ancestor(game, infoset, &record.choices);
            }
        }
        self.accumulate(game, &profile);
    }

    /// The (ancestor, action played there) anchor of an off-path infoset,
    /// or `None` when no own ancestor is on the path or the action played
    /// leads toward the infoset (the blocked case the external rows can
    /// never learn from).
    fn closest_on_path_ancestor(
        &self,
        game: &GameTree,
        infoset: InfosetId,
        choices: &[usize],
    ) -> Option<(InfosetId, usize)> {
        let &(anc, toward) = game
            .infoset(infoset)
            .ancestry
            .iter()
            .rev()
            .find(|(anc, _)| self.on_path[anc.index()])?;
        let played = choices[anc.index()];
        (played != toward).then_some((anc, played))
    }

    fn accumulate(&mut self, game: &GameTree, profile: &PureProfile) {
        for infoset in game.infoset_ids() {
            let played = profile.choice(infoset);
            if self.on_path[infoset.index()] {
                // Observed: the row of the action actually played receives
                // the observation-gated one-shot gains. Sibling rows share
                // the observation subsequence and advance their visit
                // clocks with a zero observation, keeping the switching
                // probabilities correctly normalized.
                let deltas = game.one_shot_deltas(infoset, profile);
                let zeros = vec![0.0; game.action_count(infoset)];
                for action in 0..game.action_count(infoset) {
                    if action == played {
                        self.internal
                            .entry((infoset, played))
                            .or_insert_with(|| {
                                InternalRegretRow::with_last(game.action_count(infoset), played)
                            })
                            .accumulate(played, &deltas);
                    } else if let Some(row) = self.internal.get_mut(&(infoset, action)) {
                        row.accumulate(action, &zeros);
                    }
                }
                self.last_observed.insert(infoset, played);
            } else if let Some(key) = self.part2_key[infoset.index()] {
                // Off path: the anchored external row receives gains gated
                // by reachability; an unreachable infoset contributes
                // nothing.
                if game.reachable(profile, infoset) {
                    let deltas = game.one_shot_deltas(infoset, profile);
                    self.external
                        .entry((key.0, key.1, infoset))
                        .or_insert_with(|| ExternalRegretRow::new(game.action_count(infoset)))
                        .accumulate(&deltas);
                }
            }
        }
    }
}
