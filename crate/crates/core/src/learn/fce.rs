//! The main procedure: internal regret matching keyed by signal histories.

use super::{mu_for, realized_payoffs, LearnConfig, StepRecord, Streams};
use crate::game::{GameTree, InfosetId, PureProfile};
use crate::regret::InternalRegretRow;
use rand::Rng;
use std::collections::HashMap;

/// Interned signal-history key. Keys chain as (prefix, action) pairs, so
/// extending a history is O(1); 0 is the empty history.
type HistKey = u64;

pub(super) struct FceRunner {
    /// Per player: (prefix key, action) -> key.
    interner: Vec<HashMap<(HistKey, usize), HistKey>>,
    next_key: Vec<HistKey>,
    /// (infoset, full history key) -> regret row. Materialized on first
    /// accumulation only, so the row count is bounded by steps x infosets.
    rows: HashMap<(InfosetId, HistKey), InternalRegretRow>,
    /// (infoset, partial history key) -> action played the last time that
    /// partial history was realized there.
    last_action: HashMap<(InfosetId, HistKey), usize>,
    /// Scratch, indexed by infoset: full history key realized this step.
    full_key: Vec<HistKey>,
    partial_key: Vec<HistKey>,
}

impl FceRunner {
    pub(super) fn new(game: &GameTree) -> Self {
        FceRunner {
            interner: vec![HashMap::new(); game.num_players()],
            next_key: vec![1; game.num_players()],
            rows: HashMap::new(),
            last_action: HashMap::new(),
            full_key: vec![0; game.num_infosets()],
            partial_key: vec![0; game.num_infosets()],
        }
    }

    pub(super) fn row_count(&self) -> u64 {
        self.rows.len() as u64
    }

    fn intern(&mut self, player: usize, prefix: HistKey, action: usize) -> HistKey {
        let next = &mut self.next_key[player];
        *self.interner[player].entry((prefix, action)).or_insert_with(|| {
            let key = *next;
            *next += 1;
            key
        })
    }

    /// Key of an already-realized history, without minting a fresh id.
    fn lookup(&self, player: usize, prefix: HistKey, action: usize) -> Option<HistKey> {
        self.interner[player].get(&(prefix, action)).copied()
    }

    /// Partial signal history of `infoset` this step: the full key of its
    /// player-view parent, already computed because traversal is
    /// ancestor-first.
    fn partial_of(&self, game: &GameTree, infoset: InfosetId) -> HistKey {
        match game.infoset(infoset).ancestry.last() {
            Some(&(parent, _)) => self.full_key[parent.index()],
            None => 0,
        }
    }

    pub(super) fn live_step(
        &mut self,
        game: &GameTree,
        config: &LearnConfig,
        streams: &mut Streams,
    ) -> StepRecord {
        let chance = streams.sample_chance(game);
        let mut choices = vec![usize::MAX; game.num_infosets()];
        for player in 0..game.num_players() {
            for &infoset in game.player_infosets(player) {
                debug_assert!(
                    game.infoset(infoset)
                        .ancestry
                        .iter()
                        .all(|&(anc, _)| choices[anc.index()] != usize::MAX),
                    "traversal must be ancestor-first"
                );
                let actions = game.action_count(infoset);
                let partial = self.partial_of(game, infoset);
                let rng = &mut streams.players[player];
                let last = match self.last_action.get(&(infoset, partial)) {
                    Some(&a) => a,
                    None => rng.random_range(0..actions),
                };
                let selection_key = self.intern(player, partial, last);
                let choice = match self.rows.get(&(infoset, selection_key)) {
                    Some(row) => row.step(mu_for(game, config, infoset), rng),
                    None => last,
                };
                choices[infoset.index()] = choice;
                self.partial_key[infoset.index()] = partial;
                self.full_key[infoset.index()] = self.intern(player, partial, choice);
                self.last_action.insert((infoset, partial), choice);
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
        for player in 0..game.num_players() {
            for &infoset in game.player_infosets(player) {
                let partial = self.partial_of(game, infoset);
                let choice = record.choices[infoset.index()];
                self.partial_key[infoset.index()] = partial;
                self.full_key[infoset.index()] = self.intern(player, partial, choice);
                self.last_action.insert((infoset, partial), choice);
            }
        }
        let profile = record.profile();
        self.accumulate(game, &profile);
    }

    /// Accumulates every row keyed by a realized signal history at a
    /// reachable infoset with the one-shot gains. Sibling rows under the
    /// same partial history share the conditioning subsequence, so the
    /// ones already materialized advance their visit clocks with a zero
    /// observation anchored at their own key action; without this the
    /// switching probabilities stay inflated and play cycles.
    fn accumulate(&mut self, game: &GameTree, profile: &PureProfile) {
        for player in 0..game.num_players() {
            for &infoset in game.player_infosets(player) {
                if !game.reachable(profile, infoset) {
                    continue;
                }
                let deltas = game.one_shot_deltas(infoset, profile);
                let played = profile.choice(infoset);
                let partial = self.partial_key[infoset.index()];
                let zeros = vec![0.0; game.action_count(infoset)];
                for action in 0..game.action_count(infoset) {
                    if action == played {
                        let key = (infoset, self.full_key[infoset.index()]);
                        self.rows
                            .entry(key)
                            .or_insert_with(|| {
                                InternalRegretRow::with_last(game.action_count(infoset), played)
                            })
                            .accumulate(played, &deltas);
                    } else if let Some(id) = self.lookup(player, partial, action) {
                        if let Some(row) = self.rows.get_mut(&(infoset, id)) {
                            row.accumulate(action, &zeros);
                        }
                    }
                }
            }
        }
    }
}
