//! Pure strategy profiles and their enumeration.

use super::{GameTree, InfosetId};

/// One action per infoset for every player, indexed by [`InfosetId`].
///
/// Profiles are complete: a choice is present at every infoset, including
/// ones off the path of play, because the regret definitions reference
/// off-path choices. Profiles recorded from play additionally carry the
/// realized outcome of every chance node; abstract profiles (enumeration,
/// signal files) leave `chance` empty and the caller supplies realizations.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct PureProfile {
    pub choices: Vec<usize>,
    pub chance: Option<Vec<usize>>,
}

impl PureProfile {
    pub fn new(choices: Vec<usize>) -> Self {
        PureProfile { choices, chance: None }
    }

    pub fn with_chance(choices: Vec<usize>, chance: Vec<usize>) -> Self {
        PureProfile { choices, chance: Some(chance) }
    }

    pub fn choice(&self, infoset: InfosetId) -> usize {
        self.choices[infoset.index()]
    }

    pub fn set_choice(&mut self, infoset: InfosetId, action: usize) {
        self.choices[infoset.index()] = action;
    }

    /// Realized outcome of chance node `k`; panics when no realization is
    /// attached.
    pub fn chance_outcome(&self, k: usize) -> usize {
        self.chance.as_ref().expect("profile carries no chance realization")[k]
    }

    /// Checks completeness and range against a game.
    pub fn validate(&self, game: &GameTree) -> bool {
        self.choices.len() == game.num_infosets()
            && game.infoset_ids().all(|i| self.choice(i) < game.action_count(i))
            && match &self.chance {
                None => true,
                Some(ch) => {
                    ch.len() == game.chance_nodes().len()
                        && ch
                            .iter()
                            .zip(game.chance_nodes())
                            .all(|(&o, node)| o < node.outcomes.len())
                }
            }
    }
}

/// Requested enumeration would exceed the configured cap: the game is too
/// large for an exhaustive oracle.
#[derive(Debug, Clone, thiserror::Error)]
#[error("game too large for exhaustive oracle: {required} combinations exceed cap {cap}")]
pub struct CapExceeded {
    pub required: u128,
    pub cap: u64,
}

/// Lexicographic enumeration of all pure strategy profiles (strategic
/// infosets only; chance realizations enumerate separately).
#[derive(Debug)]
pub struct ProfileIter {
    radices: Vec<usize>,
    current: Option<Vec<usize>>,
}

impl Iterator for ProfileIter {
    type Item = PureProfile;

    fn next(&mut self) -> Option<PureProfile> {
        let current = self.current.as_mut()?;
        let item = PureProfile::new(current.clone());
        // Mixed-radix increment, last infoset fastest.
        let mut pos = current.len();
        loop {
            if pos == 0 {
                self.current = None;
                break;
            }
            pos -= 1;
            current[pos] += 1;
            if current[pos] < self.radices[pos] {
                break;
            }
            current[pos] = 0;
        }
        Some(item)
    }
}

impl GameTree {
    /// Deterministic lexicographic enumeration of all pure strategy
    /// profiles, guarded by `cap` (number of profiles).
    pub fn enumerate_pure_profiles(&self, cap: u64) -> Result<ProfileIter, CapExceeded> {
        let radices: Vec<usize> = self.infoset_ids().map(|i| self.action_count(i)).collect();
        let total = radices.iter().try_fold(1u128, |acc, &r| {
            let acc = acc.checked_mul(r as u128)?;
            (acc <= cap as u128).then_some(acc)
        });
        match total {
            Some(_) => Ok(ProfileIter {
                current: Some(vec![0; radices.len()]),
                radices,
            }),
            None => {
                let required = radices.iter().fold(1u128, |acc, &r| acc.saturating_mul(r as u128));
                Err(CapExceeded { required, cap })
            }
        }
    }

    pub fn num_pure_profiles(&self) -> u128 {
        self.infoset_ids()
            .fold(1u128, |acc, i| acc.saturating_mul(self.action_count(i) as u128))
    }

    /// All joint assignments of outcomes to chance nodes with their
    /// probabilities. A game without chance yields one empty assignment of
    /// probability 1.
    pub fn enumerate_chance_realizations(
        &self,
        cap: u64,
    ) -> Result<Vec<(Vec<usize>, f64)>, CapExceeded> {
        let radices: Vec<usize> =
            self.chance_nodes().iter().map(|c| c.outcomes.len()).collect();
        let total = radices.iter().fold(1u128, |acc, &r| acc.saturating_mul(r as u128));
        if total > cap as u128 {
            return Err(CapExceeded { required: total, cap });
        }
        let mut out = Vec::with_capacity(total as usize);
        let mut current = vec![0usize; radices.len()];
        loop {
            let prob: f64 = current
                .iter()
                .zip(self.chance_nodes())
                .map(|(&o, node)| node.probs[o])
                .product();
            out.push((current.clone(), prob));
            let mut pos = current.len();
            loop {
                if pos == 0 {
                    return Ok(out);
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
}
