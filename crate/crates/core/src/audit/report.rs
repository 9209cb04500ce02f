//! Serializable audit reports with stable field names.

use super::TraceAudit;
use serde::{Deserialize, Serialize};

/// Final epsilons of the four equilibrium verifiers plus the one-shot
/// forgiving form, in payoff units, with the game's payoff range for
/// scale.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EpsilonReport {
    pub afce: f64,
    pub efce: f64,
    pub ace: f64,
    pub fce: f64,
    pub fce_local: f64,
    pub payoff_range: f64,
}

impl EpsilonReport {
    pub fn max_epsilon(&self) -> f64 {
        self.afce.max(self.efce).max(self.ace).max(self.fce)
    }

    /// Whether fce >= ace >= efce >= afce holds within the tolerance.
    pub fn nesting_ok(&self, tolerance: f64) -> bool {
        self.fce + tolerance >= self.ace
            && self.ace + tolerance >= self.efce
            && self.efce + tolerance >= self.afce
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum RegretFamily {
    #[serde(rename = "ER")]
    External,
    #[serde(rename = "CFR")]
    Counterfactual,
    #[serde(rename = "CFIR")]
    CounterfactualInternal,
    #[serde(rename = "IR")]
    Internal,
    #[serde(rename = "AR")]
    Agent,
}

impl RegretFamily {
    pub fn as_str(self) -> &'static str {
        match self {
            RegretFamily::External => "ER",
            RegretFamily::Counterfactual => "CFR",
            RegretFamily::CounterfactualInternal => "CFIR",
            RegretFamily::Internal => "IR",
            RegretFamily::Agent => "AR",
        }
    }
}

/// One regret value: `{family, key, value, T}` with a human-readable key
/// (player/infoset-label paths and action names, not interned ids).
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RegretEntry {
    pub family: RegretFamily,
    pub key: String,
    /// Average positive regret at the horizon.
    pub value: f64,
    #[serde(rename = "T")]
    pub t: u64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RegretReport {
    pub entries: Vec<RegretEntry>,
    /// Payoff-range bound of the game, for scale.
    pub payoff_range: f64,
    pub t: u64,
}

impl RegretReport {
    pub fn max_of(&self, family: RegretFamily) -> f64 {
        self.entries
            .iter()
            .filter(|e| e.family == family)
            .map(|e| e.value)
            .fold(0.0, f64::max)
    }
}

impl TraceAudit<'_> {
    fn history_label(&self, infoset: crate::game::InfosetId, history: &[usize]) -> String {
        let game = self.game();
        let info = game.infoset(infoset);
        let mut names = Vec::with_capacity(history.len());
        for (k, &entry) in history.iter().enumerate() {
            let at = if k < info.ancestry.len() { info.ancestry[k].0 } else { infoset };
            names.push(game.infoset(at).actions[entry].clone());
        }
        names.join(";")
    }

    /// Every regret family at every key tuple, averaged over the horizon.
    pub fn regret_report(&self) -> RegretReport {
        let game = self.game();
        let t = self.horizon();
        let mut entries = Vec::new();
        for anchor in game.infoset_ids() {
            let anchor_label = game.qualified_label(anchor);
            for a in 0..game.action_count(anchor) {
                let action = &game.infoset(anchor).actions[a];
                for &target in game.descendants(anchor) {
                    let key =
                        format!("{anchor_label}:{action}->{}", game.qualified_label(target));
                    entries.push(RegretEntry {
                        family: RegretFamily::External,
                        key: key.clone(),
                        value: self.external_regret_pos(anchor, a, target),
                        t,
                    });
                    entries.push(RegretEntry {
                        family: RegretFamily::Counterfactual,
                        key,
                        value: self.counterfactual_regret_pos(anchor, a, target),
                        t,
                    });
                }
                let key = format!("{anchor_label}:{action}");
                entries.push(RegretEntry {
                    family: RegretFamily::Internal,
                    key: key.clone(),
                    value: self.internal_regret(anchor, a),
                    t,
                });
                entries.push(RegretEntry {
                    family: RegretFamily::Agent,
                    key,
                    value: self.agent_regret(anchor, a),
                    t,
                });
            }
        }
        for ((infoset, history), value) in self.cfir_pos_by_key() {
            entries.push(RegretEntry {
                family: RegretFamily::CounterfactualInternal,
                key: format!(
                    "{}@{}",
                    self.game().qualified_label(infoset),
                    self.history_label(infoset, &history)
                ),
                value,
                t,
            });
        }
        RegretReport { entries, payoff_range: game.payoff_range_max(), t }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::audit::TraceAudit;
    use crate::format::builtin::builtin_game;
    use crate::game::PureProfile;
    use crate::learn::{PlayTrace, Procedure};

    #[test]
    fn reports_serialize_with_stable_field_names() {
        let game = builtin_game("two_stage_solo").unwrap();
        let profiles = [PureProfile::new(vec![0, 1]), PureProfile::new(vec![1, 0])];
        let trace = PlayTrace::from_profiles(&game, Procedure::Fce, 0, &profiles);
        let audit = TraceAudit::from_trace(&game, &trace).unwrap();
        let report = audit.regret_report();
        let json = serde_json::to_value(&report).unwrap();
        let entry = &json["entries"][0];
        for field in ["family", "key", "value", "T"] {
            assert!(!entry[field].is_null(), "missing field {field}: {entry}");
        }
        let back: RegretReport = serde_json::from_value(json).unwrap();
        assert_eq!(back.entries.len(), report.entries.len());

        let eps = serde_json::to_value(audit.epsilon_report()).unwrap();
        for field in ["afce", "efce", "ace", "fce", "fce_local", "payoff_range"] {
            assert!(eps[field].is_number(), "missing field {field}");
        }
        let gaps = serde_json::to_value(audit.decomposition_gaps()).unwrap();
        assert!(gaps["entries"][0]["key"].is_string());
        assert!(gaps["entries"][0]["gap"].is_number());
    }

    #[test]
    fn regret_report_covers_every_family() {
        let game = builtin_game("kuhn_poker").unwrap();
        let mut profiles = Vec::new();
        for k in 0..6 {
            profiles.push(PureProfile::with_chance(
                (0..12).map(|i| (i + k) % 2).collect(),
                vec![k % 6],
            ));
        }
        let trace = PlayTrace::from_profiles(&game, Procedure::Fce, 0, &profiles);
        let audit = TraceAudit::from_trace(&game, &trace).unwrap();
        let report = audit.regret_report();
        for family in [
            RegretFamily::External,
            RegretFamily::Counterfactual,
            RegretFamily::CounterfactualInternal,
            RegretFamily::Internal,
            RegretFamily::Agent,
        ] {
            assert!(
                report.entries.iter().any(|e| e.family == family),
                "no {} entries",
                family.as_str()
            );
            assert!(report.max_of(family) >= 0.0);
        }
        assert_eq!(report.payoff_range, 4.0);
    }
}
