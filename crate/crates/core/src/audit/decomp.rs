//! Regret decomposition inequality checks.
//!
//! Three families of inequalities hold for every trace on every game:
//!
//! 1. ER+(IP, a, I) <= sum over I' in DES(I) of CFR+(IP, a, I'): the
//!    tree decomposition bounding a subgame's external regret by its local
//!    counterfactual regrets.
//! 2. IR+(IP, a) <= AR+(IP, a) + max over b != a of the sum over
//!    I in Succ(IP, b) of ER(IP, a, I): splitting an internal deviation
//!    into its first action and a blind continuation.
//! 3. The previous bound with each ER expanded into its CFR+ sum.
//!
//! A gap is the left side minus the right side; positive gaps beyond the
//! tolerance are violations.

use super::TraceAudit;
use serde::{Deserialize, Serialize};

pub const GAP_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GapKind {
    /// ER+ against its CFR+ sum.
    ExternalVsCounterfactualSum,
    /// IR+ against AR+ plus gated ER sums.
    InternalVsAgentPlusExternal,
    /// IR+ against AR+ plus gated CFR+ sums.
    InternalVsAgentPlusCounterfactual,
}

impl GapKind {
    pub fn as_str(self) -> &'static str {
        match self {
            GapKind::ExternalVsCounterfactualSum => "er_vs_cfr_sum",
            GapKind::InternalVsAgentPlusExternal => "ir_vs_ar_plus_er",
            GapKind::InternalVsAgentPlusCounterfactual => "ir_vs_ar_plus_cfr",
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GapEntry {
    pub kind: GapKind,
    pub key: String,
    /// Left side minus right side; at most the tolerance when the
    /// inequality holds.
    pub gap: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GapReport {
    pub tolerance: f64,
    pub entries: Vec<GapEntry>,
}

impl GapReport {
    pub fn max_gap(&self) -> f64 {
        self.entries.iter().map(|e| e.gap).fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn violations(&self) -> Vec<&GapEntry> {
        self.entries.iter().filter(|e| e.gap > self.tolerance).collect()
    }

    pub fn ok(&self) -> bool {
        self.entries.iter().all(|e| e.gap <= self.tolerance)
    }
}

impl TraceAudit<'_> {
    /// Evaluates every decomposition inequality on every valid key tuple.
    pub fn decomposition_gaps(&self) -> GapReport {
        let game = self.game();
        let mut entries = Vec::new();
        for anchor in game.infoset_ids() {
            let anchor_label = game.qualified_label(anchor);
            for a in 0..game.action_count(anchor) {
                let action_name = &game.infoset(anchor).actions[a];
                for &target in game.descendants(anchor) {
                    let er_pos = self.external_regret_pos(anchor, a, target);
                    let cfr_sum: f64 = game
                        .descendants(target)
                        .iter()
                        .map(|&t| self.counterfactual_regret_pos(anchor, a, t))
                        .sum();
                    entries.push(GapEntry {
                        kind: GapKind::ExternalVsCounterfactualSum,
                        key: format!(
                            "{anchor_label}:{action_name}->{}",
                            game.qualified_label(target)
                        ),
                        gap: er_pos - cfr_sum,
                    });
                }

                let ir = self.internal_regret(anchor, a);
                let ar = self.agent_regret(anchor, a);
                let mut best_er_tail: f64 = 0.0;
                let mut best_cfr_tail: f64 = 0.0;
                for b in 0..game.action_count(anchor) {
                    if b == a {
                        continue;
                    }
                    let er_tail: f64 = game
                        .successors(anchor, b)
                        .iter()
                        .map(|&next| self.external_regret(anchor, a, next))
                        .sum();
                    let cfr_tail: f64 = game
                        .successors(anchor, b)
                        .iter()
                        .flat_map(|&next| game.descendants(next))
                        .map(|&t| self.counterfactual_regret_pos(anchor, a, t))
                        .sum();
                    best_er_tail = best_er_tail.max(er_tail);
                    best_cfr_tail = best_cfr_tail.max(cfr_tail);
                }
                let key = format!("{anchor_label}:{action_name}");
                entries.push(GapEntry {
                    kind: GapKind::InternalVsAgentPlusExternal,
                    key: key.clone(),
                    gap: ir - (ar + best_er_tail),
                });
                entries.push(GapEntry {
                    kind: GapKind::InternalVsAgentPlusCounterfactual,
                    key,
                    gap: ir - (ar + best_cfr_tail),
                });
            }
        }
        GapReport { tolerance: GAP_TOLERANCE, entries }
    }
}
