//! Extensive-form game representation and the combinatorial primitives on
//! pure strategy profiles.
//!
//! A [`GameTree`] is immutable after construction and safe to share across
//! threads; every operation here is a pure function of its inputs. Node,
//! infoset, and action identifiers are small integers assigned in
//! deterministic depth-first preorder, so all iteration orders are stable
//! for a given input.

mod ops;
mod profile;

pub use ops::{DeviationPlan, MapPlan, PlanError, SignalHistory};
pub use profile::{CapExceeded, ProfileIter, PureProfile};

use serde::{Deserialize, Serialize};
use std::collections::HashMap;
use std::fmt;

/// Index of a node in depth-first preorder.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct NodeId(pub u32);

/// Index of an information set, in order of first appearance along the
/// depth-first preorder walk.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct InfosetId(pub u32);

impl NodeId {
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

impl InfosetId {
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

impl fmt::Display for NodeId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "n{}", self.0)
    }
}

impl fmt::Display for InfosetId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "i{}", self.0)
    }
}

#[derive(Debug, Clone)]
pub enum NodeKind {
    /// Strategic decision node; children are parallel to the infoset's
    /// action list.
    Decision { infoset: InfosetId },
    /// Chance node; `chance` indexes into [`GameTree::chance_nodes`].
    Chance { chance: usize },
    /// Terminal node with one payoff per strategic player.
    Terminal { payoffs: Vec<f64> },
}

#[derive(Debug, Clone)]
pub struct Node {
    pub kind: NodeKind,
    /// Child per action (decision) or per outcome (chance); empty for
    /// terminals.
    pub children: Vec<NodeId>,
    /// Parent node and the action index taken from it; `None` at the root.
    pub parent: Option<(NodeId, usize)>,
}

#[derive(Debug, Clone)]
pub struct Infoset {
    pub player: usize,
    pub label: String,
    pub actions: Vec<String>,
    pub nodes: Vec<NodeId>,
    /// The owner's view of the route from the root: the unique sequence of
    /// (infoset, action) pairs of the owner leading to this infoset.
    /// Identical for every member node under perfect recall.
    pub ancestry: Vec<(InfosetId, usize)>,
}

#[derive(Debug, Clone)]
pub struct ChanceNode {
    pub node: NodeId,
    pub outcomes: Vec<String>,
    pub probs: Vec<f64>,
}

/// A finite extensive-form game of perfect recall with optional chance
/// nodes, validated at construction.
#[derive(Debug, Clone)]
pub struct GameTree {
    name: String,
    players: usize,
    nodes: Vec<Node>,
    infosets: Vec<Infoset>,
    chance_nodes: Vec<ChanceNode>,
    /// Per player, her infosets in depth-first preorder. Ancestors always
    /// precede descendants.
    player_infosets: Vec<Vec<InfosetId>>,
    /// `successors[i][a]`: all infosets where the owner of `i` can next act
    /// after playing action `a` there, independent of the other players.
    successors: Vec<Vec<Vec<InfosetId>>>,
    /// `descendants[i]`: every infoset of the same owner weakly below `i`,
    /// including `i` itself. Sorted.
    descendants: Vec<Vec<InfosetId>>,
    /// Per player, max minus min terminal payoff.
    payoff_ranges: Vec<f64>,
}

pub const CHANCE_SUM_TOLERANCE: f64 = 1e-9;

/// Input shape for [`GameTree::build`]: one record per node, the first
/// record being the root. Child references are raw indices into the list.
#[derive(Debug, Clone)]
pub enum RawNode {
    Decision {
        /// 0-based player index.
        player: usize,
        infoset_label: String,
        actions: Vec<String>,
        children: Vec<usize>,
    },
    Chance {
        outcomes: Vec<String>,
        probs: Vec<f64>,
        children: Vec<usize>,
    },
    Terminal { payoffs: Vec<f64> },
}

#[derive(Debug, Clone, thiserror::Error)]
pub enum StructureError {
    #[error("child reference {child} does not resolve to a node")]
    DanglingChild { child: usize },
    #[error("node is referenced by more than one parent edge")]
    MultipleParents,
    #[error("node is not reachable from the root")]
    Orphan,
    #[error("player index {player} out of range for {players} players")]
    PlayerRange { player: usize, players: usize },
    #[error("decision node has no actions")]
    NoActions,
    #[error("duplicate action name `{action}`")]
    DuplicateAction { action: String },
    #[error("infoset `{label}` reused with a different {what}")]
    InfosetMismatch { label: String, what: &'static str },
    #[error("chance probabilities sum to {sum}, expected 1")]
    ChanceSum { sum: f64 },
    #[error("negative chance probability {prob}")]
    NegativeProb { prob: f64 },
    #[error("chance node has {probs} probabilities for {children} children")]
    ChanceArity { probs: usize, children: usize },
    #[error("terminal payoff vector has {got} entries, expected {want}")]
    PayoffArity { got: usize, want: usize },
    #[error("game has no players")]
    NoPlayers,
    #[error("game has no nodes")]
    Empty,
}

/// Two member nodes of one infoset disagree on the owner's view of the
/// route from the root, so the owner could distinguish them.
#[derive(Debug, Clone)]
pub struct RecallViolation {
    pub label: String,
    pub player: usize,
    pub ancestry_a: Vec<(String, String)>,
    pub ancestry_b: Vec<(String, String)>,
}

impl fmt::Display for RecallViolation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let fmt_anc = |anc: &[(String, String)]| {
            anc.iter()
                .map(|(i, a)| format!("{i}:{a}"))
                .collect::<Vec<_>>()
                .join(",")
        };
        write!(
            f,
            "infoset `{}` of player {} merges nodes with views [{}] and [{}]",
            self.label,
            self.player + 1,
            fmt_anc(&self.ancestry_a),
            fmt_anc(&self.ancestry_b)
        )
    }
}

#[derive(Debug, Clone, thiserror::Error)]
pub enum BuildError {
    /// Malformed tree; `node` is the index of the offending input record.
    #[error("node {node}: {error}")]
    Structure { node: usize, error: StructureError },
    #[error("{error}")]
    Game { error: StructureError },
    /// Structurally sound tree that fails perfect recall.
    #[error("perfect recall violated: {}", .0.iter().map(|v| v.to_string()).collect::<Vec<_>>().join("; "))]
    Recall(Vec<RecallViolation>),
}

impl GameTree {
    /// Validates and interns a raw node list into a game tree.
    ///
    /// Structural problems (dangling children, orphans, bad probabilities,
    /// inconsistent infoset labels) are reported per offending record and
    /// are distinct from perfect-recall violations, which are reported with
    /// the two conflicting player views.
    pub fn build(name: &str, players: usize, raw: &[RawNode]) -> Result<Self, BuildError> {
        if players == 0 {
            return Err(BuildError::Game { error: StructureError::NoPlayers });
        }
        if raw.is_empty() {
            return Err(BuildError::Game { error: StructureError::Empty });
        }
        let structure = |node, error| BuildError::Structure { node, error };

        // Per-record shape checks.
        for (idx, node) in raw.iter().enumerate() {
            match node {
                RawNode::Decision { player, actions, children, .. } => {
                    if *player >= players {
                        return Err(structure(
                            idx,
                            StructureError::PlayerRange { player: *player, players },
                        ));
                    }
                    if actions.is_empty() {
                        return Err(structure(idx, StructureError::NoActions));
                    }
                    for (i, a) in actions.iter().enumerate() {
                        if actions[..i].contains(a) {
                            return Err(structure(
                                idx,
                                StructureError::DuplicateAction { action: a.clone() },
                            ));
                        }
                    }
                    debug_assert_eq!(actions.len(), children.len());
                }
                RawNode::Chance { outcomes, probs, children } => {
                    if probs.len() != children.len() || outcomes.len() != children.len() {
                        return Err(structure(
                            idx,
                            StructureError::ChanceArity {
                                probs: probs.len(),
                                children: children.len(),
                            },
                        ));
                    }
                    if children.is_empty() {
                        return Err(structure(idx, StructureError::NoActions));
                    }
                    for &p in probs {
                        if p < 0.0 || !p.is_finite() {
                            return Err(structure(idx, StructureError::NegativeProb { prob: p }));
                        }
                    }
                    let sum: f64 = probs.iter().sum();
                    if (sum - 1.0).abs() > CHANCE_SUM_TOLERANCE {
                        return Err(structure(idx, StructureError::ChanceSum { sum }));
                    }
                }
                RawNode::Terminal { payoffs } => {
                    if payoffs.len() != players {
                        return Err(structure(
                            idx,
                            StructureError::PayoffArity { got: payoffs.len(), want: players },
                        ));
                    }
                }
            }
        }

        // Edge checks: every child resolves, nothing has two parents, and
        // every record is reachable from the root.
        fn children_of(node: &RawNode) -> &[usize] {
            match node {
                RawNode::Decision { children, .. } | RawNode::Chance { children, .. } => children,
                RawNode::Terminal { .. } => &[],
            }
        }
        let mut parent_seen = vec![false; raw.len()];
        for (idx, node) in raw.iter().enumerate() {
            for &c in children_of(node) {
                if c >= raw.len() {
                    return Err(structure(idx, StructureError::DanglingChild { child: c }));
                }
                if c == 0 || parent_seen[c] {
                    return Err(structure(c, StructureError::MultipleParents));
                }
                parent_seen[c] = true;
            }
        }
        // Visit in preorder; single-parent plus unreferenced root rules out
        // cycles, so a plain stack walk terminates.
        let mut order = Vec::with_capacity(raw.len());
        let mut visited = vec![false; raw.len()];
        let mut stack = vec![0usize];
        while let Some(v) = stack.pop() {
            visited[v] = true;
            order.push(v);
            for &c in children_of(&raw[v]).iter().rev() {
                stack.push(c);
            }
        }
        if let Some(orphan) = visited.iter().position(|v| !v) {
            return Err(structure(orphan, StructureError::Orphan));
        }

        // Intern nodes in preorder and infosets by first appearance.
        let mut raw_to_id = vec![NodeId(0); raw.len()];
        for (pre, &r) in order.iter().enumerate() {
            raw_to_id[r] = NodeId(pre as u32);
        }
        let mut infoset_ids: HashMap<(usize, &str), InfosetId> = HashMap::new();
        let mut infosets: Vec<Infoset> = Vec::new();
        let mut chance_nodes: Vec<ChanceNode> = Vec::new();
        let mut nodes: Vec<Node> = Vec::with_capacity(raw.len());
        for &r in &order {
            let id = NodeId(nodes.len() as u32);
            let kind = match &raw[r] {
                RawNode::Decision { player, infoset_label, actions, .. } => {
                    let entry = infoset_ids.entry((*player, infoset_label.as_str()));
                    let iid = *entry.or_insert_with(|| {
                        infosets.push(Infoset {
                            player: *player,
                            label: infoset_label.clone(),
                            actions: actions.clone(),
                            nodes: Vec::new(),
                            ancestry: Vec::new(),
                        });
                        InfosetId(infosets.len() as u32 - 1)
                    });
                    let info = &mut infosets[iid.index()];
                    if info.actions != *actions {
                        return Err(structure(
                            r,
                            StructureError::InfosetMismatch {
                                label: infoset_label.clone(),
                                what: "action list",
                            },
                        ));
                    }
                    info.nodes.push(id);
                    NodeKind::Decision { infoset: iid }
                }
                RawNode::Chance { outcomes, probs, .. } => {
                    chance_nodes.push(ChanceNode {
                        node: id,
                        outcomes: outcomes.clone(),
                        probs: probs.clone(),
                    });
                    NodeKind::Chance { chance: chance_nodes.len() - 1 }
                }
                RawNode::Terminal { payoffs } => NodeKind::Terminal { payoffs: payoffs.clone() },
            };
            let children: Vec<NodeId> =
                children_of(&raw[r]).iter().map(|&c| raw_to_id[c]).collect();
            nodes.push(Node { kind, children, parent: None });
        }
        for id in 0..nodes.len() {
            for (a, &c) in nodes[id].children.clone().iter().enumerate() {
                nodes[c.index()].parent = Some((NodeId(id as u32), a));
            }
        }

        let mut game = GameTree {
            name: name.to_string(),
            players,
            nodes,
            infosets,
            chance_nodes,
            player_infosets: Vec::new(),
            successors: Vec::new(),
            descendants: Vec::new(),
            payoff_ranges: Vec::new(),
        };
        game.validate_recall()?;
        game.compute_caches();
        Ok(game)
    }

    /// Checks that all member nodes of every infoset share one player-view
    /// ancestry, filling in [`Infoset::ancestry`] on success.
    fn validate_recall(&mut self) -> Result<(), BuildError> {
        // Player-view ancestry per node, built by walking parents.
        let node_view = |mut id: NodeId, player: usize| -> Vec<(InfosetId, usize)> {
            let mut view = Vec::new();
            while let Some((parent, action)) = self.nodes[id.index()].parent {
                if let NodeKind::Decision { infoset } = self.nodes[parent.index()].kind {
                    if self.infosets[infoset.index()].player == player {
                        view.push((infoset, action));
                    }
                }
                id = parent;
            }
            view.reverse();
            view
        };
        let mut violations = Vec::new();
        let mut ancestries = Vec::with_capacity(self.infosets.len());
        for info in &self.infosets {
            let first = node_view(info.nodes[0], info.player);
            let mut ok = true;
            for &other in &info.nodes[1..] {
                let view = node_view(other, info.player);
                if view != first {
                    ok = false;
                    violations.push(RecallViolation {
                        label: info.label.clone(),
                        player: info.player,
                        ancestry_a: self.describe_view(&first),
                        ancestry_b: self.describe_view(&view),
                    });
                    break;
                }
            }
            ancestries.push(if ok { first } else { Vec::new() });
        }
        if !violations.is_empty() {
            return Err(BuildError::Recall(violations));
        }
        for (info, anc) in self.infosets.iter_mut().zip(ancestries) {
            info.ancestry = anc;
        }
        Ok(())
    }

    fn describe_view(&self, view: &[(InfosetId, usize)]) -> Vec<(String, String)> {
        view.iter()
            .map(|&(i, a)| {
                let info = &self.infosets[i.index()];
                (info.label.clone(), info.actions[a].clone())
            })
            .collect()
    }

    fn compute_caches(&mut self) {
        // Preorder infoset lists per player.
        self.player_infosets = vec![Vec::new(); self.players];
        let mut seen = vec![false; self.infosets.len()];
        for node in &self.nodes {
            if let NodeKind::Decision { infoset } = node.kind {
                if !seen[infoset.index()] {
                    seen[infoset.index()] = true;
                    self.player_infosets[self.infosets[infoset.index()].player].push(infoset);
                }
            }
        }

        // Structural successors: from each member node, walk every branch
        // below the action until the owner acts again. This is independent
        // of the other players' choices and coincides with the union over
        // all profiles of the next-infoset function.
        let mut successors = Vec::with_capacity(self.infosets.len());
        for (i, info) in self.infosets.iter().enumerate() {
            let mut per_action = Vec::with_capacity(info.actions.len());
            for a in 0..info.actions.len() {
                let mut out: Vec<InfosetId> = Vec::new();
                for &member in &info.nodes {
                    let child = self.nodes[member.index()].children[a];
                    self.collect_next_own(child, info.player, &mut out);
                }
                out.sort_unstable();
                out.dedup();
                out.retain(|s| s.index() != i);
                per_action.push(out);
            }
            successors.push(per_action);
        }
        self.successors = successors;

        // Descendants: closure of successors, including the infoset itself.
        let mut descendants = Vec::with_capacity(self.infosets.len());
        for i in 0..self.infosets.len() {
            let mut des = vec![InfosetId(i as u32)];
            let mut queue = vec![InfosetId(i as u32)];
            while let Some(j) = queue.pop() {
                for per_action in &self.successors[j.index()] {
                    for &n in per_action {
                        if !des.contains(&n) {
                            des.push(n);
                            queue.push(n);
                        }
                    }
                }
            }
            des.sort_unstable();
            descendants.push(des);
        }
        self.descendants = descendants;

        let mut lo = vec![f64::INFINITY; self.players];
        let mut hi = vec![f64::NEG_INFINITY; self.players];
        for node in &self.nodes {
            if let NodeKind::Terminal { payoffs } = &node.kind {
                for (p, &v) in payoffs.iter().enumerate() {
                    lo[p] = lo[p].min(v);
                    hi[p] = hi[p].max(v);
                }
            }
        }
        self.payoff_ranges =
            lo.iter().zip(&hi).map(|(&l, &h)| if h > l { h - l } else { 0.0 }).collect();
    }

    fn collect_next_own(&self, node: NodeId, player: usize, out: &mut Vec<InfosetId>) {
        match &self.nodes[node.index()].kind {
            NodeKind::Terminal { .. } => {}
            NodeKind::Decision { infoset }
                if self.infosets[infoset.index()].player == player =>
            {
                out.push(*infoset);
            }
            _ => {
                for &c in &self.nodes[node.index()].children {
                    self.collect_next_own(c, player, out);
                }
            }
        }
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn num_players(&self) -> usize {
        self.players
    }

    pub fn num_infosets(&self) -> usize {
        self.infosets.len()
    }

    pub fn root(&self) -> NodeId {
        NodeId(0)
    }

    pub fn node(&self, id: NodeId) -> &Node {
        &self.nodes[id.index()]
    }

    pub fn num_nodes(&self) -> usize {
        self.nodes.len()
    }

    pub fn infoset(&self, id: InfosetId) -> &Infoset {
        &self.infosets[id.index()]
    }

    pub fn infoset_ids(&self) -> impl Iterator<Item = InfosetId> {
        (0..self.infosets.len() as u32).map(InfosetId)
    }

    pub fn action_count(&self, id: InfosetId) -> usize {
        self.infosets[id.index()].actions.len()
    }

    pub fn player_of(&self, id: InfosetId) -> usize {
        self.infosets[id.index()].player
    }

    /// The player's infosets in depth-first preorder; ancestors first.
    pub fn player_infosets(&self, player: usize) -> &[InfosetId] {
        &self.player_infosets[player]
    }

    pub fn successors(&self, id: InfosetId, action: usize) -> &[InfosetId] {
        &self.successors[id.index()][action]
    }

    /// All infosets of the owner weakly below `id`, including `id`.
    pub fn descendants(&self, id: InfosetId) -> &[InfosetId] {
        &self.descendants[id.index()]
    }

    pub fn has_chance(&self) -> bool {
        !self.chance_nodes.is_empty()
    }

    pub fn chance_nodes(&self) -> &[ChanceNode] {
        &self.chance_nodes
    }

    /// Max minus min terminal payoff for one player.
    pub fn payoff_range(&self, player: usize) -> f64 {
        self.payoff_ranges[player]
    }

    /// Largest per-player payoff range; the scale bound reported with
    /// regret and epsilon values.
    pub fn payoff_range_max(&self) -> f64 {
        self.payoff_ranges.iter().cloned().fold(0.0, f64::max)
    }

    /// `player/label` form used in reports and signal files.
    pub fn qualified_label(&self, id: InfosetId) -> String {
        let info = &self.infosets[id.index()];
        format!("p{}/{}", info.player + 1, info.label)
    }
}
