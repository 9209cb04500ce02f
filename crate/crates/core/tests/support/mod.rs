//! Shared test machinery: a random perfect-recall game generator, random
//! traces and signals, and exhaustive oracles that the dynamic-programming
//! audit routes are checked against.
//!
//! Each integration-test binary links its own copy and uses a subset.
#![allow(dead_code)]

use fcelab_core::audit::EmpiricalSignal;
use fcelab_core::game::{GameTree, InfosetId, MapPlan, PureProfile, RawNode};
use fcelab_core::learn::{PlayTrace, Procedure};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha12Rng;

pub fn rng(seed: u64) -> ChaCha12Rng {
    ChaCha12Rng::seed_from_u64(seed)
}

#[derive(Clone)]
pub struct GameGen {
    pub players: usize,
    pub max_infosets: usize,
    pub max_actions: usize,
    pub max_depth: usize,
    pub chance_prob: f64,
}

impl Default for GameGen {
    fn default() -> Self {
        GameGen { players: 2, max_infosets: 6, max_actions: 3, max_depth: 4, chance_prob: 0.12 }
    }
}

struct GenState {
    cfg: GameGen,
    nodes: Vec<RawNode>,
    /// (player, view signature) -> (action count, infoset labels of that
    /// recall class).
    classes: Vec<((usize, Vec<(String, usize)>), (usize, Vec<String>))>,
    infosets: usize,
}

/// Builds a random finite game of perfect recall. Nodes merge into
/// infosets only within equal player-view ancestries, so recall holds by
/// construction; the builder validates it anyway.
pub fn random_game(seed: u64, cfg: &GameGen) -> GameTree {
    let mut r = rng(seed.wrapping_mul(0x9e37_79b9_7f4a_7c15).wrapping_add(1));
    let mut state = GenState {
        cfg: cfg.clone(),
        nodes: vec![RawNode::Terminal { payoffs: vec![] }],
        classes: Vec::new(),
        infosets: 0,
    };
    // Signature per player carried down the tree.
    let views: Vec<Vec<(String, usize)>> = vec![Vec::new(); cfg.players];
    let root = gen_node(&mut state, &mut r, &views, 0, true);
    state.nodes[0] = root;
    GameTree::build(&format!("random_{seed}"), cfg.players, &state.nodes)
        .expect("generated game must validate")
}

fn gen_node(
    state: &mut GenState,
    r: &mut ChaCha12Rng,
    views: &[Vec<(String, usize)>],
    depth: usize,
    force_decision: bool,
) -> RawNode {
    let cfg = state.cfg.clone();
    let terminal = |state: &mut GenState, r: &mut ChaCha12Rng| -> RawNode {
        let _ = state;
        RawNode::Terminal {
            payoffs: (0..cfg.players).map(|_| r.random_range(-100..=100) as f64 / 50.0).collect(),
        }
    };
    if !force_decision && (depth >= cfg.max_depth || r.random::<f64>() < 0.25 * depth as f64) {
        return terminal(state, r);
    }
    if !force_decision && r.random::<f64>() < cfg.chance_prob {
        let outcomes = r.random_range(2..=3);
        let weights: Vec<f64> = (0..outcomes).map(|_| r.random_range(1..=4) as f64).collect();
        let total: f64 = weights.iter().sum();
        let mut children = Vec::new();
        for _ in 0..outcomes {
            let child = gen_node(state, r, views, depth + 1, false);
            children.push(push_node(state, child));
        }
        return RawNode::Chance {
            outcomes: (0..outcomes).map(|k| format!("o{k}")).collect(),
            probs: weights.iter().map(|w| w / total).collect(),
            children,
        };
    }

    let player = r.random_range(0..cfg.players);
    let key = (player, views[player].clone());
    let class = state.classes.iter().position(|(k, _)| *k == key);
    let (actions, label) = match class {
        Some(idx) => {
            let (actions, _) = &state.classes[idx].1;
            let actions = *actions;
            // Join an existing infoset of the class or open a new one.
            if state.infosets < cfg.max_infosets && r.random::<f64>() < 0.4 {
                let label = format!("p{player}x{}", state.infosets);
                state.infosets += 1;
                state.classes[idx].1 .1.push(label.clone());
                (actions, label)
            } else {
                let labels = &state.classes[idx].1 .1;
                (actions, labels[r.random_range(0..labels.len())].clone())
            }
        }
        None => {
            if state.infosets >= cfg.max_infosets {
                return terminal(state, r);
            }
            let actions = r.random_range(2..=cfg.max_actions.max(2));
            let label = format!("p{player}x{}", state.infosets);
            state.infosets += 1;
            state.classes.push((key, (actions, vec![label.clone()])));
            (actions, label)
        }
    };
    let mut children = Vec::new();
    for a in 0..actions {
        let mut next_views = views.to_vec();
        next_views[player].push((label.clone(), a));
        let child = gen_node(state, r, &next_views, depth + 1, false);
        children.push(push_node(state, child));
    }
    RawNode::Decision {
        player,
        infoset_label: label,
        actions: (0..actions).map(|a| format!("a{a}")).collect(),
        children,
    }
}

fn push_node(state: &mut GenState, node: RawNode) -> usize {
    state.nodes.push(node);
    state.nodes.len() - 1
}

/// A uniformly random complete profile with chance sampled from the
/// game's distributions.
pub fn random_profile(game: &GameTree, r: &mut ChaCha12Rng) -> PureProfile {
    let choices = game
        .infoset_ids()
        .map(|i| r.random_range(0..game.action_count(i)))
        .collect();
    let chance = game
        .chance_nodes()
        .iter()
        .map(|node| {
            let mut u: f64 = r.random();
            for (k, &p) in node.probs.iter().enumerate() {
                if u < p {
                    return k;
                }
                u -= p;
            }
            node.probs.len() - 1
        })
        .collect::<Vec<_>>();
    if game.has_chance() {
        PureProfile::with_chance(choices, chance)
    } else {
        PureProfile::new(choices)
    }
}

pub fn random_trace(game: &GameTree, steps: usize, seed: u64) -> PlayTrace {
    let mut r = rng(seed ^ 0xdead_beef);
    let profiles: Vec<PureProfile> = (0..steps).map(|_| random_profile(game, &mut r)).collect();
    PlayTrace::from_profiles(game, Procedure::Fce, seed, &profiles)
}

/// A random signal over at most `support` distinct strategic profiles,
/// normalized to total weight one.
pub fn random_signal(game: &GameTree, support: usize, seed: u64) -> EmpiricalSignal {
    let mut r = rng(seed ^ 0x5eed_cafe);
    let mut entries: Vec<(Vec<usize>, f64)> = Vec::new();
    for _ in 0..support {
        let choices: Vec<usize> = game
            .infoset_ids()
            .map(|i| r.random_range(0..game.action_count(i)))
            .collect();
        let weight = r.random_range(1..=10) as f64;
        match entries.iter_mut().find(|(c, _)| *c == choices) {
            Some((_, w)) => *w += weight,
            None => entries.push((choices, weight)),
        }
    }
    let total: f64 = entries.iter().map(|(_, w)| w).sum();
    for (_, w) in &mut entries {
        *w /= total;
    }
    EmpiricalSignal::new(entries)
}

/// Weighted full plays exactly as the audit expands a signal: each
/// strategic profile crossed with every joint chance realization.
pub fn signal_plays(game: &GameTree, signal: &EmpiricalSignal) -> Vec<(PureProfile, f64)> {
    let realizations = game.enumerate_chance_realizations(1_000_000).unwrap();
    let mut plays = Vec::new();
    for (choices, w) in signal.entries() {
        for (chance, p) in &realizations {
            if *w == 0.0 || *p == 0.0 {
                continue;
            }
            let profile = if game.has_chance() {
                PureProfile::with_chance(choices.clone(), chance.clone())
            } else {
                PureProfile::new(choices.clone())
            };
            plays.push((profile, w * p));
        }
    }
    plays
}

/// Exhaustive extensive-form check: enumerate every continuation
/// assignment over the deviator's descendant infosets.
pub fn exhaustive_efce_epsilon(game: &GameTree, plays: &[(PureProfile, f64)]) -> f64 {
    let mut best = f64::NEG_INFINITY;
    for infoset in game.infoset_ids() {
        for a in 0..game.action_count(infoset) {
            let filtered: Vec<&(PureProfile, f64)> =
                plays.iter().filter(|(s, _)| game.observed(s, infoset, a)).collect();
            if filtered.is_empty() {
                best = best.max(0.0);
                continue;
            }
            let des: Vec<InfosetId> = game.descendants(infoset).to_vec();
            let mut assignment = vec![0usize; des.len()];
            loop {
                let mut value = 0.0;
                for (s, w) in &filtered {
                    let mut dev = (*s).clone();
                    for (k, &j) in des.iter().enumerate() {
                        dev.set_choice(j, assignment[k]);
                    }
                    value += w * (game.utility_reach(infoset, &dev, s)
                        - game.utility_reach(infoset, s, s));
                }
                best = best.max(value);
                if !advance_mixed_radix(&mut assignment, &des, game) {
                    break;
                }
            }
        }
    }
    best
}

/// Exhaustive internal-regret check: deviations constrained to differ from
/// the recommendation at the infoset itself.
pub fn exhaustive_internal_regret(
    game: &GameTree,
    plays: &[(PureProfile, f64)],
    infoset: InfosetId,
    action: usize,
) -> f64 {
    let filtered: Vec<&(PureProfile, f64)> =
        plays.iter().filter(|(s, _)| game.observed(s, infoset, action)).collect();
    if filtered.is_empty() {
        return 0.0;
    }
    let des: Vec<InfosetId> = game.descendants(infoset).to_vec();
    let mut best: f64 = 0.0;
    let mut assignment = vec![0usize; des.len()];
    let self_pos = des.iter().position(|&j| j == infoset).unwrap();
    loop {
        if assignment[self_pos] != action {
            let mut value = 0.0;
            for (s, w) in &filtered {
                let mut dev = (*s).clone();
                for (k, &j) in des.iter().enumerate() {
                    dev.set_choice(j, assignment[k]);
                }
                value += w * (game.utility_reach(infoset, &dev, s)
                    - game.utility_reach(infoset, s, s));
            }
            best = best.max(value);
        }
        if !advance_mixed_radix(&mut assignment, &des, game) {
            return best;
        }
    }
}

fn advance_mixed_radix(assignment: &mut [usize], infosets: &[InfosetId], game: &GameTree) -> bool {
    let mut pos = assignment.len();
    loop {
        if pos == 0 {
            return false;
        }
        pos -= 1;
        assignment[pos] += 1;
        if assignment[pos] < game.action_count(infosets[pos]) {
            return true;
        }
        assignment[pos] = 0;
    }
}

/// Exhaustive deviation-plan check for the autonomous (observation gate)
/// and forgiving (reachability gate) definitions. Enumerates every plan
/// over the (infoset, signal history) pairs the filtered plays can consult
/// and evaluates it through the deviation utility, which is an independent
/// route from the audit's grouped dynamic program. Returns `None` when the
/// plan space exceeds `max_plans`.
pub fn exhaustive_plan_epsilon(
    game: &GameTree,
    plays: &[(PureProfile, f64)],
    reachable_gate: bool,
    max_plans: u128,
) -> Option<f64> {
    let mut best: f64 = 0.0;
    for infoset in game.infoset_ids() {
        // Realized signal histories under the gate, grouped.
        let mut groups: Vec<(Vec<usize>, Vec<&(PureProfile, f64)>)> = Vec::new();
        for play in plays {
            let (s, _) = play;
            let gated = if reachable_gate {
                game.reachable(s, infoset)
            } else {
                game.observed_infoset(s, infoset)
            };
            if !gated {
                continue;
            }
            let hist = game.signal_history(s, infoset).entries;
            match groups.iter_mut().find(|(h, _)| *h == hist) {
                Some((_, members)) => members.push(play),
                None => groups.push((hist, vec![play])),
            }
        }
        for (_, members) in &groups {
            // Pairs the plan can be consulted at: every descendant infoset
            // with every signal history one of the member plays shows it.
            let mut pairs: Vec<(InfosetId, Vec<usize>)> = Vec::new();
            for &j in game.descendants(infoset) {
                for (s, _) in members {
                    let hist = game.signal_history(s, j).entries;
                    if !pairs.contains(&(j, hist.clone())) {
                        pairs.push((j, hist));
                    }
                }
            }
            let plan_count: u128 = pairs
                .iter()
                .map(|(j, _)| game.action_count(*j) as u128)
                .product();
            if plan_count > max_plans {
                return None;
            }
            let mut assignment = vec![0usize; pairs.len()];
            loop {
                let mut plan = MapPlan::default();
                for (k, (j, hist)) in pairs.iter().enumerate() {
                    plan.insert(*j, hist.clone(), assignment[k]);
                }
                let mut value = 0.0;
                for (s, w) in members {
                    value += w * (game.utility_deviation(infoset, &plan, s).unwrap()
                        - game.utility_reach(infoset, s, s));
                }
                best = best.max(value);
                let mut pos = assignment.len();
                let advanced = loop {
                    if pos == 0 {
                        break false;
                    }
                    pos -= 1;
                    assignment[pos] += 1;
                    if assignment[pos] < game.action_count(pairs[pos].0) {
                        break true;
                    }
                    assignment[pos] = 0;
                };
                if !advanced {
                    break;
                }
            }
        }
    }
    Some(best)
}

/// Rebuilds a game with one player's payoff component shifted by a
/// constant at every terminal. Payoff differences, and therefore every
/// regret and every choice an uncoupled learner makes, are unchanged.
pub fn shift_player_payoffs(game: &GameTree, player: usize, delta: f64) -> GameTree {
    rebuild(game, |payoffs| {
        let mut out = payoffs.to_vec();
        out[player] += delta;
        out
    }, |probs| probs.to_vec())
}

/// Rebuilds a game with chance probabilities replaced (same outcome
/// counts, chance nodes in preorder); realized play is unaffected once
/// outcomes are fixed.
pub fn reweight_chance(game: &GameTree, weights: &[Vec<f64>]) -> GameTree {
    let mut which = 0;
    rebuild(
        game,
        |p| p.to_vec(),
        |_probs| {
            let out = weights[which].clone();
            which += 1;
            out
        },
    )
}

fn rebuild(
    game: &GameTree,
    mut payoff_map: impl FnMut(&[f64]) -> Vec<f64>,
    mut prob_map: impl FnMut(&[f64]) -> Vec<f64>,
) -> GameTree {
    use fcelab_core::game::{NodeId, NodeKind};
    let mut raw = Vec::with_capacity(game.num_nodes());
    for id in 0..game.num_nodes() {
        let node = game.node(NodeId(id as u32));
        let children: Vec<usize> = node.children.iter().map(|c| c.index()).collect();
        raw.push(match &node.kind {
            NodeKind::Decision { infoset } => {
                let info = game.infoset(*infoset);
                RawNode::Decision {
                    player: info.player,
                    infoset_label: info.label.clone(),
                    actions: info.actions.clone(),
                    children,
                }
            }
            NodeKind::Chance { chance } => {
                let ch = &game.chance_nodes()[*chance];
                RawNode::Chance {
                    outcomes: ch.outcomes.clone(),
                    probs: prob_map(&ch.probs),
                    children,
                }
            }
            NodeKind::Terminal { payoffs } => RawNode::Terminal { payoffs: payoff_map(payoffs) },
        });
    }
    GameTree::build(game.name(), game.num_players(), &raw).expect("rebuilt game must validate")
}

/// Exhaustive external regret: maximize over every assignment of the
/// owner's infosets, evaluating the gated utility difference play by play.
pub fn exhaustive_external_regret(
    game: &GameTree,
    plays: &[(PureProfile, f64)],
    anchor: InfosetId,
    action: usize,
    target: InfosetId,
) -> f64 {
    let filtered: Vec<&(PureProfile, f64)> = plays
        .iter()
        .filter(|(s, _)| game.observed(s, anchor, action) && game.reachable(s, target))
        .collect();
    if filtered.is_empty() {
        return 0.0;
    }
    let own: Vec<InfosetId> = game.player_infosets(game.player_of(anchor)).to_vec();
    let mut best = f64::NEG_INFINITY;
    let mut assignment = vec![0usize; own.len()];
    loop {
        let mut total = 0.0;
        for (s, w) in &filtered {
            let mut dev = (*s).clone();
            for (k, &j) in own.iter().enumerate() {
                dev.set_choice(j, assignment[k]);
            }
            total +=
                w * (game.utility_reach(target, &dev, s) - game.utility_reach(target, s, s));
        }
        best = best.max(total);
        if !advance_mixed_radix(&mut assignment, &own, game) {
            return best;
        }
    }
}
