//! Built-in benchmark games.

use crate::game::{GameTree, RawNode};

pub const BUILTIN_NAMES: [&str; 5] = [
    "matching_pennies",
    "two_stage_solo",
    "gated_entry",
    "battle_of_sexes_seq",
    "kuhn_poker",
];

#[derive(Debug, Clone, thiserror::Error)]
#[error("unknown built-in game `{0}`; available: matching_pennies, two_stage_solo, gated_entry, battle_of_sexes_seq, kuhn_poker")]
pub struct UnknownBuiltin(pub String);

/// Returns a named benchmark game.
///
/// - `matching_pennies`: 2x2 simultaneous (player 2's nodes share one
///   infoset); player 1 wins on a match, payoffs +/-1.
/// - `two_stage_solo`: one player, two sequential binary infosets; the
///   second is reached only via action A at the first.
/// - `gated_entry`: player 1 gates player 2's infoset behind action A.
/// - `battle_of_sexes_seq`: simultaneous coordination with payoffs
///   (2,1)/(1,2) on coordination and (0,0) otherwise; its correlated
///   equilibria strictly mix.
/// - `kuhn_poker`: standard 3-card Kuhn poker with a uniform 1/6 deal and
///   +/-1 / +/-2 pot payoffs.
pub fn builtin_game(name: &str) -> Result<GameTree, UnknownBuiltin> {
    let game = match name {
        "matching_pennies" => matching_pennies(),
        "two_stage_solo" => two_stage_solo(),
        "gated_entry" => gated_entry(),
        "battle_of_sexes_seq" => battle_of_sexes_seq(),
        "kuhn_poker" => kuhn_poker(),
        other => return Err(UnknownBuiltin(other.to_string())),
    };
    Ok(game)
}

/// Node-list builder that lets the root be declared first and filled last.
struct Nodes {
    list: Vec<Option<RawNode>>,
}

impl Nodes {
    fn new() -> Self {
        Nodes { list: vec![None] }
    }

    fn push(&mut self, node: RawNode) -> usize {
        self.list.push(Some(node));
        self.list.len() - 1
    }

    fn terminal(&mut self, payoffs: &[f64]) -> usize {
        self.push(RawNode::Terminal { payoffs: payoffs.to_vec() })
    }

    fn decision(&mut self, player: usize, label: &str, edges: &[(&str, usize)]) -> usize {
        self.push(RawNode::Decision {
            player,
            infoset_label: label.to_string(),
            actions: edges.iter().map(|(a, _)| a.to_string()).collect(),
            children: edges.iter().map(|&(_, c)| c).collect(),
        })
    }

    fn set_root(&mut self, node: RawNode) {
        self.list[0] = Some(node);
    }

    fn build(self, name: &str, players: usize) -> GameTree {
        let raw: Vec<RawNode> = self.list.into_iter().map(Option::unwrap).collect();
        GameTree::build(name, players, &raw).expect("built-in game must validate")
    }
}

fn two_by_two(name: &str, labels: [&str; 2], actions: [[&str; 2]; 2], payoffs: [[f64; 2]; 4]) -> GameTree {
    let mut n = Nodes::new();
    let mut p2 = Vec::new();
    for row in payoffs.chunks(2) {
        let a = n.terminal(&row[0]);
        let b = n.terminal(&row[1]);
        p2.push(n.decision(1, labels[1], &[(actions[1][0], a), (actions[1][1], b)]));
    }
    n.set_root(RawNode::Decision {
        player: 0,
        infoset_label: labels[0].to_string(),
        actions: vec![actions[0][0].to_string(), actions[0][1].to_string()],
        children: p2,
    });
    n.build(name, 2)
}

fn matching_pennies() -> GameTree {
    two_by_two(
        "matching_pennies",
        ["I1", "I2"],
        [["H", "T"], ["h", "t"]],
        [[1.0, -1.0], [-1.0, 1.0], [-1.0, 1.0], [1.0, -1.0]],
    )
}

fn battle_of_sexes_seq() -> GameTree {
    two_by_two(
        "battle_of_sexes_seq",
        ["I1", "I2"],
        [["O", "F"], ["o", "f"]],
        [[2.0, 1.0], [0.0, 0.0], [0.0, 0.0], [1.0, 2.0]],
    )
}

fn two_stage_solo() -> GameTree {
    let mut n = Nodes::new();
    let c = n.terminal(&[0.0]);
    let d = n.terminal(&[2.0]);
    let i2 = n.decision(0, "I2", &[("C", c), ("D", d)]);
    let b = n.terminal(&[1.0]);
    n.set_root(RawNode::Decision {
        player: 0,
        infoset_label: "I1".to_string(),
        actions: vec!["A".to_string(), "B".to_string()],
        children: vec![i2, b],
    });
    n.build("two_stage_solo", 1)
}

fn gated_entry() -> GameTree {
    let mut n = Nodes::new();
    let l = n.terminal(&[0.0, 1.0]);
    let r = n.terminal(&[1.0, 0.4]);
    let i2 = n.decision(1, "I2", &[("l", l), ("r", r)]);
    let block = n.terminal(&[0.6, 0.0]);
    n.set_root(RawNode::Decision {
        player: 0,
        infoset_label: "I1".to_string(),
        actions: vec!["A".to_string(), "B".to_string()],
        children: vec![i2, block],
    });
    n.build("gated_entry", 2)
}

fn kuhn_poker() -> GameTree {
    const CARDS: [&str; 3] = ["J", "Q", "K"];
    let mut n = Nodes::new();
    let mut outcomes = Vec::new();
    let mut probs = Vec::new();
    let mut children = Vec::new();
    for c1 in 0..3usize {
        for c2 in 0..3usize {
            if c1 == c2 {
                continue;
            }
            // Positive payoffs flow to player 1 when her card is higher.
            let sign = if c1 > c2 { 1.0 } else { -1.0 };
            let showdown1 = n.terminal(&[sign, -sign]);
            let showdown2_a = n.terminal(&[2.0 * sign, -2.0 * sign]);
            let showdown2_b = n.terminal(&[2.0 * sign, -2.0 * sign]);
            let p1_folds = n.terminal(&[-1.0, 1.0]);
            let p2_folds = n.terminal(&[1.0, -1.0]);

            // Player 1 facing a bet after her check.
            let p1_second = n.decision(
                0,
                &format!("{}cb", CARDS[c1]),
                &[("call", showdown2_a), ("fold", p1_folds)],
            );
            // Player 2 after player 1 checks.
            let p2_checked = n.decision(
                1,
                &format!("{}c", CARDS[c2]),
                &[("check", showdown1), ("bet", p1_second)],
            );
            // Player 2 facing player 1's bet.
            let p2_bet = n.decision(
                1,
                &format!("{}b", CARDS[c2]),
                &[("call", showdown2_b), ("fold", p2_folds)],
            );
            let p1_first = n.decision(
                0,
                CARDS[c1],
                &[("check", p2_checked), ("bet", p2_bet)],
            );
            outcomes.push(format!("{}{}", CARDS[c1], CARDS[c2]));
            probs.push(1.0 / 6.0);
            children.push(p1_first);
        }
    }
    n.set_root(RawNode::Chance { outcomes, probs, children });
    n.build("kuhn_poker", 2)
}
