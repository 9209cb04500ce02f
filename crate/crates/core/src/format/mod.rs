//! Text format for game trees.
//!
//! The grammar is line-oriented; `#` starts a comment and blank lines are
//! ignored. LF and CRLF both work.
//!
//! ```text
//! game <name> players <N>
//! node <id> player <p> infoset <label> { <action> -> <child-id>, ... }
//! node <id> chance { <outcome> : <prob> -> <child-id>, ... }
//! node <id> terminal { <payoff-1>, ..., <payoff-N> }
//! ```
//!
//! The first node record is the root. Players are numbered from 1 in the
//! file. Probabilities are decimals or `p/q` fractions and must sum to 1 at
//! each chance node. Infoset labels are scoped per player, so two players
//! may reuse a label without merging.

pub mod builtin;

use crate::game::{BuildError, GameTree, NodeKind, RawNode};
use std::collections::HashMap;
use std::fmt;

/// Machine-readable diagnostic category.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DiagCode {
    Syntax,
    UnknownChild,
    DuplicateNode,
    ChanceSum,
    Structure,
    RecallViolation,
}

impl DiagCode {
    pub fn as_str(self) -> &'static str {
        match self {
            DiagCode::Syntax => "syntax",
            DiagCode::UnknownChild => "unknown-child",
            DiagCode::DuplicateNode => "duplicate-node",
            DiagCode::ChanceSum => "chance-sum",
            DiagCode::Structure => "structure",
            DiagCode::RecallViolation => "recall-violation",
        }
    }
}

/// Parse or validation failure with source position. Renders as
/// `line:col: code: message`; the CLI prefixes the file name.
#[derive(Debug, Clone, thiserror::Error)]
pub struct Diagnostic {
    pub line: usize,
    pub col: usize,
    pub code: DiagCode,
    pub message: String,
}

impl fmt::Display for Diagnostic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}: {}: {}", self.line, self.col, self.code.as_str(), self.message)
    }
}

/// Parsed but not yet validated game file: header plus one record per node
/// in document order (the first record is the root).
#[derive(Debug, Clone)]
pub struct GameDocument {
    pub name: String,
    pub players: usize,
    pub records: Vec<NodeRecord>,
}

#[derive(Debug, Clone)]
pub struct NodeRecord {
    pub id: String,
    pub line: usize,
    pub kind: RecordKind,
}

#[derive(Debug, Clone)]
pub enum RecordKind {
    Decision {
        /// 1-based, as in the file.
        player: usize,
        infoset: String,
        edges: Vec<(String, String)>,
    },
    Chance { edges: Vec<(String, f64, String)> },
    Terminal { payoffs: Vec<f64> },
}

fn diag(line: usize, col: usize, code: DiagCode, message: impl Into<String>) -> Diagnostic {
    Diagnostic { line, col, code, message: message.into() }
}

/// Parses the header and node records without resolving references.
pub fn parse_document(text: &str) -> Result<GameDocument, Diagnostic> {
    let mut doc: Option<GameDocument> = None;
    for (lineno, raw_line) in text.lines().enumerate() {
        let lineno = lineno + 1;
        let line = match raw_line.find('#') {
            Some(pos) => &raw_line[..pos],
            None => raw_line,
        };
        let line = line.trim_end_matches('\r').trim();
        if line.is_empty() {
            continue;
        }
        let mut tokens = Tokens::new(line, lineno);
        match tokens.peek_word() {
            Some("game") => {
                if doc.is_some() {
                    return Err(diag(lineno, 1, DiagCode::Syntax, "duplicate game header"));
                }
                tokens.word()?;
                let name = tokens.word()?.to_string();
                tokens.expect_word("players")?;
                let players: usize = tokens.parse_word("player count")?;
                doc = Some(GameDocument { name, players, records: Vec::new() });
            }
            Some("node") => {
                let doc = doc.as_mut().ok_or_else(|| {
                    diag(lineno, 1, DiagCode::Syntax, "node record before game header")
                })?;
                tokens.word()?;
                let id = tokens.word()?.to_string();
                let kind = match tokens.word()? {
                    "player" => {
                        let player: usize = tokens.parse_word("player index")?;
                        if player == 0 {
                            return Err(diag(
                                lineno,
                                tokens.col(),
                                DiagCode::Syntax,
                                "players are numbered from 1",
                            ));
                        }
                        tokens.expect_word("infoset")?;
                        let infoset = tokens.word()?.to_string();
                        let body = tokens.braced_body()?;
                        let mut edges = Vec::new();
                        for entry in split_entries(&body) {
                            let (action, child) = entry.split_once("->").ok_or_else(|| {
                                diag(
                                    lineno,
                                    tokens.col(),
                                    DiagCode::Syntax,
                                    format!("expected `<action> -> <child>` in `{entry}`"),
                                )
                            })?;
                            edges.push((action.trim().to_string(), child.trim().to_string()));
                        }
                        if edges.is_empty() {
                            return Err(diag(
                                lineno,
                                tokens.col(),
                                DiagCode::Syntax,
                                "decision node needs at least one action",
                            ));
                        }
                        RecordKind::Decision { player, infoset, edges }
                    }
                    "chance" => {
                        let body = tokens.braced_body()?;
                        let mut edges = Vec::new();
                        for entry in split_entries(&body) {
                            let parsed = entry.split_once(':').and_then(|(outcome, rest)| {
                                let (prob, child) = rest.split_once("->")?;
                                Some((outcome.trim(), prob.trim(), child.trim()))
                            });
                            let (outcome, prob, child) = parsed.ok_or_else(|| {
                                diag(
                                    lineno,
                                    tokens.col(),
                                    DiagCode::Syntax,
                                    format!("expected `<outcome> : <prob> -> <child>` in `{entry}`"),
                                )
                            })?;
                            let prob = parse_prob(prob).ok_or_else(|| {
                                diag(
                                    lineno,
                                    tokens.col(),
                                    DiagCode::Syntax,
                                    format!("bad probability `{prob}`"),
                                )
                            })?;
                            edges.push((outcome.to_string(), prob, child.to_string()));
                        }
                        if edges.is_empty() {
                            return Err(diag(
                                lineno,
                                tokens.col(),
                                DiagCode::Syntax,
                                "chance node needs at least one outcome",
                            ));
                        }
                        RecordKind::Chance { edges }
                    }
                    "terminal" => {
                        let body = tokens.braced_body()?;
                        let mut payoffs = Vec::new();
                        for entry in split_entries(&body) {
                            let v: f64 = entry.parse().map_err(|_| {
                                diag(
                                    lineno,
                                    tokens.col(),
                                    DiagCode::Syntax,
                                    format!("bad payoff `{entry}`"),
                                )
                            })?;
                            payoffs.push(v);
                        }
                        RecordKind::Terminal { payoffs }
                    }
                    other => {
                        return Err(diag(
                            lineno,
                            tokens.col(),
                            DiagCode::Syntax,
                            format!("expected `player`, `chance`, or `terminal`, found `{other}`"),
                        ))
                    }
                };
                doc.records.push(NodeRecord { id, line: lineno, kind });
            }
            Some(other) => {
                return Err(diag(
                    lineno,
                    1,
                    DiagCode::Syntax,
                    format!("expected `game` or `node`, found `{other}`"),
                ))
            }
            None => unreachable!("blank lines were skipped"),
        }
    }
    let doc =
        doc.ok_or_else(|| diag(1, 1, DiagCode::Syntax, "missing `game <name> players <N>`"))?;
    if doc.records.is_empty() {
        return Err(diag(1, 1, DiagCode::Syntax, "game has no node records"));
    }
    Ok(doc)
}

/// Resolves references, validates structure and perfect recall, and interns
/// the document into a [`GameTree`].
pub fn build_document(doc: &GameDocument) -> Result<GameTree, Diagnostic> {
    let mut index: HashMap<&str, usize> = HashMap::new();
    for (i, rec) in doc.records.iter().enumerate() {
        if index.insert(rec.id.as_str(), i).is_some() {
            return Err(diag(
                rec.line,
                1,
                DiagCode::DuplicateNode,
                format!("node id `{}` defined twice", rec.id),
            ));
        }
    }
    let resolve = |child: &str, line: usize| {
        index.get(child).copied().ok_or_else(|| {
            diag(line, 1, DiagCode::UnknownChild, format!("child `{child}` is not defined"))
        })
    };
    let mut raw = Vec::with_capacity(doc.records.len());
    for rec in &doc.records {
        raw.push(match &rec.kind {
            RecordKind::Decision { player, infoset, edges } => {
                let mut actions = Vec::with_capacity(edges.len());
                let mut children = Vec::with_capacity(edges.len());
                for (action, child) in edges {
                    actions.push(action.clone());
                    children.push(resolve(child, rec.line)?);
                }
                RawNode::Decision {
                    player: player - 1,
                    infoset_label: infoset.clone(),
                    actions,
                    children,
                }
            }
            RecordKind::Chance { edges } => {
                let mut outcomes = Vec::with_capacity(edges.len());
                let mut probs = Vec::with_capacity(edges.len());
                let mut children = Vec::with_capacity(edges.len());
                for (outcome, prob, child) in edges {
                    outcomes.push(outcome.clone());
                    probs.push(*prob);
                    children.push(resolve(child, rec.line)?);
                }
                RawNode::Chance { outcomes, probs, children }
            }
            RecordKind::Terminal { payoffs } => RawNode::Terminal { payoffs: payoffs.clone() },
        });
    }
    GameTree::build(&doc.name, doc.players, &raw).map_err(|err| match err {
        BuildError::Structure { node, error } => {
            let rec = &doc.records[node];
            let code = match error {
                crate::game::StructureError::ChanceSum { .. } => DiagCode::ChanceSum,
                _ => DiagCode::Structure,
            };
            diag(rec.line, 1, code, format!("node `{}`: {error}", rec.id))
        }
        BuildError::Game { error } => diag(1, 1, DiagCode::Structure, error.to_string()),
        BuildError::Recall(violations) => diag(
            doc.records[0].line,
            1,
            DiagCode::RecallViolation,
            violations.iter().map(|v| v.to_string()).collect::<Vec<_>>().join("; "),
        ),
    })
}

/// Parses and fully validates a game file.
pub fn parse_game(text: &str) -> Result<GameTree, Diagnostic> {
    build_document(&parse_document(text)?)
}

/// Emits a document that reparses to an isomorphic tree: same interned
/// structure, node ids renamed to preorder positions.
pub fn serialize_game(game: &GameTree) -> String {
    let mut out = format!("game {} players {}\n", game.name(), game.num_players());
    for id in 0..game.num_nodes() {
        let node = game.node(crate::game::NodeId(id as u32));
        match &node.kind {
            NodeKind::Decision { infoset } => {
                let info = game.infoset(*infoset);
                let edges: Vec<String> = info
                    .actions
                    .iter()
                    .zip(&node.children)
                    .map(|(a, c)| format!("{a} -> {c}"))
                    .collect();
                out.push_str(&format!(
                    "node n{} player {} infoset {} {{ {} }}\n",
                    id,
                    info.player + 1,
                    info.label,
                    edges.join(", ")
                ));
            }
            NodeKind::Chance { chance } => {
                let ch = &game.chance_nodes()[*chance];
                let edges: Vec<String> = ch
                    .outcomes
                    .iter()
                    .zip(&ch.probs)
                    .zip(&node.children)
                    .map(|((o, p), c)| format!("{o} : {p} -> {c}"))
                    .collect();
                out.push_str(&format!("node n{} chance {{ {} }}\n", id, edges.join(", ")));
            }
            NodeKind::Terminal { payoffs } => {
                let vals: Vec<String> = payoffs.iter().map(|p| p.to_string()).collect();
                out.push_str(&format!("node n{} terminal {{ {} }}\n", id, vals.join(", ")));
            }
        }
    }
    out
}

fn parse_prob(text: &str) -> Option<f64> {
    if let Some((p, q)) = text.split_once('/') {
        let p: f64 = p.trim().parse().ok()?;
        let q: f64 = q.trim().parse().ok()?;
        (q != 0.0).then(|| p / q)
    } else {
        text.parse().ok()
    }
}

fn split_entries(body: &str) -> impl Iterator<Item = &str> {
    body.split(',').map(str::trim).filter(|e| !e.is_empty())
}

/// Whitespace tokenizer that tracks a column for diagnostics.
struct Tokens<'a> {
    rest: &'a str,
    line: usize,
    consumed: usize,
}

impl<'a> Tokens<'a> {
    fn new(line: &'a str, lineno: usize) -> Self {
        Tokens { rest: line, line: lineno, consumed: 0 }
    }

    fn col(&self) -> usize {
        self.consumed + 1
    }

    fn peek_word(&self) -> Option<&'a str> {
        self.rest.split_whitespace().next()
    }

    fn word(&mut self) -> Result<&'a str, Diagnostic> {
        let trimmed = self.rest.trim_start();
        self.consumed += self.rest.len() - trimmed.len();
        if trimmed.is_empty() {
            return Err(diag(self.line, self.col(), DiagCode::Syntax, "unexpected end of line"));
        }
        let end = trimmed.find(char::is_whitespace).unwrap_or(trimmed.len());
        let (word, rest) = trimmed.split_at(end);
        self.rest = rest;
        self.consumed += end;
        Ok(word)
    }

    fn expect_word(&mut self, want: &str) -> Result<(), Diagnostic> {
        let got = self.word()?;
        if got != want {
            return Err(diag(
                self.line,
                self.col(),
                DiagCode::Syntax,
                format!("expected `{want}`, found `{got}`"),
            ));
        }
        Ok(())
    }

    fn parse_word<T: std::str::FromStr>(&mut self, what: &str) -> Result<T, Diagnostic> {
        let word = self.word()?;
        word.parse().map_err(|_| {
            diag(self.line, self.col(), DiagCode::Syntax, format!("bad {what} `{word}`"))
        })
    }

    /// Consumes `{ ... }` and returns the inside.
    fn braced_body(&mut self) -> Result<String, Diagnostic> {
        let trimmed = self.rest.trim();
        if !trimmed.starts_with('{') || !trimmed.ends_with('}') {
            return Err(diag(
                self.line,
                self.col(),
                DiagCode::Syntax,
                "expected `{ ... }` body",
            ));
        }
        let body = trimmed[1..trimmed.len() - 1].to_string();
        self.consumed += self.rest.len();
        self.rest = "";
        Ok(body)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const MATCHING_PENNIES: &str = "\
game matching_pennies players 2
node r player 1 infoset I1 { H -> a, T -> b }
node a player 2 infoset I2 { h -> t1, t -> t2 }
node b player 2 infoset I2 { h -> t3, t -> t4 }
node t1 terminal { 1, -1 }
node t2 terminal { -1, 1 }
node t3 terminal { -1, 1 }
node t4 terminal { 1, -1 }
";

    #[test]
    fn parses_matching_pennies() {
        let game = parse_game(MATCHING_PENNIES).unwrap();
        assert_eq!(game.num_infosets(), 2);
        assert_eq!(game.num_players(), 2);
        let terminals = (0..game.num_nodes())
            .filter(|&i| {
                matches!(game.node(crate::game::NodeId(i as u32)).kind, NodeKind::Terminal { .. })
            })
            .count();
        assert_eq!(terminals, 4);
    }

    #[test]
    fn comments_and_crlf_tolerated() {
        let text = MATCHING_PENNIES.replace('\n', "\r\n") + "# trailing comment\r\n";
        assert!(parse_game(&text).is_ok());
    }

    #[test]
    fn chance_sum_error_names_the_node() {
        let text = "\
game bad players 1
node r chance { x : 0.5 -> a, y : 0.4 -> b }
node a terminal { 0 }
node b terminal { 1 }
";
        let err = parse_game(text).unwrap_err();
        assert_eq!(err.code, DiagCode::ChanceSum);
        assert!(err.message.contains('r'), "{err}");
        assert_eq!(err.line, 2);
    }

    #[test]
    fn dangling_child_is_reported() {
        let text = "\
game bad players 1
node r player 1 infoset I { A -> missing }
";
        let err = parse_game(text).unwrap_err();
        assert_eq!(err.code, DiagCode::UnknownChild);
    }

    #[test]
    fn recall_violation_lists_the_infoset() {
        // Player 1's second infoset merges nodes reached via her own A and B.
        let text = "\
game forgetful players 1
node r player 1 infoset I1 { A -> a, B -> b }
node a player 1 infoset I2 { C -> t1, D -> t2 }
node b player 1 infoset I2 { C -> t3, D -> t4 }
node t1 terminal { 0 }
node t2 terminal { 1 }
node t3 terminal { 2 }
node t4 terminal { 3 }
";
        let err = parse_game(text).unwrap_err();
        assert_eq!(err.code, DiagCode::RecallViolation);
        assert!(err.message.contains("I2"), "{err}");
        assert!(err.message.contains("I1:A") && err.message.contains("I1:B"), "{err}");
    }

    #[test]
    fn roundtrip_is_isomorphic() {
        let game = parse_game(MATCHING_PENNIES).unwrap();
        let text = serialize_game(&game);
        let again = parse_game(&text).unwrap();
        assert_eq!(serialize_game(&again), text);
        assert_eq!(again.num_infosets(), game.num_infosets());
        assert_eq!(again.num_nodes(), game.num_nodes());
    }

    #[test]
    fn infoset_labels_scope_per_player() {
        // The same label on two players stays two infosets.
        let text = "\
game scoped players 2
node r player 1 infoset X { A -> a, B -> b }
node a player 2 infoset X { A -> t1, B -> t2 }
node b player 2 infoset X { A -> t3, B -> t4 }
node t1 terminal { 0, 0 }
node t2 terminal { 1, 0 }
node t3 terminal { 0, 1 }
node t4 terminal { 1, 1 }
";
        let game = parse_game(text).unwrap();
        assert_eq!(game.num_infosets(), 2);
        assert_eq!(game.infoset(crate::game::InfosetId(0)).player, 0);
        assert_eq!(game.infoset(crate::game::InfosetId(1)).player, 1);
    }

    #[test]
    fn fraction_probabilities() {
        let text = "\
game frac players 1
node r chance { a : 1/3 -> x, b : 2/3 -> y }
node x terminal { 1 }
node y terminal { 0 }
";
        let game = parse_game(text).unwrap();
        assert!((game.chance_nodes()[0].probs[0] - 1.0 / 3.0).abs() < 1e-12);
    }
}
