//! Line-oriented text format for extensive-form games.
//!
//! ```text
//! # comment
//! players 2
//! unit chips
//! big_blind 100
//! node 0 chance JQ:1/6:1 JK:1/6:4 ...
//! node 1 p1 0 check:2 bet:3
//! node 2 p2 5 fold:7 call:8
//! node 7 terminal -3/2
//! ```
//!
//! Node ids must form the contiguous range `0..n`; node 0 is the root.
//! Payoffs and chance probabilities are exact rationals (`n/d` or integers).

use super::{Action, ChanceOutcome, ExtensiveFormGame, GameError, Node, Player, Rational};
use std::path::Path;

fn err(line: usize, message: impl Into<String>) -> GameError {
    GameError::Parse { line, message: message.into() }
}

fn parse_rational(s: &str, line: usize) -> Result<Rational, GameError> {
    let parse_int = |t: &str| -> Result<i64, GameError> {
        t.parse::<i64>().map_err(|_| err(line, format!("expected an integer, got '{t}'")))
    };
    match s.split_once('/') {
        Some((n, d)) => {
            let num = parse_int(n)?;
            let den = parse_int(d)?;
            if den == 0 {
                return Err(err(line, "rational has zero denominator"));
            }
            Ok(Rational::new(num, den))
        }
        None => Ok(Rational::from_integer(parse_int(s)?)),
    }
}

fn parse_index(s: &str, line: usize, what: &str) -> Result<usize, GameError> {
    s.parse::<usize>().map_err(|_| err(line, format!("expected a {what} index, got '{s}'")))
}

/// Parses a game from its text representation.
pub fn parse_game(text: &str) -> Result<ExtensiveFormGame, GameError> {
    let mut payoff_unit = "chips".to_string();
    let mut big_blind = None;
    let mut players_seen = false;
    let mut nodes: Vec<(usize, usize, Node)> = Vec::new(); // (line, id, node)

    for (lineno, raw) in text.lines().enumerate() {
        let line = lineno + 1;
        let trimmed = raw.trim();
        if trimmed.is_empty() || trimmed.starts_with('#') {
            continue;
        }
        let mut tokens = trimmed.split_whitespace();
        let keyword = tokens.next().expect("non-empty line has a first token");
        match keyword {
            "players" => {
                let count = tokens.next().ok_or_else(|| err(line, "missing player count"))?;
                if count != "2" {
                    return Err(err(line, format!("only 2-player games are supported, got '{count}'")));
                }
                players_seen = true;
            }
            "unit" => {
                payoff_unit = tokens
                    .next()
                    .ok_or_else(|| err(line, "missing unit name"))?
                    .to_string();
            }
            "big_blind" => {
                let v = tokens.next().ok_or_else(|| err(line, "missing big blind value"))?;
                let parsed: f64 = v
                    .parse()
                    .map_err(|_| err(line, format!("invalid big blind value '{v}'")))?;
                if !(parsed > 0.0) {
                    return Err(err(line, format!("big blind must be positive, got {parsed}")));
                }
                big_blind = Some(parsed);
            }
            "node" => {
                let id_tok = tokens.next().ok_or_else(|| err(line, "missing node id"))?;
                let id = parse_index(id_tok, line, "node")?;
                let kind = tokens.next().ok_or_else(|| err(line, "missing node kind"))?;
                let node = match kind {
                    "chance" => {
                        let mut outcomes = Vec::new();
                        for tok in tokens {
                            let mut parts = tok.split(':');
                            let (label, prob, child) =
                                match (parts.next(), parts.next(), parts.next(), parts.next()) {
                                    (Some(l), Some(p), Some(c), None) => (l, p, c),
                                    _ => {
                                        return Err(err(
                                            line,
                                            format!("chance outcome '{tok}' is not label:prob:child"),
                                        ))
                                    }
                                };
                            outcomes.push(ChanceOutcome {
                                label: label.to_string(),
                                prob: parse_rational(prob, line)?,
                                child: parse_index(child, line, "child")?,
                            });
                        }
                        if outcomes.is_empty() {
                            return Err(err(line, "chance node has no outcomes"));
                        }
                        Node::Chance { outcomes }
                    }
                    "p1" | "p2" => {
                        let player = if kind == "p1" { Player::X } else { Player::Y };
                        let infoset_tok =
                            tokens.next().ok_or_else(|| err(line, "missing information set id"))?;
                        let infoset = parse_index(infoset_tok, line, "information set")?;
                        let mut actions = Vec::new();
                        for tok in tokens {
                            let (label, child) = tok.split_once(':').ok_or_else(|| {
                                err(line, format!("action '{tok}' is not label:child"))
                            })?;
                            actions.push(Action {
                                label: label.to_string(),
                                child: parse_index(child, line, "child")?,
                            });
                        }
                        if actions.is_empty() {
                            return Err(err(line, "decision node has no actions"));
                        }
                        Node::Decision { player, infoset, actions }
                    }
                    "terminal" => {
                        let pay = tokens.next().ok_or_else(|| err(line, "missing payoff"))?;
                        if tokens.next().is_some() {
                            return Err(err(line, "trailing tokens after terminal payoff"));
                        }
                        Node::Terminal { payoff: parse_rational(pay, line)? }
                    }
                    other => return Err(err(line, format!("unknown node kind '{other}'"))),
                };
                nodes.push((line, id, node));
            }
            other => return Err(err(line, format!("unknown keyword '{other}'"))),
        }
    }

    if !players_seen {
        return Err(err(0, "missing 'players 2' header"));
    }
    if nodes.is_empty() {
        return Err(GameError::Empty);
    }
    let n = nodes.len();
    let mut slots: Vec<Option<Node>> = (0..n).map(|_| None).collect();
    for (line, id, node) in nodes {
        if id >= n {
            return Err(err(line, format!("node id {id} leaves gaps; ids must cover 0..{n}")));
        }
        if slots[id].is_some() {
            return Err(err(line, format!("duplicate node id {id}")));
        }
        slots[id] = Some(node);
    }
    let game = ExtensiveFormGame {
        nodes: slots.into_iter().map(|s| s.expect("all ids filled")).collect(),
        payoff_unit,
        big_blind,
    };
    game.validate()?;
    Ok(game)
}

/// Renders a game in the text format; `parse_game` inverts this exactly.
pub fn write_game(game: &ExtensiveFormGame) -> String {
    let mut out = String::new();
    out.push_str("players 2\n");
    out.push_str(&format!("unit {}\n", game.payoff_unit));
    if let Some(bb) = game.big_blind {
        out.push_str(&format!("big_blind {bb}\n"));
    }
    for (id, node) in game.nodes.iter().enumerate() {
        match node {
            Node::Chance { outcomes } => {
                out.push_str(&format!("node {id} chance"));
                for o in outcomes {
                    out.push_str(&format!(" {}:{}:{}", o.label, o.prob, o.child));
                }
                out.push('\n');
            }
            Node::Decision { player, infoset, actions } => {
                let p = if *player == Player::X { "p1" } else { "p2" };
                out.push_str(&format!("node {id} {p} {infoset}"));
                for a in actions {
                    out.push_str(&format!(" {}:{}", a.label, a.child));
                }
                out.push('\n');
            }
            Node::Terminal { payoff } => {
                out.push_str(&format!("node {id} terminal {payoff}\n"));
            }
        }
    }
    out
}

/// Reads and parses a game file.
pub fn load_game(path: impl AsRef<Path>) -> Result<ExtensiveFormGame, GameError> {
    parse_game(&std::fs::read_to_string(path)?)
}

/// Writes a game file.
pub fn save_game(path: impl AsRef<Path>, game: &ExtensiveFormGame) -> Result<(), GameError> {
    std::fs::write(path, write_game(game))?;
    Ok(())
}
