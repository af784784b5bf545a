//! Extensive-form game model, sequence-form assembly, built-in game
//! generators, and a line-oriented text file format.

mod format;
mod generators;
mod sequence;

pub use format::{load_game, parse_game, save_game, write_game};
pub use generators::{
    kuhn_poker, leduc_holdem, matching_pennies, river_endgame, RiverParams,
};
pub use sequence::build_sequence_form;

use crate::linops::SparseMatrix;
use crate::treeplex::Treeplex;
use std::collections::HashMap;
use thiserror::Error;

pub type Rational = num_rational::Rational64;

#[derive(Debug, Error)]
pub enum GameError {
    #[error("game has no nodes")]
    Empty,
    #[error("node {node}: child index {child} out of range")]
    ChildOutOfRange { node: usize, child: usize },
    #[error("node {node} is referenced as a child more than once")]
    NotATree { node: usize },
    #[error("node {node} is unreachable from the root")]
    Unreachable { node: usize },
    #[error("chance probabilities must sum to 1 (node {node} sums to {sum})")]
    ChanceSum { node: usize, sum: Rational },
    #[error("node {node}: chance probability {prob} is not positive")]
    ChanceProb { node: usize, prob: Rational },
    #[error("information set {infoset} of player {player:?} has inconsistent action counts")]
    ActionCountMismatch { player: Player, infoset: usize },
    #[error("imperfect recall: information set {infoset} of player {player:?} is reached with different own-action histories")]
    ImperfectRecall { player: Player, infoset: usize },
    #[error("node {node} has no actions")]
    NoActions { node: usize },
    #[error("invalid parameter: {0}")]
    Parameter(String),
    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Player {
    X,
    Y,
}

#[derive(Debug, Clone)]
pub struct ChanceOutcome {
    pub label: String,
    pub prob: Rational,
    pub child: usize,
}

#[derive(Debug, Clone)]
pub struct Action {
    pub label: String,
    pub child: usize,
}

#[derive(Debug, Clone)]
pub enum Node {
    Chance { outcomes: Vec<ChanceOutcome> },
    Decision { player: Player, infoset: usize, actions: Vec<Action> },
    /// Payoff to player X; the game is zero-sum, Y receives the negation.
    Terminal { payoff: Rational },
}

/// A two-player zero-sum extensive-form game tree. Node 0 is the root.
#[derive(Debug, Clone)]
pub struct ExtensiveFormGame {
    pub nodes: Vec<Node>,
    pub payoff_unit: String,
    pub big_blind: Option<f64>,
}

impl ExtensiveFormGame {
    pub fn new(nodes: Vec<Node>) -> Self {
        ExtensiveFormGame { nodes, payoff_unit: "chips".to_string(), big_blind: None }
    }

    /// Structural validation: tree shape, chance probabilities, information
    /// set consistency, and perfect recall.
    pub fn validate(&self) -> Result<(), GameError> {
        if self.nodes.is_empty() {
            return Err(GameError::Empty);
        }
        let n = self.nodes.len();
        let mut indegree = vec![0usize; n];
        for (id, node) in self.nodes.iter().enumerate() {
            let children: Vec<usize> = match node {
                Node::Chance { outcomes } => outcomes.iter().map(|o| o.child).collect(),
                Node::Decision { actions, .. } => {
                    if actions.is_empty() {
                        return Err(GameError::NoActions { node: id });
                    }
                    actions.iter().map(|a| a.child).collect()
                }
                Node::Terminal { .. } => Vec::new(),
            };
            for c in children {
                if c >= n {
                    return Err(GameError::ChildOutOfRange { node: id, child: c });
                }
                indegree[c] += 1;
                if indegree[c] > 1 {
                    return Err(GameError::NotATree { node: c });
                }
            }
            if let Node::Chance { outcomes } = node {
                let sum: Rational = outcomes.iter().map(|o| o.prob).sum();
                if sum != Rational::from_integer(1) {
                    return Err(GameError::ChanceSum { node: id, sum });
                }
                for o in outcomes {
                    if o.prob <= Rational::from_integer(0) {
                        return Err(GameError::ChanceProb { node: id, prob: o.prob });
                    }
                }
            }
        }
        for (id, &d) in indegree.iter().enumerate().skip(1) {
            if d == 0 {
                return Err(GameError::Unreachable { node: id });
            }
        }
        if indegree[0] != 0 {
            return Err(GameError::NotATree { node: 0 });
        }

        // Information set consistency and perfect recall. The own-action
        // history of the acting player must be identical at every node of an
        // information set, and action counts must match.
        let mut infoset_actions: HashMap<(Player, usize), usize> = HashMap::new();
        let mut infoset_history: HashMap<(Player, usize), Vec<(usize, usize)>> = HashMap::new();
        let mut stack: Vec<(usize, Vec<(usize, usize)>, Vec<(usize, usize)>)> =
            vec![(0, Vec::new(), Vec::new())];
        while let Some((id, hist_x, hist_y)) = stack.pop() {
            match &self.nodes[id] {
                Node::Terminal { .. } => {}
                Node::Chance { outcomes } => {
                    for o in outcomes {
                        stack.push((o.child, hist_x.clone(), hist_y.clone()));
                    }
                }
                Node::Decision { player, infoset, actions } => {
                    let key = (*player, *infoset);
                    match infoset_actions.get(&key) {
                        None => {
                            infoset_actions.insert(key, actions.len());
                        }
                        Some(&count) if count != actions.len() => {
                            return Err(GameError::ActionCountMismatch {
                                player: *player,
                                infoset: *infoset,
                            });
                        }
                        _ => {}
                    }
                    let own = if *player == Player::X { &hist_x } else { &hist_y };
                    match infoset_history.get(&key) {
                        None => {
                            infoset_history.insert(key, own.clone());
                        }
                        Some(h) if h != own => {
                            return Err(GameError::ImperfectRecall {
                                player: *player,
                                infoset: *infoset,
                            });
                        }
                        _ => {}
                    }
                    for (a, action) in actions.iter().enumerate() {
                        let mut hx = hist_x.clone();
                        let mut hy = hist_y.clone();
                        if *player == Player::X {
                            hx.push((*infoset, a));
                        } else {
                            hy.push((*infoset, a));
                        }
                        stack.push((action.child, hx, hy));
                    }
                }
            }
        }
        Ok(())
    }
}

/// A game in sequence form: both treeplexes and the sparse payoff matrix,
/// rows indexed by X sequences and columns by Y sequences. Immutable after
/// construction and shared read-only by solvers.
#[derive(Debug, Clone)]
pub struct GameInstance {
    pub treeplex_x: Treeplex,
    pub treeplex_y: Treeplex,
    pub payoff_matrix: SparseMatrix,
    /// Maximum payoff difference over the leaves, for player X.
    pub payoff_range: f64,
    /// Maximum absolute entry of the payoff matrix.
    pub matrix_norm: f64,
    pub payoff_unit: String,
    pub big_blind: Option<f64>,
    /// Information set id to simplex id, per player.
    pub simplex_of_infoset_x: HashMap<usize, usize>,
    pub simplex_of_infoset_y: HashMap<usize, usize>,
}

impl GameInstance {
    pub fn treeplex(&self, player: Player) -> &Treeplex {
        match player {
            Player::X => &self.treeplex_x,
            Player::Y => &self.treeplex_y,
        }
    }
}
