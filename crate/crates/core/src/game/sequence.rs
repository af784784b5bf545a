//! Sequence-form assembly: builds both treeplexes from the information sets
//! and the sparse payoff matrix from the chance-weighted leaves.

use super::{ExtensiveFormGame, GameError, GameInstance, Node, Player, Rational};
use crate::linops::SparseMatrix;
use crate::treeplex::Treeplex;
use num_traits::ToPrimitive;
use std::collections::HashMap;

struct TreeplexBuilder {
    descriptions: Vec<(usize, Option<usize>)>,
    starts: Vec<usize>,
    total: usize,
    simplex_of_infoset: HashMap<usize, usize>,
}

impl TreeplexBuilder {
    fn new() -> Self {
        TreeplexBuilder {
            descriptions: Vec::new(),
            starts: Vec::new(),
            total: 0,
            simplex_of_infoset: HashMap::new(),
        }
    }

    /// Returns the simplex id for an information set, creating it on first
    /// sight with the given parent sequence.
    fn simplex(&mut self, infoset: usize, actions: usize, parent: Option<usize>) -> usize {
        if let Some(&j) = self.simplex_of_infoset.get(&infoset) {
            return j;
        }
        let j = self.descriptions.len();
        self.descriptions.push((actions, parent));
        self.starts.push(self.total);
        self.total += actions;
        self.simplex_of_infoset.insert(infoset, j);
        j
    }

    fn sequence_index(&self, simplex: usize, action: usize) -> usize {
        self.starts[simplex] + action
    }

    /// A player with no decisions gets a single one-dimensional root simplex
    /// so the payoff matrix keeps one row/column for them.
    fn finish(mut self) -> Result<(Treeplex, HashMap<usize, usize>), GameError> {
        if self.descriptions.is_empty() {
            self.descriptions.push((1, None));
            self.starts.push(0);
            self.total = 1;
        }
        let t = Treeplex::build(&self.descriptions)
            .expect("information set structure forms a valid treeplex");
        Ok((t, self.simplex_of_infoset))
    }
}

/// Builds the sequence-form representation: one treeplex per player (one root
/// simplex per information set reachable before any own action) and the
/// sparse payoff matrix with chance-weighted leaf payoffs.
pub fn build_sequence_form(g: &ExtensiveFormGame) -> Result<GameInstance, GameError> {
    g.validate()?;

    let mut bx = TreeplexBuilder::new();
    let mut by = TreeplexBuilder::new();

    // First pass: discover information sets in depth-first order so that a
    // parent simplex always exists before its children.
    let mut stack: Vec<(usize, Option<usize>, Option<usize>)> = vec![(0, None, None)];
    while let Some((id, seq_x, seq_y)) = stack.pop() {
        match &g.nodes[id] {
            Node::Terminal { .. } => {}
            Node::Chance { outcomes } => {
                // Reverse keeps the depth-first discovery order equal to the
                // listed outcome order.
                for o in outcomes.iter().rev() {
                    stack.push((o.child, seq_x, seq_y));
                }
            }
            Node::Decision { player, infoset, actions } => {
                let builder = if *player == Player::X { &mut bx } else { &mut by };
                let j = builder.simplex(*infoset, actions.len(), match player {
                    Player::X => seq_x,
                    Player::Y => seq_y,
                });
                for (a, action) in actions.iter().enumerate().rev() {
                    let seq = builder.sequence_index(j, a);
                    match player {
                        Player::X => stack.push((action.child, Some(seq), seq_y)),
                        Player::Y => stack.push((action.child, seq_x, Some(seq))),
                    }
                }
            }
        }
    }

    let (tx, map_x) = bx.finish()?;
    let (ty, map_y) = by.finish()?;

    // Second pass: accumulate chance-weighted payoffs per sequence pair. A
    // leaf where a player never acted is spread over that player's first
    // root simplex, whose sequences always sum to one.
    let mut entries: HashMap<(usize, usize), f64> = HashMap::new();
    let mut pay_min = f64::INFINITY;
    let mut pay_max = f64::NEG_INFINITY;
    let root_x = tx.simplex(tx.roots()[0]).range();
    let root_y = ty.simplex(ty.roots()[0]).range();

    let seq_index = |player: Player, infoset: usize, action: usize| match player {
        Player::X => tx.simplex(map_x[&infoset]).start + action,
        Player::Y => ty.simplex(map_y[&infoset]).start + action,
    };
    let mut stack: Vec<(usize, f64, Option<usize>, Option<usize>)> = vec![(0, 1.0, None, None)];
    while let Some((id, prob, seq_x, seq_y)) = stack.pop() {
        match &g.nodes[id] {
            Node::Terminal { payoff } => {
                let pay = rational_to_f64(*payoff);
                pay_min = pay_min.min(pay);
                pay_max = pay_max.max(pay);
                let rows: Vec<usize> = match seq_x {
                    Some(i) => vec![i],
                    None => root_x.clone().collect(),
                };
                let cols: Vec<usize> = match seq_y {
                    Some(j) => vec![j],
                    None => root_y.clone().collect(),
                };
                for &r in &rows {
                    for &c in &cols {
                        *entries.entry((r, c)).or_insert(0.0) += prob * pay;
                    }
                }
            }
            Node::Chance { outcomes } => {
                for o in outcomes {
                    stack.push((o.child, prob * rational_to_f64(o.prob), seq_x, seq_y));
                }
            }
            Node::Decision { player, infoset, actions } => {
                for (a, action) in actions.iter().enumerate() {
                    let seq = seq_index(*player, *infoset, a);
                    match player {
                        Player::X => stack.push((action.child, prob, Some(seq), seq_y)),
                        Player::Y => stack.push((action.child, prob, seq_x, Some(seq))),
                    }
                }
            }
        }
    }

    let triplets: Vec<(usize, usize, f64)> =
        entries.into_iter().map(|((r, c), v)| (r, c, v)).collect();
    let matrix = SparseMatrix::from_triplets(tx.total_dimension(), ty.total_dimension(), &triplets)
        .expect("sequence indices are in range by construction");

    let payoff_range = if pay_max >= pay_min { pay_max - pay_min } else { 0.0 };
    let matrix_norm = matrix.max_abs_entry();

    Ok(GameInstance {
        treeplex_x: tx,
        treeplex_y: ty,
        payoff_matrix: matrix,
        payoff_range,
        matrix_norm,
        payoff_unit: g.payoff_unit.clone(),
        big_blind: g.big_blind,
        simplex_of_infoset_x: map_x,
        simplex_of_infoset_y: map_y,
    })
}

pub(crate) fn rational_to_f64(r: Rational) -> f64 {
    r.to_f64().unwrap_or_else(|| *r.numer() as f64 / *r.denom() as f64)
}
