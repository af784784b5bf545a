//! Shared helpers for the integration tests: seeded random treeplexes and
//! interior points, a direct walk of the game tree for expected utility, an
//! independent iterative minimizer for the smoothed best response, and
//! central finite differences of the dilated entropy.
#![allow(dead_code)]

use efg_solver::dgf::{dgf_value, DgfWeights};
use efg_solver::game::{ExtensiveFormGame, GameInstance, Node, Player, Rational};
use efg_solver::treeplex::{
    behavioral_to_sequence, BehavioralVector, SequenceVector, Treeplex,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Kahan-compensated dot product; the tests compare quantities that are
/// large sums with heavy cancellation.
pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    let mut sum = 0.0;
    let mut comp = 0.0;
    for (&x, &y) in a.iter().zip(b) {
        let term = x * y - comp;
        let next = sum + term;
        comp = (next - sum) - term;
        sum = next;
    }
    sum
}

/// A small random treeplex: 1..=6 simplexes of dimension 2..=4, each
/// non-first simplex hanging off a random earlier sequence (or being an
/// extra root with small probability).
pub fn random_treeplex(rng: &mut ChaCha8Rng) -> Treeplex {
    let n = rng.gen_range(1..=6usize);
    let mut desc: Vec<(usize, Option<usize>)> = Vec::with_capacity(n);
    let mut total = 0usize;
    for j in 0..n {
        let dim = rng.gen_range(2..=4usize);
        let parent = if j == 0 || rng.gen_bool(0.2) {
            None
        } else {
            Some(rng.gen_range(0..total))
        };
        desc.push((dim, parent));
        total += dim;
    }
    Treeplex::build(&desc).expect("random description is valid")
}

/// A two-level branching treeplex shaped like the usual illustrative example:
/// two roots, internal simplexes hanging off several sequences, nine
/// simplexes in total.
pub fn branching_treeplex() -> Treeplex {
    Treeplex::build(&[
        (2, None),     // seq 0, 1
        (3, None),     // seq 2, 3, 4
        (2, Some(0)),  // seq 5, 6
        (2, Some(1)),  // seq 7, 8
        (3, Some(2)),  // seq 9, 10, 11
        (2, Some(4)),  // seq 12, 13
        (2, Some(5)),  // seq 14, 15
        (3, Some(9)),  // seq 16, 17, 18
        (2, Some(12)), // seq 19, 20
    ])
    .expect("fixture description is valid")
}

/// Random behavioral strategy with every action probability at least
/// `lo / dim` before normalization, so the sequence form stays interior.
pub fn random_interior_behavioral(
    t: &Treeplex,
    rng: &mut ChaCha8Rng,
    lo: f64,
) -> BehavioralVector {
    let mut b = vec![0.0; t.total_dimension()];
    for s in t.simplexes() {
        let mut z = 0.0;
        for i in s.range() {
            b[i] = rng.gen_range(lo..1.0);
            z += b[i];
        }
        for i in s.range() {
            b[i] /= z;
        }
    }
    BehavioralVector::new(b)
}

pub fn random_interior_sequence(
    t: &Treeplex,
    rng: &mut ChaCha8Rng,
    lo: f64,
) -> SequenceVector {
    let b = random_interior_behavioral(t, rng, lo);
    behavioral_to_sequence(t, &b).expect("random behavioral is valid")
}

pub fn rational_as_f64(r: Rational) -> f64 {
    *r.numer() as f64 / *r.denom() as f64
}

/// Expected payoff to player X computed by walking the game tree directly
/// with behavioral strategies, never touching the sequence-form matrix.
pub fn tree_walk_value(
    game: &ExtensiveFormGame,
    inst: &GameInstance,
    bx: &BehavioralVector,
    by: &BehavioralVector,
) -> f64 {
    fn walk(
        game: &ExtensiveFormGame,
        inst: &GameInstance,
        bx: &BehavioralVector,
        by: &BehavioralVector,
        node: usize,
    ) -> f64 {
        match &game.nodes[node] {
            Node::Terminal { payoff } => rational_as_f64(*payoff),
            Node::Chance { outcomes } => outcomes
                .iter()
                .map(|o| rational_as_f64(o.prob) * walk(game, inst, bx, by, o.child))
                .sum(),
            Node::Decision { player, infoset, actions } => {
                let (tp, b, map) = match player {
                    Player::X => (&inst.treeplex_x, bx, &inst.simplex_of_infoset_x),
                    Player::Y => (&inst.treeplex_y, by, &inst.simplex_of_infoset_y),
                };
                let s = tp.simplex(map[infoset]);
                assert_eq!(s.dim, actions.len(), "action count matches simplex size");
                actions
                    .iter()
                    .enumerate()
                    .map(|(i, a)| b.values[s.start + i] * walk(game, inst, bx, by, a.child))
                    .sum()
            }
        }
    }
    walk(game, inst, bx, by, 0)
}

/// Objective of the smoothed best response, `<q, g> + mu d(q)`.
pub fn sbr_objective(
    w: &DgfWeights,
    t: &Treeplex,
    g: &[f64],
    mu: f64,
    q: &SequenceVector,
) -> f64 {
    dot(q.as_slice(), g) + mu * dgf_value(w, t, q)
}

/// Per-simplex values `V_j` of the dilated objective under a behavioral
/// strategy `b`:
/// `V_j = mu beta_j (sum_i b_i ln b_i + ln n_j) + sum_i b_i (g_i + sum_k V_k)`.
/// The total objective is the sum of the root values.
fn simplex_values(w: &DgfWeights, t: &Treeplex, g: &[f64], mu: f64, b: &[f64]) -> Vec<f64> {
    let mut v = vec![0.0; t.simplex_count()];
    for &j in t.bottom_up() {
        let s = t.simplex(j);
        let mut ent = (s.dim as f64).ln();
        let mut linear = 0.0;
        for i in s.range() {
            let bi = b[i].max(1e-300);
            ent += bi * bi.ln();
            let mut c = g[i];
            for &k in &s.children[i - s.start] {
                c += v[k];
            }
            linear += bi * c;
        }
        v[j] = mu * w.beta[j] * ent + linear;
    }
    v
}

/// Iterative minimizer of `<q, g> + mu d(q)`: damped exponentiated-gradient
/// (mirror-descent) sweeps over the behavioral coordinates with Jacobi-style
/// child values. Entirely independent of the closed-form recursion.
pub fn iterative_sbr(
    w: &DgfWeights,
    t: &Treeplex,
    g: &[f64],
    mu: f64,
) -> (SequenceVector, f64) {
    let n = t.total_dimension();
    let mut b = vec![0.0; n];
    for s in t.simplexes() {
        let u = 1.0 / s.dim as f64;
        for i in s.range() {
            b[i] = u;
        }
    }
    let eta = 0.5;
    for _ in 0..100_000 {
        let v = simplex_values(w, t, g, mu, &b);
        let mut next = b.clone();
        for (j, s) in t.simplexes().iter().enumerate() {
            let weight = mu * w.beta[j];
            // b_i <- b_i^(1-eta) exp(-eta c_i / weight), normalized: a damped
            // step toward the per-simplex softmax of the child-folded costs.
            let mut logits = vec![0.0; s.dim];
            for i in s.range() {
                let mut c = g[i];
                for &k in &s.children[i - s.start] {
                    c += v[k];
                }
                logits[i - s.start] = (1.0 - eta) * b[i].max(1e-300).ln() - eta * c / weight;
            }
            let top = logits.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            let mut z = 0.0;
            for l in logits.iter_mut() {
                *l = (*l - top).exp();
                z += *l;
            }
            for i in s.range() {
                next[i] = logits[i - s.start] / z;
            }
        }
        let delta = b
            .iter()
            .zip(&next)
            .map(|(a, c)| (a - c).abs())
            .fold(0.0f64, f64::max);
        b = next;
        if delta < 1e-13 {
            break;
        }
    }
    let q = behavioral_to_sequence(t, &BehavioralVector::new(b)).expect("iterate stays feasible");
    let value = sbr_objective(w, t, g, mu, &q);
    (q, value)
}

/// Largest within-simplex spread of the Lagrangian stationarity quantity
/// `mu beta_j (ln b_i + 1) + g_i + sum_k V_k` at a candidate minimizer. Zero
/// at the exact optimum.
pub fn stationarity_spread(
    w: &DgfWeights,
    t: &Treeplex,
    g: &[f64],
    mu: f64,
    q: &SequenceVector,
) -> f64 {
    let b = efg_solver::treeplex::sequence_to_behavioral(t, q).expect("minimizer is feasible");
    let v = simplex_values(w, t, g, mu, &b.values);
    let mut worst = 0.0f64;
    for (j, s) in t.simplexes().iter().enumerate() {
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        for i in s.range() {
            let mut kappa = mu * w.beta[j] * (b.values[i].max(1e-300).ln() + 1.0) + g[i];
            for &k in &s.children[i - s.start] {
                kappa += v[k];
            }
            lo = lo.min(kappa);
            hi = hi.max(kappa);
        }
        worst = worst.max(hi - lo);
    }
    worst
}

/// Central finite differences of the dilated entropy at an interior point,
/// with steps proportional to each coordinate.
pub fn fd_dgf_gradient(w: &DgfWeights, t: &Treeplex, q: &SequenceVector) -> Vec<f64> {
    let mut fd = vec![0.0; q.len()];
    let mut probe = q.clone();
    for i in 0..q.len() {
        let h = 1e-4 * q.values[i];
        probe.values[i] = q.values[i] + h;
        let up = dgf_value(w, t, &probe);
        probe.values[i] = q.values[i] - h;
        let down = dgf_value(w, t, &probe);
        probe.values[i] = q.values[i];
        fd[i] = (up - down) / (2.0 * h);
    }
    fd
}
