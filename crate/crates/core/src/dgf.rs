//! Dilated entropy distance-generating function over a treeplex: per-simplex
//! dilation weights, value and gradient evaluation, the closed-form smoothed
//! best response, prox mappings, and the prox-shift identity.

use crate::treeplex::{
    behavioral_to_sequence_unchecked, max_l1_norm, uniform_sequence, SequenceVector, Treeplex,
};
use thiserror::Error;

/// Floor applied to behavioral probabilities before they are fed to
/// logarithms in later gradient evaluations.
pub const INTERIOR_FLOOR: f64 = 1e-300;

#[derive(Debug, Error)]
pub enum DgfError {
    #[error("smoothing parameter must be positive, got {0}")]
    NonPositiveMu(f64),
    #[error("interior point required: entry {index} is {value}")]
    NotInterior { index: usize, value: f64 },
}

/// Dilation weights and derived constants for one treeplex.
#[derive(Debug, Clone)]
pub struct DgfWeights {
    /// Per-simplex dilation weight, `beta_j = 2 + sum over child simplexes of 2 beta_k`.
    pub beta: Vec<f64>,
    /// Maximum l1 norm over the treeplex.
    pub m: f64,
    /// Strong convexity modulus, `1 / m`.
    pub modulus: f64,
    /// Range of the DGF over the treeplex (its minimum is 0 at the center).
    pub omega: f64,
    /// The DGF minimizer: the uniform behavioral strategy in sequence form.
    pub center: SequenceVector,
}

/// Bottom-up weight recurrence plus the derived constants.
pub fn compute_weights(t: &Treeplex) -> DgfWeights {
    let n = t.simplex_count();
    let mut beta = vec![0.0f64; n];
    for &j in t.bottom_up() {
        let s = t.simplex(j);
        let child_sum: f64 = s.children.iter().flatten().map(|&k| beta[k]).sum();
        beta[j] = 2.0 + 2.0 * child_sum;
    }
    let m = max_l1_norm(t);
    // The maximum of the DGF is attained at a vertex; each simplex at a
    // vertex contributes beta_j * ln(n_j) scaled by its parent weight.
    let mut omega_sub = vec![0.0f64; n];
    for &j in t.bottom_up() {
        let s = t.simplex(j);
        let best_branch = s
            .children
            .iter()
            .map(|kids| kids.iter().map(|&k| omega_sub[k]).sum::<f64>())
            .fold(0.0f64, f64::max);
        omega_sub[j] = beta[j] * (s.dim as f64).ln() + best_branch;
    }
    let omega: f64 = t.roots().iter().map(|&r| omega_sub[r]).sum();
    DgfWeights {
        beta,
        m,
        modulus: 1.0 / m,
        omega,
        center: uniform_sequence(t),
    }
}

/// Value of the dilated entropy at a treeplex point, with `0 ln 0 = 0` and
/// zero-parent simplexes contributing nothing.
pub fn dgf_value(w: &DgfWeights, t: &Treeplex, q: &SequenceVector) -> f64 {
    let mut total = 0.0;
    for (j, s) in t.simplexes().iter().enumerate() {
        let pw = s.parent.map_or(1.0, |p| q.values[p]);
        if pw <= 0.0 {
            continue;
        }
        let mut ent = 0.0;
        for i in s.range() {
            let v = q.values[i];
            if v > 0.0 {
                ent += v * (v / pw).ln();
            }
        }
        total += w.beta[j] * (ent + pw * (s.dim as f64).ln());
    }
    total
}

/// Gradient of the dilated entropy at a strictly positive point.
pub fn dgf_gradient(
    w: &DgfWeights,
    t: &Treeplex,
    q: &SequenceVector,
) -> Result<Vec<f64>, DgfError> {
    for (i, &v) in q.values.iter().enumerate() {
        if v <= 0.0 {
            return Err(DgfError::NotInterior { index: i, value: v });
        }
    }
    let mut grad = vec![0.0; t.total_dimension()];
    for (j, s) in t.simplexes().iter().enumerate() {
        let pw = s.parent.map_or(1.0, |p| q.values[p]);
        for i in s.range() {
            let local = i - s.start;
            let child_term: f64 = s.children[local]
                .iter()
                .map(|&k| w.beta[k] * ((t.simplex(k).dim as f64).ln() - 1.0))
                .sum();
            grad[i] = w.beta[j] * ((q.values[i] / pw).ln() + 1.0) + child_term;
        }
    }
    Ok(grad)
}

/// Gradient of the dilated entropy through behavioral ratios, defined on the
/// whole treeplex: zero-parent simplexes use the uniform distribution and
/// ratios are floored at [`INTERIOR_FLOOR`] before the logarithm. Agrees
/// with [`dgf_gradient`] at interior points; used where iterates may brush
/// the boundary through floating-point underflow.
pub fn dgf_gradient_clamped(w: &DgfWeights, t: &Treeplex, q: &SequenceVector) -> Vec<f64> {
    let mut grad = vec![0.0; t.total_dimension()];
    for (j, s) in t.simplexes().iter().enumerate() {
        let pw = s.parent.map_or(1.0, |p| q.values[p]);
        for i in s.range() {
            let b = if pw > 0.0 {
                (q.values[i] / pw).max(INTERIOR_FLOOR)
            } else {
                1.0 / s.dim as f64
            };
            let local = i - s.start;
            let child_term: f64 = s.children[local]
                .iter()
                .map(|&k| w.beta[k] * ((t.simplex(k).dim as f64).ln() - 1.0))
                .sum();
            grad[i] = w.beta[j] * (b.ln() + 1.0) + child_term;
        }
    }
    grad
}

/// Exact minimizer and value of `<q, g> + mu * d(q)` over the treeplex.
///
/// Bottom-up: each simplex's distribution is a softmax of its (child-folded)
/// gradient block with temperature `mu * beta_j`, computed with max-exponent
/// subtraction. The simplex's optimal value is folded into the parent's
/// gradient entry through the index of the largest probability, ties going to
/// the lowest index.
pub fn smoothed_best_response(
    w: &DgfWeights,
    t: &Treeplex,
    g: &[f64],
    mu: f64,
) -> Result<(SequenceVector, f64), DgfError> {
    if mu <= 0.0 {
        return Err(DgfError::NonPositiveMu(mu));
    }
    let mut eff = g.to_vec();
    let mut behavioral = vec![0.0; t.total_dimension()];
    let mut value = 0.0;
    for &j in t.bottom_up() {
        let s = t.simplex(j);
        let weight = mu * w.beta[j];
        let start = s.start;
        let dim = s.dim;
        let gmin = eff[s.range()].iter().fold(f64::INFINITY, |m, &v| m.min(v));
        let mut z = 0.0;
        for i in start..start + dim {
            let e = (-(eff[i] - gmin) / weight).exp().max(INTERIOR_FLOOR);
            behavioral[i] = e;
            z += e;
        }
        let mut istar = start;
        for i in start..start + dim {
            behavioral[i] /= z;
            if behavioral[i] > behavioral[istar] {
                istar = i;
            }
        }
        let lambda =
            eff[istar] + weight * (behavioral[istar].ln() + (dim as f64).ln());
        match s.parent {
            Some(p) => eff[p] += lambda,
            None => value += lambda,
        }
    }
    let q = behavioral_to_sequence_unchecked(t, &behavioral);
    Ok((q, value))
}

/// Gradient of the conjugate of `mu * d`: the maximizer of `<g, q> - mu * d(q)`.
pub fn conjugate_gradient(
    w: &DgfWeights,
    t: &Treeplex,
    g: &[f64],
    mu: f64,
) -> Result<SequenceVector, DgfError> {
    let neg: Vec<f64> = g.iter().map(|&v| -v).collect();
    smoothed_best_response(w, t, &neg, mu).map(|(q, _)| q)
}

/// Minimizer of `<q, g> + mu * D(q || q_prev)` where `D` is the Bregman
/// divergence of the DGF. Solved as a smoothed best response with the
/// shifted gradient `g - mu * grad d(q_prev)`.
pub fn prox_mapping(
    w: &DgfWeights,
    t: &Treeplex,
    g: &[f64],
    q_prev: &SequenceVector,
    mu: f64,
) -> Result<SequenceVector, DgfError> {
    if mu <= 0.0 {
        return Err(DgfError::NonPositiveMu(mu));
    }
    let grad_prev = dgf_gradient(w, t, q_prev)?;
    let shifted: Vec<f64> = g
        .iter()
        .zip(&grad_prev)
        .map(|(&gi, &di)| gi - mu * di)
        .collect();
    smoothed_best_response(w, t, &shifted, mu).map(|(q, _)| q)
}

/// Closed form for `-d(q) + <grad d(q), q>` at interior points: the sum over
/// root simplexes of `-beta_j (ln n_j - 1)`.
pub fn prox_shift_value(
    w: &DgfWeights,
    t: &Treeplex,
    q: &SequenceVector,
) -> Result<f64, DgfError> {
    for (i, &v) in q.values.iter().enumerate() {
        if v <= 0.0 {
            return Err(DgfError::NotInterior { index: i, value: v });
        }
    }
    Ok(t.roots()
        .iter()
        .map(|&j| -w.beta[j] * ((t.simplex(j).dim as f64).ln() - 1.0))
        .sum())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::treeplex::Treeplex;

    fn single(dim: usize) -> Treeplex {
        Treeplex::build(&[(dim, None)]).unwrap()
    }

    #[test]
    fn weights_on_leaf_and_chain() {
        let t = single(2);
        let w = compute_weights(&t);
        assert_eq!(w.beta, vec![2.0]);
        assert!((w.omega - 2.0 * 2f64.ln()).abs() < 1e-12);
        assert_eq!(w.m, 1.0);

        let chain = Treeplex::build(&[(2, None), (2, Some(0))]).unwrap();
        let w = compute_weights(&chain);
        assert_eq!(w.beta[1], 2.0);
        assert_eq!(w.beta[0], 6.0);
    }

    #[test]
    fn value_vanishes_at_center() {
        let t = Treeplex::build(&[(2, None), (3, Some(1)), (2, Some(2))]).unwrap();
        let w = compute_weights(&t);
        assert!(dgf_value(&w, &t, &w.center).abs() < 1e-12);
    }

    #[test]
    fn value_at_vertex_and_interior() {
        let t = single(2);
        let w = compute_weights(&t);
        let v = dgf_value(&w, &t, &SequenceVector::new(vec![1.0, 0.0]));
        assert!((v - 2.0 * 2f64.ln()).abs() < 1e-12);

        let v = dgf_value(&w, &t, &SequenceVector::new(vec![0.25, 0.75]));
        let want = 2.0 * (0.25f64 * 0.25f64.ln() + 0.75 * 0.75f64.ln() + 2f64.ln());
        assert!((v - want).abs() < 1e-12);
    }

    #[test]
    fn gradient_at_uniform() {
        let t = single(2);
        let w = compute_weights(&t);
        let g = dgf_gradient(&w, &t, &SequenceVector::new(vec![0.5, 0.5])).unwrap();
        let want = 2.0 * (0.5f64.ln() + 1.0);
        assert!((g[0] - want).abs() < 1e-12);
        assert!((g[1] - want).abs() < 1e-12);
    }

    #[test]
    fn gradient_requires_interior() {
        let t = single(2);
        let w = compute_weights(&t);
        assert!(matches!(
            dgf_gradient(&w, &t, &SequenceVector::new(vec![1.0, 0.0])),
            Err(DgfError::NotInterior { .. })
        ));
    }

    #[test]
    fn sbr_uniform_for_zero_gradient() {
        let t = single(2);
        let w = compute_weights(&t);
        let (q, v) = smoothed_best_response(&w, &t, &[0.0, 0.0], 1.0).unwrap();
        assert!((q.values[0] - 0.5).abs() < 1e-15);
        assert!(v.abs() < 1e-12);
    }

    #[test]
    fn sbr_closed_form_single_simplex() {
        let t = single(2);
        let w = compute_weights(&t);
        let (q, v) = smoothed_best_response(&w, &t, &[-1.0, 0.0], 1.0).unwrap();
        let e = 0.5f64.exp();
        let p = e / (e + 1.0);
        assert!((q.values[0] - p).abs() < 1e-12);
        assert!((q.values[1] - (1.0 - p)).abs() < 1e-12);
        let d = 2.0 * (p * p.ln() + (1.0 - p) * (1.0 - p).ln() + 2f64.ln());
        assert!((v - (-p + d)).abs() < 1e-10);
    }

    #[test]
    fn sbr_value_matches_recomputation() {
        let t = Treeplex::build(&[(2, None), (3, Some(0)), (2, Some(3))]).unwrap();
        let w = compute_weights(&t);
        let g = [0.3, -1.2, 0.7, -0.4, 2.0, -0.9, 0.1];
        let (q, v) = smoothed_best_response(&w, &t, &g, 0.7).unwrap();
        let dot: f64 = q.values.iter().zip(&g).map(|(a, b)| a * b).sum();
        let direct = dot + 0.7 * dgf_value(&w, &t, &q);
        assert!((v - direct).abs() < 1e-8 * v.abs().max(1.0));
    }

    #[test]
    fn conjugate_is_sign_flipped_sbr() {
        let t = single(2);
        let w = compute_weights(&t);
        let q = conjugate_gradient(&w, &t, &[1.0, 0.0], 1.0).unwrap();
        let (q2, _) = smoothed_best_response(&w, &t, &[-1.0, 0.0], 1.0).unwrap();
        assert_eq!(q.values, q2.values);

        let center = conjugate_gradient(&w, &t, &[0.0, 0.0], 1.0).unwrap();
        assert!((center.values[0] - 0.5).abs() < 1e-15);
    }

    #[test]
    fn prox_of_zero_gradient_returns_previous() {
        let t = Treeplex::build(&[(2, None), (2, Some(1))]).unwrap();
        let w = compute_weights(&t);
        let q_prev = SequenceVector::new(vec![0.3, 0.7, 0.28, 0.42]);
        let g = vec![0.0; 4];
        let q = prox_mapping(&w, &t, &g, &q_prev, 1.0).unwrap();
        for (a, b) in q.values.iter().zip(&q_prev.values) {
            assert!((a - b).abs() < 1e-8);
        }
    }

    #[test]
    fn prox_constant_shift_cancels_on_simplex() {
        let t = single(2);
        let w = compute_weights(&t);
        let q_prev = SequenceVector::new(vec![0.5, 0.5]);
        let q = prox_mapping(&w, &t, &[-1.0, 0.0], &q_prev, 1.0).unwrap();
        let e = 0.5f64.exp();
        let p = e / (e + 1.0);
        assert!((q.values[0] - p).abs() < 1e-12);
    }

    #[test]
    fn prox_shift_closed_form_values() {
        let t = single(2);
        let w = compute_weights(&t);
        let q = SequenceVector::new(vec![0.5, 0.5]);
        let v = prox_shift_value(&w, &t, &q).unwrap();
        assert!((v - (-2.0 * (2f64.ln() - 1.0))).abs() < 1e-12);

        let t = single(3);
        let w = compute_weights(&t);
        let q = SequenceVector::new(vec![1.0 / 3.0; 3]);
        let v = prox_shift_value(&w, &t, &q).unwrap();
        assert!((v - (-2.0 * (3f64.ln() - 1.0))).abs() < 1e-12);
    }
}
