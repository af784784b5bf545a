//! Convergence measurement: treeplex best responses, the saddle-point
//! residual, and milli-big-blind conversion.
//!
//! Sign convention: the payoff matrix `A` holds payoffs to player X, so X
//! maximizes and Y minimizes the bilinear form `<x, A y>`.

use crate::game::GameInstance;
use crate::linops::{GradientCounter, LinopsError};
use crate::treeplex::{SequenceVector, Treeplex};

/// Optimization sense for a treeplex best response.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Sense {
    Maximize,
    Minimize,
}

/// One row of the convergence log.
#[derive(Debug, Clone)]
pub struct ConvergenceRecord {
    pub iter: u64,
    /// Cumulative gradient computations (mat-vec products) so far.
    pub grad_count: u64,
    pub wall_s: f64,
    pub eps_sad: f64,
    /// Residual in milli-big-blinds per hand, when the game declares a big blind.
    pub eps_sad_mbb: Option<f64>,
    /// How much X could gain by best-responding to Y's strategy.
    pub exploit_x: f64,
    /// How much Y could gain by best-responding to X's strategy.
    pub exploit_y: f64,
}

/// Residual of a strategy pair split into per-player exploitabilities;
/// `eps_sad = exploit_x + exploit_y`.
#[derive(Debug, Clone, Copy)]
pub struct Residual {
    pub eps_sad: f64,
    pub exploit_x: f64,
    pub exploit_y: f64,
    /// Bilinear value `<x, A y>` of the pair.
    pub value: f64,
}

/// Shared iteration budget and stopping rule for all solvers.
#[derive(Debug, Clone)]
pub struct RunControl {
    pub max_iters: u64,
    /// Absolute residual target in chips; `None` runs the full budget.
    pub target_eps: Option<f64>,
    /// Measure the residual every this many iterations (and at the end).
    pub measure_every: u64,
    /// Stop after the algorithm has spent this many gradient computations.
    pub max_algo_grads: Option<u64>,
    /// When true, measurement gradients are included in the reported
    /// `grad_count`; otherwise only algorithm gradients are reported.
    pub merge_grad_ledgers: bool,
}

impl Default for RunControl {
    fn default() -> Self {
        RunControl {
            max_iters: 1000,
            target_eps: None,
            measure_every: 1,
            max_algo_grads: None,
            merge_grad_ledgers: false,
        }
    }
}

/// Outcome of a solver run.
#[derive(Debug, Clone)]
pub struct RunResult {
    pub x: SequenceVector,
    pub y: SequenceVector,
    pub records: Vec<ConvergenceRecord>,
    pub iterations: u64,
    pub reached_target: bool,
    /// Gradient computations spent by the algorithm itself.
    pub algo_grads: u64,
    /// Gradient computations spent measuring convergence.
    pub measure_grads: u64,
}

impl RunResult {
    pub fn final_eps(&self) -> f64 {
        self.records.last().map_or(f64::INFINITY, |r| r.eps_sad)
    }
}

/// Exact linear optimization over a treeplex: returns the optimal value of
/// `<q, g>` over the treeplex and an optimal vertex. Bottom-up dynamic
/// program; ties break toward the lowest sequence index.
pub fn best_response(t: &Treeplex, g: &[f64], sense: Sense) -> (f64, SequenceVector) {
    assert_eq!(g.len(), t.total_dimension(), "gradient length must match treeplex dimension");
    // Value of committing to each sequence, child simplexes included.
    let mut seq_value = vec![0.0f64; t.total_dimension()];
    let mut simplex_value = vec![0.0f64; t.simplex_count()];
    let mut choice = vec![0usize; t.simplex_count()];
    for &j in t.bottom_up() {
        let s = t.simplex(j);
        let mut best_i = s.start;
        let mut best_v = f64::NAN;
        for i in s.range() {
            let mut v = g[i];
            for &k in &s.children[i - s.start] {
                v += simplex_value[k];
            }
            seq_value[i] = v;
            let better = match sense {
                Sense::Maximize => v > best_v,
                Sense::Minimize => v < best_v,
            };
            if best_v.is_nan() || better {
                best_v = v;
                best_i = i;
            }
        }
        simplex_value[j] = best_v;
        choice[j] = best_i;
    }

    let value: f64 = t.roots().iter().map(|&r| simplex_value[r]).sum();

    // Reconstruct the vertex top-down; simplexes cut off by an unchosen
    // sequence keep all-zero blocks, which is valid at zero parent weight.
    let mut q = vec![0.0f64; t.total_dimension()];
    for &j in t.top_down() {
        let s = t.simplex(j);
        let pw = s.parent.map_or(1.0, |p| q[p]);
        if pw > 0.0 {
            q[choice[j]] = pw;
        }
    }
    (value, SequenceVector::new(q))
}

/// Full residual of a strategy pair: `max_x <x, A y_bar> - min_y <x_bar, A y>`
/// (the sum of both players' regrets) with its per-player split. Performs
/// exactly two gradient computations on `counter`.
pub fn residual(
    inst: &GameInstance,
    x: &SequenceVector,
    y: &SequenceVector,
    counter: &GradientCounter,
) -> Result<Residual, LinopsError> {
    let ay = inst.payoff_matrix.apply(y.as_slice(), counter)?;
    let atx = inst.payoff_matrix.apply_transpose(x.as_slice(), counter)?;
    let value: f64 = x.as_slice().iter().zip(&ay).map(|(a, b)| a * b).sum();
    let (best_x, _) = best_response(&inst.treeplex_x, &ay, Sense::Maximize);
    let (best_y, _) = best_response(&inst.treeplex_y, &atx, Sense::Minimize);
    Ok(Residual {
        eps_sad: best_x - best_y,
        exploit_x: best_x - value,
        exploit_y: value - best_y,
        value,
    })
}

/// Saddle-point residual only; see [`residual`].
pub fn saddle_point_residual(
    inst: &GameInstance,
    x: &SequenceVector,
    y: &SequenceVector,
    counter: &GradientCounter,
) -> Result<f64, LinopsError> {
    residual(inst, x, y, counter).map(|r| r.eps_sad)
}

/// Measures the residual of the current averages and appends a
/// [`ConvergenceRecord`], charging the two gradient computations to the
/// measurement counter. Returns the residual.
#[allow(clippy::too_many_arguments)]
pub fn record_measurement(
    inst: &GameInstance,
    records: &mut Vec<ConvergenceRecord>,
    iter: u64,
    x: &SequenceVector,
    y: &SequenceVector,
    start: &std::time::Instant,
    algo: &GradientCounter,
    measure: &GradientCounter,
    merge_grad_ledgers: bool,
) -> Result<f64, LinopsError> {
    let r = residual(inst, x, y, measure)?;
    let grad_count = if merge_grad_ledgers { algo.get() + measure.get() } else { algo.get() };
    records.push(ConvergenceRecord {
        iter,
        grad_count,
        wall_s: start.elapsed().as_secs_f64(),
        eps_sad: r.eps_sad,
        eps_sad_mbb: inst.big_blind.map(|bb| to_mbb(r.eps_sad, bb)),
        exploit_x: r.exploit_x,
        exploit_y: r.exploit_y,
    });
    Ok(r.eps_sad)
}

/// Converts a residual in chips to milli-big-blinds per hand.
pub fn to_mbb(eps_chips: f64, big_blind: f64) -> f64 {
    eps_chips / big_blind * 1000.0
}
