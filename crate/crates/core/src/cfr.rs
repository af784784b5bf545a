//! Counterfactual regret minimization over sequence-form games: CFR with
//! regret matching, CFR with regret matching plus, and CFR+ (regret matching
//! plus with linearly weighted averaging). Updates alternate between the
//! players; each iteration costs exactly two gradient computations.

use crate::game::GameInstance;
use crate::linops::{GradientCounter, LinopsError};
use crate::metrics::{record_measurement, ConvergenceRecord, RunControl, RunResult};
use crate::treeplex::{behavioral_to_sequence_unchecked, SequenceVector, Treeplex};
use std::time::Instant;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CfrVariant {
    /// Regret matching, uniformly weighted averages.
    Rm,
    /// Regret matching plus, uniformly weighted averages.
    RmPlus,
    /// Regret matching plus, linearly weighted averages.
    Plus,
}

impl CfrVariant {
    fn plus_update(self) -> bool {
        !matches!(self, CfrVariant::Rm)
    }

    fn linear_averaging(self) -> bool {
        matches!(self, CfrVariant::Plus)
    }
}

/// Running-average weight for iteration `t` (1-based): `1/t` for uniform
/// averages, `2/(t+1)` for linearly weighted averages.
pub fn averaging_weight(t: u64, linear: bool) -> f64 {
    if linear {
        2.0 / (t as f64 + 1.0)
    } else {
        1.0 / t as f64
    }
}

/// Per-player regret minimizer state over one treeplex.
#[derive(Debug, Clone)]
pub struct RegretState {
    regrets: Vec<f64>,
    /// Current behavioral strategy, refreshed after each update.
    behavioral: Vec<f64>,
    plus: bool,
}

impl RegretState {
    pub fn new(t: &Treeplex, plus: bool) -> Self {
        let mut behavioral = vec![0.0; t.total_dimension()];
        for s in t.simplexes() {
            let u = 1.0 / s.dim as f64;
            for i in s.range() {
                behavioral[i] = u;
            }
        }
        RegretState { regrets: vec![0.0; t.total_dimension()], behavioral, plus }
    }

    pub fn behavioral(&self) -> &[f64] {
        &self.behavioral
    }

    pub fn sequence(&self, t: &Treeplex) -> SequenceVector {
        behavioral_to_sequence_unchecked(t, &self.behavioral)
    }

    /// One regret update from a utility gradient. `g` is consumed bottom-up:
    /// each simplex's expected value under the pre-update strategy is folded
    /// into the parent sequence's entry, so counterfactual values compose.
    /// The behavioral strategy is then refreshed from the positive regrets.
    pub fn update(&mut self, t: &Treeplex, g: &mut [f64]) {
        assert_eq!(g.len(), self.regrets.len());
        for &j in t.bottom_up() {
            let s = t.simplex(j);
            let mut value = 0.0;
            for i in s.range() {
                value += self.behavioral[i] * g[i];
            }
            if let Some(p) = s.parent {
                g[p] += value;
            }
            let mut positive_sum = 0.0;
            for i in s.range() {
                let r = self.regrets[i] + g[i] - value;
                self.regrets[i] = if self.plus { r.max(0.0) } else { r };
                positive_sum += self.regrets[i].max(0.0);
            }
            if positive_sum > 0.0 {
                for i in s.range() {
                    self.behavioral[i] = self.regrets[i].max(0.0) / positive_sum;
                }
            } else {
                let u = 1.0 / s.dim as f64;
                for i in s.range() {
                    self.behavioral[i] = u;
                }
            }
        }
    }
}

/// Theoretical bound on the saddle-point residual of the average strategies
/// after `t` iterations of the regret-matching family:
/// `sum_players 2 |S| L sqrt(max_j n_j) / sqrt(t)` with `L` the payoff range.
pub fn cfr_regret_bound(inst: &GameInstance, t: u64) -> f64 {
    let per_player = |tp: &Treeplex| {
        let max_dim = tp.simplexes().iter().map(|s| s.dim).max().unwrap_or(1) as f64;
        2.0 * tp.simplex_count() as f64 * inst.payoff_range * max_dim.sqrt()
    };
    (per_player(&inst.treeplex_x) + per_player(&inst.treeplex_y)) / (t as f64).sqrt()
}

fn axpy_toward(avg: &mut [f64], cur: &[f64], w: f64) {
    for (a, &c) in avg.iter_mut().zip(cur) {
        *a += w * (c - *a);
    }
}

/// Runs a CFR variant, logging the residual of the average strategy pair on
/// the measurement cadence in `control`.
pub fn run_cfr(
    inst: &GameInstance,
    variant: CfrVariant,
    control: &RunControl,
) -> Result<RunResult, LinopsError> {
    let tx = &inst.treeplex_x;
    let ty = &inst.treeplex_y;
    let algo = GradientCounter::new();
    let measure = GradientCounter::new();
    let start = Instant::now();

    let mut sx = RegretState::new(tx, variant.plus_update());
    let mut sy = RegretState::new(ty, variant.plus_update());
    let mut x_avg = sx.sequence(tx).values;
    let mut y_avg = sy.sequence(ty).values;
    let mut records = Vec::new();
    let mut reached = false;
    let mut iterations = 0;

    let log = |records: &mut Vec<ConvergenceRecord>,
               iter: u64,
               x_avg: &[f64],
               y_avg: &[f64]|
     -> Result<f64, LinopsError> {
        record_measurement(
            inst,
            records,
            iter,
            &SequenceVector::new(x_avg.to_vec()),
            &SequenceVector::new(y_avg.to_vec()),
            &start,
            &algo,
            &measure,
            control.merge_grad_ledgers,
        )
    };

    log(&mut records, 0, &x_avg, &y_avg)?;
    if let Some(target) = control.target_eps {
        if records[0].eps_sad <= target {
            reached = true;
        }
    }

    let budget_spent = |algo: &GradientCounter| {
        control.max_algo_grads.is_some_and(|b| algo.get() >= b)
    };
    let mut measured_at = 0u64;
    for t in 1..=control.max_iters {
        if reached || budget_spent(&algo) {
            break;
        }
        iterations = t;

        // X update against the opponent's previous strategy.
        let y_seq = sy.sequence(ty);
        let mut gx = inst.payoff_matrix.apply(y_seq.as_slice(), &algo)?;
        sx.update(tx, &mut gx);
        let x_seq = sx.sequence(tx);

        // Y update against the freshly updated X strategy. Y minimizes the
        // payoff to X, so its utility gradient is the negated transpose.
        let mut gy = inst.payoff_matrix.apply_transpose(x_seq.as_slice(), &algo)?;
        for v in gy.iter_mut() {
            *v = -*v;
        }
        sy.update(ty, &mut gy);
        let y_seq = sy.sequence(ty);

        let w = averaging_weight(t, variant.linear_averaging());
        axpy_toward(&mut x_avg, &x_seq.values, w);
        axpy_toward(&mut y_avg, &y_seq.values, w);

        if t % control.measure_every == 0 || t == control.max_iters || budget_spent(&algo) {
            let eps = log(&mut records, t, &x_avg, &y_avg)?;
            measured_at = t;
            if let Some(target) = control.target_eps {
                if eps <= target {
                    reached = true;
                }
            }
        }
    }
    if iterations > 0 && measured_at != iterations {
        log(&mut records, iterations, &x_avg, &y_avg)?;
    }

    Ok(RunResult {
        x: SequenceVector::new(x_avg),
        y: SequenceVector::new(y_avg),
        records,
        iterations,
        reached_target: reached,
        algo_grads: algo.get(),
        measure_grads: measure.get(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::game::{build_sequence_form, kuhn_poker, matching_pennies};
    use crate::linops::GradientCounter;
    use crate::metrics::saddle_point_residual;

    fn run(game_variant: CfrVariant, iters: u64) -> (GameInstance, RunResult) {
        let inst = build_sequence_form(&kuhn_poker()).unwrap();
        let control = RunControl {
            max_iters: iters,
            target_eps: None,
            max_algo_grads: None,
            measure_every: iters,
            merge_grad_ledgers: false,
        };
        let res = run_cfr(&inst, game_variant, &control).unwrap();
        (inst, res)
    }

    #[test]
    fn averaging_weights() {
        assert_eq!(averaging_weight(1, false), 1.0);
        assert_eq!(averaging_weight(4, false), 0.25);
        assert_eq!(averaging_weight(1, true), 1.0);
        assert_eq!(averaging_weight(3, true), 0.5);
    }

    #[test]
    fn regret_matching_mixes_by_positive_regret() {
        let t = Treeplex::build(&[(2, None)]).unwrap();
        let mut s = RegretState::new(&t, false);
        // Utility favors action 0 by 2; expected value at uniform is 0.
        let mut g = vec![1.0, -1.0];
        s.update(&t, &mut g);
        assert!((s.behavioral()[0] - 1.0).abs() < 1e-15);
        assert_eq!(s.behavioral()[1], 0.0);
    }

    #[test]
    fn plus_update_clips_negative_regret() {
        let t = Treeplex::build(&[(2, None)]).unwrap();
        let mut plain = RegretState::new(&t, false);
        let mut plus = RegretState::new(&t, true);
        for g in [[-5.0, 5.0], [1.0, -1.0], [1.0, -1.0]] {
            plain.update(&t, &mut g.to_vec());
            plus.update(&t, &mut g.to_vec());
        }
        // Plain regret matching buried action 0 under -10 regret and keeps
        // playing action 1; the plus variant clipped at zero and recovers.
        assert_eq!(plain.behavioral()[0], 0.0);
        assert!(plus.behavioral()[0] > 0.0);
    }

    #[test]
    fn matching_pennies_converges() {
        let inst = build_sequence_form(&matching_pennies()).unwrap();
        let control = RunControl {
            max_iters: 2000,
            target_eps: None,
            max_algo_grads: None,
            measure_every: 2000,
            merge_grad_ledgers: false,
        };
        let res = run_cfr(&inst, CfrVariant::Plus, &control).unwrap();
        assert!(res.final_eps() < 1e-2, "residual {}", res.final_eps());
    }

    #[test]
    fn kuhn_all_variants_converge_and_count_gradients() {
        for v in [CfrVariant::Rm, CfrVariant::RmPlus, CfrVariant::Plus] {
            let (_, res) = run(v, 2000);
            assert!(res.final_eps() < 0.05, "{v:?} residual {}", res.final_eps());
            assert_eq!(res.algo_grads, 2 * 2000, "{v:?} gradient count");
        }
    }

    #[test]
    fn kuhn_value_approached_by_cfr_plus() {
        let (inst, res) = run(CfrVariant::Plus, 5000);
        let c = GradientCounter::new();
        let ay = inst.payoff_matrix.apply(res.y.as_slice(), &c).unwrap();
        let value: f64 = res.x.as_slice().iter().zip(&ay).map(|(a, b)| a * b).sum();
        assert!((value - (-1.0 / 18.0)).abs() < 1e-2, "game value estimate {value}");
        let eps = saddle_point_residual(&inst, &res.x, &res.y, &c).unwrap();
        assert!(eps < 2e-2, "residual {eps}");
    }

    #[test]
    fn residual_respects_theoretical_bound() {
        let (inst, res) = run(CfrVariant::Rm, 500);
        assert!(res.final_eps() <= cfr_regret_bound(&inst, 500));
    }

    #[test]
    fn target_stops_early() {
        let inst = build_sequence_form(&kuhn_poker()).unwrap();
        let control = RunControl {
            max_iters: 100_000,
            target_eps: Some(0.05),
            max_algo_grads: None,
            measure_every: 10,
            merge_grad_ledgers: false,
        };
        let res = run_cfr(&inst, CfrVariant::Plus, &control).unwrap();
        assert!(res.reached_target);
        assert!(res.iterations < 100_000);
        assert!(res.final_eps() <= 0.05);
    }

    use crate::game::GameInstance;
    use crate::treeplex::Treeplex;
}
