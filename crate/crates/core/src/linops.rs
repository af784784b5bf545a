//! Sparse payoff-matrix products and the gradient-computation counter used
//! for per-algorithm cost accounting.

use rayon::prelude::*;
use std::sync::atomic::{AtomicU64, Ordering};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum LinopsError {
    #[error("vector length {got} does not match matrix dimension {want}")]
    DimensionMismatch { got: usize, want: usize },
    #[error("triplet index ({row}, {col}) outside {nrows}x{ncols} matrix")]
    IndexOutOfRange { row: usize, col: usize, nrows: usize, ncols: usize },
}

/// Monotone counter of gradient computations (mat-vec products).
#[derive(Debug, Default)]
pub struct GradientCounter(AtomicU64);

impl GradientCounter {
    pub fn new() -> Self {
        GradientCounter(AtomicU64::new(0))
    }

    pub fn increment(&self) {
        self.0.fetch_add(1, Ordering::Relaxed);
    }

    pub fn get(&self) -> u64 {
        self.0.load(Ordering::Relaxed)
    }
}

/// Sparse matrix stored in both row-major and column-major compressed form,
/// so that both `A y` and `A^T x` are single streaming passes. Read-only
/// after construction.
#[derive(Debug, Clone)]
pub struct SparseMatrix {
    nrows: usize,
    ncols: usize,
    row_ptr: Vec<usize>,
    row_cols: Vec<usize>,
    row_vals: Vec<f64>,
    col_ptr: Vec<usize>,
    col_rows: Vec<usize>,
    col_vals: Vec<f64>,
}

impl SparseMatrix {
    /// Builds from (row, col, value) triplets; duplicate positions are summed.
    pub fn from_triplets(
        nrows: usize,
        ncols: usize,
        triplets: &[(usize, usize, f64)],
    ) -> Result<SparseMatrix, LinopsError> {
        for &(r, c, _) in triplets {
            if r >= nrows || c >= ncols {
                return Err(LinopsError::IndexOutOfRange { row: r, col: c, nrows, ncols });
            }
        }
        let mut entries: std::collections::BTreeMap<(usize, usize), f64> =
            std::collections::BTreeMap::new();
        for &(r, c, v) in triplets {
            *entries.entry((r, c)).or_insert(0.0) += v;
        }

        let mut row_ptr = vec![0usize; nrows + 1];
        for &(r, _) in entries.keys() {
            row_ptr[r + 1] += 1;
        }
        for i in 0..nrows {
            row_ptr[i + 1] += row_ptr[i];
        }
        let nnz = entries.len();
        let mut row_cols = Vec::with_capacity(nnz);
        let mut row_vals = Vec::with_capacity(nnz);
        for (&(_, c), &v) in entries.iter() {
            row_cols.push(c);
            row_vals.push(v);
        }

        let mut col_entries: Vec<((usize, usize), f64)> =
            entries.iter().map(|(&(r, c), &v)| ((c, r), v)).collect();
        col_entries.sort_unstable_by_key(|&(k, _)| k);
        let mut col_ptr = vec![0usize; ncols + 1];
        for &((c, _), _) in &col_entries {
            col_ptr[c + 1] += 1;
        }
        for i in 0..ncols {
            col_ptr[i + 1] += col_ptr[i];
        }
        let mut col_rows = Vec::with_capacity(nnz);
        let mut col_vals = Vec::with_capacity(nnz);
        for &((_, r), v) in &col_entries {
            col_rows.push(r);
            col_vals.push(v);
        }

        Ok(SparseMatrix {
            nrows,
            ncols,
            row_ptr,
            row_cols,
            row_vals,
            col_ptr,
            col_rows,
            col_vals,
        })
    }

    pub fn nrows(&self) -> usize {
        self.nrows
    }

    pub fn ncols(&self) -> usize {
        self.ncols
    }

    pub fn nnz(&self) -> usize {
        self.row_vals.len()
    }

    /// Maximum absolute entry.
    pub fn max_abs_entry(&self) -> f64 {
        self.row_vals.iter().fold(0.0, |m, &v| m.max(v.abs()))
    }

    pub fn entries(&self) -> impl Iterator<Item = (usize, usize, f64)> + '_ {
        (0..self.nrows).flat_map(move |r| {
            (self.row_ptr[r]..self.row_ptr[r + 1])
                .map(move |k| (r, self.row_cols[k], self.row_vals[k]))
        })
    }

    /// `A y`. Each output row is a sequential dot product, so results are
    /// identical regardless of thread count. Increments the counter once.
    pub fn apply(&self, y: &[f64], counter: &GradientCounter) -> Result<Vec<f64>, LinopsError> {
        if y.len() != self.ncols {
            return Err(LinopsError::DimensionMismatch { got: y.len(), want: self.ncols });
        }
        counter.increment();
        let out = (0..self.nrows)
            .into_par_iter()
            .map(|r| {
                let mut acc = 0.0;
                for k in self.row_ptr[r]..self.row_ptr[r + 1] {
                    acc += self.row_vals[k] * y[self.row_cols[k]];
                }
                acc
            })
            .collect();
        Ok(out)
    }

    /// `A^T x`, via the column-major view. Increments the counter once.
    pub fn apply_transpose(
        &self,
        x: &[f64],
        counter: &GradientCounter,
    ) -> Result<Vec<f64>, LinopsError> {
        if x.len() != self.nrows {
            return Err(LinopsError::DimensionMismatch { got: x.len(), want: self.nrows });
        }
        counter.increment();
        let out = (0..self.ncols)
            .into_par_iter()
            .map(|c| {
                let mut acc = 0.0;
                for k in self.col_ptr[c]..self.col_ptr[c + 1] {
                    acc += self.col_vals[k] * x[self.col_rows[k]];
                }
                acc
            })
            .collect();
        Ok(out)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn matching_pennies_uniform_nullifies() {
        let a = SparseMatrix::from_triplets(
            2,
            2,
            &[(0, 0, 1.0), (0, 1, -1.0), (1, 0, -1.0), (1, 1, 1.0)],
        )
        .unwrap();
        let c = GradientCounter::new();
        let out = a.apply(&[0.5, 0.5], &c).unwrap();
        assert_eq!(out, vec![0.0, 0.0]);
        assert_eq!(c.get(), 1);
    }

    #[test]
    fn one_by_one() {
        let a = SparseMatrix::from_triplets(1, 1, &[(0, 0, 3.0)]).unwrap();
        let c = GradientCounter::new();
        assert_eq!(a.apply(&[1.0], &c).unwrap(), vec![3.0]);
        assert_eq!(a.apply_transpose(&[1.0], &c).unwrap(), vec![3.0]);
        assert_eq!(c.get(), 2);
    }

    #[test]
    fn dimension_mismatch_is_an_error() {
        let a = SparseMatrix::from_triplets(2, 3, &[(0, 0, 1.0)]).unwrap();
        let c = GradientCounter::new();
        assert!(a.apply(&[1.0, 0.0], &c).is_err());
        assert!(a.apply_transpose(&[1.0], &c).is_err());
    }

    #[test]
    fn duplicate_triplets_sum() {
        let a = SparseMatrix::from_triplets(1, 1, &[(0, 0, 1.0), (0, 0, 2.0)]).unwrap();
        let c = GradientCounter::new();
        assert_eq!(a.apply(&[1.0], &c).unwrap(), vec![3.0]);
        assert_eq!(a.nnz(), 1);
    }

    #[test]
    fn views_agree_with_dense_reference() {
        // Fixed 5x7 sparse matrix against a dense product.
        let trips = [
            (0, 1, 2.0),
            (0, 6, -1.5),
            (1, 0, 0.5),
            (2, 3, 4.0),
            (3, 3, -2.0),
            (4, 2, 1.0),
            (4, 5, 3.25),
        ];
        let a = SparseMatrix::from_triplets(5, 7, &trips).unwrap();
        let mut dense = vec![vec![0.0; 7]; 5];
        for &(r, c, v) in &trips {
            dense[r][c] += v;
        }
        let y: Vec<f64> = (0..7).map(|i| (i as f64) * 0.3 - 1.0).collect();
        let x: Vec<f64> = (0..5).map(|i| 1.0 - (i as f64) * 0.7).collect();
        let cnt = GradientCounter::new();
        let ay = a.apply(&y, &cnt).unwrap();
        let atx = a.apply_transpose(&x, &cnt).unwrap();
        for r in 0..5 {
            let want: f64 = (0..7).map(|c| dense[r][c] * y[c]).sum();
            assert!((ay[r] - want).abs() < 1e-14);
        }
        for c in 0..7 {
            let want: f64 = (0..5).map(|r| dense[r][c] * x[r]).sum();
            assert!((atx[c] - want).abs() < 1e-14);
        }
        // Adjoint identity <x, Ay> = <A^T x, y>.
        let lhs: f64 = x.iter().zip(&ay).map(|(a, b)| a * b).sum();
        let rhs: f64 = atx.iter().zip(&y).map(|(a, b)| a * b).sum();
        assert!((lhs - rhs).abs() < 1e-12 * lhs.abs().max(1.0));
    }
}
