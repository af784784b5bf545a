//! Treeplex polytopes: trees of simplexes composed by Cartesian products and
//! branching, which capture sequence-form strategy spaces of perfect-recall
//! games. Also provides conversions between sequence-form and behavioral-form
//! strategy vectors.

use thiserror::Error;

/// Tolerance for per-simplex sum checks during vector validation.
pub const SUM_TOL: f64 = 1e-9;

#[derive(Debug, Error)]
pub enum TreeplexError {
    #[error("empty simplex description list")]
    Empty,
    #[error("simplex {simplex} has zero dimension")]
    ZeroDimension { simplex: usize },
    #[error("simplex {simplex}: parent sequence index {parent} out of range")]
    ParentOutOfRange { simplex: usize, parent: usize },
    #[error("cycle detected in simplex parent structure")]
    CycleDetected,
    #[error("vector has length {got}, treeplex dimension is {want}")]
    DimensionMismatch { got: usize, want: usize },
    #[error("invalid sequence vector: {0}")]
    InvalidSequence(String),
    #[error("invalid behavioral vector: {0}")]
    InvalidBehavioral(String),
}

/// One simplex block inside a treeplex.
#[derive(Debug, Clone)]
pub struct Simplex {
    /// First index of this simplex's block in a strategy vector.
    pub start: usize,
    /// Number of variables (actions) in the simplex.
    pub dim: usize,
    /// Global index of the parent sequence scaling this simplex, or `None`
    /// for root simplexes (parent weight fixed to 1).
    pub parent: Option<usize>,
    /// For each local index, the simplexes branched to by that sequence.
    pub children: Vec<Vec<usize>>,
    /// Longest chain of descendant simplexes below this one (0 for a leaf).
    pub depth: usize,
    /// Number of branching operations preceding this simplex (0 for roots).
    pub branching: usize,
}

impl Simplex {
    pub fn range(&self) -> std::ops::Range<usize> {
        self.start..self.start + self.dim
    }

    pub fn is_leaf(&self) -> bool {
        self.children.iter().all(|c| c.is_empty())
    }
}

/// A validated treeplex structure. Immutable after construction and safe to
/// share across threads.
#[derive(Debug, Clone)]
pub struct Treeplex {
    simplexes: Vec<Simplex>,
    total_dim: usize,
    roots: Vec<usize>,
    bottom_up: Vec<usize>,
    top_down: Vec<usize>,
    owner: Vec<usize>,
}

impl Treeplex {
    /// Builds a treeplex from `(dimension, parent_sequence)` descriptions.
    /// Simplex blocks are laid out contiguously in description order.
    pub fn build(descriptions: &[(usize, Option<usize>)]) -> Result<Treeplex, TreeplexError> {
        if descriptions.is_empty() {
            return Err(TreeplexError::Empty);
        }
        let mut simplexes = Vec::with_capacity(descriptions.len());
        let mut start = 0usize;
        for (j, &(dim, parent)) in descriptions.iter().enumerate() {
            if dim == 0 {
                return Err(TreeplexError::ZeroDimension { simplex: j });
            }
            simplexes.push(Simplex {
                start,
                dim,
                parent,
                children: vec![Vec::new(); dim],
                depth: 0,
                branching: 0,
            });
            start += dim;
        }
        let total_dim = start;

        let mut owner = vec![0usize; total_dim];
        for (j, s) in simplexes.iter().enumerate() {
            for i in s.range() {
                owner[i] = j;
            }
        }
        for j in 0..simplexes.len() {
            if let Some(p) = simplexes[j].parent {
                if p >= total_dim {
                    return Err(TreeplexError::ParentOutOfRange { simplex: j, parent: p });
                }
                let pj = owner[p];
                let local = p - simplexes[pj].start;
                simplexes[pj].children[local].push(j);
            }
        }

        let roots: Vec<usize> = (0..simplexes.len())
            .filter(|&j| simplexes[j].parent.is_none())
            .collect();
        if roots.is_empty() {
            return Err(TreeplexError::CycleDetected);
        }

        // Level-order traversal from the roots assigns branching counts and
        // detects simplexes unreachable from any root (parent cycles).
        let mut top_down = Vec::with_capacity(simplexes.len());
        let mut queue: std::collections::VecDeque<usize> = roots.iter().copied().collect();
        let mut seen = vec![false; simplexes.len()];
        for &r in &roots {
            seen[r] = true;
        }
        while let Some(j) = queue.pop_front() {
            top_down.push(j);
            let b = simplexes[j].branching;
            let kids: Vec<usize> = simplexes[j].children.iter().flatten().copied().collect();
            for k in kids {
                if seen[k] {
                    return Err(TreeplexError::CycleDetected);
                }
                seen[k] = true;
                simplexes[k].branching = b + 1;
                queue.push_back(k);
            }
        }
        if top_down.len() != simplexes.len() {
            return Err(TreeplexError::CycleDetected);
        }
        let bottom_up: Vec<usize> = top_down.iter().rev().copied().collect();

        for &j in &bottom_up {
            let d = simplexes[j]
                .children
                .iter()
                .flatten()
                .map(|&k| simplexes[k].depth + 1)
                .max()
                .unwrap_or(0);
            simplexes[j].depth = d;
        }

        Ok(Treeplex {
            simplexes,
            total_dim,
            roots,
            bottom_up,
            top_down,
            owner,
        })
    }

    pub fn simplex_count(&self) -> usize {
        self.simplexes.len()
    }

    pub fn total_dimension(&self) -> usize {
        self.total_dim
    }

    pub fn simplex(&self, j: usize) -> &Simplex {
        &self.simplexes[j]
    }

    pub fn simplexes(&self) -> &[Simplex] {
        &self.simplexes
    }

    pub fn roots(&self) -> &[usize] {
        &self.roots
    }

    /// Traversal order listing every simplex after all of its children.
    pub fn bottom_up(&self) -> &[usize] {
        &self.bottom_up
    }

    /// Reverse of [`Treeplex::bottom_up`]: parents before children.
    pub fn top_down(&self) -> &[usize] {
        &self.top_down
    }

    /// Simplex owning a given sequence index.
    pub fn owner_of(&self, index: usize) -> usize {
        self.owner[index]
    }

    fn check_len(&self, len: usize) -> Result<(), TreeplexError> {
        if len != self.total_dim {
            Err(TreeplexError::DimensionMismatch { got: len, want: self.total_dim })
        } else {
            Ok(())
        }
    }

    /// Checks nonnegativity and that every simplex block sums to its parent
    /// sequence value (1 at the roots), to within [`SUM_TOL`].
    pub fn validate_sequence(&self, q: &SequenceVector) -> Result<(), TreeplexError> {
        self.check_len(q.values.len())?;
        for (i, &v) in q.values.iter().enumerate() {
            if !(v >= -SUM_TOL) {
                return Err(TreeplexError::InvalidSequence(format!(
                    "entry {i} is negative ({v})"
                )));
            }
        }
        for (j, s) in self.simplexes.iter().enumerate() {
            let pw = s.parent.map_or(1.0, |p| q.values[p]);
            let sum: f64 = q.values[s.range()].iter().sum();
            if (sum - pw).abs() > SUM_TOL {
                return Err(TreeplexError::InvalidSequence(format!(
                    "simplex {j} sums to {sum}, parent weight is {pw}"
                )));
            }
        }
        Ok(())
    }

    /// Checks nonnegativity and that every simplex block sums to 1.
    pub fn validate_behavioral(&self, b: &BehavioralVector) -> Result<(), TreeplexError> {
        self.check_len(b.values.len())?;
        for (i, &v) in b.values.iter().enumerate() {
            if !(v >= -SUM_TOL) {
                return Err(TreeplexError::InvalidBehavioral(format!(
                    "entry {i} is negative ({v})"
                )));
            }
        }
        for (j, s) in self.simplexes.iter().enumerate() {
            let sum: f64 = b.values[s.range()].iter().sum();
            if (sum - 1.0).abs() > SUM_TOL {
                return Err(TreeplexError::InvalidBehavioral(format!(
                    "simplex {j} sums to {sum}"
                )));
            }
        }
        Ok(())
    }
}

/// A point of the treeplex in sequence form: each entry is the product of
/// behavioral probabilities along the action sequence leading to it.
#[derive(Debug, Clone, PartialEq)]
pub struct SequenceVector {
    pub values: Vec<f64>,
}

impl SequenceVector {
    pub fn new(values: Vec<f64>) -> Self {
        SequenceVector { values }
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.values
    }
}

/// Per-simplex probability distributions over actions.
#[derive(Debug, Clone, PartialEq)]
pub struct BehavioralVector {
    pub values: Vec<f64>,
}

impl BehavioralVector {
    pub fn new(values: Vec<f64>) -> Self {
        BehavioralVector { values }
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.values
    }
}

/// Per-simplex ratios `q^j / q_{p_j}`. Simplexes with zero parent weight get
/// the uniform distribution so the result is always a valid behavioral vector.
pub fn sequence_to_behavioral(
    t: &Treeplex,
    q: &SequenceVector,
) -> Result<BehavioralVector, TreeplexError> {
    t.validate_sequence(q)?;
    let mut out = vec![0.0; t.total_dimension()];
    for s in t.simplexes() {
        let pw = s.parent.map_or(1.0, |p| q.values[p]);
        if pw > 0.0 {
            for i in s.range() {
                out[i] = q.values[i] / pw;
            }
        } else {
            let u = 1.0 / s.dim as f64;
            for i in s.range() {
                out[i] = u;
            }
        }
    }
    Ok(BehavioralVector::new(out))
}

/// Top-down product `q_i = q_{p_j} * b_i`. The result satisfies the sequence
/// invariants exactly by construction.
pub fn behavioral_to_sequence(
    t: &Treeplex,
    b: &BehavioralVector,
) -> Result<SequenceVector, TreeplexError> {
    t.validate_behavioral(b)?;
    Ok(behavioral_to_sequence_unchecked(t, &b.values))
}

pub(crate) fn behavioral_to_sequence_unchecked(t: &Treeplex, b: &[f64]) -> SequenceVector {
    let mut out = vec![0.0; t.total_dimension()];
    for &j in t.top_down() {
        let s = t.simplex(j);
        let pw = s.parent.map_or(1.0, |p| out[p]);
        for i in s.range() {
            out[i] = pw * b[i];
        }
    }
    SequenceVector::new(out)
}

/// The sequence-form image of the all-uniform behavioral strategy.
pub fn uniform_sequence(t: &Treeplex) -> SequenceVector {
    let mut b = vec![0.0; t.total_dimension()];
    for s in t.simplexes() {
        let u = 1.0 / s.dim as f64;
        for i in s.range() {
            b[i] = u;
        }
    }
    behavioral_to_sequence_unchecked(t, &b)
}

/// Maximum l1 norm over the treeplex. Each simplex contributes exactly its
/// parent weight to the norm, so the maximum is attained at a vertex and
/// satisfies `f(j) = 1 + max_i sum_{k in children(i)} f(k)` summed over roots.
pub fn max_l1_norm(t: &Treeplex) -> f64 {
    let mut f = vec![0.0f64; t.simplex_count()];
    for &j in t.bottom_up() {
        let s = t.simplex(j);
        let best = s
            .children
            .iter()
            .map(|kids| kids.iter().map(|&k| f[k]).sum::<f64>())
            .fold(0.0f64, f64::max);
        f[j] = 1.0 + best;
    }
    t.roots().iter().map(|&r| f[r]).sum()
}
