//! Shared factorization substrate: matrix containers, reconstruction,
//! initialization, convergence test, factor alignment, and error metrics.

mod assignment;
mod init;
pub mod io;

pub use init::{init_nndsvd, init_random, POSITIVITY_FLOOR};

use crate::{Error, Result, Scalar};
use nalgebra::{DMatrix, DVector};

/// Norm threshold below which a factor column counts as degenerate.
const DEGENERATE_NORM: f64 = 1e-12;

/// An `I×J` grid of non-negative integer counts.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CountMatrix {
    data: DMatrix<u64>,
}

impl CountMatrix {
    pub fn new(data: DMatrix<u64>) -> Result<Self> {
        if data.nrows() == 0 || data.ncols() == 0 {
            return Err(Error::InvalidInput("count matrix must be at least 1x1".into()));
        }
        Ok(Self { data })
    }

    /// Builds from row-major nested vectors; rows must all share one length.
    pub fn from_rows(rows: &[Vec<u64>]) -> Result<Self> {
        if rows.is_empty() || rows[0].is_empty() {
            return Err(Error::InvalidInput("count matrix must be at least 1x1".into()));
        }
        let ncols = rows[0].len();
        if let Some(bad) = rows.iter().position(|r| r.len() != ncols) {
            return Err(Error::InvalidInput(format!(
                "ragged rows: row 0 has {ncols} entries, row {bad} has {}",
                rows[bad].len()
            )));
        }
        let data = DMatrix::from_fn(rows.len(), ncols, |i, j| rows[i][j]);
        Ok(Self { data })
    }

    pub fn nrows(&self) -> usize {
        self.data.nrows()
    }

    pub fn ncols(&self) -> usize {
        self.data.ncols()
    }

    pub fn get(&self, i: usize, j: usize) -> u64 {
        self.data[(i, j)]
    }

    pub fn data(&self) -> &DMatrix<u64> {
        &self.data
    }

    /// Casts the counts to a real matrix.
    pub fn to_real<T: Scalar>(&self) -> DMatrix<T> {
        self.data.map(T::cast_u64)
    }

    /// Arithmetic mean of all entries.
    pub fn mean(&self) -> f64 {
        let sum: f64 = self.data.iter().map(|&v| v as f64).sum();
        sum / (self.nrows() * self.ncols()) as f64
    }
}

/// Non-negative basis `W` (`I×K`) and coefficients `H` (`J×K`) with implied
/// reconstruction `S = W·Hᵀ`. Entries stay strictly positive from
/// initialization onward (multiplicative updates preserve positivity).
#[derive(Clone, Debug, PartialEq)]
pub struct FactorPair<T: Scalar> {
    pub w: DMatrix<T>,
    pub h: DMatrix<T>,
}

impl<T: Scalar> FactorPair<T> {
    pub fn new(w: DMatrix<T>, h: DMatrix<T>) -> Result<Self> {
        if w.ncols() != h.ncols() {
            return Err(Error::ShapeMismatch(format!(
                "W has rank {} but H has rank {}",
                w.ncols(),
                h.ncols()
            )));
        }
        if w.ncols() == 0 || w.nrows() == 0 || h.nrows() == 0 {
            return Err(Error::InvalidInput("factor matrices must be at least 1x1".into()));
        }
        Ok(Self { w, h })
    }

    /// Factorization rank `K`.
    pub fn k(&self) -> usize {
        self.w.ncols()
    }

    /// Reconstruction `S = W·Hᵀ`.
    pub fn reconstruct(&self) -> DMatrix<T> {
        reconstruct(self)
    }
}

/// Computes the reconstruction `S = W·Hᵀ` elementwise,
/// `s_ij = Σ_k w_ik·h_jk`.
pub fn reconstruct<T: Scalar>(f: &FactorPair<T>) -> DMatrix<T> {
    let mut s = DMatrix::zeros(f.w.nrows(), f.h.nrows());
    reconstruct_into(&f.w, &f.h, &mut s);
    s
}

/// Writes `W·Hᵀ` into a preallocated buffer (the fitters' hot path).
pub(crate) fn reconstruct_into<T: Scalar>(
    w: &DMatrix<T>,
    h: &DMatrix<T>,
    s: &mut DMatrix<T>,
) {
    let (i, k) = (w.nrows(), w.ncols());
    let j = h.nrows();
    debug_assert_eq!(s.nrows(), i);
    debug_assert_eq!(s.ncols(), j);
    s.fill(T::zero());
    for jj in 0..j {
        let mut s_col = s.column_mut(jj);
        for kk in 0..k {
            let scale = h[(jj, kk)];
            let w_col = w.column(kk);
            for ii in 0..i {
                s_col[ii] += scale * w_col[ii];
            }
        }
    }
}

/// Stopping rule for iterative fitters: tolerance `ε` on the relative
/// log-likelihood change plus an iteration cap.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ConvergenceSpec<T: Scalar> {
    pub tolerance: T,
    pub max_iterations: usize,
}

impl<T: Scalar> ConvergenceSpec<T> {
    pub fn new(tolerance: T, max_iterations: usize) -> Result<Self> {
        if !(tolerance.is_finite() && tolerance > T::zero()) {
            return Err(Error::Domain(format!("tolerance must be > 0, got {tolerance}")));
        }
        if max_iterations == 0 {
            return Err(Error::Domain("max_iterations must be >= 1".into()));
        }
        Ok(Self { tolerance, max_iterations })
    }
}

impl<T: Scalar> Default for ConvergenceSpec<T> {
    fn default() -> Self {
        Self {
            tolerance: T::cast_from(1e-6),
            max_iterations: 10_000,
        }
    }
}

/// The stopping criterion `|ll_new - ll_prev| / (|ll_new| + 1) < ε`.
pub fn converged<T: Scalar>(ll_prev: T, ll_new: T, spec: &ConvergenceSpec<T>) -> bool {
    (ll_new - ll_prev).abs() / (ll_new.abs() + T::one()) < spec.tolerance
}

/// Mean over all elements of squared differences.
pub fn mse<T: Scalar>(est: &DMatrix<T>, truth: &DMatrix<T>) -> Result<T> {
    if est.shape() != truth.shape() {
        return Err(Error::ShapeMismatch(format!(
            "{}x{} vs {}x{}",
            est.nrows(),
            est.ncols(),
            truth.nrows(),
            truth.ncols()
        )));
    }
    let mut acc = T::zero();
    for (a, b) in est.iter().zip(truth.iter()) {
        let d = *a - *b;
        acc += d * d;
    }
    Ok(acc / T::cast_u64((est.nrows() * est.ncols()) as u64))
}

/// Outcome of aligning an estimated factor pair to a reference: the column
/// permutation applied and the normalized, permuted estimate.
#[derive(Clone, Debug)]
pub struct AlignmentResult<T: Scalar> {
    /// `permutation[b]` is the estimate column placed at position `b`.
    pub permutation: Vec<usize>,
    /// The estimate with unit-norm `H` columns (norms moved into `W`) and
    /// columns reordered by `permutation`.
    pub normalized_pair: FactorPair<T>,
}

/// Rescales each `H` column to unit Euclidean norm, multiplying the paired
/// `W` column by the norm so the reconstruction is unchanged.
pub fn normalize_columns<T: Scalar>(f: &FactorPair<T>) -> Result<FactorPair<T>> {
    let mut w = f.w.clone();
    let mut h = f.h.clone();
    for k in 0..f.k() {
        let norm: T = h.column(k).iter().map(|&v| v * v).sum::<T>().sqrt();
        if norm.as_f64() < DEGENERATE_NORM {
            return Err(Error::DegenerateColumn(k));
        }
        let inv = T::one() / norm;
        h.column_mut(k).iter_mut().for_each(|v| *v *= inv);
        w.column_mut(k).iter_mut().for_each(|v| *v *= norm);
    }
    FactorPair::new(w, h)
}

/// Aligns an estimated factor pair to ground truth.
///
/// Both pairs are normalized (unit-norm `H` columns, `W` rescaled), then the
/// estimate's columns are permuted to minimize the total squared error
/// between normalized `H` columns. The assignment is solved exactly, with a
/// lowest-index tie-break for small ranks.
pub fn align_factors<T: Scalar>(
    est: &FactorPair<T>,
    truth: &FactorPair<T>,
) -> Result<AlignmentResult<T>> {
    if est.k() != truth.k() {
        return Err(Error::ShapeMismatch(format!(
            "rank {} vs rank {}",
            est.k(),
            truth.k()
        )));
    }
    if est.h.nrows() != truth.h.nrows() || est.w.nrows() != truth.w.nrows() {
        return Err(Error::ShapeMismatch("factor dimensions differ".into()));
    }
    let est_n = normalize_columns(est)?;
    let truth_n = normalize_columns(truth)?;
    let k = est.k();
    let mut cost = vec![vec![0.0f64; k]; k];
    for (a, row) in cost.iter_mut().enumerate() {
        for (b, c) in row.iter_mut().enumerate() {
            let mut acc = 0.0f64;
            for (ea, tb) in est_n.h.column(a).iter().zip(truth_n.h.column(b).iter()) {
                let d = ea.as_f64() - tb.as_f64();
                acc += d * d;
            }
            *c = acc;
        }
    }
    let permutation = assignment::solve(&cost);
    let mut w = DMatrix::zeros(est.w.nrows(), k);
    let mut h = DMatrix::zeros(est.h.nrows(), k);
    for b in 0..k {
        w.column_mut(b).copy_from(&est_n.w.column(permutation[b]));
        h.column_mut(b).copy_from(&est_n.h.column(permutation[b]));
    }
    Ok(AlignmentResult {
        permutation,
        normalized_pair: FactorPair::new(w, h)?,
    })
}

/// Column sums of a matrix as a `K`-vector.
pub(crate) fn column_sums<T: Scalar>(m: &DMatrix<T>) -> DVector<T> {
    DVector::from_iterator(m.ncols(), (0..m.ncols()).map(|k| m.column(k).iter().copied().sum()))
}
