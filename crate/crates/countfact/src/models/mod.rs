//! Likelihood models and monotone multiplicative-update fitters.
//!
//! Three negative log-likelihoods over a reconstruction `S = W·Hᵀ`:
//! Poisson (`pmf`), negative binomial with fixed dispersion (`nbmf`), and
//! generalized Poisson with row-wise or shared dispersion (`gpmf`). Each
//! fitter is a majorization-minimization scheme whose objective is
//! non-increasing at every sweep.

mod fit;
mod likelihood;
mod updates;

pub use fit::{fit_gpmf, fit_nbmf, fit_pmf};
pub use likelihood::{grad_nll_gpmf, nll_gpmf, nll_nbmf, nll_pmf};
pub use updates::{
    solve_dispersion_quadratic, update_h_gpmf, update_h_nbmf, update_h_pmf,
    update_shared_gpmf, update_theta_rowwise, update_w_gpmf, update_w_nbmf, update_w_pmf,
    DISPERSION_FLOOR,
};

use crate::factor_core::FactorPair;
use crate::{Error, Result, Scalar};
use nalgebra::DVector;

/// Dispersion parameters of the generalized Poisson model: one `θ_i ≥ 0`
/// per data row, or a single shared `θ ≥ 0`.
#[derive(Clone, Debug, PartialEq)]
pub enum DispersionParams<T: Scalar> {
    RowWise(DVector<T>),
    Shared(T),
}

impl<T: Scalar> DispersionParams<T> {
    pub fn row_wise(values: Vec<T>) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::Domain("row-wise dispersion needs at least one row".into()));
        }
        for &v in &values {
            Self::check(v)?;
        }
        Ok(Self::RowWise(DVector::from_vec(values)))
    }

    pub fn shared(value: T) -> Result<Self> {
        Self::check(value)?;
        Ok(Self::Shared(value))
    }

    fn check(v: T) -> Result<()> {
        if !(v.is_finite() && v >= T::zero()) {
            return Err(Error::Domain(format!("dispersion must be finite and >= 0, got {v}")));
        }
        Ok(())
    }

    /// Dispersion applying to row `i`.
    pub fn theta_for_row(&self, i: usize) -> T {
        match self {
            Self::RowWise(v) => v[i],
            Self::Shared(t) => *t,
        }
    }

    /// The stored values: length `I` if row-wise, length 1 if shared.
    pub fn values(&self) -> Vec<T> {
        match self {
            Self::RowWise(v) => v.iter().copied().collect(),
            Self::Shared(t) => vec![*t],
        }
    }

    pub fn is_shared(&self) -> bool {
        matches!(self, Self::Shared(_))
    }

    /// Checks compatibility with a data matrix of `i` rows.
    pub(crate) fn expect_rows(&self, i: usize) -> Result<()> {
        match self {
            Self::RowWise(v) if v.len() != i => Err(Error::ShapeMismatch(format!(
                "dispersion has {} rows but data has {i}",
                v.len()
            ))),
            _ => Ok(()),
        }
    }
}

/// Fixed dispersion of the negative binomial model.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct NbmfConfig<T: Scalar> {
    alpha: T,
}

impl<T: Scalar> NbmfConfig<T> {
    pub fn new(alpha: T) -> Result<Self> {
        if !(alpha.is_finite() && alpha > T::zero()) {
            return Err(Error::Domain(format!("alpha must be finite and > 0, got {alpha}")));
        }
        Ok(Self { alpha })
    }

    pub fn alpha(&self) -> T {
        self.alpha
    }
}

/// Result of a fit: final factors, dispersion (generalized Poisson only),
/// the objective trace, and convergence metadata.
///
/// `nll_trace[0]` is the objective of the initial factors; each sweep
/// appends one value, so the trace holds `iterations + 1` entries and is
/// non-increasing up to a `1e-8·(1+|nll|)` slack per step.
#[derive(Clone, Debug)]
pub struct FitReport<T: Scalar> {
    pub factors: FactorPair<T>,
    pub dispersion: Option<DispersionParams<T>>,
    pub nll_trace: Vec<T>,
    pub iterations: usize,
    pub converged: bool,
}

impl<T: Scalar> FitReport<T> {
    pub fn final_nll(&self) -> T {
        *self.nll_trace.last().expect("trace always holds the initial objective")
    }
}
