//! Count-data non-negative matrix factorization toolkit.
//!
//! Factorizes a matrix of counts `Y` as `Y ≈ W·Hᵀ` under three likelihood
//! models: Poisson (`PMF`), negative binomial (`NBMF`), and generalized
//! Poisson (`GPMF`, with row-wise or shared dispersion). The generalized
//! Poisson model captures overdispersion with heavier tails than the
//! negative binomial at matched mean and variance.
//!
//! Module layout:
//! - [`gpdist`]: generalized Poisson distribution kernel (pmf, moments,
//!   exact sampling, kurtosis comparison against the negative binomial);
//! - [`factor_core`]: matrix containers, initialization, convergence test,
//!   factor alignment, error metrics, CSV I/O;
//! - [`models`]: negative log-likelihoods and monotone multiplicative-update
//!   fitters for the three models;
//! - [`harness`]: synthetic-data benchmark runner with seeded replications
//!   and aggregate reports;
//! - [`cli`]: the `countfact` command-line front end.
//!
//! Numeric kernels are generic over the floating-point scalar via the
//! [`Scalar`] trait (implemented for `f32` and `f64`); concrete `f64`/`f32`
//! aliases for the main types live at the crate root.

pub mod cli;
pub mod error;
pub mod factor_core;
pub mod gpdist;
pub mod harness;
pub mod models;
mod scalar;
mod special;

pub use error::{Error, Result};
pub use scalar::Scalar;
pub use special::ln_gamma;

/// `f64` factor pair.
pub type FactorPair64 = factor_core::FactorPair<f64>;
/// `f32` factor pair.
pub type FactorPair32 = factor_core::FactorPair<f32>;
/// `f64` convergence specification.
pub type ConvergenceSpec64 = factor_core::ConvergenceSpec<f64>;
/// `f32` convergence specification.
pub type ConvergenceSpec32 = factor_core::ConvergenceSpec<f32>;
/// `f64` alignment result.
pub type AlignmentResult64 = factor_core::AlignmentResult<f64>;
/// `f64` mean-dispersion parameters.
pub type GPParamsMeanDisp64 = gpdist::GPParamsMeanDisp<f64>;
/// `f32` mean-dispersion parameters.
pub type GPParamsMeanDisp32 = gpdist::GPParamsMeanDisp<f32>;
/// `f64` natural parameters.
pub type GPParamsNatural64 = gpdist::GPParamsNatural<f64>;
/// `f32` natural parameters.
pub type GPParamsNatural32 = gpdist::GPParamsNatural<f32>;
/// `f64` negative binomial parameters.
pub type NBParams64 = gpdist::NBParams<f64>;
/// `f64` dispersion parameters.
pub type DispersionParams64 = models::DispersionParams<f64>;
/// `f32` dispersion parameters.
pub type DispersionParams32 = models::DispersionParams<f32>;
/// `f64` fit report.
pub type FitReport64 = models::FitReport<f64>;
/// `f64` NBMF configuration.
pub type NbmfConfig64 = models::NbmfConfig<f64>;
