//! Ground-truth and count-matrix generation for the synthetic protocol.

use super::{DispersionRegime, ExperimentConfig};
use crate::factor_core::{CountMatrix, FactorPair};
use crate::gpdist::{gp_sample, GPParamsMeanDisp};
use crate::models::DispersionParams;
use crate::{Error, Result};
use nalgebra::DMatrix;
use rand::Rng;
use rand_distr::{Distribution, Gamma};

/// The heterogeneous-regime dispersion levels, assigned in this order to
/// equal blocks of consecutive rows.
pub const HET_LEVELS: [f64; 5] = [0.0, 0.5, 1.0, 1.5, 2.0];

/// Per-row dispersion values of a regime for an `I`-row matrix.
pub fn regime_thetas(regime: DispersionRegime, i: usize) -> Result<Vec<f64>> {
    match regime {
        DispersionRegime::Constant(v) => Ok(vec![v; i]),
        DispersionRegime::Heterogeneous => {
            if i == 0 || i % HET_LEVELS.len() != 0 {
                return Err(Error::Config(format!(
                    "heterogeneous regime requires I divisible by {}, got {i}",
                    HET_LEVELS.len()
                )));
            }
            let block = i / HET_LEVELS.len();
            let mut out = Vec::with_capacity(i);
            for &level in &HET_LEVELS {
                out.extend(std::iter::repeat(level).take(block));
            }
            Ok(out)
        }
    }
}

/// Draws ground-truth factors (entries i.i.d. gamma with the configured
/// shape/rate) and the regime's dispersion vector. Draw order is fixed:
/// `W` column by column, then `H` column by column.
pub fn gen_truth<R: Rng + ?Sized>(
    cfg: &ExperimentConfig,
    rng: &mut R,
) -> Result<(FactorPair<f64>, DispersionParams<f64>)> {
    cfg.validate()?;
    let gamma = Gamma::new(cfg.truth_gamma.shape, 1.0 / cfg.truth_gamma.rate)
        .map_err(|e| Error::Config(format!("invalid gamma parameters: {e}")))?;
    let mut w = DMatrix::zeros(cfg.i, cfg.k);
    for kk in 0..cfg.k {
        let mut col = w.column_mut(kk);
        for ii in 0..cfg.i {
            col[ii] = gamma.sample(rng);
        }
    }
    let mut h = DMatrix::zeros(cfg.j, cfg.k);
    for kk in 0..cfg.k {
        let mut col = h.column_mut(kk);
        for jj in 0..cfg.j {
            col[jj] = gamma.sample(rng);
        }
    }
    let thetas = regime_thetas(cfg.dispersion_regime, cfg.i)?;
    Ok((FactorPair::new(w, h)?, DispersionParams::row_wise(thetas)?))
}

/// Samples a count matrix cell-wise from the generalized Poisson law with
/// mean `(W·Hᵀ)_ij` and the row's dispersion. Cells are drawn column by
/// column in a fixed order.
pub fn gen_counts<R: Rng + ?Sized>(
    truth: &FactorPair<f64>,
    d: &DispersionParams<f64>,
    rng: &mut R,
) -> Result<CountMatrix> {
    let s = truth.reconstruct();
    let (i, j) = (s.nrows(), s.ncols());
    let mut y = DMatrix::zeros(i, j);
    for jj in 0..j {
        let s_col = s.column(jj);
        let mut y_col = y.column_mut(jj);
        for ii in 0..i {
            let p = GPParamsMeanDisp::new(s_col[ii], d.theta_for_row(ii))?;
            y_col[ii] = gp_sample(&p, rng)?;
        }
    }
    CountMatrix::new(y)
}
