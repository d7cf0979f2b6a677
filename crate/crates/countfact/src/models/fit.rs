//! Full fitting loops: repeated update sweeps with convergence tracking.

use super::likelihood::{
    ensure_finite, ln_factorial_sum, nbmf_constant, nll_gpmf_given_s, nll_nbmf_given_s,
    nll_pmf_given_s,
};
use super::updates::{
    gpmf_weight_into, mul_into, nbmf_denom_weight_into, pmf_weight_into, scale_h_gpmf,
    scale_ratio, scale_w_gpmf, spread_vector, tr_mul_into, update_theta_rowwise_into,
    update_theta_shared_into, weighted_column_sums, zeros_per_row,
};
use super::{DispersionParams, FitReport, NbmfConfig};
use crate::factor_core::{
    column_sums, converged, reconstruct_into, ConvergenceSpec, CountMatrix, FactorPair,
};
use crate::{Error, Result, Scalar};
use nalgebra::DMatrix;

fn check_fit_inputs<T: Scalar>(y: &CountMatrix, init: &FactorPair<T>) -> Result<()> {
    super::likelihood::check_shapes(y, init)?;
    let positive = |m: &DMatrix<T>| m.iter().all(|&v| v.is_finite() && v > T::zero());
    if !positive(&init.w) || !positive(&init.h) {
        return Err(Error::InvalidInput(
            "initial factors must be strictly positive and finite".into(),
        ));
    }
    Ok(())
}

/// Fits the generalized Poisson model by alternating multiplicative updates
/// of `W`, `H` and the dispersion (row-wise or shared, per `d0`), recording
/// the objective after every full sweep.
pub fn fit_gpmf<T: Scalar>(
    y: &CountMatrix,
    init: FactorPair<T>,
    d0: DispersionParams<T>,
    spec: &ConvergenceSpec<T>,
) -> Result<FitReport<T>> {
    check_fit_inputs(y, &init)?;
    d0.expect_rows(y.nrows())?;
    let (i, j, k) = (y.nrows(), y.ncols(), init.k());

    let ln_factorials = ln_factorial_sum(y);
    let n0 = zeros_per_row(y);
    let n0_total: usize = n0.iter().sum();

    let FactorPair { mut w, mut h } = init;
    let mut d = d0;
    let mut s = DMatrix::zeros(i, j);
    let mut m = DMatrix::zeros(i, j);
    let mut numer_w = DMatrix::zeros(i, k);
    let mut numer_h = DMatrix::zeros(j, k);

    reconstruct_into(&w, &h, &mut s);
    let mut prev = ensure_finite(nll_gpmf_given_s(y, &s, &d, ln_factorials), 0)?;
    let mut trace = vec![prev];
    let mut iterations = spec.max_iterations;
    let mut did_converge = false;

    for it in 1..=spec.max_iterations {
        let spread = spread_vector(&d, i);

        gpmf_weight_into(y, &s, &spread, &mut m);
        mul_into(&m, &h, &mut numer_w);
        scale_w_gpmf(&mut w, &numer_w, &column_sums(&h), &spread)?;
        reconstruct_into(&w, &h, &mut s);

        gpmf_weight_into(y, &s, &spread, &mut m);
        tr_mul_into(&m, &w, &mut numer_h);
        scale_h_gpmf(&mut h, &numer_h, &weighted_column_sums(&w, &spread))?;
        reconstruct_into(&w, &h, &mut s);

        match &mut d {
            DispersionParams::RowWise(theta) => {
                update_theta_rowwise_into(y, &s, &n0, theta.as_mut_slice());
            }
            DispersionParams::Shared(theta) => {
                update_theta_shared_into(y, &s, n0_total, theta);
            }
        }

        let nll = ensure_finite(nll_gpmf_given_s(y, &s, &d, ln_factorials), it)?;
        trace.push(nll);
        if converged(prev, nll, spec) {
            iterations = it;
            did_converge = true;
            break;
        }
        prev = nll;
    }

    Ok(FitReport {
        factors: FactorPair::new(w, h)?,
        dispersion: Some(d),
        nll_trace: trace,
        iterations,
        converged: did_converge,
    })
}

/// Fits the Poisson model with the classic multiplicative KL updates.
pub fn fit_pmf<T: Scalar>(
    y: &CountMatrix,
    init: FactorPair<T>,
    spec: &ConvergenceSpec<T>,
) -> Result<FitReport<T>> {
    check_fit_inputs(y, &init)?;
    let (i, j, k) = (y.nrows(), y.ncols(), init.k());

    let ln_factorials = ln_factorial_sum(y);
    let ones = vec![T::one(); i];

    let FactorPair { mut w, mut h } = init;
    let mut s = DMatrix::zeros(i, j);
    let mut m = DMatrix::zeros(i, j);
    let mut numer_w = DMatrix::zeros(i, k);
    let mut numer_h = DMatrix::zeros(j, k);

    reconstruct_into(&w, &h, &mut s);
    let mut prev = ensure_finite(nll_pmf_given_s(y, &s, ln_factorials), 0)?;
    let mut trace = vec![prev];
    let mut iterations = spec.max_iterations;
    let mut did_converge = false;

    for it in 1..=spec.max_iterations {
        pmf_weight_into(y, &s, &mut m);
        mul_into(&m, &h, &mut numer_w);
        scale_w_gpmf(&mut w, &numer_w, &column_sums(&h), &ones)?;
        reconstruct_into(&w, &h, &mut s);

        pmf_weight_into(y, &s, &mut m);
        tr_mul_into(&m, &w, &mut numer_h);
        scale_h_gpmf(&mut h, &numer_h, &column_sums(&w))?;
        reconstruct_into(&w, &h, &mut s);

        let nll = ensure_finite(nll_pmf_given_s(y, &s, ln_factorials), it)?;
        trace.push(nll);
        if converged(prev, nll, spec) {
            iterations = it;
            did_converge = true;
            break;
        }
        prev = nll;
    }

    Ok(FitReport {
        factors: FactorPair::new(w, h)?,
        dispersion: None,
        nll_trace: trace,
        iterations,
        converged: did_converge,
    })
}

/// Fits the negative binomial model (fixed dispersion `α`) with its
/// ratio-of-weighted-sums multiplicative updates.
pub fn fit_nbmf<T: Scalar>(
    y: &CountMatrix,
    init: FactorPair<T>,
    c: &NbmfConfig<T>,
    spec: &ConvergenceSpec<T>,
) -> Result<FitReport<T>> {
    check_fit_inputs(y, &init)?;
    let (i, j, k) = (y.nrows(), y.ncols(), init.k());
    let alpha = c.alpha();

    let constant = nbmf_constant(y, alpha);

    let FactorPair { mut w, mut h } = init;
    let mut s = DMatrix::zeros(i, j);
    let mut a = DMatrix::zeros(i, j);
    let mut b = DMatrix::zeros(i, j);
    let mut numer_w = DMatrix::zeros(i, k);
    let mut denom_w = DMatrix::zeros(i, k);
    let mut numer_h = DMatrix::zeros(j, k);
    let mut denom_h = DMatrix::zeros(j, k);

    reconstruct_into(&w, &h, &mut s);
    let mut prev = ensure_finite(nll_nbmf_given_s(y, &s, alpha, constant), 0)?;
    let mut trace = vec![prev];
    let mut iterations = spec.max_iterations;
    let mut did_converge = false;

    for it in 1..=spec.max_iterations {
        pmf_weight_into(y, &s, &mut a);
        nbmf_denom_weight_into(y, &s, alpha, &mut b);
        mul_into(&a, &h, &mut numer_w);
        mul_into(&b, &h, &mut denom_w);
        scale_ratio(&mut w, &numer_w, &denom_w)?;
        reconstruct_into(&w, &h, &mut s);

        pmf_weight_into(y, &s, &mut a);
        nbmf_denom_weight_into(y, &s, alpha, &mut b);
        tr_mul_into(&a, &w, &mut numer_h);
        tr_mul_into(&b, &w, &mut denom_h);
        scale_ratio(&mut h, &numer_h, &denom_h)?;
        reconstruct_into(&w, &h, &mut s);

        let nll = ensure_finite(nll_nbmf_given_s(y, &s, alpha, constant), it)?;
        trace.push(nll);
        if converged(prev, nll, spec) {
            iterations = it;
            did_converge = true;
            break;
        }
        prev = nll;
    }

    Ok(FitReport {
        factors: FactorPair::new(w, h)?,
        dispersion: None,
        nll_trace: trace,
        iterations,
        converged: did_converge,
    })
}
