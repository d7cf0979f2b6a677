//! Negative log-likelihood evaluators and analytic gradients.

use super::{DispersionParams, NbmfConfig};
use crate::factor_core::{CountMatrix, FactorPair};
use crate::special::ln_gamma;
use crate::{Error, Result, Scalar};
use nalgebra::{DMatrix, DVector};

/// Floor applied to reconstruction values inside logs and divisions.
pub(crate) const S_FLOOR: f64 = 1e-10;

pub(crate) fn s_floor<T: Scalar>() -> T {
    T::cast_from(S_FLOOR)
}

/// Sum of `ln Γ(y_ij + 1)` over all cells, a per-dataset constant of the
/// Poisson and generalized Poisson objectives.
pub(crate) fn ln_factorial_sum<T: Scalar>(y: &CountMatrix) -> T {
    y.data()
        .iter()
        .filter(|&&v| v > 1)
        .map(|&v| ln_gamma(T::cast_u64(v) + T::one()))
        .sum()
}

/// Generalized Poisson negative log-likelihood of counts `Y` under the
/// reconstruction of `f` with dispersion `d`:
/// `Σ_ij [-log(s/(1+θ_i)) - (y-1)·log((s+θ_i y)/(1+θ_i)) + (s+θ_i y)/(1+θ_i) + log(y!)]`.
pub fn nll_gpmf<T: Scalar>(
    y: &CountMatrix,
    f: &FactorPair<T>,
    d: &DispersionParams<T>,
) -> Result<T> {
    check_shapes(y, f)?;
    d.expect_rows(y.nrows())?;
    let s = f.reconstruct();
    let base = ln_factorial_sum(y);
    let nll = nll_gpmf_given_s(y, &s, d, base);
    ensure_finite(nll, 0)
}

/// The iteration-time kernel: objective given a precomputed reconstruction
/// and the `Σ ln Γ(y+1)` constant.
pub(crate) fn nll_gpmf_given_s<T: Scalar>(
    y: &CountMatrix,
    s: &DMatrix<T>,
    d: &DispersionParams<T>,
    ln_factorials: T,
) -> T {
    let (i, j) = (y.nrows(), y.ncols());
    let floor = s_floor::<T>();
    let one = T::one();
    // Per-row caches of 1+θ and ln(1+θ).
    let spread: Vec<T> = (0..i).map(|r| one + d.theta_for_row(r)).collect();
    let ln_spread: Vec<T> = spread.iter().map(|&v| v.ln()).collect();
    let mut acc = ln_factorials;
    for jj in 0..j {
        let s_col = s.column(jj);
        for ii in 0..i {
            let yv = y.get(ii, jj);
            let sp = spread[ii];
            let sv = s_col[ii].max(floor);
            if yv == 0 {
                acc += sv / sp;
            } else {
                let theta = sp - one;
                let yt = T::cast_u64(yv);
                let shifted = sv + theta * yt;
                acc += -(sv.ln() - ln_spread[ii])
                    - (yt - one) * (shifted.ln() - ln_spread[ii])
                    + shifted / sp;
            }
        }
    }
    acc
}

/// Poisson negative log-likelihood `Σ_ij [s - y·log s + log(y!)]`.
pub fn nll_pmf<T: Scalar>(y: &CountMatrix, f: &FactorPair<T>) -> Result<T> {
    check_shapes(y, f)?;
    let s = f.reconstruct();
    let nll = nll_pmf_given_s(y, &s, ln_factorial_sum(y));
    ensure_finite(nll, 0)
}

pub(crate) fn nll_pmf_given_s<T: Scalar>(y: &CountMatrix, s: &DMatrix<T>, ln_factorials: T) -> T {
    let floor = s_floor::<T>();
    let mut acc = ln_factorials;
    for jj in 0..y.ncols() {
        let s_col = s.column(jj);
        for ii in 0..y.nrows() {
            let sv = s_col[ii].max(floor);
            let yv = y.get(ii, jj);
            acc += sv;
            if yv > 0 {
                acc -= T::cast_u64(yv) * sv.ln();
            }
        }
    }
    acc
}

/// Negative binomial negative log-likelihood with dispersion `α` and
/// probability `s/(s+α)` per cell.
pub fn nll_nbmf<T: Scalar>(y: &CountMatrix, f: &FactorPair<T>, c: &NbmfConfig<T>) -> Result<T> {
    check_shapes(y, f)?;
    let s = f.reconstruct();
    let nll = nll_nbmf_given_s(y, &s, c.alpha(), nbmf_constant(y, c.alpha()));
    ensure_finite(nll, 0)
}

/// The `Σ [ln Γ(y+1) + ln Γ(α) - ln Γ(y+α) - α ln α]` constant of the
/// negative binomial objective.
pub(crate) fn nbmf_constant<T: Scalar>(y: &CountMatrix, alpha: T) -> T {
    let ln_gamma_alpha = ln_gamma(alpha);
    let ln_alpha = alpha.ln();
    y.data()
        .iter()
        .map(|&v| {
            let yt = T::cast_u64(v);
            ln_gamma(yt + T::one()) + ln_gamma_alpha - ln_gamma(yt + alpha) - alpha * ln_alpha
        })
        .sum()
}

pub(crate) fn nll_nbmf_given_s<T: Scalar>(
    y: &CountMatrix,
    s: &DMatrix<T>,
    alpha: T,
    constant: T,
) -> T {
    let floor = s_floor::<T>();
    let mut acc = constant;
    for jj in 0..y.ncols() {
        let s_col = s.column(jj);
        for ii in 0..y.nrows() {
            let sv = s_col[ii].max(floor);
            let yv = y.get(ii, jj);
            let yt = T::cast_u64(yv);
            acc += (yt + alpha) * (sv + alpha).ln();
            if yv > 0 {
                acc -= yt * sv.ln();
            }
        }
    }
    acc
}

/// Analytic gradient of [`nll_gpmf`] with respect to `W`, `H`, and the
/// dispersion values (per row for row-wise mode, a single total for shared
/// mode).
pub fn grad_nll_gpmf<T: Scalar>(
    y: &CountMatrix,
    f: &FactorPair<T>,
    d: &DispersionParams<T>,
) -> Result<(DMatrix<T>, DMatrix<T>, DVector<T>)> {
    check_shapes(y, f)?;
    d.expect_rows(y.nrows())?;
    let (i, j) = (y.nrows(), y.ncols());
    let s = f.reconstruct();
    let one = T::one();
    // g_ij = ∂nll/∂s_ij = -1/s - (y-1)/(s+θy) + 1/(1+θ)
    let mut g = DMatrix::zeros(i, j);
    let mut d_theta_rows = DVector::zeros(i);
    for jj in 0..j {
        let s_col = s.column(jj);
        let mut g_col = g.column_mut(jj);
        for ii in 0..i {
            let theta = d.theta_for_row(ii);
            let sp = one + theta;
            let sv = s_col[ii];
            let yt = T::cast_u64(y.get(ii, jj));
            let shifted = sv + theta * yt;
            g_col[ii] = -one / sv - (yt - one) / shifted + one / sp;
            // ∂nll/∂θ per cell: y/(1+θ) - y(y-1)/(s+θy) + (y-s)/(1+θ)²
            d_theta_rows[ii] +=
                yt / sp - yt * (yt - one) / shifted + (yt - sv) / (sp * sp);
        }
    }
    let dw = &g * &f.h;
    let dh = g.transpose() * &f.w;
    let d_theta = match d {
        DispersionParams::RowWise(_) => d_theta_rows,
        DispersionParams::Shared(_) => DVector::from_element(1, d_theta_rows.sum()),
    };
    Ok((dw, dh, d_theta))
}

pub(crate) fn check_shapes<T: Scalar>(y: &CountMatrix, f: &FactorPair<T>) -> Result<()> {
    if f.w.nrows() != y.nrows() || f.h.nrows() != y.ncols() {
        return Err(Error::ShapeMismatch(format!(
            "factors reconstruct {}x{} but data is {}x{}",
            f.w.nrows(),
            f.h.nrows(),
            y.nrows(),
            y.ncols()
        )));
    }
    Ok(())
}

pub(crate) fn ensure_finite<T: Scalar>(nll: T, at_iteration: usize) -> Result<T> {
    if nll.is_finite() {
        Ok(nll)
    } else {
        Err(Error::NonFiniteLikelihood { at_iteration })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gpdist::{gp_log_pmf, to_natural, GPParamsMeanDisp};
    use approx::assert_relative_eq;
    use nalgebra::DMatrix;

    fn single_cell(y: u64, s: f64) -> (CountMatrix, FactorPair<f64>) {
        let counts = CountMatrix::from_rows(&[vec![y]]).unwrap();
        let f = FactorPair::new(
            DMatrix::from_element(1, 1, s),
            DMatrix::from_element(1, 1, 1.0),
        )
        .unwrap();
        (counts, f)
    }

    #[test]
    fn gpmf_single_cell_zero_count() {
        let (y, f) = single_cell(0, 2.0);
        let d = DispersionParams::row_wise(vec![1.0]).unwrap();
        assert_relative_eq!(nll_gpmf(&y, &f, &d).unwrap(), 1.0, max_relative = 1e-14);
    }

    #[test]
    fn gpmf_single_cell_poisson_case() {
        // Poisson oracle at y=3, s=3: 3 - ln(27/6) = 1.4959226032237258.
        let (y, f) = single_cell(3, 3.0);
        let d = DispersionParams::row_wise(vec![0.0]).unwrap();
        assert_relative_eq!(
            nll_gpmf(&y, &f, &d).unwrap(),
            1.4959226032237258,
            max_relative = 1e-12
        );
    }

    #[test]
    fn gpmf_matches_summed_log_pmf() {
        use rand::Rng;
        use rand::SeedableRng;
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(17);
        for _ in 0..20 {
            let i = rng.random_range(1..=6);
            let j = rng.random_range(1..=6);
            let k = rng.random_range(1..=3);
            let w = DMatrix::from_fn(i, k, |_, _| rng.random::<f64>() + 0.2);
            let h = DMatrix::from_fn(j, k, |_, _| rng.random::<f64>() + 0.2);
            let f = FactorPair::new(w, h).unwrap();
            let counts = CountMatrix::new(DMatrix::from_fn(i, j, |_, _| rng.random_range(0..8)))
                .unwrap();
            let thetas: Vec<f64> = (0..i).map(|_| rng.random::<f64>() * 2.0).collect();
            let d = DispersionParams::row_wise(thetas.clone()).unwrap();
            let s = f.reconstruct();
            let mut oracle = 0.0;
            for ii in 0..i {
                for jj in 0..j {
                    let p = to_natural(&GPParamsMeanDisp::new(s[(ii, jj)], thetas[ii]).unwrap());
                    oracle -= gp_log_pmf(counts.get(ii, jj), &p);
                }
            }
            assert_relative_eq!(nll_gpmf(&counts, &f, &d).unwrap(), oracle, max_relative = 1e-8);
        }
    }

    #[test]
    fn gpmf_reduces_to_pmf_at_zero_dispersion() {
        let counts = CountMatrix::from_rows(&[vec![1, 0, 4], vec![2, 5, 0]]).unwrap();
        let f = FactorPair::new(
            DMatrix::from_row_slice(2, 2, &[0.5, 1.2, 2.0, 0.3]),
            DMatrix::from_row_slice(3, 2, &[1.0, 0.4, 0.7, 1.5, 0.2, 0.9]),
        )
        .unwrap();
        let d = DispersionParams::row_wise(vec![0.0, 0.0]).unwrap();
        assert_relative_eq!(
            nll_gpmf(&counts, &f, &d).unwrap(),
            nll_pmf(&counts, &f).unwrap(),
            max_relative = 1e-10
        );
        let shared = DispersionParams::shared(0.0).unwrap();
        assert_relative_eq!(
            nll_gpmf(&counts, &f, &shared).unwrap(),
            nll_pmf(&counts, &f).unwrap(),
            max_relative = 1e-10
        );
    }

    #[test]
    fn pmf_single_cell_zero_count() {
        let (y, f) = single_cell(0, 2.0);
        assert_relative_eq!(nll_pmf(&y, &f).unwrap(), 2.0, max_relative = 1e-14);
    }

    #[test]
    fn nbmf_single_cell_zero_count() {
        let (y, f) = single_cell(0, 2.0);
        let c = NbmfConfig::new(5.0).unwrap();
        assert_relative_eq!(
            nll_nbmf(&y, &f, &c).unwrap(),
            -5.0 * (5.0_f64 / 7.0).ln(),
            max_relative = 1e-12
        );
    }

    #[test]
    fn pmf_constant_zero_matrix_tends_to_floor_sum() {
        let counts = CountMatrix::from_rows(&[vec![0, 0], vec![0, 0]]).unwrap();
        let f = FactorPair::new(
            DMatrix::from_element(2, 1, 1e-12),
            DMatrix::from_element(2, 1, 1e-12),
        )
        .unwrap();
        // Reconstruction is below the floor everywhere, so each term is the floor.
        assert_relative_eq!(nll_pmf(&counts, &f).unwrap(), 4.0 * 1e-10, max_relative = 1e-10);
    }
}
