//! Multiplicative update rules.
//!
//! All rules have the form `new = old × (numerator / denominator)` with
//! non-negative terms, so positivity is preserved; each is derived from an
//! auxiliary upper bound of its objective, so a full sweep never increases
//! the negative log-likelihood.

use super::likelihood::s_floor;
use super::DispersionParams;
use crate::factor_core::{column_sums, reconstruct_into, CountMatrix, FactorPair};
use crate::{Error, Result, Scalar};
use nalgebra::{DMatrix, DVector};

/// Smallest dispersion value the θ update may return; keeps the Poisson
/// limit reachable numerically while the auxiliary bound stays finite.
pub const DISPERSION_FLOOR: f64 = 1e-8;

/// Denominators below this abort the update instead of dividing.
const DENOM_FLOOR: f64 = 1e-300;

/// Floor applied to updated factor entries; a zero numerator (for example an
/// all-zero data row) would otherwise pin the entry at exactly zero, which
/// multiplicative updates can never leave.
const FACTOR_FLOOR: f64 = 1e-10;

/// `1 + θ_i` for every data row.
pub(crate) fn spread_vector<T: Scalar>(d: &DispersionParams<T>, rows: usize) -> Vec<T> {
    (0..rows).map(|i| T::one() + d.theta_for_row(i)).collect()
}

/// Number of zero counts per data row.
pub(crate) fn zeros_per_row(y: &CountMatrix) -> Vec<usize> {
    let mut n0 = vec![0usize; y.nrows()];
    for jj in 0..y.ncols() {
        for (ii, n) in n0.iter_mut().enumerate() {
            if y.get(ii, jj) == 0 {
                *n += 1;
            }
        }
    }
    n0
}

/// Writes the shared weight matrix of the generalized Poisson updates:
/// `m_ij = y·(s+θ_i)/((s+θ_i·y)·s)`, zero where `y = 0`.
pub(crate) fn gpmf_weight_into<T: Scalar>(
    y: &CountMatrix,
    s: &DMatrix<T>,
    spread: &[T],
    m: &mut DMatrix<T>,
) {
    let floor = s_floor::<T>();
    let one = T::one();
    for jj in 0..y.ncols() {
        let s_col = s.column(jj);
        let mut m_col = m.column_mut(jj);
        for ii in 0..y.nrows() {
            let yv = y.get(ii, jj);
            if yv == 0 {
                m_col[ii] = T::zero();
            } else {
                let theta = spread[ii] - one;
                let sv = s_col[ii].max(floor);
                let yt = T::cast_u64(yv);
                m_col[ii] = yt * (sv + theta) / ((sv + theta * yt) * sv);
            }
        }
    }
}

/// Writes the Poisson weight matrix `m_ij = y/s`, zero where `y = 0`.
pub(crate) fn pmf_weight_into<T: Scalar>(y: &CountMatrix, s: &DMatrix<T>, m: &mut DMatrix<T>) {
    let floor = s_floor::<T>();
    for jj in 0..y.ncols() {
        let s_col = s.column(jj);
        let mut m_col = m.column_mut(jj);
        for ii in 0..y.nrows() {
            let yv = y.get(ii, jj);
            m_col[ii] = if yv == 0 {
                T::zero()
            } else {
                T::cast_u64(yv) / s_col[ii].max(floor)
            };
        }
    }
}

/// Writes the negative binomial denominator weights `b_ij = (y+α)/(s+α)`.
pub(crate) fn nbmf_denom_weight_into<T: Scalar>(
    y: &CountMatrix,
    s: &DMatrix<T>,
    alpha: T,
    m: &mut DMatrix<T>,
) {
    let floor = s_floor::<T>();
    for jj in 0..y.ncols() {
        let s_col = s.column(jj);
        let mut m_col = m.column_mut(jj);
        for ii in 0..y.nrows() {
            m_col[ii] = (T::cast_u64(y.get(ii, jj)) + alpha) / (s_col[ii].max(floor) + alpha);
        }
    }
}

/// `out = m · h` for `m: I×J`, `h: J×K` (plain accumulation, fixed order).
pub(crate) fn mul_into<T: Scalar>(m: &DMatrix<T>, h: &DMatrix<T>, out: &mut DMatrix<T>) {
    let (i, j) = (m.nrows(), m.ncols());
    let k = h.ncols();
    debug_assert_eq!(h.nrows(), j);
    out.fill(T::zero());
    for kk in 0..k {
        let mut out_col = out.column_mut(kk);
        for jj in 0..j {
            let scale = h[(jj, kk)];
            let m_col = m.column(jj);
            for ii in 0..i {
                out_col[ii] += scale * m_col[ii];
            }
        }
    }
}

/// `out = mᵀ · w` for `m: I×J`, `w: I×K`.
pub(crate) fn tr_mul_into<T: Scalar>(m: &DMatrix<T>, w: &DMatrix<T>, out: &mut DMatrix<T>) {
    let j = m.ncols();
    let k = w.ncols();
    debug_assert_eq!(m.nrows(), w.nrows());
    for kk in 0..k {
        let w_col = w.column(kk);
        let mut out_col = out.column_mut(kk);
        for jj in 0..j {
            let m_col = m.column(jj);
            let mut acc = T::zero();
            for ii in 0..m.nrows() {
                acc += m_col[ii] * w_col[ii];
            }
            out_col[jj] = acc;
        }
    }
}

/// Column sums of `w` with each row weighted by `1/spread_i`.
pub(crate) fn weighted_column_sums<T: Scalar>(w: &DMatrix<T>, spread: &[T]) -> DVector<T> {
    let mut sums = DVector::zeros(w.ncols());
    for kk in 0..w.ncols() {
        let col = w.column(kk);
        let mut acc = T::zero();
        for (ii, &sp) in spread.iter().enumerate() {
            acc += col[ii] / sp;
        }
        sums[kk] = acc;
    }
    sums
}

/// In-place `w_ik *= numer_ik · spread_i / h_colsum_k` with floors.
pub(crate) fn scale_w_gpmf<T: Scalar>(
    w: &mut DMatrix<T>,
    numer: &DMatrix<T>,
    h_colsums: &DVector<T>,
    spread: &[T],
) -> Result<()> {
    let denom_floor = T::cast_from(DENOM_FLOOR);
    let factor_floor = T::cast_from(FACTOR_FLOOR);
    for kk in 0..w.ncols() {
        let denom = h_colsums[kk];
        if denom < denom_floor {
            return Err(Error::NumericalUnderflow);
        }
        let inv = T::one() / denom;
        let numer_col = numer.column(kk);
        let mut w_col = w.column_mut(kk);
        for (ii, &sp) in spread.iter().enumerate() {
            w_col[ii] = (w_col[ii] * numer_col[ii] * sp * inv).max(factor_floor);
        }
    }
    Ok(())
}

/// In-place `h_jk *= numer_jk / c_k` with floors (`c_k` is the
/// spread-weighted column sum of `W`).
pub(crate) fn scale_h_gpmf<T: Scalar>(
    h: &mut DMatrix<T>,
    numer: &DMatrix<T>,
    w_weighted_colsums: &DVector<T>,
) -> Result<()> {
    let denom_floor = T::cast_from(DENOM_FLOOR);
    let factor_floor = T::cast_from(FACTOR_FLOOR);
    for kk in 0..h.ncols() {
        let denom = w_weighted_colsums[kk];
        if denom < denom_floor {
            return Err(Error::NumericalUnderflow);
        }
        let inv = T::one() / denom;
        let numer_col = numer.column(kk);
        let rows = h.nrows();
        let mut h_col = h.column_mut(kk);
        for jj in 0..rows {
            h_col[jj] = (h_col[jj] * numer_col[jj] * inv).max(factor_floor);
        }
    }
    Ok(())
}

/// In-place elementwise `target *= numer/denom` with floors (the negative
/// binomial form where both sides are full matrices).
pub(crate) fn scale_ratio<T: Scalar>(
    target: &mut DMatrix<T>,
    numer: &DMatrix<T>,
    denom: &DMatrix<T>,
) -> Result<()> {
    let denom_floor = T::cast_from(DENOM_FLOOR);
    let factor_floor = T::cast_from(FACTOR_FLOOR);
    for (t, (n, d)) in target.iter_mut().zip(numer.iter().zip(denom.iter())) {
        if *d < denom_floor {
            return Err(Error::NumericalUnderflow);
        }
        *t = (*t * *n / *d).max(factor_floor);
    }
    Ok(())
}

/// Positive root of `αθ² + βθ - γ = 0` for `α > 0`, `γ ≥ 0`, evaluated in a
/// cancellation-free form.
pub fn solve_dispersion_quadratic<T: Scalar>(alpha: T, beta: T, gamma: T) -> T {
    let two = T::cast_from(2.0);
    let four = T::cast_from(4.0);
    let disc = beta * beta + four * alpha * gamma;
    let sq = disc.sqrt();
    if beta > T::zero() {
        if gamma == T::zero() {
            T::zero()
        } else {
            two * gamma / (beta + sq)
        }
    } else {
        (sq - beta) / (two * alpha)
    }
}

/// Row-wise θ update given the current reconstruction. Rows with `α_i = 0`
/// (entirely zero counts) are left unchanged; results are floored at
/// [`DISPERSION_FLOOR`].
pub(crate) fn update_theta_rowwise_into<T: Scalar>(
    y: &CountMatrix,
    s: &DMatrix<T>,
    n0: &[usize],
    theta: &mut [T],
) {
    let (i, j) = (y.nrows(), y.ncols());
    let one = T::one();
    let mut eta1_acc = vec![T::zero(); i];
    let mut eta2_acc = vec![T::zero(); i];
    let mut resid_acc = vec![T::zero(); i];
    for jj in 0..j {
        let s_col = s.column(jj);
        for ii in 0..i {
            let yv = y.get(ii, jj);
            let sv = s_col[ii];
            if yv == 0 {
                resid_acc[ii] -= sv;
            } else {
                let yt = T::cast_u64(yv);
                resid_acc[ii] += yt - sv;
                if yv > 1 {
                    let shifted = sv + theta[ii] * yt;
                    let weight = yt - one;
                    eta1_acc[ii] += weight * sv / shifted;
                    eta2_acc[ii] += weight * theta[ii] * yt / shifted;
                }
            }
        }
    }
    let floor = T::cast_from(DISPERSION_FLOOR);
    for ii in 0..i {
        let alpha = T::cast_u64((j - n0[ii]) as u64) + eta1_acc[ii];
        if alpha == T::zero() {
            continue;
        }
        let gamma = eta2_acc[ii];
        let beta = resid_acc[ii] - gamma + alpha;
        theta[ii] = solve_dispersion_quadratic(alpha, beta, gamma).max(floor);
    }
}

/// Shared θ update over all cells; `θ` is unchanged when the whole matrix
/// is zero.
pub(crate) fn update_theta_shared_into<T: Scalar>(
    y: &CountMatrix,
    s: &DMatrix<T>,
    n0_total: usize,
    theta: &mut T,
) {
    let one = T::one();
    let mut eta1_acc = T::zero();
    let mut eta2_acc = T::zero();
    let mut resid_acc = T::zero();
    for jj in 0..y.ncols() {
        let s_col = s.column(jj);
        for ii in 0..y.nrows() {
            let yv = y.get(ii, jj);
            let sv = s_col[ii];
            if yv == 0 {
                resid_acc -= sv;
            } else {
                let yt = T::cast_u64(yv);
                resid_acc += yt - sv;
                if yv > 1 {
                    let shifted = sv + *theta * yt;
                    let weight = yt - one;
                    eta1_acc += weight * sv / shifted;
                    eta2_acc += weight * *theta * yt / shifted;
                }
            }
        }
    }
    let cells = y.nrows() * y.ncols();
    let alpha = T::cast_u64((cells - n0_total) as u64) + eta1_acc;
    if alpha == T::zero() {
        return;
    }
    let gamma = eta2_acc;
    let beta = resid_acc - gamma + alpha;
    *theta = solve_dispersion_quadratic(alpha, beta, gamma).max(T::cast_from(DISPERSION_FLOOR));
}

/// One multiplicative update of `W` under the generalized Poisson model:
/// `w_ik ← w_ik · [Σ_j y·(s+θ_i)/(s+θ_i·y) · h_jk/s] / [Σ_j h_jk/(1+θ_i)]`.
pub fn update_w_gpmf<T: Scalar>(
    y: &CountMatrix,
    f: &FactorPair<T>,
    d: &DispersionParams<T>,
) -> Result<DMatrix<T>> {
    super::likelihood::check_shapes(y, f)?;
    d.expect_rows(y.nrows())?;
    let spread = spread_vector(d, y.nrows());
    let s = f.reconstruct();
    let mut m = DMatrix::zeros(y.nrows(), y.ncols());
    gpmf_weight_into(y, &s, &spread, &mut m);
    let mut numer = DMatrix::zeros(y.nrows(), f.k());
    mul_into(&m, &f.h, &mut numer);
    let mut w = f.w.clone();
    scale_w_gpmf(&mut w, &numer, &column_sums(&f.h), &spread)?;
    Ok(w)
}

/// One multiplicative update of `H` under the generalized Poisson model
/// (the transpose-symmetric rule of [`update_w_gpmf`]).
pub fn update_h_gpmf<T: Scalar>(
    y: &CountMatrix,
    f: &FactorPair<T>,
    d: &DispersionParams<T>,
) -> Result<DMatrix<T>> {
    super::likelihood::check_shapes(y, f)?;
    d.expect_rows(y.nrows())?;
    let spread = spread_vector(d, y.nrows());
    let s = f.reconstruct();
    let mut m = DMatrix::zeros(y.nrows(), y.ncols());
    gpmf_weight_into(y, &s, &spread, &mut m);
    let mut numer = DMatrix::zeros(y.ncols(), f.k());
    tr_mul_into(&m, &f.w, &mut numer);
    let mut h = f.h.clone();
    scale_h_gpmf(&mut h, &numer, &weighted_column_sums(&f.w, &spread))?;
    Ok(h)
}

/// Row-wise dispersion update: solves the per-row quadratic
/// `α_iθ² + β_iθ - γ_i = 0` at the current auxiliary weights and returns the
/// positive root (floored, with all-zero rows frozen).
pub fn update_theta_rowwise<T: Scalar>(
    y: &CountMatrix,
    f: &FactorPair<T>,
    d: &DispersionParams<T>,
) -> Result<DispersionParams<T>> {
    super::likelihood::check_shapes(y, f)?;
    d.expect_rows(y.nrows())?;
    let DispersionParams::RowWise(values) = d else {
        return Err(Error::Domain(
            "row-wise θ update requires row-wise dispersion parameters".into(),
        ));
    };
    let s = f.reconstruct();
    let n0 = zeros_per_row(y);
    let mut theta: Vec<T> = values.iter().copied().collect();
    update_theta_rowwise_into(y, &s, &n0, &mut theta);
    DispersionParams::row_wise(theta)
}

/// One full shared-dispersion sweep: updates `W`, refreshes the
/// reconstruction, updates `H`, refreshes again, then updates the shared θ.
pub fn update_shared_gpmf<T: Scalar>(
    y: &CountMatrix,
    f: &FactorPair<T>,
    theta: T,
) -> Result<(DMatrix<T>, DMatrix<T>, T)> {
    super::likelihood::check_shapes(y, f)?;
    let d = DispersionParams::shared(theta)?;
    let spread = spread_vector(&d, y.nrows());
    let (i, j, k) = (y.nrows(), y.ncols(), f.k());

    let mut s = DMatrix::zeros(i, j);
    let mut m = DMatrix::zeros(i, j);

    let mut w = f.w.clone();
    reconstruct_into(&w, &f.h, &mut s);
    gpmf_weight_into(y, &s, &spread, &mut m);
    let mut numer_w = DMatrix::zeros(i, k);
    mul_into(&m, &f.h, &mut numer_w);
    scale_w_gpmf(&mut w, &numer_w, &column_sums(&f.h), &spread)?;

    let mut h = f.h.clone();
    reconstruct_into(&w, &h, &mut s);
    gpmf_weight_into(y, &s, &spread, &mut m);
    let mut numer_h = DMatrix::zeros(j, k);
    tr_mul_into(&m, &w, &mut numer_h);
    scale_h_gpmf(&mut h, &numer_h, &weighted_column_sums(&w, &spread))?;

    reconstruct_into(&w, &h, &mut s);
    let n0_total = y.data().iter().filter(|&&v| v == 0).count();
    let mut theta_new = theta;
    update_theta_shared_into(y, &s, n0_total, &mut theta_new);
    Ok((w, h, theta_new))
}

/// One Poisson (KL) update of `W`: `w_ik ← w_ik·(Σ_j y h_jk/s)/(Σ_j h_jk)`.
pub fn update_w_pmf<T: Scalar>(y: &CountMatrix, f: &FactorPair<T>) -> Result<DMatrix<T>> {
    let zero = DispersionParams::row_wise(vec![T::zero(); y.nrows()])?;
    update_w_gpmf(y, f, &zero)
}

/// One Poisson (KL) update of `H`.
pub fn update_h_pmf<T: Scalar>(y: &CountMatrix, f: &FactorPair<T>) -> Result<DMatrix<T>> {
    let zero = DispersionParams::row_wise(vec![T::zero(); y.nrows()])?;
    update_h_gpmf(y, f, &zero)
}

/// One negative binomial update of `W`:
/// `w_ik ← w_ik·[Σ_j h_jk·y/s]/[Σ_j h_jk·(y+α)/(s+α)]`.
pub fn update_w_nbmf<T: Scalar>(
    y: &CountMatrix,
    f: &FactorPair<T>,
    alpha: T,
) -> Result<DMatrix<T>> {
    super::likelihood::check_shapes(y, f)?;
    let s = f.reconstruct();
    let (i, j, k) = (y.nrows(), y.ncols(), f.k());
    let mut a = DMatrix::zeros(i, j);
    pmf_weight_into(y, &s, &mut a);
    let mut b = DMatrix::zeros(i, j);
    nbmf_denom_weight_into(y, &s, alpha, &mut b);
    let mut numer = DMatrix::zeros(i, k);
    mul_into(&a, &f.h, &mut numer);
    let mut denom = DMatrix::zeros(i, k);
    mul_into(&b, &f.h, &mut denom);
    let mut w = f.w.clone();
    scale_ratio(&mut w, &numer, &denom)?;
    Ok(w)
}

/// One negative binomial update of `H`.
pub fn update_h_nbmf<T: Scalar>(
    y: &CountMatrix,
    f: &FactorPair<T>,
    alpha: T,
) -> Result<DMatrix<T>> {
    super::likelihood::check_shapes(y, f)?;
    let s = f.reconstruct();
    let (i, j, k) = (y.nrows(), y.ncols(), f.k());
    let mut a = DMatrix::zeros(i, j);
    pmf_weight_into(y, &s, &mut a);
    let mut b = DMatrix::zeros(i, j);
    nbmf_denom_weight_into(y, &s, alpha, &mut b);
    let mut numer = DMatrix::zeros(j, k);
    tr_mul_into(&a, &f.w, &mut numer);
    let mut denom = DMatrix::zeros(j, k);
    tr_mul_into(&b, &f.w, &mut denom);
    let mut h = f.h.clone();
    scale_ratio(&mut h, &numer, &denom)?;
    Ok(h)
}
