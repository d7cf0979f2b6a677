//! Factor initialization strategies.

use super::{CountMatrix, FactorPair};
use crate::{Error, Result, Scalar};
use nalgebra::DMatrix;
use rand::Rng;
use rand_distr::{Distribution, Gamma};

/// Smallest value an initialized factor entry may take; multiplicative
/// updates cannot escape exact zeros.
pub const POSITIVITY_FLOOR: f64 = 1e-10;

/// SVD-based deterministic initialization.
///
/// Computes a rank-`k` truncated SVD of the counts. The leading component
/// uses the absolute singular vectors, `|u₁|·√σ₁` and `|v₁|·√σ₁`; the
/// remaining components keep whichever of the positive or negative sections
/// of each singular pair carries more mass. Entries below
/// [`POSITIVITY_FLOOR`] are clamped to it.
pub fn init_nndsvd<T: Scalar>(y: &CountMatrix, k: usize) -> Result<FactorPair<T>> {
    let (i, j) = (y.nrows(), y.ncols());
    if k == 0 || k > i.min(j) {
        return Err(Error::Domain(format!(
            "rank must lie in 1..=min(I, J) = {}, got {k}",
            i.min(j)
        )));
    }
    if y.data().iter().all(|&v| v == 0) {
        return Err(Error::Domain("SVD initialization needs a positive entry".into()));
    }
    let a = y.to_real::<f64>();
    let svd = nalgebra::linalg::SVD::try_new(a, true, true, f64::EPSILON, 0)
        .ok_or(Error::SvdFailure)?;
    let u = svd.u.as_ref().expect("left singular vectors requested");
    let vt = svd.v_t.as_ref().expect("right singular vectors requested");
    let sigma = &svd.singular_values;

    let mut w = DMatrix::zeros(i, k);
    let mut h = DMatrix::zeros(j, k);
    for c in 0..k {
        let scale = sigma[c].max(0.0);
        let u_col: Vec<f64> = (0..i).map(|r| u[(r, c)]).collect();
        let v_col: Vec<f64> = (0..j).map(|r| vt[(c, r)]).collect();
        let (wc, hc) = if c == 0 {
            let root = scale.sqrt();
            (
                u_col.iter().map(|x| root * x.abs()).collect::<Vec<_>>(),
                v_col.iter().map(|x| root * x.abs()).collect::<Vec<_>>(),
            )
        } else {
            positive_section(&u_col, &v_col, scale)
        };
        for (r, &x) in wc.iter().enumerate() {
            w[(r, c)] = x.max(POSITIVITY_FLOOR);
        }
        for (r, &x) in hc.iter().enumerate() {
            h[(r, c)] = x.max(POSITIVITY_FLOOR);
        }
    }
    FactorPair::new(w.map(T::cast_from), h.map(T::cast_from))
}

/// Keeps the heavier of the positive/negative sections of a singular pair.
fn positive_section(u: &[f64], v: &[f64], sigma: f64) -> (Vec<f64>, Vec<f64>) {
    let pos = |x: f64| x.max(0.0);
    let neg = |x: f64| (-x).max(0.0);
    let norm = |xs: &[f64], f: &dyn Fn(f64) -> f64| xs.iter().map(|&x| f(x) * f(x)).sum::<f64>().sqrt();
    let (up, un) = (norm(u, &pos), norm(u, &neg));
    let (vp, vn) = (norm(v, &pos), norm(v, &neg));
    let (mass_p, mass_n) = (up * vp, un * vn);
    if mass_p == 0.0 && mass_n == 0.0 {
        return (vec![0.0; u.len()], vec![0.0; v.len()]);
    }
    let (mass, u_norm, v_norm, f): (f64, f64, f64, &dyn Fn(f64) -> f64) = if mass_p >= mass_n {
        (mass_p, up, vp, &pos)
    } else {
        (mass_n, un, vn, &neg)
    };
    let root = (sigma * mass).sqrt();
    (
        u.iter().map(|&x| root * f(x) / u_norm).collect(),
        v.iter().map(|&x| root * f(x) / v_norm).collect(),
    )
}

/// Random initialization: i.i.d. `Gamma(1, 1)` entries for both factors,
/// rescaled by a common factor so the reconstruction mean matches the data
/// mean. Draws are made in `f64` so the stream is identical for every
/// scalar type.
pub fn init_random<T: Scalar, R: Rng + ?Sized>(
    y: &CountMatrix,
    k: usize,
    rng: &mut R,
) -> Result<FactorPair<T>> {
    let (i, j) = (y.nrows(), y.ncols());
    if k == 0 {
        return Err(Error::Domain("rank must be >= 1".into()));
    }
    let unit_gamma = Gamma::new(1.0, 1.0).expect("unit gamma parameters are valid");
    let mut w = DMatrix::zeros(i, k);
    for c in 0..k {
        for r in 0..i {
            w[(r, c)] = unit_gamma.sample(rng);
        }
    }
    let mut h = DMatrix::zeros(j, k);
    for c in 0..k {
        for r in 0..j {
            h[(r, c)] = unit_gamma.sample(rng);
        }
    }
    // mean(W·Hᵀ) = Σ_k (Σ_i w_ik)(Σ_j h_jk) / (I·J), so the rescale needs no
    // full reconstruction.
    let mut recon_mean = 0.0f64;
    for c in 0..k {
        recon_mean += w.column(c).sum() * h.column(c).sum();
    }
    recon_mean /= (i * j) as f64;
    let target = y.mean();
    let scale = if recon_mean > 0.0 && target > 0.0 {
        (target / recon_mean).sqrt()
    } else {
        0.0
    };
    let floor = |x: f64| (x * scale).max(POSITIVITY_FLOOR);
    FactorPair::new(w.map(|x| T::cast_from(floor(x))), h.map(|x| T::cast_from(floor(x))))
}
