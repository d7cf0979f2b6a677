//! Generalized Poisson distribution kernel.
//!
//! The generalized Poisson (GP) distribution `GP(η, μ)` has probability mass
//! `f(x) = η(η + μx)^{x-1} e^{-(η + μx)} / x!` with mean `η/(1-μ)` and
//! variance `η/(1-μ)³`. This module restricts to `0 ≤ μ < 1`: the
//! overdispersed regime plus the Poisson limit `μ = 0`.
//!
//! The mean-dispersion parameterization `GP(λ/(1+θ), θ/(1+θ))` with `λ ≥ 0`,
//! `θ ≥ 0` has mean `λ` and variance `λ(1+θ)²`, which is what the
//! factorization models work in. Conversions, moments, exact sampling, and
//! the kurtosis comparison against a variance-matched negative binomial all
//! live here.

use crate::special::ln_gamma;
use crate::{Error, Result, Scalar};
use rand::Rng;
use rand_distr::{Distribution, Poisson};

/// Safety cap on branching-process generations inside [`gp_sample`].
const MAX_GENERATIONS: u64 = 1_000_000;

/// Natural parameters `(η, μ)` of the generalized Poisson distribution.
///
/// `η ≥ 0` and `0 ≤ μ < 1`; `η = 0` is the boundary point mass at zero
/// (reached from the mean-dispersion form with `λ = 0`).
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GPParamsNatural<T: Scalar> {
    eta: T,
    mu: T,
}

impl<T: Scalar> GPParamsNatural<T> {
    pub fn new(eta: T, mu: T) -> Result<Self> {
        if !(eta.is_finite() && eta >= T::zero()) {
            return Err(Error::Domain(format!("eta must be finite and >= 0, got {eta}")));
        }
        if !(mu.is_finite() && mu >= T::zero() && mu < T::one()) {
            return Err(Error::Domain(format!("mu must lie in [0, 1), got {mu}")));
        }
        Ok(Self { eta, mu })
    }

    pub fn eta(&self) -> T {
        self.eta
    }

    pub fn mu(&self) -> T {
        self.mu
    }
}

/// Mean-dispersion parameters `(λ, θ)` of the generalized Poisson
/// distribution: mean `λ ≥ 0` and dispersion `θ ≥ 0`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GPParamsMeanDisp<T: Scalar> {
    lambda: T,
    theta: T,
}

impl<T: Scalar> GPParamsMeanDisp<T> {
    pub fn new(lambda: T, theta: T) -> Result<Self> {
        if !(lambda.is_finite() && lambda >= T::zero()) {
            return Err(Error::Domain(format!(
                "lambda must be finite and >= 0, got {lambda}"
            )));
        }
        if !(theta.is_finite() && theta >= T::zero()) {
            return Err(Error::Domain(format!("theta must be finite and >= 0, got {theta}")));
        }
        Ok(Self { lambda, theta })
    }

    pub fn lambda(&self) -> T {
        self.lambda
    }

    pub fn theta(&self) -> T {
        self.theta
    }
}

/// Negative binomial parameters: dispersion `r > 0` and probability
/// `p ∈ [0, 1]`, with mass `f(x) = Γ(x+r)/(x! Γ(r)) · p^x (1-p)^r` and
/// mean `rp/(1-p)`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct NBParams<T: Scalar> {
    r: T,
    p: T,
}

impl<T: Scalar> NBParams<T> {
    pub fn new(r: T, p: T) -> Result<Self> {
        if !(r.is_finite() && r > T::zero()) {
            return Err(Error::Domain(format!("r must be finite and > 0, got {r}")));
        }
        if !(p.is_finite() && p >= T::zero() && p <= T::one()) {
            return Err(Error::Domain(format!("p must lie in [0, 1], got {p}")));
        }
        Ok(Self { r, p })
    }

    pub fn r(&self) -> T {
        self.r
    }

    pub fn p(&self) -> T {
        self.p
    }
}

/// Converts mean-dispersion parameters to natural parameters via
/// `μ = θ/(1+θ)` followed by `η = λ(1-μ)`.
pub fn to_natural<T: Scalar>(p: &GPParamsMeanDisp<T>) -> GPParamsNatural<T> {
    let mu = p.theta / (T::one() + p.theta);
    let eta = p.lambda * (T::one() - mu);
    GPParamsNatural { eta, mu }
}

/// Inverse of [`to_natural`]: `θ = μ/(1-μ)`, `λ = η/(1-μ)`.
pub fn to_mean_disp<T: Scalar>(p: &GPParamsNatural<T>) -> GPParamsMeanDisp<T> {
    let one_minus = T::one() - p.mu;
    GPParamsMeanDisp {
        lambda: p.eta / one_minus,
        theta: p.mu / one_minus,
    }
}

/// Log probability mass of `GP(η, μ)` at the count `x`:
/// `log η + (x-1)·log(η + μx) - (η + μx) - log(x!)`.
///
/// Zero-probability points return `-∞` rather than an error so likelihood
/// sums can aggregate without branching; in particular `η = 0` gives `0`
/// mass everywhere except `x = 0`.
pub fn gp_log_pmf<T: Scalar>(x: u64, p: &GPParamsNatural<T>) -> T {
    if p.eta == T::zero() {
        return if x == 0 { T::zero() } else { T::neg_infinity() };
    }
    let xt = T::cast_u64(x);
    let shifted = p.eta + p.mu * xt;
    p.eta.ln() + (xt - T::one()) * shifted.ln() - shifted - ln_gamma(xt + T::one())
}

/// Log probability mass of the negative binomial at the count `x`.
///
/// Boundary probabilities use the same `-∞` sentinel convention as
/// [`gp_log_pmf`].
pub fn nb_log_pmf<T: Scalar>(x: u64, p: &NBParams<T>) -> T {
    let xt = T::cast_u64(x);
    let x_term = if x == 0 { T::zero() } else { xt * p.p.ln() };
    ln_gamma(xt + p.r) - ln_gamma(xt + T::one()) - ln_gamma(p.r)
        + x_term
        + p.r * (T::one() - p.p).ln()
}

/// Mean and variance `(λ, λ(1+θ)²)` of the mean-dispersion form.
pub fn gp_moments<T: Scalar>(p: &GPParamsMeanDisp<T>) -> (T, T) {
    let spread = T::one() + p.theta;
    (p.lambda, p.lambda * spread * spread)
}

/// Draws one exact sample from the generalized Poisson distribution.
///
/// Uses the branching-process construction: the GP is the total progeny of
/// a Galton-Watson process with `Poisson(η)` initial individuals and
/// `Poisson(μ)` offspring per individual. With `μ < 1` the process goes
/// extinct almost surely; a generation cap guards against numeric
/// corruption and reports [`Error::NonTermination`] if ever hit.
pub fn gp_sample<T: Scalar, R: Rng + ?Sized>(
    p: &GPParamsMeanDisp<T>,
    rng: &mut R,
) -> Result<u64> {
    if p.lambda == T::zero() {
        return Ok(0);
    }
    let nat = to_natural(p);
    let eta = nat.eta.as_f64();
    let mu = nat.mu.as_f64();
    let mut total = poisson_draw(eta, rng)?;
    if mu > 0.0 {
        let mut generation = total;
        let mut generations = 0u64;
        while generation > 0 {
            generations += 1;
            if generations > MAX_GENERATIONS {
                return Err(Error::NonTermination(MAX_GENERATIONS));
            }
            let offspring = poisson_draw(mu * generation as f64, rng)?;
            total += offspring;
            generation = offspring;
        }
    }
    Ok(total)
}

fn poisson_draw<R: Rng + ?Sized>(rate: f64, rng: &mut R) -> Result<u64> {
    let dist = Poisson::new(rate)
        .map_err(|e| Error::Domain(format!("Poisson rate {rate} rejected: {e}")))?;
    Ok(dist.sample(rng) as u64)
}

/// Excess kurtosis of the generalized Poisson in mean-dispersion form:
/// `1/λ + (15θ² + 10θ)/λ`.
pub fn kurtosis_gp<T: Scalar>(p: &GPParamsMeanDisp<T>) -> Result<T> {
    if p.lambda <= T::zero() {
        return Err(Error::Domain("kurtosis requires lambda > 0".into()));
    }
    let c15 = T::cast_from(15.0);
    let c10 = T::cast_from(10.0);
    Ok((T::one() + c15 * p.theta * p.theta + c10 * p.theta) / p.lambda)
}

/// Dispersion `α` of the negative binomial `NB(α, λ/(λ+α))` matching the
/// generalized Poisson's mean `λ` and variance `λ(1+θ)²`: `α = λ/(θ² + 2θ)`.
pub fn nb_alpha_matching<T: Scalar>(p: &GPParamsMeanDisp<T>) -> Result<T> {
    if p.lambda <= T::zero() {
        return Err(Error::Domain("variance matching requires lambda > 0".into()));
    }
    if p.theta <= T::zero() {
        return Err(Error::Domain(
            "variance matching requires theta > 0 (no finite alpha at the Poisson limit)".into(),
        ));
    }
    Ok(p.lambda / (p.theta * p.theta + T::cast_from(2.0) * p.theta))
}

/// Excess kurtosis of the negative binomial with mean `λ` and dispersion
/// `α`: `1/λ + 6/α - 1/(λ+α)`.
pub fn kurtosis_nb<T: Scalar>(lambda: T, alpha: T) -> Result<T> {
    if lambda <= T::zero() || alpha <= T::zero() {
        return Err(Error::Domain("kurtosis_nb requires lambda > 0 and alpha > 0".into()));
    }
    Ok(T::one() / lambda + T::cast_from(6.0) / alpha - T::one() / (lambda + alpha))
}

/// Kurtosis excess of the generalized Poisson over the variance-matched
/// negative binomial: `(9θ⁴ + 16θ³ + 6θ²) / (λ(θ+1)²)`.
///
/// Strictly positive for `θ > 0` (the GP is heavier-tailed); `θ = 0`
/// returns the boundary value `0`.
pub fn kurtosis_gap<T: Scalar>(p: &GPParamsMeanDisp<T>) -> Result<T> {
    if p.lambda <= T::zero() {
        return Err(Error::Domain("kurtosis gap requires lambda > 0".into()));
    }
    let th = p.theta;
    let th2 = th * th;
    let numer = T::cast_from(9.0) * th2 * th2 + T::cast_from(16.0) * th2 * th
        + T::cast_from(6.0) * th2;
    let spread = th + T::one();
    Ok(numer / (p.lambda * spread * spread))
}
