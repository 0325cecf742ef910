//! Log-densities and samplers for the distributions the models use.
//!
//! The functions here validate their parameters. Inside model code the
//! unchecked [`Scalar`](crate::Scalar) methods are used instead, since the
//! models construct their parameters to be valid.

use rand::RngCore;
use rand_distr::{Distribution, StandardNormal};

use statrs::function::gamma::ln_gamma;

use crate::error::{Error, Result};
use crate::math;
use crate::scalar::{bernoulli_logpmf_value, normal_logpdf_value, Real};

pub fn normal_logpdf<F: Real>(mu: F, sigma: F, v: F) -> Result<F> {
    if !(sigma > F::zero()) {
        return Err(Error::usage("normal sigma must be positive"));
    }
    Ok(normal_logpdf_value(mu, sigma, v))
}

/// Bernoulli log-mass; `-inf` for outcomes impossible under `p ∈ {0, 1}`.
pub fn bernoulli_logpmf<F: Real>(p: F, v: bool) -> Result<F> {
    if !(p >= F::zero() && p <= F::one()) {
        return Err(Error::usage("bernoulli p must lie in [0, 1]"));
    }
    Ok(bernoulli_logpmf_value(p, v))
}

/// Beta log-density on `(0, 1)`; `-inf` outside the support.
pub fn beta_logpdf(alpha: f64, beta: f64, v: f64) -> Result<f64> {
    if !(alpha > 0.0 && beta > 0.0) {
        return Err(Error::usage("beta shape parameters must be positive"));
    }
    if !(v > 0.0 && v < 1.0) {
        // the closed endpoints carry density only when a shape equals one
        return Ok(match (v, alpha, beta) {
            (0.0, 1.0, _) => beta.ln(),
            (1.0, _, 1.0) => alpha.ln(),
            _ => f64::NEG_INFINITY,
        });
    }
    let log_b = ln_gamma(alpha) + ln_gamma(beta) - ln_gamma(alpha + beta);
    Ok((alpha - 1.0) * v.ln() + (beta - 1.0) * (1.0 - v).ln() - log_b)
}

/// Draws an index with probability proportional to `exp(log_weights[i])`.
pub fn categorical_sample<R: RngCore + ?Sized>(log_weights: &[f64], rng: &mut R) -> Result<usize> {
    if log_weights.is_empty() {
        return Err(Error::usage("categorical over an empty support"));
    }
    let norm = math::log_sum_exp_unchecked(log_weights);
    if !norm.is_finite() {
        return Err(Error::non_finite("categorical normalizer", log_weights));
    }
    let u = uniform_sample(rng);
    let mut acc = 0.0;
    let mut last_positive = 0;
    for (i, &w) in log_weights.iter().enumerate() {
        let p = (w - norm).exp();
        if p > 0.0 {
            last_positive = i;
        }
        acc += p;
        if u < acc {
            return Ok(i);
        }
    }
    // rounding left u just above the cumulative sum
    Ok(last_positive)
}

pub fn normal_sample<R: RngCore + ?Sized>(mu: f64, sigma: f64, rng: &mut R) -> Result<f64> {
    if !(sigma > 0.0) {
        return Err(Error::usage("normal sigma must be positive"));
    }
    Ok(mu + sigma * standard_normal(rng))
}

pub(crate) fn standard_normal<R: RngCore + ?Sized>(rng: &mut R) -> f64 {
    let mut r = rng;
    StandardNormal.sample(&mut r)
}

pub fn bernoulli_sample<R: RngCore + ?Sized>(p: f64, rng: &mut R) -> Result<bool> {
    if !(0.0..=1.0).contains(&p) {
        return Err(Error::usage("bernoulli p must lie in [0, 1]"));
    }
    Ok(uniform_sample(rng) < p)
}

/// Uniform draw on `[0, 1)`.
pub fn uniform_sample<R: RngCore + ?Sized>(rng: &mut R) -> f64 {
    // 53 random mantissa bits
    (rng.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
}
