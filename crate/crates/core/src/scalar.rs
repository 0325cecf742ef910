//! The scalar abstraction model densities are written against.
//!
//! A model's `log_joint` is generic over [`Scalar`]; evaluating it with `f64`
//! (or `f32`) gives the plain value, evaluating it with
//! [`crate::autodiff::Var`] records a tape for the gradient. Distribution
//! log-densities and the log-space reductions are trait methods so the tape
//! can register each one as a single node with closed-form partials.

use std::fmt::Debug;
use std::ops::{Add, Div, Mul, Neg, Sub};

use num_traits::{Float, FromPrimitive};

use crate::{counters, math};

/// Base floating point type usable on its own or under a tape.
pub trait Real: Float + FromPrimitive + Debug + Send + Sync + 'static {}

impl Real for f32 {}
impl Real for f64 {}

pub trait Scalar:
    Copy
    + Debug
    + Add<Output = Self>
    + Sub<Output = Self>
    + Mul<Output = Self>
    + Div<Output = Self>
    + Neg<Output = Self>
{
    type Real: Real;

    /// A value with no dependence on the trace.
    fn constant(v: f64) -> Self;

    fn value(self) -> Self::Real;

    fn exp(self) -> Self;

    fn ln(self) -> Self;

    fn sigmoid(self) -> Self;

    /// `log Σ exp(terms)`; `-inf` for an empty slice.
    fn log_sum_exp(terms: &[Self]) -> Self;

    fn log_softmax(u: &[Self]) -> Vec<Self>;

    /// Normal log-density, `(mean, standard deviation)` parameterization.
    /// Callers guarantee `sigma > 0`.
    fn normal_logpdf(mu: Self, sigma: Self, v: Self) -> Self;

    /// Bernoulli log-mass of outcome `v` under success probability `p`.
    fn bernoulli_logpmf(p: Self, v: bool) -> Self;

    /// Bernoulli log-mass with success probability `sigmoid(logit)`; finite
    /// for every finite `logit`.
    fn bernoulli_logit_logpmf(logit: Self, v: bool) -> Self;
}

pub(crate) const HALF_LN_2PI: f64 = 0.918_938_533_204_672_8;

#[inline]
pub(crate) fn normal_logpdf_value<F: Real>(mu: F, sigma: F, v: F) -> F {
    let z = (v - mu) / sigma;
    let half = F::from_f64(0.5).unwrap();
    -sigma.ln() - F::from_f64(HALF_LN_2PI).unwrap() - half * z * z
}

#[inline]
pub(crate) fn bernoulli_logpmf_value<F: Real>(p: F, v: bool) -> F {
    if v {
        p.ln()
    } else {
        (F::one() - p).ln()
    }
}

#[inline]
pub(crate) fn bernoulli_logit_logpmf_value<F: Real>(logit: F, v: bool) -> F {
    if v {
        math::log_sigmoid(logit)
    } else {
        math::log_sigmoid(-logit)
    }
}

impl<F: Real> Scalar for F {
    type Real = F;

    #[inline]
    fn constant(v: f64) -> Self {
        F::from_f64(v).unwrap()
    }

    #[inline]
    fn value(self) -> F {
        self
    }

    #[inline]
    fn exp(self) -> Self {
        Float::exp(self)
    }

    #[inline]
    fn ln(self) -> Self {
        Float::ln(self)
    }

    #[inline]
    fn sigmoid(self) -> Self {
        math::sigmoid(self)
    }

    fn log_sum_exp(terms: &[Self]) -> Self {
        counters::record_lse(terms.len());
        math::log_sum_exp_unchecked(terms)
    }

    fn log_softmax(u: &[Self]) -> Vec<Self> {
        counters::record_lse(u.len());
        let norm = math::log_sum_exp_unchecked(u);
        u.iter().map(|&v| v - norm).collect()
    }

    #[inline]
    fn normal_logpdf(mu: Self, sigma: Self, v: Self) -> Self {
        counters::record_density();
        normal_logpdf_value(mu, sigma, v)
    }

    #[inline]
    fn bernoulli_logpmf(p: Self, v: bool) -> Self {
        counters::record_density();
        bernoulli_logpmf_value(p, v)
    }

    #[inline]
    fn bernoulli_logit_logpmf(logit: Self, v: bool) -> Self {
        counters::record_density();
        bernoulli_logit_logpmf_value(logit, v)
    }
}
