//! Log-space scalar utilities.
//!
//! Everything here is generic over [`num_traits::Float`] so the same code
//! serves `f32`, `f64` and the plain-value side of the autodiff scalar.

use num_traits::Float;

use crate::error::{Error, Result};

/// `log Σ exp(terms)` with the max-shift, so no intermediate overflows.
///
/// Returns `-inf` when every term is `-inf`.
pub fn log_sum_exp<F: Float>(terms: &[F]) -> Result<F> {
    if terms.is_empty() {
        return Err(Error::usage("log_sum_exp of an empty sequence"));
    }
    Ok(log_sum_exp_unchecked(terms))
}

/// Same as [`log_sum_exp`] but maps the empty sequence to `-inf`.
pub(crate) fn log_sum_exp_unchecked<F: Float>(terms: &[F]) -> F {
    let max = terms.iter().copied().fold(F::neg_infinity(), F::max);
    if max == F::neg_infinity() || !max.is_finite() {
        return max;
    }
    let sum = terms
        .iter()
        .fold(F::zero(), |acc, &t| acc + (t - max).exp());
    max + sum.ln()
}

/// Logistic function `1 / (1 + exp(-u))`, branching on the sign of `u`.
pub fn sigmoid<F: Float>(u: F) -> F {
    if u >= F::zero() {
        F::one() / (F::one() + (-u).exp())
    } else {
        let e = u.exp();
        e / (F::one() + e)
    }
}

/// `log sigmoid(u) = -log(1 + exp(-u))`, accurate in both tails.
pub fn log_sigmoid<F: Float>(u: F) -> F {
    if u >= F::zero() {
        -(-u).exp().ln_1p()
    } else {
        u - u.exp().ln_1p()
    }
}

/// Log-probabilities `u_i - log_sum_exp(u)`.
pub fn log_softmax<F: Float>(u: &[F]) -> Result<Vec<F>> {
    let norm = log_sum_exp(u)?;
    Ok(u.iter().map(|&v| v - norm).collect())
}

/// Softmax probabilities, the exponentiated [`log_softmax`].
pub(crate) fn softmax_into<F: Float>(u: &[F], out: &mut Vec<F>) {
    let norm = log_sum_exp_unchecked(u);
    out.clear();
    out.extend(u.iter().map(|&v| (v - norm).exp()));
}
