//! Exact sums over every nuisance assignment of a small model.
//!
//! These are reference computations: they never touch the marginalized
//! densities or the sampling-based estimator, so they serve as independent
//! checks of both.

use crate::error::{Error, Result};
use crate::math::log_sum_exp;
use crate::model::{log_joint, log_joint_grad, Nuisance, StochasticModel};

/// Refuses enumerations beyond this many assignments.
pub const MAX_ASSIGNMENTS: u64 = 1 << 20;

/// Every assignment of the model's nuisance sites, odometer order.
pub fn assignments<M: StochasticModel>(model: &M) -> Result<Vec<Nuisance>> {
    let supports: Vec<usize> = (0..model.site_count()).map(|s| model.site_support(s)).collect();
    let total = supports
        .iter()
        .try_fold(1u64, |acc, &k| acc.checked_mul(k as u64))
        .filter(|&t| t <= MAX_ASSIGNMENTS)
        .ok_or_else(|| Error::usage("too many nuisance assignments to enumerate"))?;
    let mut out = Vec::with_capacity(total as usize);
    let mut cur = vec![0usize; supports.len()];
    for _ in 0..total {
        out.push(Nuisance::new(cur.clone()));
        for (digit, &k) in cur.iter_mut().zip(&supports) {
            *digit += 1;
            if *digit < k {
                break;
            }
            *digit = 0;
        }
    }
    Ok(out)
}

/// `log Σ_z p(z | y) p̃(x | y, z)`.
pub fn enumerated_marginal<M: StochasticModel>(model: &M, x: &[f64]) -> Result<f64> {
    let terms = assignments(model)?
        .iter()
        .map(|z| Ok(model.nuisance_log_prior(z) + log_joint(model, x, z)?))
        .collect::<Result<Vec<f64>>>()?;
    log_sum_exp(&terms)
}

/// `Σ_z w(z) ∇ₓ log p̃(x | y, z)` with `log w(z) = weight(z) + c`, normalized.
fn weighted_gradient<M: StochasticModel>(
    model: &M,
    x: &[f64],
    include_likelihood: bool,
) -> Result<Vec<f64>> {
    let mut log_w = Vec::new();
    let mut grads = Vec::new();
    for z in assignments(model)? {
        let (lj, g) = log_joint_grad(model, x, &z)?;
        let prior = model.nuisance_log_prior(&z);
        log_w.push(if include_likelihood { prior + lj } else { prior });
        grads.push(g);
    }
    let norm = log_sum_exp(&log_w)?;
    let mut out = vec![0.0; x.len()];
    for (lw, g) in log_w.iter().zip(&grads) {
        let w = (lw - norm).exp();
        out.iter_mut().zip(g).for_each(|(o, gi)| *o += w * gi);
    }
    Ok(out)
}

/// Exact expectation of the gradient estimator: `E_{p(z|x,y)} ∇ₓ log p̃(x|y,z)`.
pub fn posterior_expected_gradient<M: StochasticModel>(model: &M, x: &[f64]) -> Result<Vec<f64>> {
    weighted_gradient(model, x, true)
}

/// Exact expectation of the naive estimator that draws `z` from the prior
/// `p(z | y)`. Differs from the marginal gradient in general.
pub fn prior_expected_gradient<M: StochasticModel>(model: &M, x: &[f64]) -> Result<Vec<f64>> {
    weighted_gradient(model, x, false)
}

/// Exact conditional `p(z | x, y)` over [`assignments`] order.
pub fn posterior_probabilities<M: StochasticModel>(model: &M, x: &[f64]) -> Result<Vec<f64>> {
    let log_w = assignments(model)?
        .iter()
        .map(|z| Ok(model.nuisance_log_prior(z) + log_joint(model, x, z)?))
        .collect::<Result<Vec<f64>>>()?;
    let norm = log_sum_exp(&log_w)?;
    Ok(log_w.iter().map(|w| (w - norm).exp()).collect())
}

/// Position of `z` in [`assignments`] order.
pub fn assignment_index<M: StochasticModel>(model: &M, z: &Nuisance) -> usize {
    let mut idx = 0;
    let mut stride = 1;
    for site in 0..model.site_count() {
        idx += z.get(site) * stride;
        stride *= model.site_support(site);
    }
    idx
}
