//! Sitewise kernels drawing `z` from `p(z | x, y)`.
//!
//! Both sweeps visit sites in ascending order and leave the conditional
//! `p(z | x, y)` invariant. Gibbs draws each site from its exact full
//! conditional; the Metropolis sweep proposes a uniformly chosen different
//! value and accepts with the usual ratio.

use crate::distributions::{categorical_sample, uniform_sample};
use crate::error::{Error, Result};
use crate::model::{check_nuisance, check_trace, Nuisance, SitewiseKernel, StochasticModel, TraceSpace};
use crate::rng::Rng;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum NuisanceKernel {
    #[default]
    Gibbs,
    Metropolis,
}

pub fn gibbs_sweep<K: SitewiseKernel + TraceSpace>(kernel: &K, x: &[f64], z: &mut Nuisance, rng: &mut Rng) -> Result<()> {
    check_trace(kernel, x)?;
    check_nuisance(kernel, z)?;
    let params = kernel.prepare(x);
    gibbs_sweep_prepared(kernel, &params, z, rng, &mut Vec::new())
}

pub fn mh_sweep<K: SitewiseKernel + TraceSpace>(kernel: &K, x: &[f64], z: &mut Nuisance, rng: &mut Rng) -> Result<()> {
    check_trace(kernel, x)?;
    check_nuisance(kernel, z)?;
    let params = kernel.prepare(x);
    mh_sweep_prepared(kernel, &params, z, rng, &mut Vec::new())
}

pub(crate) fn gibbs_sweep_prepared<K: SitewiseKernel + ?Sized>(
    kernel: &K,
    params: &K::Params,
    z: &mut Nuisance,
    rng: &mut Rng,
    weights: &mut Vec<f64>,
) -> Result<()> {
    for site in 0..kernel.site_count() {
        kernel.site_log_weights(params, z, site, weights);
        let v = categorical_sample(weights, rng).map_err(|_| dead_site(site, weights))?;
        z.set(site, v);
    }
    Ok(())
}

pub(crate) fn mh_sweep_prepared<K: SitewiseKernel + ?Sized>(
    kernel: &K,
    params: &K::Params,
    z: &mut Nuisance,
    rng: &mut Rng,
    weights: &mut Vec<f64>,
) -> Result<()> {
    for site in 0..kernel.site_count() {
        let support = kernel.site_support(site);
        if support < 2 {
            continue;
        }
        kernel.site_log_weights(params, z, site, weights);
        if weights.iter().all(|w| *w == f64::NEG_INFINITY) {
            return Err(dead_site(site, weights));
        }
        let current = z.get(site);
        let draw = ((uniform_sample(rng) * (support - 1) as f64) as usize).min(support - 2);
        let proposal = if draw >= current { draw + 1 } else { draw };
        let log_ratio = weights[proposal] - weights[current];
        // a NaN ratio (both -inf) rejects
        if log_ratio >= 0.0 || uniform_sample(rng).ln() < log_ratio {
            z.set(site, proposal);
        }
    }
    Ok(())
}

fn dead_site(site: usize, weights: &[f64]) -> Error {
    Error::non_finite(format!("conditional of nuisance site {site} has no mass"), weights)
}

/// One or more full sweeps of `kernel` over `z`, updating it in place.
pub fn resample_nuisance<M: StochasticModel>(
    model: &M,
    x: &[f64],
    z: &mut Nuisance,
    rng: &mut Rng,
    kernel: NuisanceKernel,
    sweeps: usize,
) -> Result<()> {
    check_trace(model, x)?;
    check_nuisance(model, z)?;
    let params = model.prepare(x);
    let mut weights = Vec::new();
    for _ in 0..sweeps {
        match kernel {
            NuisanceKernel::Gibbs => gibbs_sweep_prepared(model, &params, z, rng, &mut weights)?,
            NuisanceKernel::Metropolis => mh_sweep_prepared(model, &params, z, rng, &mut weights)?,
        }
    }
    Ok(())
}
