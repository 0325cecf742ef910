//! The contract every probabilistic program implements.
//!
//! A stochastic model evaluates `log p̃(x | y, z)` for a continuous trace `x`
//! and a discrete nuisance assignment `z`, differentiably in `x`. A
//! marginalized model evaluates `log p̃(x | y)` with `z` summed out. The same
//! type usually implements both, sharing one data container and one
//! trace-to-parameter transform.

use crate::autodiff;
use crate::error::{Error, Result};
use crate::rng::Rng;
use crate::scalar::Scalar;

/// Discrete nuisance assignment, one value per site.
///
/// Site `i` takes values in `0..site_support(i)`. Boolean nuisances (coin
/// flips) use `1` for heads/true and `0` for tails/false.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Nuisance(Vec<usize>);

impl Nuisance {
    pub fn new(values: Vec<usize>) -> Self {
        Nuisance(values)
    }

    pub fn values(&self) -> &[usize] {
        &self.0
    }

    #[inline]
    pub fn get(&self, site: usize) -> usize {
        self.0[site]
    }

    #[inline]
    pub fn set(&mut self, site: usize, v: usize) {
        self.0[site] = v;
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

/// Shape of the continuous trace and its map to reported parameters.
pub trait TraceSpace {
    /// Number of unconstrained trace entries.
    fn dim(&self) -> usize;

    /// Names of the constrained parameters, in [`TraceSpace::constrained`] order.
    fn param_names(&self) -> Vec<String>;

    /// Maps an unconstrained trace to the reported (constrained) parameters.
    fn constrained(&self, x: &[f64]) -> Vec<f64>;
}

/// Full conditionals of the nuisance sites.
///
/// `site_log_weights` must depend on `z` only through sites other than the
/// queried one.
pub trait SitewiseKernel {
    /// Trace-derived quantities shared by all site conditionals.
    type Params;

    fn prepare(&self, x: &[f64]) -> Self::Params;

    fn site_count(&self) -> usize;

    fn site_support(&self, site: usize) -> usize;

    /// Writes the unnormalized log-weights `log p(z_site = v, rest | x, y)`
    /// for every `v` in the site's support into `out`.
    fn site_log_weights(&self, params: &Self::Params, z: &Nuisance, site: usize, out: &mut Vec<f64>);
}

pub trait StochasticModel: TraceSpace + SitewiseKernel {
    /// `log p̃(x | y, z)`; `z` is a constant for differentiation.
    fn log_joint<S: Scalar>(&self, x: &[S], z: &Nuisance) -> S;

    /// `log p(z | y)`, the nuisance prior.
    fn nuisance_log_prior(&self, z: &Nuisance) -> f64;

    fn sample_nuisance_prior(&self, rng: &mut Rng) -> Nuisance;
}

pub trait MarginalModel: TraceSpace {
    /// `log p̃(x | y)` with the nuisance variables summed out.
    fn marginal_log_density<S: Scalar>(&self, x: &[S]) -> S;
}

pub(crate) fn check_trace<M: TraceSpace + ?Sized>(model: &M, x: &[f64]) -> Result<()> {
    if x.len() != model.dim() {
        return Err(Error::usage(format!(
            "trace has dimension {}, model expects {}",
            x.len(),
            model.dim()
        )));
    }
    if x.iter().any(|v| !v.is_finite()) {
        return Err(Error::non_finite("trace", x));
    }
    Ok(())
}

pub(crate) fn check_nuisance<K: SitewiseKernel + ?Sized>(kernel: &K, z: &Nuisance) -> Result<()> {
    if z.len() != kernel.site_count() {
        return Err(Error::usage(format!(
            "nuisance has {} sites, model expects {}",
            z.len(),
            kernel.site_count()
        )));
    }
    for (site, &v) in z.values().iter().enumerate() {
        if v >= kernel.site_support(site) {
            return Err(Error::usage(format!("nuisance site {site} value {v} out of range")));
        }
    }
    Ok(())
}

/// Validated `log p̃(x | y, z)`.
pub fn log_joint<M: StochasticModel>(model: &M, x: &[f64], z: &Nuisance) -> Result<f64> {
    check_trace(model, x)?;
    check_nuisance(model, z)?;
    let v = model.log_joint(x, z);
    if !v.is_finite() {
        return Err(Error::non_finite("log_joint", x));
    }
    Ok(v)
}

/// `log p̃(x | y, z)` and its gradient in `x`.
pub fn log_joint_grad<M: StochasticModel>(model: &M, x: &[f64], z: &Nuisance) -> Result<(f64, Vec<f64>)> {
    check_trace(model, x)?;
    check_nuisance(model, z)?;
    autodiff::grad(x, |v| model.log_joint(v, z)).map_err(|e| relabel(e, "log_joint"))
}

/// Validated `log p̃(x | y)`.
pub fn marginal_log_density<M: MarginalModel>(model: &M, x: &[f64]) -> Result<f64> {
    check_trace(model, x)?;
    let v = model.marginal_log_density(x);
    if !v.is_finite() {
        return Err(Error::non_finite("marginal_log_density", x));
    }
    Ok(v)
}

/// `log p̃(x | y)` and its gradient in `x`.
pub fn marginal_grad<M: MarginalModel>(model: &M, x: &[f64]) -> Result<(f64, Vec<f64>)> {
    check_trace(model, x)?;
    autodiff::grad(x, |v| model.marginal_log_density(v)).map_err(|e| relabel(e, "marginal_log_density"))
}

fn relabel(e: Error, what: &str) -> Error {
    match e {
        Error::NonFinite { context, trace } => Error::NonFinite {
            context: format!("{what}: {context}"),
            trace,
        },
        other => other,
    }
}
