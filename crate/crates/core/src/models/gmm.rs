//! Gaussian mixture with unknown component means and scales.
//!
//! Trace layout: `μⱼ = x[2j]`, `σⱼ = exp(x[2j+1])`, Normal(0, 10) on every
//! entry. Nuisance site `i` is the component of observation `i`, uniform
//! a priori over the `K` components.

use rand::RngCore;

use crate::distributions::{normal_sample, uniform_sample};
use crate::error::{Error, Result};
use crate::model::{MarginalModel, Nuisance, SitewiseKernel, StochasticModel, TraceSpace};
use crate::rng::Rng;
use crate::scalar::{normal_logpdf_value, Scalar};

use super::PRIOR_SD;

#[derive(Clone, Debug)]
pub struct GmmModel {
    data: Vec<f64>,
    n_components: usize,
}

#[derive(Clone, Debug)]
pub struct GmmParams {
    pub mu: Vec<f64>,
    pub sigma: Vec<f64>,
}

impl GmmModel {
    pub fn new(data: Vec<f64>, n_components: usize) -> Result<Self> {
        if n_components == 0 {
            return Err(Error::usage("mixture needs at least one component"));
        }
        Ok(GmmModel { data, n_components })
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn n_components(&self) -> usize {
        self.n_components
    }

    fn log_weight(&self) -> f64 {
        -(self.n_components as f64).ln()
    }

    fn prior<S: Scalar>(x: &[S]) -> S {
        let (zero, sd) = (S::constant(0.0), S::constant(PRIOR_SD));
        x.iter()
            .fold(S::constant(0.0), |acc, &v| acc + S::normal_logpdf(zero, sd, v))
    }

    fn components<S: Scalar>(&self, x: &[S]) -> (Vec<S>, Vec<S>) {
        (0..self.n_components)
            .map(|j| (x[2 * j], x[2 * j + 1].exp()))
            .unzip()
    }
}

impl TraceSpace for GmmModel {
    fn dim(&self) -> usize {
        2 * self.n_components
    }

    fn param_names(&self) -> Vec<String> {
        (0..self.n_components)
            .flat_map(|j| [format!("mu{j}"), format!("sigma{j}")])
            .collect()
    }

    /// Components in ascending order of mean, removing label switching.
    fn constrained(&self, x: &[f64]) -> Vec<f64> {
        let mut comps: Vec<(f64, f64)> = (0..self.n_components)
            .map(|j| (x[2 * j], x[2 * j + 1].exp()))
            .collect();
        comps.sort_by(|a, b| a.0.total_cmp(&b.0));
        comps.into_iter().flat_map(|(m, s)| [m, s]).collect()
    }
}

impl SitewiseKernel for GmmModel {
    type Params = GmmParams;

    fn prepare(&self, x: &[f64]) -> GmmParams {
        let (mu, sigma) = self.components(x);
        GmmParams { mu, sigma }
    }

    fn site_count(&self) -> usize {
        self.data.len()
    }

    fn site_support(&self, _site: usize) -> usize {
        self.n_components
    }

    fn site_log_weights(&self, p: &GmmParams, _z: &Nuisance, site: usize, out: &mut Vec<f64>) {
        let d = self.data[site];
        let lw = self.log_weight();
        out.clear();
        out.extend(
            p.mu.iter()
                .zip(&p.sigma)
                .map(|(&m, &s)| lw + normal_logpdf_value(m, s, d)),
        );
    }
}

impl StochasticModel for GmmModel {
    fn log_joint<S: Scalar>(&self, x: &[S], z: &Nuisance) -> S {
        let (mu, sigma) = self.components(x);
        self.data.iter().enumerate().fold(Self::prior(x), |ll, (i, &d)| {
            let j = z.get(i);
            ll + S::normal_logpdf(mu[j], sigma[j], S::constant(d))
        })
    }

    fn nuisance_log_prior(&self, z: &Nuisance) -> f64 {
        self.log_weight() * z.len() as f64
    }

    fn sample_nuisance_prior(&self, rng: &mut Rng) -> Nuisance {
        let k = self.n_components;
        Nuisance::new(
            (0..self.data.len())
                .map(|_| ((uniform_sample(rng) * k as f64) as usize).min(k - 1))
                .collect(),
        )
    }
}

impl MarginalModel for GmmModel {
    fn marginal_log_density<S: Scalar>(&self, x: &[S]) -> S {
        let (mu, sigma) = self.components(x);
        let lw = S::constant(self.log_weight());
        let mut terms = Vec::with_capacity(self.n_components);
        self.data.iter().fold(Self::prior(x), |ll, &d| {
            terms.clear();
            terms.extend(
                mu.iter()
                    .zip(&sigma)
                    .map(|(&m, &s)| S::normal_logpdf(m, s, S::constant(d)) + lw),
            );
            ll + S::log_sum_exp(&terms)
        })
    }
}

/// Default generating components: means (−2, 2), unit scales.
pub const GMM_DEFAULT_MEANS: [f64; 2] = [-2.0, 2.0];
pub const GMM_DEFAULT_SDS: [f64; 2] = [1.0, 1.0];

/// Draws `n` points from an equal-weight mixture of normals.
pub fn generate_gmm<R: RngCore + ?Sized>(n: usize, means: &[f64], sds: &[f64], rng: &mut R) -> Result<Vec<f64>> {
    if n == 0 {
        return Err(Error::usage("mixture sample needs at least one point"));
    }
    if means.is_empty() || means.len() != sds.len() {
        return Err(Error::usage("means and sds must be non-empty and of equal length"));
    }
    let k = means.len();
    (0..n)
        .map(|_| {
            let j = ((uniform_sample(rng) * k as f64) as usize).min(k - 1);
            normal_sample(means[j], sds[j], rng)
        })
        .collect()
}
