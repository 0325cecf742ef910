//! One-dimensional illustration: a fair coin selects N(1, 0.5) or N(−1, 0.5).

use std::f64::consts::LN_2;

use crate::distributions::uniform_sample;
use crate::model::{MarginalModel, Nuisance, SitewiseKernel, StochasticModel, TraceSpace};
use crate::rng::Rng;
use crate::scalar::{normal_logpdf_value, Scalar};

pub const COMPONENT_SD: f64 = 0.5;

#[derive(Clone, Copy, Debug, Default)]
pub struct TwoNormalsModel;

impl TwoNormalsModel {
    /// Component mean for coin value `z` (1 = heads).
    pub fn mean(z: usize) -> f64 {
        if z == 1 {
            1.0
        } else {
            -1.0
        }
    }
}

impl TraceSpace for TwoNormalsModel {
    fn dim(&self) -> usize {
        1
    }

    fn param_names(&self) -> Vec<String> {
        vec!["x".into()]
    }

    fn constrained(&self, x: &[f64]) -> Vec<f64> {
        x.to_vec()
    }
}

impl SitewiseKernel for TwoNormalsModel {
    type Params = f64;

    fn prepare(&self, x: &[f64]) -> f64 {
        x[0]
    }

    fn site_count(&self) -> usize {
        1
    }

    fn site_support(&self, _site: usize) -> usize {
        2
    }

    fn site_log_weights(&self, x: &f64, _z: &Nuisance, _site: usize, out: &mut Vec<f64>) {
        out.clear();
        out.extend((0..2).map(|z| -LN_2 + normal_logpdf_value(Self::mean(z), COMPONENT_SD, *x)));
    }
}

impl StochasticModel for TwoNormalsModel {
    fn log_joint<S: Scalar>(&self, x: &[S], z: &Nuisance) -> S {
        S::normal_logpdf(S::constant(Self::mean(z.get(0))), S::constant(COMPONENT_SD), x[0])
    }

    fn nuisance_log_prior(&self, _z: &Nuisance) -> f64 {
        -LN_2
    }

    fn sample_nuisance_prior(&self, rng: &mut Rng) -> Nuisance {
        Nuisance::new(vec![usize::from(uniform_sample(rng) < 0.5)])
    }
}

impl MarginalModel for TwoNormalsModel {
    fn marginal_log_density<S: Scalar>(&self, x: &[S]) -> S {
        let half = S::constant(-LN_2);
        let sd = S::constant(COMPONENT_SD);
        S::log_sum_exp(&[
            S::normal_logpdf(S::constant(1.0), sd, x[0]) + half,
            S::normal_logpdf(S::constant(-1.0), sd, x[0]) + half,
        ])
    }
}
