//! Compensation survey with randomized response.
//!
//! Each respondent flips a fair coin: on heads they answer honestly
//! (satisfied with probability θ), on tails they answer a second fair coin.
//! The trace holds θ unconstrained, `θ = sigmoid(x₀)`, with a Normal(0, 10)
//! prior on `x₀`. Nuisance site `i` is respondent `i`'s first coin.

use std::f64::consts::LN_2;

use rand::RngCore;

use crate::distributions::uniform_sample;
use crate::error::{Error, Result};
use crate::math::sigmoid;
use crate::model::{MarginalModel, Nuisance, SitewiseKernel, StochasticModel, TraceSpace};
use crate::rng::Rng;
use crate::scalar::{bernoulli_logit_logpmf_value, bernoulli_logpmf_value, Scalar};

use super::PRIOR_SD;

pub const HEADS: usize = 1;
pub const TAILS: usize = 0;

#[derive(Clone, Debug)]
pub struct SurveyModel {
    answers: Vec<bool>,
}

impl SurveyModel {
    pub fn new(answers: Vec<bool>) -> Self {
        SurveyModel { answers }
    }

    pub fn answers(&self) -> &[bool] {
        &self.answers
    }
}

impl TraceSpace for SurveyModel {
    fn dim(&self) -> usize {
        1
    }

    fn param_names(&self) -> Vec<String> {
        vec!["theta".into()]
    }

    fn constrained(&self, x: &[f64]) -> Vec<f64> {
        vec![sigmoid(x[0])]
    }
}

impl SitewiseKernel for SurveyModel {
    /// The logit `x₀`.
    type Params = f64;

    fn prepare(&self, x: &[f64]) -> f64 {
        x[0]
    }

    fn site_count(&self) -> usize {
        self.answers.len()
    }

    fn site_support(&self, _site: usize) -> usize {
        2
    }

    fn site_log_weights(&self, logit: &f64, _z: &Nuisance, site: usize, out: &mut Vec<f64>) {
        let y = self.answers[site];
        out.clear();
        out.push(-LN_2 + bernoulli_logpmf_value(0.5, y));
        out.push(-LN_2 + bernoulli_logit_logpmf_value(*logit, y));
    }
}

impl StochasticModel for SurveyModel {
    fn log_joint<S: Scalar>(&self, x: &[S], z: &Nuisance) -> S {
        let prior = S::normal_logpdf(S::constant(0.0), S::constant(PRIOR_SD), x[0]);
        let fair = S::constant(0.5);
        self.answers.iter().enumerate().fold(prior, |ll, (i, &y)| {
            if z.get(i) == HEADS {
                ll + S::bernoulli_logit_logpmf(x[0], y)
            } else {
                ll + S::bernoulli_logpmf(fair, y)
            }
        })
    }

    fn nuisance_log_prior(&self, z: &Nuisance) -> f64 {
        -LN_2 * z.len() as f64
    }

    fn sample_nuisance_prior(&self, rng: &mut Rng) -> Nuisance {
        Nuisance::new(
            (0..self.answers.len())
                .map(|_| if uniform_sample(rng) < 0.5 { HEADS } else { TAILS })
                .collect(),
        )
    }
}

impl MarginalModel for SurveyModel {
    fn marginal_log_density<S: Scalar>(&self, x: &[S]) -> S {
        let prior = S::normal_logpdf(S::constant(0.0), S::constant(PRIOR_SD), x[0]);
        let fair = S::constant(0.5);
        let log_half = S::constant(-LN_2);
        self.answers.iter().fold(prior, |ll, &y| {
            ll + S::log_sum_exp(&[
                S::bernoulli_logit_logpmf(x[0], y) + log_half,
                S::bernoulli_logpmf(fair, y) + log_half,
            ])
        })
    }
}

/// Simulates `n` randomized responses with true satisfaction rate `theta`.
pub fn generate_survey<R: RngCore + ?Sized>(theta: f64, n: usize, rng: &mut R) -> Result<Vec<bool>> {
    if n == 0 {
        return Err(Error::usage("survey needs at least one respondent"));
    }
    if !(0.0..=1.0).contains(&theta) {
        return Err(Error::usage("theta must lie in [0, 1]"));
    }
    Ok((0..n)
        .map(|_| {
            let heads = uniform_sample(rng) < 0.5;
            let p = if heads { theta } else { 0.5 };
            uniform_sample(rng) < p
        })
        .collect())
}
