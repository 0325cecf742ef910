//! Hidden Markov model with an unknown transition matrix.
//!
//! State `j` emits Normal(j, noise) with the noise fixed. The trace holds
//! `K·K` unconstrained entries; row `r` of the transition matrix is the
//! softmax of `x[rK..(r+1)K]`, and every entry carries a Normal(0, 10) prior.
//! The nuisance is the hidden state sequence, with a uniform initial state
//! and its transitions scored inside `log_joint`.

use rand::RngCore;

use crate::distributions::{categorical_sample, normal_sample, uniform_sample};
use crate::error::{Error, Result};
use crate::math;
use crate::model::{MarginalModel, Nuisance, SitewiseKernel, StochasticModel, TraceSpace};
use crate::rng::Rng;
use crate::scalar::{normal_logpdf_value, Scalar};

use super::PRIOR_SD;

#[derive(Clone, Debug)]
pub struct HmmModel {
    data: Vec<f64>,
    n_states: usize,
    noise: f64,
}

/// Row-major log transition matrix.
#[derive(Clone, Debug)]
pub struct HmmParams {
    pub log_transitions: Vec<f64>,
}

impl HmmModel {
    pub fn new(data: Vec<f64>, n_states: usize, noise: f64) -> Result<Self> {
        if n_states == 0 {
            return Err(Error::usage("HMM needs at least one state"));
        }
        if !(noise > 0.0 && noise.is_finite()) {
            return Err(Error::usage("HMM emission noise must be positive"));
        }
        Ok(HmmModel { data, n_states, noise })
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn n_states(&self) -> usize {
        self.n_states
    }

    pub fn noise(&self) -> f64 {
        self.noise
    }

    fn log_initial(&self) -> f64 {
        -(self.n_states as f64).ln()
    }

    fn log_transitions<S: Scalar>(&self, x: &[S]) -> Vec<S> {
        x.chunks(self.n_states).flat_map(S::log_softmax).collect()
    }

    fn prior<S: Scalar>(x: &[S]) -> S {
        let (zero, sd) = (S::constant(0.0), S::constant(PRIOR_SD));
        x.iter()
            .fold(S::constant(0.0), |acc, &v| acc + S::normal_logpdf(zero, sd, v))
    }

    fn emission<S: Scalar>(&self, state: usize, obs: f64) -> S {
        S::normal_logpdf(S::constant(state as f64), S::constant(self.noise), S::constant(obs))
    }
}

impl TraceSpace for HmmModel {
    fn dim(&self) -> usize {
        self.n_states * self.n_states
    }

    fn param_names(&self) -> Vec<String> {
        let k = self.n_states;
        (0..k * k).map(|i| format!("p{}_{}", i / k, i % k)).collect()
    }

    fn constrained(&self, x: &[f64]) -> Vec<f64> {
        let mut out = Vec::with_capacity(x.len());
        let mut row = Vec::new();
        for chunk in x.chunks(self.n_states) {
            math::softmax_into(chunk, &mut row);
            out.extend_from_slice(&row);
        }
        out
    }
}

impl SitewiseKernel for HmmModel {
    type Params = HmmParams;

    fn prepare(&self, x: &[f64]) -> HmmParams {
        let log_transitions = x
            .chunks(self.n_states)
            .flat_map(|row| math::log_softmax(row).expect("non-empty row"))
            .collect();
        HmmParams { log_transitions }
    }

    fn site_count(&self) -> usize {
        self.data.len()
    }

    fn site_support(&self, _site: usize) -> usize {
        self.n_states
    }

    fn site_log_weights(&self, p: &HmmParams, z: &Nuisance, t: usize, out: &mut Vec<f64>) {
        let k = self.n_states;
        let lt = &p.log_transitions;
        let last = self.data.len() - 1;
        out.clear();
        out.extend((0..k).map(|j| {
            let mut w = normal_logpdf_value(j as f64, self.noise, self.data[t]);
            w += if t > 0 { lt[z.get(t - 1) * k + j] } else { self.log_initial() };
            if t < last {
                w += lt[j * k + z.get(t + 1)];
            }
            w
        }));
    }
}

impl StochasticModel for HmmModel {
    fn log_joint<S: Scalar>(&self, x: &[S], z: &Nuisance) -> S {
        let k = self.n_states;
        let lt = self.log_transitions(x);
        self.data.iter().enumerate().fold(Self::prior(x), |ll, (t, &d)| {
            let s = z.get(t);
            let ll = ll + self.emission::<S>(s, d);
            if t > 0 {
                ll + lt[z.get(t - 1) * k + s]
            } else {
                ll
            }
        })
    }

    fn nuisance_log_prior(&self, _z: &Nuisance) -> f64 {
        self.log_initial()
    }

    fn sample_nuisance_prior(&self, rng: &mut Rng) -> Nuisance {
        let k = self.n_states;
        Nuisance::new(
            (0..self.data.len())
                .map(|_| ((uniform_sample(rng) * k as f64) as usize).min(k - 1))
                .collect(),
        )
    }
}

impl MarginalModel for HmmModel {
    /// Forward pass: `γₜ[j] = emit(j, yₜ) + LSE_i(γₜ₋₁[i] + log T[i][j])`.
    fn marginal_log_density<S: Scalar>(&self, x: &[S]) -> S {
        let k = self.n_states;
        let lt = self.log_transitions(x);
        let init = S::constant(self.log_initial());
        let mut gamma: Vec<S> = (0..k).map(|j| self.emission::<S>(j, self.data[0]) + init).collect();
        let mut next = Vec::with_capacity(k);
        let mut acc = Vec::with_capacity(k);
        for &d in &self.data[1..] {
            next.clear();
            for j in 0..k {
                acc.clear();
                acc.extend((0..k).map(|i| gamma[i] + lt[i * k + j]));
                next.push(self.emission::<S>(j, d) + S::log_sum_exp(&acc));
            }
            std::mem::swap(&mut gamma, &mut next);
        }
        Self::prior(x) + S::log_sum_exp(&gamma)
    }
}

/// Ground-truth transition matrix: `self_prob` on the diagonal, the rest
/// spread evenly over the other states.
pub fn sticky_transitions(k: usize, self_prob: f64) -> Vec<f64> {
    let off = if k > 1 { (1.0 - self_prob) / (k - 1) as f64 } else { 0.0 };
    (0..k * k)
        .map(|i| if i / k == i % k { if k > 1 { self_prob } else { 1.0 } } else { off })
        .collect()
}

pub const HMM_DEFAULT_SELF_PROB: f64 = 0.8;

/// Simulates `t` emissions; returns `(observations, hidden states)`.
pub fn generate_hmm<R: RngCore + ?Sized>(
    t: usize,
    k: usize,
    noise: f64,
    transitions: &[f64],
    rng: &mut R,
) -> Result<(Vec<f64>, Vec<usize>)> {
    if t == 0 || k == 0 {
        return Err(Error::usage("HMM needs t >= 1 and k >= 1"));
    }
    if transitions.len() != k * k {
        return Err(Error::usage("transition matrix must be k x k"));
    }
    let log_rows: Vec<f64> = transitions.iter().map(|p| p.ln()).collect();
    let mut states = Vec::with_capacity(t);
    let mut data = Vec::with_capacity(t);
    let mut s = ((uniform_sample(rng) * k as f64) as usize).min(k - 1);
    for step in 0..t {
        if step > 0 {
            s = categorical_sample(&log_rows[s * k..(s + 1) * k], rng)?;
        }
        states.push(s);
        data.push(normal_sample(s as f64, noise, rng)?);
    }
    Ok((data, states))
}
