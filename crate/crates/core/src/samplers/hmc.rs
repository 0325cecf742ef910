use crate::distributions::{standard_normal, uniform_sample};
use crate::error::{Error, Result};
use crate::model::{check_trace, marginal_grad, MarginalModel};
use crate::rng::Rng;

use super::{record, Chain, RunStats, SamplerConfig, SamplerKind};

/// Energy errors beyond this mark a trajectory as divergent.
pub const DIVERGENCE_THRESHOLD: f64 = 1000.0;

/// Position with its cached log-density and gradient.
#[derive(Clone, Debug)]
pub struct HmcState {
    pub x: Vec<f64>,
    pub log_density: f64,
    pub grad: Vec<f64>,
}

impl HmcState {
    pub fn new<F>(x: Vec<f64>, f: &mut F) -> Result<Self>
    where
        F: FnMut(&[f64]) -> Result<(f64, Vec<f64>)>,
    {
        let (log_density, grad) = f(&x)?;
        Ok(HmcState { x, log_density, grad })
    }
}

/// `H(x, p) = −log π(x) + |p|² / 2`, identity mass matrix.
pub fn hamiltonian(log_density: f64, p: &[f64]) -> f64 {
    -log_density + 0.5 * p.iter().map(|v| v * v).sum::<f64>()
}

/// Runs `n_steps` leapfrog steps of size `step` from `state` with momentum
/// `p`, both updated in place. `f` returns the log-density and its gradient.
pub fn leapfrog<F>(state: &mut HmcState, p: &mut [f64], step: f64, n_steps: usize, f: &mut F) -> Result<()>
where
    F: FnMut(&[f64]) -> Result<(f64, Vec<f64>)>,
{
    let half = 0.5 * step;
    for _ in 0..n_steps {
        p.iter_mut().zip(&state.grad).for_each(|(pi, g)| *pi += half * g);
        state.x.iter_mut().zip(p.iter()).for_each(|(xi, pi)| *xi += step * pi);
        let (lp, g) = f(&state.x)?;
        state.log_density = lp;
        state.grad = g;
        p.iter_mut().zip(&state.grad).for_each(|(pi, g)| *pi += half * g);
    }
    Ok(())
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Transition {
    pub accepted: bool,
    pub divergent: bool,
    /// `H(end) − H(start)`; infinite when the trajectory left the domain.
    pub energy_change: f64,
}

/// One HMC iteration: fresh momentum, a trajectory, and an MH accept step.
pub(crate) fn hmc_transition<F>(state: &mut HmcState, step: f64, n_steps: usize, rng: &mut Rng, f: &mut F) -> Transition
where
    F: FnMut(&[f64]) -> Result<(f64, Vec<f64>)>,
{
    let mut p: Vec<f64> = (0..state.x.len()).map(|_| standard_normal(rng)).collect();
    let h0 = hamiltonian(state.log_density, &p);
    let mut proposal = state.clone();
    let energy_change = match leapfrog(&mut proposal, &mut p, step, n_steps, f) {
        Ok(()) => hamiltonian(proposal.log_density, &p) - h0,
        Err(_) => f64::INFINITY,
    };
    let divergent = !energy_change.is_finite() || energy_change.abs() > DIVERGENCE_THRESHOLD;
    // always consume the uniform so streams stay aligned across outcomes
    let u = uniform_sample(rng);
    let accepted = !divergent && u.ln() < -energy_change;
    if accepted {
        *state = proposal;
    }
    Transition {
        accepted,
        divergent,
        energy_change,
    }
}

/// HMC on an arbitrary differentiable log-density.
pub fn hmc_with<F>(mut f: F, x0: &[f64], cfg: &SamplerConfig, rng: &mut Rng) -> Result<Chain>
where
    F: FnMut(&[f64]) -> Result<(f64, Vec<f64>)>,
{
    cfg.validate()?;
    record(SamplerKind::Hmc, cfg, |stats: &mut RunStats| {
        let mut state = HmcState::new(x0.to_vec(), &mut f)?;
        let mut draws = Vec::with_capacity(cfg.n_samples);
        for _ in 0..cfg.n_samples {
            let t = hmc_transition(&mut state, cfg.step_size, cfg.steps_per_sample, rng, &mut f);
            stats.accepted += usize::from(t.accepted);
            stats.divergences += usize::from(t.divergent);
            draws.push(state.x.clone());
        }
        Ok(draws)
    })
}

/// HMC on the marginalized model with exact gradients.
pub fn hmc<M: MarginalModel>(model: &M, x0: &[f64], cfg: &SamplerConfig, rng: &mut Rng) -> Result<Chain> {
    check_trace(model, x0)?;
    if let Err(e) = marginal_grad(model, x0) {
        return Err(Error::usage(format!("initial point is not in the support: {e}")));
    }
    hmc_with(|x| marginal_grad(model, x), x0, cfg, rng)
}
