use crate::error::Result;
use crate::model::{check_trace, log_joint, log_joint_grad, StochasticModel};
use crate::nuisance::mh_sweep_prepared;
use crate::rng::Rng;

use super::hmc::{hmc_transition, HmcState};
use super::{record, Chain, RunStats, SamplerConfig, SamplerKind};

/// Alternating baseline: a sitewise MH sweep on `z`, then one HMC iteration
/// on `x` whose whole trajectory uses that same `z`.
pub fn composing_mh_hmc<M: StochasticModel>(model: &M, x0: &[f64], cfg: &SamplerConfig, rng: &mut Rng) -> Result<Chain> {
    cfg.validate()?;
    check_trace(model, x0)?;
    let mut z = model.sample_nuisance_prior(rng);
    log_joint(model, x0, &z)?;
    record(SamplerKind::ComposingMhHmc, cfg, |stats: &mut RunStats| {
        let mut x = x0.to_vec();
        let mut weights = Vec::new();
        let mut draws = Vec::with_capacity(cfg.n_samples);
        for _ in 0..cfg.n_samples {
            let params = model.prepare(&x);
            for _ in 0..cfg.sweeps {
                mh_sweep_prepared(model, &params, &mut z, rng, &mut weights)?;
            }
            let mut f = |v: &[f64]| log_joint_grad(model, v, &z);
            let mut state = HmcState::new(std::mem::take(&mut x), &mut f)?;
            let t = hmc_transition(&mut state, cfg.step_size, cfg.steps_per_sample, rng, &mut f);
            stats.accepted += usize::from(t.accepted);
            stats.divergences += usize::from(t.divergent);
            x = state.x;
            draws.push(x.clone());
        }
        Ok(draws)
    })
}
