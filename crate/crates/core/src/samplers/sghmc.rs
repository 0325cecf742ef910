use crate::distributions::standard_normal;
use crate::error::{Error, Result};
use crate::estimator::{EstimatorConfig, GradientEstimator};
use crate::model::{check_trace, log_joint, marginal_grad, MarginalModel, StochasticModel};
use crate::nuisance::NuisanceKernel;
use crate::rng::Rng;

use super::{record, Chain, RunStats, SamplerConfig, SamplerKind};

/// Anything that can supply (an estimate of) `∇ log π(x)`.
pub trait GradientSource {
    fn dim(&self) -> usize;

    fn gradient(&mut self, x: &[f64], rng: &mut Rng) -> Result<Vec<f64>>;
}

impl<M: StochasticModel> GradientSource for GradientEstimator<'_, M> {
    fn dim(&self) -> usize {
        self.model_dim()
    }

    fn gradient(&mut self, x: &[f64], rng: &mut Rng) -> Result<Vec<f64>> {
        GradientEstimator::gradient(self, x, rng).map(|(_, g)| g)
    }
}

/// Exact gradient of a marginalized model.
pub struct ExactGradient<'m, M>(pub &'m M);

impl<M: MarginalModel> GradientSource for ExactGradient<'_, M> {
    fn dim(&self) -> usize {
        self.0.dim()
    }

    fn gradient(&mut self, x: &[f64], _rng: &mut Rng) -> Result<Vec<f64>> {
        marginal_grad(self.0, x).map(|(_, g)| g)
    }
}

/// Stochastic-gradient HMC with friction and no accept/reject step.
///
/// With learning rate `η = ε²` and friction `α`, each step applies
/// `v ← v + η ĝ(x) − α v + N(0, 2αη)` then `x ← x + v`, where `ĝ` is the
/// gradient estimate. The velocity is redrawn from `N(0, η)` at the start of
/// every recorded draw.
pub fn sghmc_with<G: GradientSource>(source: &mut G, x0: &[f64], cfg: &SamplerConfig, rng: &mut Rng) -> Result<Chain> {
    cfg.validate()?;
    if x0.len() != source.dim() {
        return Err(Error::usage("initial trace has the wrong dimension"));
    }
    let eps = cfg.step_size;
    let eta = eps * eps;
    let alpha = cfg.friction;
    let noise_sd = (2.0 * alpha * eta).sqrt();
    record(SamplerKind::Sghmc, cfg, |_: &mut RunStats| {
        let mut x = x0.to_vec();
        let mut v = vec![0.0; x.len()];
        let mut draws = Vec::with_capacity(cfg.n_samples);
        let mut step_index = 0usize;
        for _ in 0..cfg.n_samples {
            v.iter_mut().for_each(|vi| *vi = eps * standard_normal(rng));
            for _ in 0..cfg.steps_per_sample {
                let g = source
                    .gradient(&x, rng)
                    .map_err(|e| Error::ChainAborted { step: step_index, reason: e.to_string() })?;
                for ((vi, xi), gi) in v.iter_mut().zip(x.iter_mut()).zip(&g) {
                    *vi += eta * gi - alpha * *vi + noise_sd * standard_normal(rng);
                    *xi += *vi;
                }
                if x.iter().chain(&v).any(|a| !a.is_finite()) {
                    return Err(Error::ChainAborted {
                        step: step_index,
                        reason: "position or velocity became non-finite".into(),
                    });
                }
                step_index += 1;
            }
            draws.push(x.clone());
        }
        Ok(draws)
    })
}

/// sgHMC on a stochastic model using the unbiased gradient estimator with
/// `cfg.grad_samples` nuisance draws per estimate and a Gibbs kernel.
///
/// The nuisance chain starts from a prior draw and persists for the run.
pub fn sghmc<M: StochasticModel>(model: &M, x0: &[f64], cfg: &SamplerConfig, rng: &mut Rng) -> Result<Chain> {
    check_trace(model, x0)?;
    let z0 = model.sample_nuisance_prior(rng);
    log_joint(model, x0, &z0)?;
    let est_cfg = EstimatorConfig {
        n_samples: cfg.grad_samples,
        kernel: NuisanceKernel::Gibbs,
        sweeps: cfg.sweeps,
    };
    let mut est = GradientEstimator::new(model, est_cfg, z0)?;
    sghmc_with(&mut est, x0, cfg, rng)
}
