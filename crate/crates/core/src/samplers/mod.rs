//! The three inference schemes.
//!
//! * [`hmc`]: HMC with Metropolis correction on a marginalized model.
//! * [`sghmc`]: stochastic-gradient HMC driven by the unbiased estimator.
//! * [`composing_mh_hmc`]: sitewise MH on `z` alternating with HMC on `x`
//!   at fixed `z`.
//!
//! All schemes record one draw per block of `steps_per_sample` gradient
//! steps and fully resample the momentum at the start of every block.

mod composing;
mod hmc;
mod sghmc;

use std::time::Instant;

pub use composing::composing_mh_hmc;
pub use hmc::{hamiltonian, hmc, hmc_with, leapfrog, HmcState, Transition};
pub use sghmc::{sghmc, sghmc_with, ExactGradient, GradientSource};

use crate::counters::{self, OpCounts};
use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SamplerConfig {
    /// Draws recorded per chain.
    pub n_samples: usize,
    /// Leapfrog steps (HMC) or gradient-estimate steps (sgHMC) per draw.
    pub steps_per_sample: usize,
    /// Leapfrog step `ε`; sgHMC uses learning rate `ε²`.
    pub step_size: f64,
    /// sgHMC friction `α`, the fraction of velocity removed per step.
    pub friction: f64,
    /// `z` draws averaged per sgHMC gradient estimate.
    pub grad_samples: usize,
    /// Kernel sweeps over `z` per draw.
    pub sweeps: usize,
    pub seed: u64,
}

impl Default for SamplerConfig {
    fn default() -> Self {
        SamplerConfig {
            n_samples: 10_000,
            steps_per_sample: 10,
            step_size: 0.1,
            friction: DEFAULT_FRICTION,
            grad_samples: 1,
            sweeps: 1,
            seed: 0,
        }
    }
}

/// Default sgHMC friction.
pub const DEFAULT_FRICTION: f64 = 0.1;

impl SamplerConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n_samples == 0 {
            return Err(Error::usage("n_samples must be at least 1"));
        }
        if self.steps_per_sample == 0 {
            return Err(Error::usage("steps_per_sample must be at least 1"));
        }
        if !(self.step_size > 0.0 && self.step_size.is_finite()) {
            return Err(Error::usage("step_size must be positive"));
        }
        if !(0.0..=1.0).contains(&self.friction) {
            return Err(Error::usage("friction must lie in [0, 1]"));
        }
        if self.grad_samples == 0 {
            return Err(Error::usage("grad_samples must be at least 1"));
        }
        if self.sweeps == 0 {
            return Err(Error::usage("sweeps must be at least 1"));
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum SamplerKind {
    Hmc,
    Sghmc,
    ComposingMhHmc,
}

/// Output of one sampler run.
#[derive(Clone, Debug)]
pub struct Chain {
    pub kind: SamplerKind,
    pub config: SamplerConfig,
    /// Unconstrained traces, one per recorded draw.
    pub draws: Vec<Vec<f64>>,
    /// Seconds spent sampling, gradient evaluation included.
    pub wall_time: f64,
    /// Accepted proposals (HMC-based schemes).
    pub accepted: usize,
    /// Rejected proposals whose energy error exceeded the divergence bound.
    pub divergences: usize,
    pub ops: OpCounts,
}

impl Chain {
    pub fn acceptance_rate(&self) -> f64 {
        self.accepted as f64 / self.draws.len().max(1) as f64
    }
}

#[derive(Default)]
struct RunStats {
    accepted: usize,
    divergences: usize,
}

/// Times and counts `body`, then packages its draws.
fn record<F>(kind: SamplerKind, config: &SamplerConfig, body: F) -> Result<Chain>
where
    F: FnOnce(&mut RunStats) -> Result<Vec<Vec<f64>>>,
{
    let mut stats = RunStats::default();
    let start = Instant::now();
    let (draws, ops) = counters::measure(|| body(&mut stats));
    let wall_time = start.elapsed().as_secs_f64();
    let draws = draws?;
    debug_assert!(draws.iter().all(|d| d.iter().all(|v| v.is_finite())));
    Ok(Chain {
        kind,
        config: *config,
        draws,
        wall_time,
        accepted: stats.accepted,
        divergences: stats.divergences,
        ops,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{log_joint_grad, marginal_grad, Nuisance};
    use crate::models::{GmmModel, TwoNormalsModel};
    use crate::rng::Rng;
    use crate::StochasticModel;

    fn std_normal(x: &[f64]) -> Result<(f64, Vec<f64>)> {
        Ok((-0.5 * x.iter().map(|v| v * v).sum::<f64>(), x.iter().map(|v| -v).collect()))
    }

    fn cfg(n: usize, step: f64) -> SamplerConfig {
        SamplerConfig {
            n_samples: n,
            step_size: step,
            ..SamplerConfig::default()
        }
    }

    fn gmm() -> GmmModel {
        let data = vec![-2.3, -1.7, -2.1, -0.4, 1.9, 2.2, 2.6, 1.4, -1.2, 0.8];
        GmmModel::new(data, 2).unwrap()
    }

    #[test]
    fn hmc_samples_standard_normal() {
        let mut rng = Rng::new(1, 0);
        let chain = hmc_with(std_normal, &[3.0, -3.0], &cfg(6000, 0.2), &mut rng).unwrap();
        assert_eq!(chain.draws.len(), 6000);
        assert!(chain.acceptance_rate() > 0.9);
        for j in 0..2 {
            let col: Vec<f64> = chain.draws[600..].iter().map(|d| d[j]).collect();
            let (m, s) = crate::diagnostics::mean_sd(&col);
            assert!(m.abs() < 0.1, "mean {m}");
            assert!((s - 1.0).abs() < 0.07, "sd {s}");
        }
    }

    #[test]
    fn leapfrog_is_reversible() {
        let model = gmm();
        let mut f = |x: &[f64]| marginal_grad(&model, x);
        let x0 = vec![-1.5, 0.1, 1.8, -0.2];
        let mut state = HmcState::new(x0.clone(), &mut f).unwrap();
        let mut p = vec![0.3, -0.8, 0.5, 1.1];
        let h0 = hamiltonian(state.log_density, &p);
        leapfrog(&mut state, &mut p, 0.01, 50, &mut f).unwrap();
        let h1 = hamiltonian(state.log_density, &p);
        p.iter_mut().for_each(|v| *v = -*v);
        leapfrog(&mut state, &mut p, 0.01, 50, &mut f).unwrap();
        let h2 = hamiltonian(state.log_density, &p);
        for (a, b) in state.x.iter().zip(&x0) {
            assert!((a - b).abs() < 1e-10);
        }
        assert!(((h1 - h0) + (h2 - h1)).abs() < 1e-10);
    }

    /// Median |ΔH| over trajectories of total time `0.01`.
    fn median_energy_error(step: f64) -> f64 {
        let n_steps = (0.01 / step).round() as usize;
        let model = gmm();
        let mut f = |x: &[f64]| marginal_grad(&model, x);
        let mut rng = Rng::new(3, 0);
        let mut errs: Vec<f64> = (0..200)
            .map(|_| {
                let x0: Vec<f64> = (0..4).map(|j| if j % 2 == 0 { 2.0 * rng.uniform() - 1.0 } else { 0.0 }).collect();
                let mut state = HmcState::new(x0, &mut f).unwrap();
                let mut p: Vec<f64> = (0..4).map(|_| crate::distributions::standard_normal(&mut rng)).collect();
                let h0 = hamiltonian(state.log_density, &p);
                leapfrog(&mut state, &mut p, step, n_steps, &mut f).unwrap();
                (hamiltonian(state.log_density, &p) - h0).abs()
            })
            .collect();
        errs.sort_by(f64::total_cmp);
        errs[errs.len() / 2]
    }

    #[test]
    fn leapfrog_energy_error_is_second_order() {
        let e1 = median_energy_error(1e-3);
        let e2 = median_energy_error(5e-4);
        assert!(e1 < 0.01, "{e1}");
        let ratio = e1 / e2;
        assert!((3.0..5.0).contains(&ratio), "ratio {ratio}");
    }

    #[test]
    fn divergent_proposals_are_counted() {
        let mut rng = Rng::new(2, 0);
        let chain = hmc_with(std_normal, &[0.5], &cfg(200, 5.0), &mut rng).unwrap();
        assert!(chain.divergences > 0);
        assert!(chain.draws.iter().all(|d| d[0].is_finite()));
    }

    #[test]
    fn invalid_config_rejected() {
        let mut rng = Rng::new(0, 0);
        for bad in [cfg(10, 0.0), cfg(10, -1.0), cfg(0, 0.1), SamplerConfig { steps_per_sample: 0, ..cfg(10, 0.1) }] {
            assert!(matches!(hmc_with(std_normal, &[0.0], &bad, &mut rng), Err(Error::Usage(_))));
        }
    }

    #[test]
    fn composing_with_single_valued_nuisance_is_hmc() {
        let model = GmmModel::new(vec![0.3, -0.5, 1.2, 0.1], 1).unwrap();
        let c = cfg(300, 0.1);
        let x0 = [0.2, -0.1];
        let a = composing_mh_hmc(&model, &x0, &c, &mut Rng::new(5, 1)).unwrap();
        let mut rng = Rng::new(5, 1);
        let z: Nuisance = model.sample_nuisance_prior(&mut rng);
        let b = hmc_with(|x| log_joint_grad(&model, x, &z), &x0, &c, &mut rng).unwrap();
        assert_eq!(a.draws, b.draws);
        assert_eq!(a.accepted, b.accepted);
    }

    #[test]
    fn sghmc_visits_both_modes() {
        let mut rng = Rng::new(11, 0);
        let c = SamplerConfig {
            n_samples: 10_000,
            step_size: 0.1,
            ..SamplerConfig::default()
        };
        let chain = sghmc(&TwoNormalsModel, &[0.0], &c, &mut rng).unwrap();
        let pos = chain.draws.iter().filter(|d| d[0] > 0.0).count() as f64 / 1e4;
        assert!((0.4..=0.6).contains(&pos), "{pos}");
    }

    #[test]
    fn sghmc_with_exact_gradient_targets_density() {
        let mut rng = Rng::new(4, 0);
        struct Normal;
        impl GradientSource for Normal {
            fn dim(&self) -> usize {
                1
            }
            fn gradient(&mut self, x: &[f64], _: &mut Rng) -> Result<Vec<f64>> {
                Ok(vec![-x[0]])
            }
        }
        let chain = sghmc_with(&mut Normal, &[0.0], &cfg(20_000, 0.1), &mut rng).unwrap();
        let col: Vec<f64> = chain.draws[2000..].iter().map(|d| d[0]).collect();
        let (m, s) = crate::diagnostics::mean_sd(&col);
        assert!(m.abs() < 0.05 && (s - 1.0).abs() < 0.05, "{m} {s}");
    }

    #[test]
    fn sghmc_energy_error_is_first_order_without_friction() {
        // friction 0 and the exact gradient give symplectic Euler
        fn max_energy_error(step: f64) -> f64 {
            let n = (1.0 / step).round() as usize;
            let (mut x, mut v) = (1.0f64, 0.0f64);
            let eta = step * step;
            let h = |x: f64, v: f64| 0.5 * x * x + 0.5 * (v / step).powi(2);
            let h0 = h(x, v);
            let mut worst = 0.0f64;
            for _ in 0..n {
                v += -eta * x;
                x += v;
                worst = worst.max((h(x, v) - h0).abs());
            }
            worst
        }
        let ratio = max_energy_error(0.01) / max_energy_error(0.005);
        assert!((1.8..2.2).contains(&ratio), "{ratio}");
    }

    #[test]
    fn sghmc_aborts_on_overflow() {
        struct Blowup;
        impl GradientSource for Blowup {
            fn dim(&self) -> usize {
                1
            }
            fn gradient(&mut self, x: &[f64], _: &mut Rng) -> Result<Vec<f64>> {
                Ok(vec![x[0] * 1e200])
            }
        }
        let mut rng = Rng::new(0, 0);
        let err = sghmc_with(&mut Blowup, &[1.0], &cfg(10, 0.5), &mut rng).unwrap_err();
        assert!(matches!(err, Error::ChainAborted { .. }), "{err:?}");
    }
}
