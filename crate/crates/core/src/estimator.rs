//! Unbiased stochastic gradient of the marginal log-density.
//!
//! For a stochastic model, `∇ₓ log p̃(x | y)` equals the expectation of
//! `∇ₓ log p̃(x | y, z)` under the conditional `p(z | x, y)`. The estimator
//! draws `z` from that conditional with a sitewise MCMC sweep and averages the
//! per-draw gradients. The `z`-chain persists across calls: each estimate
//! starts from the assignment the previous one ended on.

use crate::error::{Error, Result};
use crate::model::{check_nuisance, check_trace, log_joint_grad, Nuisance, StochasticModel};
use crate::nuisance::{gibbs_sweep_prepared, mh_sweep_prepared, NuisanceKernel};
use crate::rng::Rng;

#[derive(Clone, Debug, PartialEq)]
pub struct GradientEstimate {
    pub grad: Vec<f64>,
    /// `log p̃(x | y, z)` at the last drawn `z`.
    pub log_joint: f64,
    /// The last drawn assignment; pass it to the next call.
    pub z: Nuisance,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct EstimatorConfig {
    /// Number of `z` draws averaged per estimate.
    pub n_samples: usize,
    pub kernel: NuisanceKernel,
    /// Full sweeps of the kernel per `z` draw.
    pub sweeps: usize,
}

impl Default for EstimatorConfig {
    fn default() -> Self {
        EstimatorConfig {
            n_samples: 1,
            kernel: NuisanceKernel::Gibbs,
            sweeps: 1,
        }
    }
}

impl EstimatorConfig {
    pub fn with_samples(n_samples: usize) -> Self {
        EstimatorConfig {
            n_samples,
            ..Default::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_samples == 0 {
            return Err(Error::usage("gradient estimate needs at least one sample"));
        }
        if self.sweeps == 0 {
            return Err(Error::usage("nuisance resampling needs at least one sweep"));
        }
        Ok(())
    }
}

/// Gradient estimator owning the persistent nuisance chain of one sampler.
pub struct GradientEstimator<'m, M> {
    model: &'m M,
    config: EstimatorConfig,
    z: Nuisance,
    weights: Vec<f64>,
}

impl<'m, M: StochasticModel> GradientEstimator<'m, M> {
    pub fn new(model: &'m M, config: EstimatorConfig, z0: Nuisance) -> Result<Self> {
        config.validate()?;
        check_nuisance(model, &z0)?;
        Ok(GradientEstimator {
            model,
            config,
            z: z0,
            weights: Vec::new(),
        })
    }

    pub fn nuisance(&self) -> &Nuisance {
        &self.z
    }

    pub fn config(&self) -> &EstimatorConfig {
        &self.config
    }

    pub(crate) fn model_dim(&self) -> usize {
        self.model.dim()
    }

    fn redraw(&mut self, params: &M::Params, rng: &mut Rng) -> Result<()> {
        for _ in 0..self.config.sweeps {
            match self.config.kernel {
                NuisanceKernel::Gibbs => gibbs_sweep_prepared(self.model, params, &mut self.z, rng, &mut self.weights)?,
                NuisanceKernel::Metropolis => mh_sweep_prepared(self.model, params, &mut self.z, rng, &mut self.weights)?,
            }
        }
        Ok(())
    }

    /// Averages `n_samples` gradients, redrawing `z | x` before each.
    pub fn estimate(&mut self, x: &[f64], rng: &mut Rng) -> Result<GradientEstimate> {
        let (log_joint, grad) = self.gradient(x, rng)?;
        Ok(GradientEstimate {
            grad,
            log_joint,
            z: self.z.clone(),
        })
    }

    /// Returns `(log p̃(x|y,z_last), averaged gradient)`.
    pub fn gradient(&mut self, x: &[f64], rng: &mut Rng) -> Result<(f64, Vec<f64>)> {
        check_trace(self.model, x)?;
        let params = self.model.prepare(x);
        let n = self.config.n_samples;
        let mut sum = vec![0.0; x.len()];
        let mut last = 0.0;
        for _ in 0..n {
            self.redraw(&params, rng)?;
            let (lj, g) = log_joint_grad(self.model, x, &self.z)?;
            for (s, gi) in sum.iter_mut().zip(&g) {
                *s += gi;
            }
            last = lj;
        }
        let scale = 1.0 / n as f64;
        sum.iter_mut().for_each(|s| *s *= scale);
        Ok((last, sum))
    }

    /// Same as [`GradientEstimator::gradient`] but draws `z` from the prior
    /// `p(z | y)`, ignoring `x`. This is the biased naive estimator, kept
    /// only to demonstrate its bias.
    #[cfg(test)]
    pub(crate) fn naive_gradient(&mut self, x: &[f64], rng: &mut Rng) -> Result<Vec<f64>> {
        let n = self.config.n_samples;
        let mut sum = vec![0.0; x.len()];
        for _ in 0..n {
            self.z = self.model.sample_nuisance_prior(rng);
            let (_, g) = log_joint_grad(self.model, x, &self.z)?;
            sum.iter_mut().zip(&g).for_each(|(s, gi)| *s += gi);
        }
        Ok(sum.into_iter().map(|s| s / n as f64).collect())
    }
}

/// One-shot form: averages `n_samples` gradients starting the nuisance chain
/// from `z`, using one Gibbs sweep per draw.
pub fn estimate_gradient<M: StochasticModel>(
    model: &M,
    x: &[f64],
    z: &Nuisance,
    n_samples: usize,
    rng: &mut Rng,
) -> Result<GradientEstimate> {
    let mut est = GradientEstimator::new(model, EstimatorConfig::with_samples(n_samples), z.clone())?;
    est.estimate(x, rng)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::marginal_grad;
    use crate::models::{GmmModel, SurveyModel, TwoNormalsModel};

    fn mean_and_se(xs: &[f64]) -> (f64, f64) {
        let n = xs.len() as f64;
        let m = xs.iter().sum::<f64>() / n;
        let v = xs.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (n - 1.0);
        (m, (v / n).sqrt())
    }

    fn single_draws<M: StochasticModel>(m: &M, x: &[f64], n: usize, samples: usize, seed: u64) -> Vec<Vec<f64>> {
        let mut rng = Rng::new(seed, 0);
        let z0 = m.sample_nuisance_prior(&mut rng);
        let mut est = GradientEstimator::new(m, EstimatorConfig::with_samples(samples), z0).unwrap();
        (0..n).map(|_| est.gradient(x, &mut rng).unwrap().1).collect()
    }

    #[test]
    fn two_normals_midpoint_is_centered() {
        let g: Vec<f64> = single_draws(&TwoNormalsModel, &[0.0], 40_000, 1, 1).into_iter().map(|v| v[0]).collect();
        let (m, se) = mean_and_se(&g);
        assert!(m.abs() < 4.0 * se, "mean {m}, se {se}");
        // each draw is one of the component gradients ±4
        assert!(g.iter().all(|v| (v.abs() - 4.0).abs() < 1e-12));
    }

    #[test]
    fn two_normals_off_center_expectation() {
        // p = 1/(1+e^-4); E = 2p - 6(1-p), mpmath
        let exact = 1.856_110_320_303_267_5;
        let g: Vec<f64> = single_draws(&TwoNormalsModel, &[0.5], 100_000, 1, 2).into_iter().map(|v| v[0]).collect();
        let (m, se) = mean_and_se(&g);
        assert!((m - exact).abs() < 4.0 * se, "mean {m}, se {se}");
        let (_, marg) = marginal_grad(&TwoNormalsModel, &[0.5]).unwrap();
        assert!((marg[0] - exact).abs() < 1e-12);
    }

    #[test]
    fn survey_estimates_match_marginal_gradient() {
        let m = SurveyModel::new(vec![true, true, false, true, false]);
        let x = [0.3];
        let g: Vec<f64> = single_draws(&m, &x, 1_000_000, 1, 3).into_iter().map(|v| v[0]).collect();
        let (mean, se) = mean_and_se(&g);
        let (_, exact) = marginal_grad(&m, &x).unwrap();
        assert!((mean - exact[0]).abs() < 4.0 * se, "mean {mean}, exact {}, se {se}", exact[0]);
    }

    #[test]
    fn averaging_reduces_variance() {
        let m = SurveyModel::new(vec![true, false, true, true, false, true, true, false]);
        let x = [0.4];
        let var = |draws: Vec<Vec<f64>>| {
            let v: Vec<f64> = draws.into_iter().map(|g| g[0]).collect();
            let (_, se) = mean_and_se(&v);
            se * se * v.len() as f64
        };
        let n = 10_000;
        let v1 = var(single_draws(&m, &x, n, 1, 4));
        let v10 = var(single_draws(&m, &x, n, 10, 5));
        // SE of a variance ratio estimate from n draws is about sqrt(2/n)
        let ratio = v10 / v1;
        assert!(ratio <= 1.0 + 3.0 * (2.0 / n as f64).sqrt() * 2.0, "ratio {ratio}");
        assert!(ratio < 0.2, "10-sample variance should be near a tenth, ratio {ratio}");
    }

    #[test]
    fn degenerate_kernel_makes_sample_count_irrelevant() {
        let m = GmmModel::new(vec![0.3, -1.2, 2.5], 1).unwrap();
        let x = [0.2, -0.4];
        let z = Nuisance::new(vec![0, 0, 0]);
        let a = estimate_gradient(&m, &x, &z, 1, &mut Rng::new(9, 0)).unwrap();
        let b = estimate_gradient(&m, &x, &z, 7, &mut Rng::new(9, 0)).unwrap();
        assert_eq!(a.z, b.z);
        for (p, q) in a.grad.iter().zip(&b.grad) {
            assert!((p - q).abs() <= 1e-14 * p.abs().max(1.0));
        }
    }

    #[test]
    fn returned_assignment_is_the_last_draw() {
        let m = SurveyModel::new(vec![true, false, true]);
        let mut rng = Rng::new(10, 0);
        let z0 = m.sample_nuisance_prior(&mut rng);
        let e = estimate_gradient(&m, &[0.1], &z0, 3, &mut rng).unwrap();
        let (lj, _) = log_joint_grad(&m, &[0.1], &e.z).unwrap();
        assert_eq!(lj, e.log_joint);
    }

    #[test]
    fn zero_samples_rejected() {
        let m = TwoNormalsModel;
        let z = Nuisance::new(vec![1]);
        assert!(matches!(estimate_gradient(&m, &[0.0], &z, 0, &mut Rng::new(1, 0)), Err(Error::Usage(_))));
    }

    #[test]
    fn naive_prior_draws_are_biased() {
        // prior-drawn coins average the component gradients 2 and -6 evenly
        let mut rng = Rng::new(11, 0);
        let mut est = GradientEstimator::new(&TwoNormalsModel, EstimatorConfig::default(), Nuisance::new(vec![0])).unwrap();
        let g: Vec<f64> = (0..20_000).map(|_| est.naive_gradient(&[0.5], &mut rng).unwrap()[0]).collect();
        let (m, se) = mean_and_se(&g);
        assert!((m + 2.0).abs() < 4.0 * se);
        assert!((m - 1.856_110_320_303_267_5).abs() > 100.0 * se);
    }
}
