//! Self-checks run by `sdpp-bench check`: autodiff against finite
//! differences, enumeration against the marginalized density, and the
//! unbiasedness of the gradient estimator.

use std::fmt;

use crate::distributions::standard_normal;
use crate::enumerate::{enumerated_marginal, posterior_expected_gradient, prior_expected_gradient};
use crate::error::Result;
use crate::model::{log_joint, log_joint_grad, marginal_grad, marginal_log_density, Nuisance};
use crate::models::{GmmModel, HmmModel, SurveyModel, Zoo};
use crate::rng::Rng;
use crate::with_model;
use crate::{MarginalModel, StochasticModel};

/// Central-difference step.
pub const FD_STEP: f64 = 1e-5;
/// Bound on `|ad − fd| / max(1, |ad|, |fd|)`.
pub const FD_TOLERANCE: f64 = 1e-6;
/// Enumerated marginal versus marginalized density.
pub const ENUMERATION_TOLERANCE: f64 = 1e-10;
/// Per-coordinate gap between expected estimate and marginal gradient.
pub const UNBIASED_TOLERANCE: f64 = 1e-9;

pub const GRADIENT_POINTS: usize = 100;
pub const ORACLE_POINTS: usize = 20;

#[derive(Clone, Debug, PartialEq)]
pub struct CheckOutcome {
    pub name: String,
    pub passed: bool,
    /// Largest observed error.
    pub worst: f64,
    pub tolerance: f64,
    pub points: usize,
}

impl fmt::Display for CheckOutcome {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{} {:<34} worst {:.3e} (tolerance {:.0e}, {} points)",
            if self.passed { "PASS" } else { "FAIL" },
            self.name,
            self.worst,
            self.tolerance,
            self.points
        )
    }
}

fn outcome(name: &str, worst: f64, tolerance: f64, points: usize) -> CheckOutcome {
    CheckOutcome {
        name: name.to_string(),
        passed: worst < tolerance,
        worst,
        tolerance,
        points,
    }
}

/// Truncated instance small enough to enumerate: survey n = 5, GMM n = 6
/// with K = 2, HMM t = 4 with K = 2. Two-normals is already small.
pub fn small_instance(zoo: &Zoo) -> Result<Zoo> {
    Ok(match zoo {
        Zoo::Survey(m) => Zoo::Survey(SurveyModel::new(m.answers().iter().take(5).copied().collect())),
        Zoo::Gmm(m) => Zoo::Gmm(GmmModel::new(m.data().iter().take(6).copied().collect(), 2)?),
        Zoo::Hmm(m) => Zoo::Hmm(HmmModel::new(m.data().iter().take(4).copied().collect(), 2, m.noise())?),
        Zoo::TwoNormals(m) => Zoo::TwoNormals(*m),
    })
}

fn random_x(dim: usize, rng: &mut Rng) -> Vec<f64> {
    (0..dim).map(|_| standard_normal(rng)).collect()
}

fn relative_error(a: f64, b: f64) -> f64 {
    (a - b).abs() / 1f64.max(a.abs()).max(b.abs())
}

fn fd_error<F: Fn(&[f64]) -> Result<f64>>(f: F, x: &[f64], grad: &[f64]) -> Result<f64> {
    let mut worst = 0.0f64;
    let mut xp = x.to_vec();
    for (j, g) in grad.iter().enumerate() {
        xp[j] = x[j] + FD_STEP;
        let up = f(&xp)?;
        xp[j] = x[j] - FD_STEP;
        let down = f(&xp)?;
        xp[j] = x[j];
        worst = worst.max(relative_error(*g, (up - down) / (2.0 * FD_STEP)));
    }
    Ok(worst)
}

/// Autodiff gradients of `log_joint` at random `(x, z)` and of the
/// marginalized density at random `x`, against central differences.
pub fn gradient_check<M: StochasticModel + MarginalModel>(model: &M, rng: &mut Rng) -> Result<CheckOutcome> {
    let mut worst = 0.0f64;
    for _ in 0..GRADIENT_POINTS {
        let x = random_x(model.dim(), rng);
        let z: Nuisance = model.sample_nuisance_prior(rng);
        let (_, g) = log_joint_grad(model, &x, &z)?;
        worst = worst.max(fd_error(|v| log_joint(model, v, &z), &x, &g)?);
        let (_, gm) = marginal_grad(model, &x)?;
        worst = worst.max(fd_error(|v| marginal_log_density(model, v), &x, &gm)?);
    }
    Ok(outcome("gradient vs finite differences", worst, FD_TOLERANCE, GRADIENT_POINTS))
}

/// Log-sum-exp over every `z` against the marginalized density.
pub fn enumeration_check<M: StochasticModel + MarginalModel>(model: &M, rng: &mut Rng) -> Result<CheckOutcome> {
    let mut worst = 0.0f64;
    for _ in 0..ORACLE_POINTS {
        let x = random_x(model.dim(), rng);
        let gap = (enumerated_marginal(model, &x)? - marginal_log_density(model, &x)?).abs();
        worst = worst.max(gap);
    }
    Ok(outcome("enumeration vs marginal density", worst, ENUMERATION_TOLERANCE, ORACLE_POINTS))
}

/// Which estimator's exact expectation [`unbiasedness_check`] examines.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Expectation {
    /// `z` from the conditional `p(z | x, y)`: the estimator used by sgHMC.
    Conditional,
    /// `z` from the prior `p(z | y)`: the naive, biased estimator.
    Prior,
}

/// Exact expectation of the estimator (by enumeration) against the
/// autodiff gradient of the marginalized density.
pub fn unbiasedness_check<M: StochasticModel + MarginalModel>(
    model: &M,
    which: Expectation,
    rng: &mut Rng,
) -> Result<CheckOutcome> {
    let mut worst = 0.0f64;
    for _ in 0..ORACLE_POINTS {
        let x = random_x(model.dim(), rng);
        let expected = match which {
            Expectation::Conditional => posterior_expected_gradient(model, &x)?,
            Expectation::Prior => prior_expected_gradient(model, &x)?,
        };
        let (_, exact) = marginal_grad(model, &x)?;
        for (a, b) in expected.iter().zip(&exact) {
            worst = worst.max((a - b).abs());
        }
    }
    let name = match which {
        Expectation::Conditional => "unbiasedness",
        Expectation::Prior => "unbiasedness (naive estimator)",
    };
    Ok(outcome(name, worst, UNBIASED_TOLERANCE, ORACLE_POINTS))
}

/// The three suites for one model; gradients on the full model, the
/// enumeration oracles on [`small_instance`].
pub fn run_checks(zoo: &Zoo, seed: u64) -> Result<Vec<CheckOutcome>> {
    let mut rng = Rng::new(seed, 0);
    let small = small_instance(zoo)?;
    let grad = with_model!(zoo, m => gradient_check(m, &mut rng))?;
    let enumeration = with_model!(&small, m => enumeration_check(m, &mut rng))?;
    let unbiased = with_model!(&small, m => unbiasedness_check(m, Expectation::Conditional, &mut rng))?;
    Ok(vec![grad, enumeration, unbiased])
}

/// Runs the unbiasedness suite on the naive prior-sampling estimator; it is
/// expected to fail.
pub fn negative_control(zoo: &Zoo, seed: u64) -> Result<CheckOutcome> {
    let mut rng = Rng::new(seed, 1);
    let small = small_instance(zoo)?;
    with_model!(&small, m => unbiasedness_check(m, Expectation::Prior, &mut rng))
}
