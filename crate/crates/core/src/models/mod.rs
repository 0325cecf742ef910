//! The case-study programs, each in stochastic and marginalized form, and
//! the synthetic data generators for their benchmark datasets.

mod gmm;
mod hmm;
mod survey;
mod two_normals;

use std::fmt;
use std::str::FromStr;

pub use gmm::{generate_gmm, GmmModel, GmmParams, GMM_DEFAULT_MEANS, GMM_DEFAULT_SDS};
pub use hmm::{generate_hmm, sticky_transitions, HmmModel, HmmParams, HMM_DEFAULT_SELF_PROB};
pub use survey::{generate_survey, SurveyModel, HEADS, TAILS};
pub use two_normals::{TwoNormalsModel, COMPONENT_SD};

use crate::dataset::Observations;
use crate::error::{Error, Result};

/// Standard deviation of the Normal(0, σ) prior on unconstrained traces.
pub const PRIOR_SD: f64 = 10.0;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum ModelKind {
    Survey,
    Gmm,
    Hmm,
    TwoNormals,
}

impl ModelKind {
    pub const BENCHMARKS: [ModelKind; 3] = [ModelKind::Survey, ModelKind::Gmm, ModelKind::Hmm];

    pub fn name(self) -> &'static str {
        match self {
            ModelKind::Survey => "survey",
            ModelKind::Gmm => "gmm",
            ModelKind::Hmm => "hmm",
            ModelKind::TwoNormals => "twonormals",
        }
    }

    /// Whether the benchmark compares against HMC on the marginalized form.
    pub fn has_marginal_benchmark(self) -> bool {
        self != ModelKind::TwoNormals
    }
}

impl fmt::Display for ModelKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ModelKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "survey" => Ok(ModelKind::Survey),
            "gmm" => Ok(ModelKind::Gmm),
            "hmm" => Ok(ModelKind::Hmm),
            "twonormals" => Ok(ModelKind::TwoNormals),
            other => Err(Error::usage(format!(
                "unknown model {other:?} (expected survey, gmm, hmm or twonormals)"
            ))),
        }
    }
}

/// Any of the concrete models; use [`with_model!`](crate::with_model) to
/// reach the typed value.
#[derive(Clone, Debug)]
pub enum Zoo {
    Survey(SurveyModel),
    Gmm(GmmModel),
    Hmm(HmmModel),
    TwoNormals(TwoNormalsModel),
}

impl Zoo {
    pub fn kind(&self) -> ModelKind {
        match self {
            Zoo::Survey(_) => ModelKind::Survey,
            Zoo::Gmm(_) => ModelKind::Gmm,
            Zoo::Hmm(_) => ModelKind::Hmm,
            Zoo::TwoNormals(_) => ModelKind::TwoNormals,
        }
    }

    /// Builds the model for a dataset. `n_components` applies to GMM data.
    pub fn from_observations(obs: &Observations, n_components: usize) -> Result<Zoo> {
        Ok(match obs {
            Observations::Survey { answers } => Zoo::Survey(SurveyModel::new(answers.clone())),
            Observations::Gmm { data } => Zoo::Gmm(GmmModel::new(data.clone(), n_components)?),
            Observations::Hmm { data, n_states, noise } => {
                Zoo::Hmm(HmmModel::new(data.clone(), *n_states, *noise)?)
            }
        })
    }
}

/// Evaluates `$body` with `$m` bound to the concrete model inside a [`Zoo`].
#[macro_export]
macro_rules! with_model {
    ($zoo:expr, $m:ident => $body:expr) => {
        match $zoo {
            $crate::models::Zoo::Survey($m) => $body,
            $crate::models::Zoo::Gmm($m) => $body,
            $crate::models::Zoo::Hmm($m) => $body,
            $crate::models::Zoo::TwoNormals($m) => $body,
        }
    };
}
