//! The benchmark protocol: datasets, step-size tuning, replicated runs of
//! every scheme, and the report files.

use std::fmt;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use rayon::prelude::*;

use crate::dataset::Observations;
use crate::diagnostics::{summarize, DiagnosticsReport};
use crate::distributions::standard_normal;
use crate::error::{Error, Result};
use crate::models::{
    generate_gmm, generate_hmm, generate_survey, sticky_transitions, ModelKind, TwoNormalsModel, Zoo, GMM_DEFAULT_MEANS,
    GMM_DEFAULT_SDS, HMM_DEFAULT_SELF_PROB,
};
use crate::model::{log_joint_grad, marginal_grad};
use crate::rng::Rng;
use crate::samplers::{composing_mh_hmc, hmc, sghmc, Chain, SamplerConfig};
use crate::with_model;
use crate::{StochasticModel, TraceSpace};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Scheme {
    Sghmc1,
    Sghmc10,
    MhHmc,
    HmcMarg,
}

impl Scheme {
    /// Report column order.
    pub const ALL: [Scheme; 4] = [Scheme::Sghmc1, Scheme::Sghmc10, Scheme::MhHmc, Scheme::HmcMarg];

    pub fn name(self) -> &'static str {
        match self {
            Scheme::Sghmc1 => "sghmc1",
            Scheme::Sghmc10 => "sghmc10",
            Scheme::MhHmc => "mh-hmc",
            Scheme::HmcMarg => "hmc-marg",
        }
    }

    fn index(self) -> u64 {
        self as u64
    }

    /// Schemes that apply to `kind`.
    pub fn for_model(kind: ModelKind) -> Vec<Scheme> {
        Scheme::ALL.into_iter().filter(|s| s.check(kind).is_ok()).collect()
    }

    pub fn check(self, kind: ModelKind) -> Result<()> {
        if self == Scheme::HmcMarg && !kind.has_marginal_benchmark() {
            return Err(Error::usage(format!("scheme hmc-marg is not benchmarked on model {kind}")));
        }
        Ok(())
    }
}

impl fmt::Display for Scheme {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Scheme {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        Scheme::ALL
            .into_iter()
            .find(|x| x.name() == s)
            .ok_or_else(|| Error::usage(format!("unknown scheme {s:?} (expected sghmc1, sghmc10, mh-hmc or hmc-marg)")))
    }
}

/// Settings shared by every scheme of one benchmark.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BenchConfig {
    pub sampler: SamplerConfig,
    /// Gradient estimates averaged by the multi-sample sgHMC scheme.
    pub multi_grad_samples: usize,
    pub replicas: usize,
    /// Upper bound on concurrently running chains.
    pub jobs: usize,
}

impl Default for BenchConfig {
    fn default() -> Self {
        BenchConfig {
            sampler: SamplerConfig::default(),
            multi_grad_samples: 10,
            replicas: 10,
            jobs: std::thread::available_parallelism().map_or(1, |n| n.get()),
        }
    }
}

impl BenchConfig {
    pub fn validate(&self) -> Result<()> {
        self.sampler.validate()?;
        if self.replicas < 2 {
            return Err(Error::usage("replicas must be at least 2"));
        }
        if self.jobs == 0 {
            return Err(Error::usage("jobs must be at least 1"));
        }
        if self.multi_grad_samples == 0 {
            return Err(Error::usage("grad_samples must be at least 1"));
        }
        Ok(())
    }

    fn for_scheme(&self, scheme: Scheme) -> SamplerConfig {
        let mut cfg = self.sampler;
        cfg.grad_samples = match scheme {
            Scheme::Sghmc10 => self.multi_grad_samples,
            _ => 1,
        };
        cfg
    }
}

/// Default grid searched by [`tune`].
pub const DEFAULT_STEP_GRID: [f64; 6] = [0.001, 0.003, 0.01, 0.03, 0.1, 0.3];

/// Grid entries whose divergence rate exceeds this score zero ESS.
pub const MAX_DIVERGENCE_RATE: f64 = 0.01;

/// Generator settings for one benchmark dataset.
#[derive(Clone, Debug, PartialEq)]
pub enum DatasetSpec {
    Survey { theta: f64, n: usize },
    Gmm { n: usize, means: Vec<f64>, sds: Vec<f64> },
    Hmm { t: usize, k: usize, noise: f64, self_prob: f64 },
}

impl DatasetSpec {
    pub fn default_for(kind: ModelKind) -> Result<DatasetSpec> {
        Ok(match kind {
            ModelKind::Survey => DatasetSpec::Survey { theta: 0.67, n: 60 },
            ModelKind::Gmm => DatasetSpec::Gmm {
                n: 100,
                means: GMM_DEFAULT_MEANS.to_vec(),
                sds: GMM_DEFAULT_SDS.to_vec(),
            },
            ModelKind::Hmm => DatasetSpec::Hmm {
                t: 16,
                k: 3,
                noise: 0.5,
                self_prob: HMM_DEFAULT_SELF_PROB,
            },
            ModelKind::TwoNormals => return Err(Error::usage("twonormals has no dataset")),
        })
    }

    /// Draws the dataset and the header comments describing it.
    pub fn generate(&self, seed: u64) -> Result<(Observations, Vec<String>)> {
        let mut rng = Rng::new(seed, 0);
        let (obs, params) = match self {
            DatasetSpec::Survey { theta, n } => (
                Observations::Survey {
                    answers: generate_survey(*theta, *n, &mut rng)?,
                },
                format!("model=survey theta={theta} n={n}"),
            ),
            DatasetSpec::Gmm { n, means, sds } => (
                Observations::Gmm {
                    data: generate_gmm(*n, means, sds, &mut rng)?,
                },
                format!("model=gmm n={n} means={means:?} sds={sds:?}"),
            ),
            DatasetSpec::Hmm { t, k, noise, self_prob } => {
                let tm = sticky_transitions(*k, *self_prob);
                let (data, _) = generate_hmm(*t, *k, *noise, &tm, &mut rng)?;
                (
                    Observations::Hmm {
                        data,
                        n_states: *k,
                        noise: *noise,
                    },
                    format!("model=hmm t={t} k={k} noise={noise} self_prob={self_prob}"),
                )
            }
        };
        Ok((obs, vec![params, format!("seed={seed}")]))
    }
}

/// Reads a dataset file for `kind`. Two-normals has no data and ignores
/// `path`.
pub fn load_dataset(kind: ModelKind, path: &Path) -> Result<Zoo> {
    let parse = match kind {
        ModelKind::Survey => Observations::parse_survey,
        ModelKind::Gmm => Observations::parse_gmm,
        ModelKind::Hmm => Observations::parse_hmm,
        ModelKind::TwoNormals => return Ok(Zoo::TwoNormals(TwoNormalsModel)),
    };
    let text = fs::read_to_string(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
    Zoo::from_observations(&parse(&text)?, 2)
}

/// Stream id for one (scheme, replica) pair; tuning uses its own range.
pub fn stream_id(scheme: Scheme, replica: usize) -> u64 {
    ((scheme.index() + 1) << 32) | replica as u64
}

fn tune_stream(grid_index: usize) -> u64 {
    (16 << 32) | grid_index as u64
}

pub fn param_names(zoo: &Zoo) -> Vec<String> {
    with_model!(zoo, m => m.param_names())
}

pub fn constrained(zoo: &Zoo, x: &[f64]) -> Vec<f64> {
    with_model!(zoo, m => m.constrained(x))
}

/// Starting points drawn before falling back to the last candidate.
pub const MAX_INIT_ATTEMPTS: usize = 100;

/// Draws `x0 ~ N(0, I)`, redrawing while the first gradient step would move
/// some coordinate by more than one unit: `step² · ‖∇ log p(x0, z0)‖∞ > 1`
/// with `z0` from the nuisance prior (the marginal gradient for
/// `hmc-marg`). Such points sit in regions whose curvature the fixed step
/// cannot resolve, and chains started there are flung away or never move.
pub fn initial_point(zoo: &Zoo, scheme: Scheme, step: f64, rng: &mut Rng) -> Vec<f64> {
    let dim = with_model!(zoo, m => m.dim());
    let limit = 1.0 / (step * step);
    let mut x0 = Vec::new();
    for _ in 0..MAX_INIT_ATTEMPTS {
        x0 = (0..dim).map(|_| standard_normal(rng)).collect();
        let grad = with_model!(zoo, m => match scheme {
            Scheme::HmcMarg => marginal_grad(m, &x0),
            _ => {
                let z0 = m.sample_nuisance_prior(rng);
                log_joint_grad(m, &x0, &z0)
            }
        });
        if let Ok((_, g)) = grad {
            if g.iter().all(|v| v.abs() <= limit) {
                break;
            }
        }
    }
    x0
}

/// Runs one chain of `scheme` from [`initial_point`] on stream `stream`.
pub fn run_chain(zoo: &Zoo, scheme: Scheme, cfg: &SamplerConfig, stream: u64) -> Result<Chain> {
    scheme.check(zoo.kind())?;
    run_unchecked(zoo, scheme, cfg, stream)
}

fn run_unchecked(zoo: &Zoo, scheme: Scheme, cfg: &SamplerConfig, stream: u64) -> Result<Chain> {
    cfg.validate()?;
    let mut rng = Rng::new(cfg.seed, stream);
    let x0 = initial_point(zoo, scheme, cfg.step_size, &mut rng);
    with_model!(zoo, m => match scheme {
        Scheme::Sghmc1 | Scheme::Sghmc10 => sghmc(m, &x0, cfg, &mut rng),
        Scheme::MhHmc => composing_mh_hmc(m, &x0, cfg, &mut rng),
        Scheme::HmcMarg => hmc(m, &x0, cfg, &mut rng),
    })
}

fn pool(jobs: usize) -> Result<rayon::ThreadPool> {
    rayon::ThreadPoolBuilder::new()
        .num_threads(jobs.max(1))
        .build()
        .map_err(|e| Error::usage(format!("thread pool: {e}")))
}

/// All replicas of one scheme, run concurrently up to `cfg.jobs`.
pub fn run_replicas(zoo: &Zoo, scheme: Scheme, cfg: &BenchConfig) -> Result<Vec<Chain>> {
    cfg.validate()?;
    scheme.check(zoo.kind())?;
    let sampler = cfg.for_scheme(scheme);
    pool(cfg.jobs)?.install(|| {
        (0..cfg.replicas)
            .into_par_iter()
            .map(|r| run_chain(zoo, scheme, &sampler, stream_id(scheme, r)))
            .collect()
    })
}

#[derive(Clone, Debug, PartialEq)]
pub struct GridEntry {
    pub step_size: f64,
    /// Minimum-coordinate ESS, or 0 when the run diverged too often.
    pub ess: f64,
    pub divergences: usize,
}

#[derive(Clone, Debug, PartialEq)]
pub struct TuneOutcome {
    pub best: f64,
    pub entries: Vec<GridEntry>,
}

/// Picks the step size maximizing ESS of HMC on the marginalized model.
///
/// Ties keep the earlier grid entry. Works on every model with a
/// marginalized form, including two-normals.
pub fn tune(zoo: &Zoo, grid: &[f64], cfg: &SamplerConfig, jobs: usize) -> Result<TuneOutcome> {
    if grid.is_empty() {
        return Err(Error::usage("step-size grid is empty"));
    }
    let mut base = *cfg;
    for &step in grid {
        base.step_size = step;
        base.validate()?;
    }
    let names = param_names(zoo);
    let entries: Vec<GridEntry> = pool(jobs)?.install(|| {
        grid.par_iter()
            .enumerate()
            .map(|(i, &step)| {
                let mut c = *cfg;
                c.step_size = step;
                let chain = run_unchecked(zoo, Scheme::HmcMarg, &c, tune_stream(i))?;
                let rate = chain.divergences as f64 / chain.draws.len() as f64;
                let ess = if rate > MAX_DIVERGENCE_RATE {
                    0.0
                } else {
                    min_ess(zoo, &names, &chain)?
                };
                Ok(GridEntry {
                    step_size: step,
                    ess,
                    divergences: chain.divergences,
                })
            })
            .collect::<Result<Vec<_>>>()
    })?;
    let best = entries
        .iter()
        .fold(None::<&GridEntry>, |acc, e| match acc {
            Some(a) if a.ess >= e.ess => Some(a),
            _ => Some(e),
        })
        .map(|e| e.step_size)
        .unwrap_or(grid[0]);
    Ok(TuneOutcome { best, entries })
}

fn min_ess(zoo: &Zoo, names: &[String], chain: &Chain) -> Result<f64> {
    let kept: Vec<Vec<f64>> = crate::diagnostics::burn_in(&chain.draws).iter().map(|x| constrained(zoo, x)).collect();
    let mut best = f64::INFINITY;
    for j in 0..names.len() {
        let col: Vec<f64> = kept.iter().map(|d| d[j]).collect();
        best = best.min(crate::diagnostics::effective_sample_size(&col)?.ess);
    }
    Ok(best)
}

/// Chains and report of a full benchmark.
#[derive(Clone, Debug)]
pub struct BenchOutcome {
    pub chains: Vec<(Scheme, Vec<Chain>)>,
    pub report: DiagnosticsReport,
}

/// Runs every scheme in `schemes` for `cfg.replicas` replicas.
pub fn bench(zoo: &Zoo, schemes: &[Scheme], cfg: &BenchConfig) -> Result<BenchOutcome> {
    cfg.validate()?;
    if schemes.is_empty() {
        return Err(Error::usage("no schemes selected"));
    }
    for s in schemes {
        s.check(zoo.kind())?;
    }
    let names = param_names(zoo);
    let mut chains = Vec::with_capacity(schemes.len());
    let mut summaries = Vec::with_capacity(schemes.len());
    for &scheme in schemes {
        let runs = run_replicas(zoo, scheme, cfg)?;
        summaries.push(summarize(scheme.name(), &names, &runs, |x| constrained(zoo, x))?);
        chains.push((scheme, runs));
    }
    Ok(BenchOutcome {
        chains,
        report: DiagnosticsReport {
            model: zoo.kind().name().to_string(),
            param_names: names,
            schemes: summaries,
        },
    })
}

/// CSV of one chain in the constrained space, every recorded draw included.
pub fn chain_csv(zoo: &Zoo, chain: &Chain) -> String {
    let mut out = param_names(zoo).join(",");
    out.push('\n');
    for x in &chain.draws {
        let row: Vec<String> = constrained(zoo, x).iter().map(|v| format!("{v:e}")).collect();
        let _ = writeln!(out, "{}", row.join(","));
    }
    out
}

/// Writes chain CSVs, the report CSV and the text table into `dir`.
pub fn write_outputs(zoo: &Zoo, outcome: &BenchOutcome, dir: &Path) -> Result<Vec<PathBuf>> {
    fs::create_dir_all(dir)?;
    let model = zoo.kind().name();
    let mut written = Vec::new();
    let mut put = |name: String, body: String| -> Result<()> {
        let path = dir.join(name);
        fs::write(&path, body)?;
        written.push(path);
        Ok(())
    };
    for (scheme, runs) in &outcome.chains {
        for (i, chain) in runs.iter().enumerate() {
            put(format!("{model}_{scheme}_chain{i}.csv"), chain_csv(zoo, chain))?;
        }
    }
    put(format!("{model}_report.csv"), outcome.report.to_csv())?;
    put(format!("{model}_table.txt"), outcome.report.to_table())?;
    Ok(written)
}
