//! `sdpp-bench`: dataset generation, step-size tuning, benchmark runs and
//! self-checks.

mod config;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use sdpp::bench::{self, BenchConfig, DatasetSpec, Scheme, DEFAULT_STEP_GRID};
use sdpp::checks;
use sdpp::models::{ModelKind, Zoo};
use sdpp::samplers::SamplerConfig;
use sdpp::Error;

use config::ConfigFile;

#[derive(Parser, Debug)]
#[command(name = "sdpp-bench", version, about = "Inference benchmarks for stochastically differentiable programs")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Write a synthetic dataset
    Generate(Common),
    /// Pick the step size maximizing ESS of HMC on the marginalized model
    Tune(Common),
    /// Run every scheme for several replicas and write the report
    Bench(Common),
    /// Gradient, enumeration and unbiasedness self-checks
    Check {
        #[command(flatten)]
        common: Common,
        /// Check the naive prior-sampling estimator instead (expected to fail)
        #[arg(long)]
        negative_control: bool,
    },
}

#[derive(Args, Debug, Default)]
struct Common {
    /// survey, gmm, hmm or twonormals
    #[arg(long)]
    model: Option<String>,
    /// Comma-separated subset of sghmc1, sghmc10, mh-hmc, hmc-marg
    #[arg(long)]
    scheme: Option<String>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    replicas: Option<usize>,
    /// Draws per chain
    #[arg(long)]
    samples: Option<usize>,
    /// Gradient steps per draw
    #[arg(long)]
    steps: Option<usize>,
    /// Leapfrog step; tuned when omitted
    #[arg(long)]
    step_size: Option<f64>,
    /// sgHMC friction in [0, 1]
    #[arg(long)]
    friction: Option<f64>,
    /// Gradient estimates averaged by the multi-sample sgHMC scheme
    #[arg(long)]
    grad_samples: Option<usize>,
    /// Chains run concurrently
    #[arg(long)]
    jobs: Option<usize>,
    /// Dataset file (default data/<model>.txt)
    #[arg(long)]
    data: Option<PathBuf>,
    /// Output file for generate, directory for bench (default out)
    #[arg(long)]
    out: Option<PathBuf>,
    /// Comma-separated step-size grid for tune
    #[arg(long)]
    grid: Option<String>,
    /// key = value file; flags take precedence
    #[arg(long)]
    config: Option<PathBuf>,
}

/// `Common` after merging the config file and applying defaults.
struct Settings {
    model: ModelKind,
    schemes: Option<Vec<Scheme>>,
    seed: u64,
    bench: BenchConfig,
    step_size: Option<f64>,
    data: Option<PathBuf>,
    out: Option<PathBuf>,
    grid: Vec<f64>,
}

fn parse_list<T: std::str::FromStr<Err = Error>>(s: &str) -> Result<Vec<T>, Error> {
    s.split(',').map(|v| v.trim().parse()).collect()
}

fn parse_grid(s: &str) -> Result<Vec<f64>, Error> {
    if s.trim().is_empty() {
        return Ok(Vec::new());
    }
    s.split(',')
        .map(|v| v.trim().parse().map_err(|_| Error::Usage(format!("invalid step size {v:?}"))))
        .collect()
}

impl Common {
    fn resolve(self) -> Result<Settings, Error> {
        let file = match &self.config {
            Some(path) => ConfigFile::load(path)?,
            None => ConfigFile::default(),
        };
        let model: String = file
            .pick(self.model, "model")?
            .ok_or_else(|| Error::Usage("--model is required".into()))?;
        let schemes = file
            .pick(self.scheme, "scheme")?
            .map(|s: String| parse_list::<Scheme>(&s))
            .transpose()?;
        let defaults = BenchConfig::default();
        let sampler = SamplerConfig {
            n_samples: file.pick(self.samples, "samples")?.unwrap_or(defaults.sampler.n_samples),
            steps_per_sample: file.pick(self.steps, "steps")?.unwrap_or(defaults.sampler.steps_per_sample),
            friction: file.pick(self.friction, "friction")?.unwrap_or(defaults.sampler.friction),
            seed: file.pick(self.seed, "seed")?.unwrap_or(0),
            ..defaults.sampler
        };
        let bench = BenchConfig {
            sampler,
            multi_grad_samples: file.pick(self.grad_samples, "grad-samples")?.unwrap_or(defaults.multi_grad_samples),
            replicas: file.pick(self.replicas, "replicas")?.unwrap_or(defaults.replicas),
            jobs: file.pick(self.jobs, "jobs")?.unwrap_or(defaults.jobs),
        };
        let grid = match file.pick(self.grid, "grid")? {
            Some(s) => parse_grid(&s)?,
            None => DEFAULT_STEP_GRID.to_vec(),
        };
        Ok(Settings {
            model: model.parse()?,
            schemes,
            seed: sampler.seed,
            bench,
            step_size: file.pick(self.step_size, "step-size")?,
            data: file.pick(self.data, "data")?,
            out: file.pick(self.out, "out")?,
            grid,
        })
    }
}

impl Settings {
    fn load_model(&self) -> Result<Zoo, Error> {
        let default = PathBuf::from(format!("data/{}.txt", self.model));
        let path = self.data.as_deref().unwrap_or(&default);
        bench::load_dataset(self.model, path)
    }
}

fn generate(s: Settings) -> Result<bool, Error> {
    let spec = DatasetSpec::default_for(s.model)?;
    let (obs, comments) = spec.generate(s.seed)?;
    let default = PathBuf::from(format!("data/{}.txt", s.model));
    let path = s.out.as_deref().unwrap_or(&default);
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir)?;
    }
    std::fs::write(path, obs.to_text(&comments))?;
    println!("wrote {} observations to {}", obs.len(), path.display());
    Ok(true)
}

fn tune_step(zoo: &Zoo, s: &Settings) -> Result<f64, Error> {
    let outcome = bench::tune(zoo, &s.grid, &s.bench.sampler, s.bench.jobs)?;
    println!("{:>10} {:>10} {:>12}", "step", "ESS", "divergences");
    for e in &outcome.entries {
        println!("{:>10} {:>10.1} {:>12}", e.step_size, e.ess, e.divergences);
    }
    println!("chosen step size: {}", outcome.best);
    Ok(outcome.best)
}

fn tune(s: Settings) -> Result<bool, Error> {
    let zoo = s.load_model()?;
    tune_step(&zoo, &s)?;
    Ok(true)
}

fn run_bench(s: Settings) -> Result<bool, Error> {
    let zoo = s.load_model()?;
    let schemes = s.schemes.clone().unwrap_or_else(|| Scheme::for_model(s.model));
    let step = match s.step_size {
        Some(step) => step,
        None => tune_step(&zoo, &s)?,
    };
    let mut cfg = s.bench;
    cfg.sampler.step_size = step;
    let outcome = bench::bench(&zoo, &schemes, &cfg)?;
    let dir = s.out.clone().unwrap_or_else(|| PathBuf::from("out"));
    let written = bench::write_outputs(&zoo, &outcome, &dir)?;
    print!("{}", outcome.report.to_table());
    println!("wrote {} files to {}", written.len(), dir.display());
    Ok(true)
}

fn check(s: Settings, negative_control: bool) -> Result<bool, Error> {
    let zoo = s.load_model()?;
    let results = if negative_control {
        vec![checks::negative_control(&zoo, s.seed)?]
    } else {
        checks::run_checks(&zoo, s.seed)?
    };
    for r in &results {
        println!("{} {r}", s.model);
    }
    Ok(results.iter().all(|r| r.passed))
}

fn exit_code(err: &Error) -> ExitCode {
    match err {
        Error::Usage(_) | Error::Parse { .. } | Error::Io(_) => ExitCode::from(2),
        Error::NonFinite { .. } | Error::ChainAborted { .. } => ExitCode::from(1),
    }
}

fn run(cli: Cli) -> Result<bool, Error> {
    match cli.command {
        Command::Generate(c) => generate(c.resolve()?),
        Command::Tune(c) => tune(c.resolve()?),
        Command::Bench(c) => run_bench(c.resolve()?),
        Command::Check { common, negative_control } => check(common.resolve()?, negative_control),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e}");
            exit_code(&e)
        }
    }
}

