//! End-to-end acceptance suite. Prints one PASS/FAIL line per criterion and
//! exits non-zero if any criterion fails. The consistency and ordering
//! criteria run the full benchmark protocol (10 000 draws x 10 replicas per
//! scheme, step tuned on the marginalized model) and take several minutes.

use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

use rand_distr::{Distribution, StandardNormal};

use sdpp::bench::{self, BenchConfig, BenchOutcome, Scheme, DEFAULT_STEP_GRID};
use sdpp::checks::{self, Expectation, UNBIASED_TOLERANCE};
use sdpp::counters::measure;
use sdpp::diagnostics::{autocorrelation, effective_sample_size, SchemeSummary};
use sdpp::model::{log_joint, marginal_log_density};
use sdpp::models::{GmmModel, HmmModel, ModelKind, SurveyModel, TwoNormalsModel, Zoo};
use sdpp::samplers::SamplerConfig;
use sdpp::{with_model, Nuisance, Rng};

struct Verdict {
    passed: bool,
    detail: String,
}

fn verdict(passed: bool, detail: impl Into<String>) -> Verdict {
    Verdict {
        passed,
        detail: detail.into(),
    }
}

fn shipped(kind: ModelKind) -> Zoo {
    let path = PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("../../data")
        .join(format!("{kind}.txt"));
    bench::load_dataset(kind, &path).expect("shipped dataset")
}

fn benchmarks() -> Vec<Zoo> {
    ModelKind::BENCHMARKS.iter().map(|&k| shipped(k)).collect()
}

fn unbiasedness() -> Verdict {
    let start = Instant::now();
    let mut worst = 0.0f64;
    let mut naive_margin = 0.0f64;
    for (i, zoo) in benchmarks().iter().enumerate() {
        let small = checks::small_instance(zoo).unwrap();
        let mut rng = Rng::new(100 + i as u64, 0);
        let c = with_model!(&small, m => checks::unbiasedness_check(m, Expectation::Conditional, &mut rng)).unwrap();
        worst = worst.max(c.worst);
        let n = checks::negative_control(zoo, 100 + i as u64).unwrap();
        naive_margin = naive_margin.max(n.worst / UNBIASED_TOLERANCE);
    }
    let secs = start.elapsed().as_secs_f64();
    verdict(
        worst < UNBIASED_TOLERANCE && naive_margin > 100.0 && secs < 10.0,
        format!("max gap {worst:.1e}; naive estimator {naive_margin:.1e}x tolerance; {secs:.2}s"),
    )
}

fn gradients() -> Verdict {
    let start = Instant::now();
    let mut zoos = benchmarks();
    zoos.push(Zoo::TwoNormals(TwoNormalsModel));
    let mut worst = 0.0f64;
    for (i, zoo) in zoos.iter().enumerate() {
        let mut rng = Rng::new(200 + i as u64, 0);
        worst = worst.max(with_model!(zoo, m => checks::gradient_check(m, &mut rng)).unwrap().worst);
    }
    let secs = start.elapsed().as_secs_f64();
    verdict(
        worst < checks::FD_TOLERANCE && secs < 30.0,
        format!("max relative error {worst:.1e} over {} points per model; {secs:.2}s", checks::GRADIENT_POINTS),
    )
}

fn marginalization() -> Verdict {
    // enumerating log_joint over every hidden path is the HMM path sum
    let mut zoos = benchmarks();
    zoos.push(Zoo::TwoNormals(TwoNormalsModel));
    let mut worst = 0.0f64;
    for (i, zoo) in zoos.iter().enumerate() {
        let small = checks::small_instance(zoo).unwrap();
        let mut rng = Rng::new(300 + i as u64, 0);
        worst = worst.max(with_model!(&small, m => checks::enumeration_check(m, &mut rng)).unwrap().worst);
    }
    verdict(worst < checks::ENUMERATION_TOLERANCE, format!("max gap {worst:.1e}"))
}

fn sign_lag1(draws: &[Vec<f64>]) -> f64 {
    let signs: Vec<f64> = draws.iter().map(|x| if x[0] > 0.0 { 1.0 } else { -1.0 }).collect();
    autocorrelation(&signs)[1]
}

fn bimodality() -> Verdict {
    let start = Instant::now();
    let zoo = Zoo::TwoNormals(TwoNormalsModel);
    let cfg = SamplerConfig {
        seed: 4,
        ..SamplerConfig::default()
    };
    let jobs = BenchConfig::default().jobs;
    let step = bench::tune(&zoo, &DEFAULT_STEP_GRID, &cfg, jobs).unwrap().best;
    let cfg = SamplerConfig { step_size: step, ..cfg };
    let sg = bench::run_chain(&zoo, Scheme::Sghmc1, &cfg, 1).unwrap();
    let mh = bench::run_chain(&zoo, Scheme::MhHmc, &cfg, 2).unwrap();
    let positive = sg.draws.iter().filter(|x| x[0] > 0.0).count();
    let frac = positive as f64 / sg.draws.len() as f64;
    let visits = positive.min(sg.draws.len() - positive);
    let (rho_sg, rho_mh) = (sign_lag1(&sg.draws), sign_lag1(&mh.draws));
    let secs = start.elapsed().as_secs_f64();
    verdict(
        (0.4..=0.6).contains(&frac) && visits >= 100 && rho_mh >= 2.0 * rho_sg && secs < 60.0,
        format!(
            "step {step}; sghmc P(x>0) {frac:.3}; sign lag-1 autocorrelation mh-hmc {rho_mh:.3} vs sghmc {rho_sg:.3}; {secs:.1}s"
        ),
    )
}

/// Full protocol on one model: tune on the marginalized form, then run every scheme.
fn protocol(zoo: &Zoo) -> (f64, BenchOutcome) {
    let cfg = BenchConfig::default();
    let step = bench::tune(zoo, &DEFAULT_STEP_GRID, &cfg.sampler, cfg.jobs).unwrap().best;
    let cfg = BenchConfig {
        sampler: SamplerConfig {
            step_size: step,
            ..cfg.sampler
        },
        ..cfg
    };
    (step, bench::bench(zoo, &Scheme::ALL, &cfg).unwrap())
}

fn consistency(runs: &[(Zoo, f64, BenchOutcome)]) -> Verdict {
    let mut worst = 0.0f64;
    let mut offenders = Vec::new();
    for (zoo, _, out) in runs {
        let schemes = &out.report.schemes;
        for (i, a) in schemes.iter().enumerate() {
            for b in &schemes[i + 1..] {
                for (pa, pb) in a.params.iter().zip(&b.params) {
                    let z = (pa.mean - pb.mean).abs() / (pa.mcse.powi(2) + pb.mcse.powi(2)).sqrt();
                    worst = worst.max(z);
                    if z > 3.0 {
                        offenders.push(format!(
                            "{} {} {}={:.4} vs {}={:.4} ({z:.1} se)",
                            zoo.kind(),
                            pa.name,
                            a.scheme,
                            pa.mean,
                            b.scheme,
                            pb.mean
                        ));
                    }
                }
            }
        }
    }
    let mut detail = format!("largest gap {worst:.2} combined MCSE");
    if !offenders.is_empty() {
        detail.push_str(&format!("; {}", offenders.join("; ")));
    }
    verdict(offenders.is_empty(), detail)
}

fn ordering(runs: &[(Zoo, f64, BenchOutcome)]) -> Verdict {
    // (higher, lower, strict) for each required inequality
    let chain = [
        (Scheme::HmcMarg, Scheme::Sghmc10, false),
        (Scheme::Sghmc10, Scheme::Sghmc1, false),
        (Scheme::Sghmc1, Scheme::MhHmc, true),
    ];
    let summary = |out: &BenchOutcome, s: Scheme| -> SchemeSummary { out.report.scheme(s.name()).unwrap().clone() };
    let mut passed = true;
    let mut notes = Vec::new();
    for (zoo, step, out) in runs {
        let ess: Vec<String> = Scheme::ALL
            .iter()
            .map(|&s| format!("{s} {:.0}", summary(out, s).ess_mean))
            .collect();
        notes.push(format!("{} (step {step}): {}", zoo.kind(), ess.join(", ")));
    }
    for (hi, lo, strict) in chain {
        let mut violations = 0;
        let mut hard = false;
        for (zoo, _, out) in runs {
            let (a, b) = (summary(out, hi), summary(out, lo));
            let holds = if strict { a.ess_mean > b.ess_mean } else { a.ess_mean >= b.ess_mean };
            if !holds {
                violations += 1;
                let pooled = ((a.ess_sd.powi(2) + b.ess_sd.powi(2)) / 2.0).sqrt();
                let within = b.ess_mean - a.ess_mean <= pooled;
                hard |= !within;
                notes.push(format!(
                    "{} violates {hi} {} {lo} by {:.0} (pooled sd {pooled:.0})",
                    zoo.kind(),
                    if strict { ">" } else { ">=" },
                    b.ess_mean - a.ess_mean
                ));
            }
        }
        if violations > 1 || hard {
            passed = false;
        }
    }
    verdict(passed, notes.join("; "))
}

/// Operation counts added by one more observation.
fn increment<F: Fn(usize) -> sdpp::counters::OpCounts>(f: F, n: usize) -> sdpp::counters::OpCounts {
    f(n + 1) - f(n)
}

fn cost_asymmetry() -> Verdict {
    let x1 = [0.3];
    let survey = |marginal: bool| {
        move |n: usize| {
            let m = SurveyModel::new(vec![true; n]);
            let z = Nuisance::new(vec![1; n]);
            measure(|| if marginal { marginal_log_density(&m, &x1) } else { log_joint(&m, &x1, &z) }).1
        }
    };
    let s_ratio = increment(survey(true), 8).density_evals as f64 / increment(survey(false), 8).density_evals as f64;

    let gmm = |k: usize, marginal: bool| {
        move |n: usize| {
            let m = GmmModel::new(vec![0.5; n], k).unwrap();
            let x = vec![0.1; 2 * k];
            let z = Nuisance::new(vec![0; n]);
            measure(|| if marginal { marginal_log_density(&m, &x) } else { log_joint(&m, &x, &z) }).1
        }
    };
    let hmm = |k: usize, marginal: bool| {
        move |n: usize| {
            let m = HmmModel::new(vec![0.5; n], k, 0.5).unwrap();
            let x = vec![0.1; k * k];
            let z = Nuisance::new(vec![0; n]);
            measure(|| if marginal { marginal_log_density(&m, &x) } else { log_joint(&m, &x, &z) }).1
        }
    };
    let mut passed = s_ratio >= 2.0;
    let mut detail = format!("survey {s_ratio:.1}");
    for k in [2usize, 3] {
        let g = increment(gmm(k, true), 8).density_evals as f64 / increment(gmm(k, false), 8).density_evals as f64;
        let h = increment(hmm(k, true), 8).density_evals as f64 / increment(hmm(k, false), 8).density_evals as f64;
        passed &= g >= k as f64 && h >= k as f64;
        detail.push_str(&format!(", gmm K={k} {g:.1}, hmm K={k} {h:.1}/step"));
    }
    let lse2 = increment(hmm(2, true), 8).lse_terms;
    let lse3 = increment(hmm(3, true), 8).lse_terms;
    passed &= lse2 == 4 && lse3 == 9;
    detail.push_str(&format!("; hmm log-sum-exp terms per step K=2 {lse2}, K=3 {lse3}"));
    verdict(passed, detail)
}

fn ess_sanity() -> Verdict {
    let n = 100_000;
    let phi = 0.9f64;
    let mut rng = Rng::new(8, 0);
    let mut x = Distribution::<f64>::sample(&StandardNormal, &mut rng) / (1.0 - phi * phi).sqrt();
    let chain: Vec<f64> = (0..n)
        .map(|_| {
            x = phi * x + Distribution::<f64>::sample(&StandardNormal, &mut rng);
            x
        })
        .collect();
    let target = n as f64 * (1.0 - phi) / (1.0 + phi);
    let ess = effective_sample_size(&chain).unwrap().ess;
    let rel = (ess - target).abs() / target;
    verdict(rel < 0.15, format!("ESS {ess:.0} vs {target:.0} ({:.1}% off)", 100.0 * rel))
}

fn determinism() -> Verdict {
    let cfg = BenchConfig {
        sampler: SamplerConfig {
            n_samples: 200,
            step_size: 0.1,
            seed: 9,
            ..SamplerConfig::default()
        },
        replicas: 2,
        ..BenchConfig::default()
    };
    let mut identical = true;
    let mut files = 0;
    for zoo in benchmarks() {
        let dirs = [tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap()];
        let mut outputs = Vec::new();
        for dir in &dirs {
            let out = bench::bench(&zoo, &Scheme::ALL, &cfg).unwrap();
            let written = bench::write_outputs(&zoo, &out, dir.path()).unwrap();
            let chains: Vec<Vec<u8>> = written
                .iter()
                .filter(|p| p.to_string_lossy().contains("_chain"))
                .map(|p| std::fs::read(p).unwrap())
                .collect();
            outputs.push(chains);
        }
        files += outputs[0].len();
        identical &= outputs[0] == outputs[1] && !outputs[0].is_empty();
    }
    verdict(identical, format!("{files} chain CSVs compared byte for byte"))
}

fn main() -> ExitCode {
    let start = Instant::now();
    let mut results: Vec<(u32, &str, Verdict)> = vec![
        (1, "unbiased gradient estimator", unbiasedness()),
        (2, "autodiff vs finite differences", gradients()),
        (3, "enumeration vs marginalized density", marginalization()),
        (4, "bimodal two-normals target", bimodality()),
    ];
    let runs: Vec<(Zoo, f64, BenchOutcome)> = benchmarks()
        .into_iter()
        .map(|zoo| {
            let t = Instant::now();
            let (step, out) = protocol(&zoo);
            eprintln!("  {} protocol finished in {:.0}s", zoo.kind(), t.elapsed().as_secs_f64());
            (zoo, step, out)
        })
        .collect();
    results.push((5, "cross-scheme posterior consistency", consistency(&runs)));
    results.push((6, "ESS ordering across schemes", ordering(&runs)));
    results.push((7, "cost asymmetry of marginalization", cost_asymmetry()));
    results.push((8, "ESS estimator on AR(1)", ess_sanity()));
    results.push((9, "deterministic benchmark output", determinism()));

    for (id, name, v) in &results {
        println!("criterion {id} {:<38} {}  {}", name, if v.passed { "PASS" } else { "FAIL" }, v.detail);
    }
    for (_, _, out) in &runs {
        println!("\n{}", out.report.to_table());
    }
    let failed = results.iter().filter(|r| !r.2.passed).count();
    println!(
        "\n{} of {} criteria passed in {:.0}s",
        results.len() - failed,
        results.len(),
        start.elapsed().as_secs_f64()
    );
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
