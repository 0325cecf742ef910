//! Effective sample size and replica summaries.

use std::fmt::Write as _;

use rustfft::num_complex::Complex;
use rustfft::FftPlanner;

use crate::counters::OpCounts;
use crate::error::{Error, Result};
use crate::samplers::Chain;

/// Fewest draws accepted by [`effective_sample_size`].
pub const MIN_DRAWS: usize = 100;

/// Leading fraction of every chain dropped before diagnostics.
pub const BURN_IN_FRACTION: f64 = 0.1;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EssEstimate {
    pub ess: f64,
    /// Set when the sequence has zero variance; `ess` is then `n`.
    pub degenerate: bool,
}

/// The draws left after discarding burn-in.
pub fn burn_in<T>(draws: &[T]) -> &[T] {
    let skip = (draws.len() as f64 * BURN_IN_FRACTION).floor() as usize;
    &draws[skip..]
}

pub fn mean(xs: &[f64]) -> f64 {
    xs.iter().sum::<f64>() / xs.len() as f64
}

/// Mean and sample standard deviation (`n − 1` denominator; 0 for n < 2).
pub fn mean_sd(xs: &[f64]) -> (f64, f64) {
    let m = mean(xs);
    if xs.len() < 2 {
        return (m, 0.0);
    }
    let ss: f64 = xs.iter().map(|x| (x - m) * (x - m)).sum();
    (m, (ss / (xs.len() - 1) as f64).sqrt())
}

/// Normalized autocorrelations `ρ̂_0..ρ̂_{n−1}` using the biased
/// (`1/n`) autocovariance. All zeros for a constant sequence.
pub fn autocorrelation(xs: &[f64]) -> Vec<f64> {
    let n = xs.len();
    if n == 0 {
        return Vec::new();
    }
    let m = mean(xs);
    let len = (2 * n).next_power_of_two();
    let mut buf: Vec<Complex<f64>> = xs.iter().map(|&x| Complex::new(x - m, 0.0)).collect();
    buf.resize(len, Complex::new(0.0, 0.0));
    let mut planner = FftPlanner::new();
    planner.plan_fft_forward(len).process(&mut buf);
    buf.iter_mut().for_each(|c| *c = Complex::new(c.norm_sqr(), 0.0));
    planner.plan_fft_inverse(len).process(&mut buf);
    let c0 = buf[0].re;
    if c0 <= 0.0 || !c0.is_finite() {
        return vec![0.0; n];
    }
    buf[..n].iter().map(|c| c.re / c0).collect()
}

/// Geyer initial-positive-sequence ESS, clamped to `(0, n]`.
pub fn effective_sample_size(draws: &[f64]) -> Result<EssEstimate> {
    let n = draws.len();
    if n < MIN_DRAWS {
        return Err(Error::usage(format!("ESS needs at least {MIN_DRAWS} draws, got {n}")));
    }
    if draws.iter().any(|x| !x.is_finite()) {
        let bad: Vec<f64> = draws.iter().copied().filter(|x| !x.is_finite()).take(4).collect();
        return Err(Error::non_finite("ESS input", &bad));
    }
    let first = draws[0];
    if draws.iter().all(|&x| x == first) {
        return Ok(EssEstimate { ess: n as f64, degenerate: true });
    }
    let rho = autocorrelation(draws);
    let mut sum = 0.0;
    let mut prev = f64::INFINITY;
    let mut k = 0;
    while 2 * k + 1 < n {
        let pair = rho[2 * k] + rho[2 * k + 1];
        if k > 0 && pair <= 0.0 {
            break;
        }
        // initial monotone sequence: pair sums may not increase
        let pair = pair.min(prev);
        sum += pair;
        prev = pair;
        k += 1;
    }
    let tau = -1.0 + 2.0 * sum;
    let nf = n as f64;
    let ess = if tau > 0.0 { (nf / tau).min(nf) } else { nf };
    Ok(EssEstimate { ess, degenerate: false })
}

/// Posterior summary of one constrained parameter pooled over replicas.
#[derive(Clone, Debug, PartialEq)]
pub struct ParamSummary {
    pub name: String,
    pub mean: f64,
    pub sd: f64,
    /// Monte Carlo standard error of `mean`: `sd / √(Σ ESS)`.
    pub mcse: f64,
}

/// One scheme's replicas reduced to the reported ESS, time and cost figures.
#[derive(Clone, Debug, PartialEq)]
pub struct SchemeSummary {
    pub scheme: String,
    pub replicas: usize,
    /// Draws per replica after burn-in.
    pub draws: usize,
    /// Minimum-coordinate ESS of each replica.
    pub ess: Vec<f64>,
    pub ess_mean: f64,
    pub ess_sd: f64,
    pub wall_mean: f64,
    pub wall_sd: f64,
    pub ess_per_second: f64,
    pub acceptance: f64,
    pub divergences: usize,
    /// Mean instrumented operation counts per recorded draw.
    pub ops_per_draw: (f64, f64),
    pub degenerate: bool,
    pub params: Vec<ParamSummary>,
}

/// Summarizes replicas of one scheme. `constrain` maps an unconstrained
/// draw to the reported parameters, named by `names`.
pub fn summarize<C>(scheme: &str, names: &[String], chains: &[Chain], constrain: C) -> Result<SchemeSummary>
where
    C: Fn(&[f64]) -> Vec<f64>,
{
    if chains.len() < 2 {
        return Err(Error::usage("summarize needs at least two replicas"));
    }
    let len = chains[0].draws.len();
    if chains.iter().any(|c| c.draws.len() != len) {
        return Err(Error::usage("replicas have mismatched lengths"));
    }
    let p = names.len();
    let mut ess = Vec::with_capacity(chains.len());
    let mut degenerate = false;
    let mut means = vec![Vec::with_capacity(chains.len()); p];
    let mut vars = vec![Vec::with_capacity(chains.len()); p];
    let mut ess_by_param = vec![0.0; p];
    let mut draws = 0;
    for chain in chains {
        let kept: Vec<Vec<f64>> = burn_in(&chain.draws).iter().map(|d| constrain(d)).collect();
        draws = kept.len();
        if kept.iter().any(|d| d.len() != p) {
            return Err(Error::usage("parameter names do not match the constrained draws"));
        }
        let mut min_ess = f64::INFINITY;
        for j in 0..p {
            let col: Vec<f64> = kept.iter().map(|d| d[j]).collect();
            let e = effective_sample_size(&col)?;
            degenerate |= e.degenerate;
            min_ess = min_ess.min(e.ess);
            ess_by_param[j] += e.ess;
            let (m, s) = mean_sd(&col);
            means[j].push(m);
            vars[j].push(s * s);
        }
        ess.push(min_ess);
    }
    let params = names
        .iter()
        .enumerate()
        .map(|(j, name)| {
            let (m, between_sd) = mean_sd(&means[j]);
            // total variance = within + between replicas
            let var = mean(&vars[j]) + between_sd * between_sd * (chains.len() - 1) as f64 / chains.len() as f64;
            let sd = var.sqrt();
            ParamSummary {
                name: name.clone(),
                mean: m,
                sd,
                mcse: sd / ess_by_param[j].sqrt(),
            }
        })
        .collect();
    let (ess_mean, ess_sd) = mean_sd(&ess);
    let walls: Vec<f64> = chains.iter().map(|c| c.wall_time).collect();
    let (wall_mean, wall_sd) = mean_sd(&walls);
    let total_draws: usize = chains.iter().map(|c| c.draws.len()).sum();
    let ops: OpCounts = chains.iter().fold(OpCounts::default(), |acc, c| acc + c.ops);
    let accepted: usize = chains.iter().map(|c| c.accepted).sum();
    Ok(SchemeSummary {
        scheme: scheme.to_string(),
        replicas: chains.len(),
        draws,
        ess,
        ess_mean,
        ess_sd,
        wall_mean,
        wall_sd,
        ess_per_second: if wall_mean > 0.0 { ess_mean / wall_mean } else { f64::INFINITY },
        acceptance: accepted as f64 / total_draws as f64,
        divergences: chains.iter().map(|c| c.divergences).sum(),
        ops_per_draw: (
            ops.density_evals as f64 / total_draws as f64,
            ops.lse_terms as f64 / total_draws as f64,
        ),
        degenerate,
        params,
    })
}

/// All schemes for one model.
#[derive(Clone, Debug, PartialEq)]
pub struct DiagnosticsReport {
    pub model: String,
    pub param_names: Vec<String>,
    pub schemes: Vec<SchemeSummary>,
}

impl DiagnosticsReport {
    pub fn scheme(&self, name: &str) -> Option<&SchemeSummary> {
        self.schemes.iter().find(|s| s.scheme == name)
    }

    /// Column order is fixed; wall-time columns are machine-dependent.
    pub fn csv_header(&self) -> String {
        let mut cols: Vec<String> = [
            "model",
            "scheme",
            "replicas",
            "draws",
            "ess_mean",
            "ess_sd",
            "wall_mean_s",
            "wall_sd_s",
            "ess_per_s",
            "acceptance",
            "divergences",
            "density_evals_per_draw",
            "lse_terms_per_draw",
        ]
        .iter()
        .map(|s| s.to_string())
        .collect();
        for name in &self.param_names {
            cols.extend([format!("{name}_mean"), format!("{name}_sd"), format!("{name}_mcse")]);
        }
        cols.join(",")
    }

    pub fn to_csv(&self) -> String {
        let mut out = self.csv_header();
        out.push('\n');
        for s in &self.schemes {
            let mut row = vec![
                self.model.clone(),
                s.scheme.clone(),
                s.replicas.to_string(),
                s.draws.to_string(),
                format!("{:.6}", s.ess_mean),
                format!("{:.6}", s.ess_sd),
                format!("{:.6}", s.wall_mean),
                format!("{:.6}", s.wall_sd),
                format!("{:.6}", s.ess_per_second),
                format!("{:.6}", s.acceptance),
                s.divergences.to_string(),
                format!("{:.3}", s.ops_per_draw.0),
                format!("{:.3}", s.ops_per_draw.1),
            ];
            for p in &s.params {
                row.extend([format!("{:.9}", p.mean), format!("{:.9}", p.sd), format!("{:.9}", p.mcse)]);
            }
            out.push_str(&row.join(","));
            out.push('\n');
        }
        out
    }

    /// Aligned plain-text tables: ESS, wall time, ESS per second, then
    /// posterior summaries and per-draw evaluation counts.
    pub fn to_table(&self) -> String {
        let width = self.schemes.iter().map(|s| s.scheme.len()).max().unwrap_or(0).max(18) + 2;
        let mut out = String::new();
        let _ = writeln!(out, "model: {}", self.model);
        let _ = write!(out, "{:<22}", "");
        for s in &self.schemes {
            let _ = write!(out, "{:>width$}", s.scheme);
        }
        out.push('\n');
        let row = |out: &mut String, label: &str, f: &dyn Fn(&SchemeSummary) -> String| {
            let _ = write!(out, "{label:<22}");
            for s in &self.schemes {
                let _ = write!(out, "{:>width$}", f(s));
            }
            out.push('\n');
        };
        row(&mut out, "ESS (min coord)", &|s| format!("{:.0} ± {:.0}", s.ess_mean, s.ess_sd));
        row(&mut out, "time, s *", &|s| format!("{:.3} ± {:.3}", s.wall_mean, s.wall_sd));
        row(&mut out, "ESS/s *", &|s| format!("{:.0}", s.ess_per_second));
        row(&mut out, "acceptance", &|s| format!("{:.3}", s.acceptance));
        row(&mut out, "divergences", &|s| s.divergences.to_string());
        for (j, name) in self.param_names.iter().enumerate() {
            row(&mut out, &format!("{name} mean (mcse)"), &|s| {
                let p = &s.params[j];
                format!("{:.4} ({:.4})", p.mean, p.mcse)
            });
        }
        out.push('\n');
        let _ = writeln!(out, "* wall-time figures depend on the machine and are not comparable across hosts");
        let _ = writeln!(out, "ESS is the minimum over parameters of the per-parameter ESS");
        let _ = writeln!(out, "evaluation counts per draw (hardware-independent cost):");
        let base = self.schemes.first().map(|s| s.ops_per_draw.0).unwrap_or(0.0);
        for s in &self.schemes {
            let ratio = if base > 0.0 { s.ops_per_draw.0 / base } else { f64::NAN };
            let _ = writeln!(
                out,
                "  {:<20} density evals {:>12.1}  lse terms {:>12.1}  ratio {:>7.3}",
                s.scheme, s.ops_per_draw.0, s.ops_per_draw.1, ratio
            );
        }
        out
    }
}
