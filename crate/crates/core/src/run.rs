//! Command orchestration shared by the CLI: a run configuration that doubles
//! as the manifest, and one handler per command writing its artifacts.

use std::fs;
use std::path::{Path, PathBuf};

use clap::{Args, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};
use serde_json::json;

use crate::clt::{run_clt, CltParams, ObservableSpec, PoissonParams};
use crate::error::{Error, Result};
use crate::family::{classify_monotonicity, FamilyConfig, MapFamily};
use crate::io::{coord_header, read_measure, write_csv, write_json, write_measure};
use crate::noise::{derive_seed, sample_block, Noise, NoiseStream};
use crate::sim::{forward_orbit, reverse_orbit};
use crate::splitting::{
    exact_scan_feasible, exact_splitting_scan, exact_splitting_search, find_splitting_witness, sigma_decay,
    SigmaDecayParams, SplittingReport,
};
use crate::sync::{diameter_series, fit_rate, forward_attractor_gap};
use crate::transport::{pullback_sample, w1_decay_curve, Coupling, EmpiricalMeasure, W1DecayParams};

pub const MANIFEST: &str = "manifest.json";

fn float(v: f64) -> String {
    v.to_string()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum SplitMethodArg {
    /// Exact scan when the block count is within budget, else Monte Carlo.
    Auto,
    Exact,
    MonteCarlo,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum CouplingArg {
    Synchronous,
    Independent,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum DirectionArg {
    Forward,
    Reverse,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Args)]
pub struct MonotoneArgs {
    /// 1-based symbol to classify (default: all symbols).
    #[arg(long)]
    pub symbol: Option<usize>,
    #[arg(long, default_value_t = 1000)]
    pub pairs: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Args)]
pub struct SplittingArgs {
    #[arg(long, default_value_t = 2)]
    pub m_max: usize,
    #[arg(long, value_enum, default_value_t = SplitMethodArg::Auto)]
    pub method: SplitMethodArg,
    /// Sampled blocks per length for the Monte Carlo search.
    #[arg(long, default_value_t = 2000)]
    pub blocks: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Args)]
pub struct SigmaArgs {
    #[arg(long, default_value_t = 1)]
    pub m: usize,
    #[arg(long, default_value_t = 0.1)]
    pub x: f64,
    /// 1-based coordinate.
    #[arg(long, default_value_t = 1)]
    pub s: usize,
    #[arg(long, default_value_t = 8)]
    pub j_max: usize,
    #[arg(long, default_value_t = 10_000)]
    pub replicas: usize,
    #[arg(long, default_value_t = 1e6)]
    pub clip: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Args)]
pub struct SyncArgs {
    #[arg(long, default_value_t = 30)]
    pub n_max: usize,
    #[arg(long, default_value_t = 100)]
    pub replicas: usize,
    #[arg(long, default_value_t = 200)]
    pub bootstrap: usize,
    /// Start of the fit window (default: detected).
    #[arg(long)]
    pub m0: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Args)]
pub struct GapArgs {
    /// Start point, comma separated (default: probe centre).
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    pub x0: Option<Vec<f64>>,
    #[arg(long, default_value_t = 15)]
    pub n_max: usize,
    #[arg(long, default_value_t = 1e-9)]
    pub tol: f64,
    #[arg(long, default_value_t = 400)]
    pub pullback_max: usize,
    #[arg(long, default_value_t = 0)]
    pub stream: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Args)]
pub struct StationaryArgs {
    #[arg(long = "n", default_value_t = 10_000)]
    pub n: usize,
    #[arg(long, default_value_t = 1e-9)]
    pub tol: f64,
    #[arg(long, default_value_t = 400)]
    pub n_max: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Args)]
pub struct W1Args {
    #[arg(long, default_value_t = 12)]
    pub n_max: usize,
    #[arg(long, default_value_t = 4096)]
    pub sample_size: usize,
    #[arg(long, default_value_t = 1e-9)]
    pub tol: f64,
    #[arg(long, default_value_t = 400)]
    pub pullback_max: usize,
    #[arg(long, value_enum, default_value_t = CouplingArg::Synchronous)]
    pub coupling: CouplingArg,
    /// Initial Dirac point, comma separated (default: lower probe corner).
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true, conflicts_with = "initial")]
    pub x0: Option<Vec<f64>>,
    /// Initial measure as CSV (`x_1..x_k[,weight]`).
    #[arg(long)]
    pub initial: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Args)]
pub struct CltArgs {
    /// `coord:<s>` or `affine:<c_1>,...,<c_k>[@<offset>]`.
    #[arg(long, default_value = "coord:1")]
    pub observable: String,
    #[arg(long = "n", default_value_t = 10_000)]
    pub n: usize,
    #[arg(long, default_value_t = 1000)]
    pub replicas: usize,
    #[arg(long, default_value_t = 2048)]
    pub grid_size: usize,
    #[arg(long, default_value_t = 1e-6)]
    pub tol: f64,
    #[arg(long, default_value_t = 60)]
    pub j_max: usize,
    #[arg(long, default_value_t = 256)]
    pub inner: usize,
    #[arg(long, default_value_t = 20_000)]
    pub mu_size: usize,
    /// Start every chain at this point instead of stationary samples.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    pub start: Option<Vec<f64>>,
    /// Also write the path ensemble to paths.csv.
    #[arg(long)]
    pub paths: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Args)]
pub struct SimulateArgs {
    #[arg(long, value_enum, default_value_t = DirectionArg::Forward)]
    pub direction: DirectionArg,
    #[arg(long, default_value_t = 20)]
    pub steps: usize,
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    pub x0: Option<Vec<f64>>,
    #[arg(long, default_value_t = 0)]
    pub stream: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Subcommand)]
#[serde(tag = "command", content = "params", rename_all = "kebab-case")]
pub enum Command {
    /// Classify each map as J-increasing, J-decreasing or neither.
    CheckMonotone(MonotoneArgs),
    /// Search for a splitting certificate.
    CheckSplitting(SplittingArgs),
    /// Decay of the probability that x stays in the projected image.
    SigmaDecay(SigmaArgs),
    /// Exponential rate of reverse-image diameters.
    SyncRate(SyncArgs),
    /// Distance from a forward orbit to the pullback of the shifted noise.
    ForwardGap(GapArgs),
    /// Sample the stationary law by pullback.
    Stationary(StationaryArgs),
    /// Wasserstein-1 decay towards the stationary law.
    W1Decay(W1Args),
    /// Poisson equation, asymptotic variance and functional CLT checks.
    Clt(CltArgs),
    /// Write a single forward or reverse orbit.
    Simulate(SimulateArgs),
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::CheckMonotone(_) => "check-monotone",
            Command::CheckSplitting(_) => "check-splitting",
            Command::SigmaDecay(_) => "sigma-decay",
            Command::SyncRate(_) => "sync-rate",
            Command::ForwardGap(_) => "forward-gap",
            Command::Stationary(_) => "stationary",
            Command::W1Decay(_) => "w1-decay",
            Command::Clt(_) => "clt",
            Command::Simulate(_) => "simulate",
        }
    }
}

/// Everything needed to reproduce a run; written as `manifest.json`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    pub seed: u64,
    pub family: FamilyConfig,
    #[serde(flatten)]
    pub command: Command,
}

impl RunConfig {
    /// Resolves the family so the stored config lists every default.
    pub fn resolved(mut self) -> Result<Self> {
        self.family = MapFamily::from_config(&self.family)?.config().clone();
        Ok(self)
    }

    pub fn load(path: &Path) -> Result<Self> {
        Ok(serde_json::from_str(&fs::read_to_string(path)?)?)
    }
}

#[derive(Debug)]
pub struct Outcome {
    pub artifacts: Vec<PathBuf>,
    /// Human-readable summary lines.
    pub summary: Vec<String>,
    /// Set when the hypotheses could not be verified; artifacts are still
    /// written.
    pub soft: Option<Error>,
}

struct Ctx<'a> {
    cfg: &'a RunConfig,
    out: &'a Path,
    artifacts: Vec<PathBuf>,
    summary: Vec<String>,
}

impl Ctx<'_> {
    fn path(&mut self, name: &str) -> PathBuf {
        let p = self.out.join(name);
        self.artifacts.push(p.clone());
        p
    }

    fn csv(&mut self, name: &str, header: &[String], rows: Vec<Vec<String>>) -> Result<()> {
        let p = self.path(name);
        write_csv(&p, self.cfg.command.name(), self.cfg.seed, header, rows)
    }

    fn json(&mut self, name: &str, value: &serde_json::Value) -> Result<()> {
        let mut v = value.clone();
        if let Some(obj) = v.as_object_mut() {
            obj.insert("command".into(), json!(self.cfg.command.name()));
            obj.insert("seed".into(), json!(self.cfg.seed));
        }
        let p = self.path(name);
        write_json(&p, &v)
    }

    fn say(&mut self, line: String) {
        self.summary.push(line);
    }
}

/// Runs `cfg`, writing the manifest and artifacts into `out`.
///
/// Hard errors are returned as `Err`; soft failures (unverified hypotheses,
/// non-convergence) come back in [`Outcome::soft`].
pub fn execute(cfg: &RunConfig, out: &Path) -> Result<Outcome> {
    let cfg = cfg.clone().resolved()?;
    let fam = MapFamily::from_config(&cfg.family)?;
    fs::create_dir_all(out)?;
    let mut ctx = Ctx {
        cfg: &cfg,
        out,
        artifacts: Vec::new(),
        summary: Vec::new(),
    };
    let manifest = ctx.path(MANIFEST);
    write_json(&manifest, &cfg)?;
    let result = match &cfg.command {
        Command::CheckMonotone(a) => check_monotone(&mut ctx, &fam, a),
        Command::CheckSplitting(a) => check_splitting(&mut ctx, &fam, a),
        Command::SigmaDecay(a) => sigma(&mut ctx, &fam, a),
        Command::SyncRate(a) => sync_rate(&mut ctx, &fam, a),
        Command::ForwardGap(a) => forward_gap(&mut ctx, &fam, a),
        Command::Stationary(a) => stationary(&mut ctx, &fam, a),
        Command::W1Decay(a) => w1(&mut ctx, &fam, a),
        Command::Clt(a) => clt(&mut ctx, &fam, a),
        Command::Simulate(a) => simulate(&mut ctx, &fam, a),
    };
    let soft = match result {
        Ok(()) => None,
        Err(e) if e.is_soft() => Some(e),
        Err(e) => return Err(e),
    };
    Ok(Outcome {
        artifacts: ctx.artifacts,
        summary: ctx.summary,
        soft,
    })
}

fn point_or(fam: &MapFamily, x: &Option<Vec<f64>>, default: Vec<f64>) -> Result<Vec<f64>> {
    match x {
        Some(v) if v.len() != fam.dim() => Err(Error::DimensionMismatch {
            expected: fam.dim(),
            got: v.len(),
        }),
        Some(v) => Ok(v.clone()),
        None => Ok(default),
    }
}

fn check_monotone(ctx: &mut Ctx, fam: &MapFamily, a: &MonotoneArgs) -> Result<()> {
    let symbols: Vec<(String, Noise)> = match (fam.noise().alphabet_size(), a.symbol) {
        (Some(q), Some(s)) if s >= 1 && s <= q => vec![(s.to_string(), Noise::Symbol(s - 1))],
        (Some(q), Some(s)) => return Err(Error::usage(format!("symbol {s} outside 1..={q}"))),
        (Some(q), None) => (0..q).map(|s| ((s + 1).to_string(), Noise::Symbol(s))).collect(),
        (None, _) => {
            // continuous noise: a few sampled parameters
            let mut stream = NoiseStream::new(fam.noise(), derive_seed(ctx.cfg.seed, "monotone-noise", 0), 0);
            (0..8).map(|j| stream.value_at(j)).map(|n| (n.label(), n)).collect()
        }
    };
    let mut verdicts = Vec::new();
    for (label, alpha) in symbols {
        let v = classify_monotonicity(fam, alpha, fam.order(), fam.probe_box(), a.pairs, ctx.cfg.seed)?;
        ctx.say(format!("map {label}: {:?} ({} pairs)", v.kind, v.pairs_tested));
        verdicts.push(json!({ "symbol": label, "verdict": v }));
    }
    ctx.json("monotone.json", &json!({ "maps": verdicts }))
}

fn splitting_report(fam: &MapFamily, m_max: usize, method: SplitMethodArg, blocks: usize, seed: u64) -> Result<SplittingReport> {
    let probe = fam.default_probe();
    let exact = match method {
        SplitMethodArg::Exact => true,
        SplitMethodArg::MonteCarlo => false,
        SplitMethodArg::Auto => exact_scan_feasible(fam.noise(), m_max),
    };
    if exact {
        exact_splitting_search(fam, fam.order(), m_max, &probe)
    } else {
        find_splitting_witness(fam, fam.order(), m_max, &probe, blocks, seed)
    }
}

fn check_splitting(ctx: &mut Ctx, fam: &MapFamily, a: &SplittingArgs) -> Result<()> {
    match splitting_report(fam, a.m_max, a.method, a.blocks, ctx.cfg.seed) {
        Ok(r) => {
            ctx.say(format!(
                "verified at m={}: masses {} / {}, lambda = {}",
                r.m,
                r.mass_a,
                r.mass_b,
                r.lambda()
            ));
            let mut v = serde_json::to_value(&r)?;
            v["lambda"] = json!(r.lambda());
            ctx.json("splitting.json", &v)
        }
        Err(Error::Unverified { m }) => {
            ctx.say(format!("no splitting certificate up to m={m}"));
            ctx.json("splitting.json", &json!({ "verified": false, "m_max": m }))?;
            Err(Error::Unverified { m })
        }
        Err(e) => Err(e),
    }
}

fn sigma(ctx: &mut Ctx, fam: &MapFamily, a: &SigmaArgs) -> Result<()> {
    let probe = fam.default_probe();
    let lambda = if exact_scan_feasible(fam.noise(), a.m) {
        exact_splitting_scan(fam, fam.order(), a.m, &probe)
    } else {
        find_splitting_witness(fam, fam.order(), a.m, &probe, 2000, ctx.cfg.seed)
    }
    .ok()
    .filter(|r| r.m == a.m)
    .map(|r| r.lambda());
    let params = SigmaDecayParams {
        m: a.m,
        x: a.x,
        s: a.s,
        j_max: a.j_max,
        replicas: a.replicas,
        clip: a.clip,
        seed: ctx.cfg.seed,
    };
    let series = sigma_decay(fam, &probe, &params)?;
    let rows = series
        .estimates
        .iter()
        .map(|e| {
            vec![
                e.j.to_string(),
                float(e.p_hat),
                float(e.stderr),
                float(lambda.map_or(f64::NAN, |l| l.powi(e.j as i32))),
            ]
        })
        .collect();
    let header = ["j", "p_hat", "stderr", "lambda_pow_j"].map(String::from);
    ctx.csv("sigma_decay.csv", &header, rows)?;
    ctx.say(format!(
        "{} estimates, fitted decay {:?}, certificate lambda {:?}",
        series.estimates.len(),
        series.lambda_fit,
        lambda
    ));
    Ok(())
}

fn sync_rate(ctx: &mut Ctx, fam: &MapFamily, a: &SyncArgs) -> Result<()> {
    let series = diameter_series(fam, &fam.default_probe(), a.n_max, a.replicas, ctx.cfg.seed, a.m0)?;
    let fit = fit_rate(&series, a.bootstrap, ctx.cfg.seed);
    let mean = series.mean();
    let (q05, q95) = (series.quantiles(0.05), series.quantiles(0.95));
    let rows = (0..=series.n_max())
        .map(|n| {
            let bound = fit.as_ref().map_or(f64::NAN, |f| f.bound(n));
            vec![n.to_string(), float(mean[n]), float(q05[n]), float(q95[n]), float(bound)]
        })
        .collect();
    let header = ["n", "mean_diam", "q05", "q95", "bound_c_rn"].map(String::from);
    ctx.csv("sync.csv", &header, rows)?;
    let meta = json!({
        "m0": series.m0,
        "bounded": series.bounded,
        "saturated": series.saturated,
        "replicas": series.replicas(),
    });
    match fit {
        Ok(f) => {
            ctx.say(format!("r_hat = {} (CI {:?}), bounded = {}", f.r_hat, f.r_ci, series.bounded));
            let mut v = serde_json::to_value(&f)?;
            v["series"] = meta;
            ctx.json("rate.json", &v)
        }
        Err(e) => {
            ctx.json("rate.json", &json!({ "error": e.to_string(), "series": meta }))?;
            Err(e)
        }
    }
}

fn forward_gap(ctx: &mut Ctx, fam: &MapFamily, a: &GapArgs) -> Result<()> {
    let x0 = point_or(fam, &a.x0, fam.probe_box().center())?;
    let gaps = forward_attractor_gap(fam, ctx.cfg.seed, a.stream, &x0, a.n_max, a.tol, a.pullback_max)?;
    let rows = gaps
        .iter()
        .map(|g| {
            vec![
                g.n.to_string(),
                float(g.gap),
                float(g.image_diameter),
                g.pullback_depth.to_string(),
            ]
        })
        .collect();
    let header = ["n", "gap", "image_diameter", "pullback_depth"].map(String::from);
    ctx.csv("forward_gap.csv", &header, rows)?;
    if let Some(last) = gaps.last() {
        ctx.say(format!("gap at n={}: {:e}", last.n, last.gap));
    }
    Ok(())
}

fn stationary(ctx: &mut Ctx, fam: &MapFamily, a: &StationaryArgs) -> Result<()> {
    let s = pullback_sample(fam, ctx.cfg.seed, a.n, a.tol, a.n_max)?;
    let p = ctx.path("stationary.csv");
    write_measure(&p, "stationary", ctx.cfg.seed, &s.measure)?;
    let (mean, var) = (s.measure.mean(), s.measure.variance());
    ctx.say(format!("mean {mean:?}, variance {var:?}, {} failed", s.failed));
    ctx.json(
        "stationary.json",
        &json!({
            "n": s.measure.len(),
            "failed": s.failed,
            "mean_depth": s.mean_depth,
            "max_depth": s.max_depth,
            "saturated": s.measure.is_saturated(),
            "mean": mean,
            "variance": var,
        }),
    )
}

fn w1(ctx: &mut Ctx, fam: &MapFamily, a: &W1Args) -> Result<()> {
    let initial = match &a.initial {
        Some(path) => read_measure(path)?,
        None => EmpiricalMeasure::dirac(&point_or(fam, &a.x0, fam.probe_box().lo.clone())?),
    };
    let params = W1DecayParams {
        n_max: a.n_max,
        sample_size: a.sample_size,
        tol: a.tol,
        pullback_max: a.pullback_max,
        coupling: match a.coupling {
            CouplingArg::Synchronous => Coupling::Synchronous,
            CouplingArg::Independent => Coupling::Independent,
        },
        seed: ctx.cfg.seed,
    };
    let d = w1_decay_curve(fam, &initial, &params)?;
    let rows = d
        .w1
        .iter()
        .enumerate()
        .map(|(n, w)| {
            let bound = d.fit.as_ref().map_or(f64::NAN, |f| f.bound(n));
            vec![n.to_string(), float(*w), float(bound)]
        })
        .collect();
    let header = ["n", "w1", "c_rn_bound"].map(String::from);
    ctx.csv("w1_decay.csv", &header, rows)?;
    if let Some(f) = &d.fit {
        ctx.say(format!("r_hat = {}, R^2 = {}", f.r_hat, f.r_squared));
    }
    for w in &d.warnings {
        ctx.say(format!("warning: {w}"));
    }
    ctx.json(
        "w1_decay.json",
        &json!({ "method": d.method, "fit": d.fit, "warnings": d.warnings }),
    )
}

fn clt(ctx: &mut Ctx, fam: &MapFamily, a: &CltArgs) -> Result<()> {
    let observable: ObservableSpec = a.observable.parse()?;
    let params = CltParams {
        observable,
        n: a.n,
        replicas: a.replicas,
        poisson: PoissonParams {
            grid_size: a.grid_size,
            tol: a.tol,
            j_max: a.j_max,
            inner: a.inner,
            ..Default::default()
        },
        mu_size: a.mu_size,
        start: a.start.clone(),
        seed: ctx.cfg.seed,
        ..Default::default()
    };
    let (report, paths) = run_clt(fam, &params)?;
    ctx.say(format!(
        "sigma2_mg = {}, sigma2_resid = {}, sigma2_direct = {}, KS p = {}",
        report.sigma2_mg, report.sigma2_resid, report.sigma2_direct, report.fclt.p_value
    ));
    ctx.json("clt.json", &serde_json::to_value(&report)?)?;
    if a.paths {
        let rows = paths
            .y
            .iter()
            .enumerate()
            .flat_map(|(r, ys)| {
                ys.iter()
                    .zip(&paths.grid_t)
                    .map(move |(y, t)| vec![r.to_string(), float(*t), float(*y)])
            })
            .collect();
        let header = ["replica", "t", "Y"].map(String::from);
        ctx.csv("paths.csv", &header, rows)?;
    }
    Ok(())
}

fn simulate(ctx: &mut Ctx, fam: &MapFamily, a: &SimulateArgs) -> Result<()> {
    let x0 = point_or(fam, &a.x0, fam.probe_box().center())?;
    let block = sample_block(fam.noise(), derive_seed(ctx.cfg.seed, "simulate", 0), a.stream, a.steps)?;
    let probe = fam.default_probe();
    let trace = match a.direction {
        DirectionArg::Forward => forward_orbit(fam, &block, &x0)?,
        DirectionArg::Reverse => reverse_orbit(fam, &block, &x0, Some(&probe))?,
    };
    let k = fam.dim();
    let mut header = vec!["step".to_string(), "noise".to_string()];
    header.extend(coord_header("x", k));
    if trace.boxes.is_some() {
        header.extend(coord_header("box_lo", k));
        header.extend(coord_header("box_hi", k));
    }
    header.push("saturated".into());
    let clamp = fam.clamp_bound();
    let rows = trace
        .positions
        .iter()
        .enumerate()
        .map(|(n, p)| {
            let noise = if n == 0 { String::new() } else { block.values[n - 1].label() };
            let mut row = vec![n.to_string(), noise];
            row.extend(p.iter().map(|v| float(*v)));
            if let Some(b) = &trace.boxes {
                row.extend(b[n].lo.iter().chain(&b[n].hi).map(|v| float(*v)));
            }
            row.push(p.iter().any(|v| v.abs() >= clamp).to_string());
            row
        })
        .collect();
    ctx.csv("orbit.csv", &header, rows)?;
    ctx.say(format!("{} steps, saturated = {}", a.steps, trace.saturated));
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn manifest_round_trip() {
        let cfg = RunConfig {
            seed: 3,
            family: FamilyConfig::named("cantor1d"),
            command: Command::CheckSplitting(SplittingArgs {
                m_max: 2,
                method: SplitMethodArg::Auto,
                blocks: 10,
            }),
        }
        .resolved()
        .unwrap();
        let text = serde_json::to_string(&cfg).unwrap();
        assert!(text.contains("\"command\":\"check-splitting\""));
        let back: RunConfig = serde_json::from_str(&text).unwrap();
        assert_eq!(back, cfg);
    }
}
