//! Poisson equation for the transfer operator, asymptotic variance, and
//! functional CLT diagnostics on normalized partial sums.

use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::family::MapFamily;
use crate::noise::{derive_seed, Noise, NoiseSpec, NoiseStream};
use crate::order::{taxicab, PointCloud};
use crate::stats::{correlation, ks_p_value, ks_statistic, linear_fit, mean, normal_cdf, variance};
use crate::transport::{pullback_sample, EmpiricalMeasure};

/// Per-point node budget of the exact (enumerated) transfer operator.
pub const EXACT_NODE_BUDGET: usize = 1 << 16;
const DECAY_FACTOR: f64 = 0.95;
const DECAY_WINDOW: usize = 10;
const CENTER_MEAN_TOL: f64 = 1e-3;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ObservableSpec {
    /// Coordinate `index` (1-based).
    Coordinate { index: usize },
    Affine { coeffs: Vec<f64>, offset: f64 },
    /// Values at points, extended by nearest neighbour.
    Table { points: Vec<Vec<f64>>, values: Vec<f64> },
}

impl FromStr for ObservableSpec {
    type Err = Error;

    /// `coord:<s>` or `affine:<c_1>,...,<c_k>[@<offset>]`.
    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::usage(format!("cannot parse observable '{s}'"));
        let (kind, rest) = s.split_once(':').ok_or_else(bad)?;
        match kind {
            "coord" => Ok(ObservableSpec::Coordinate {
                index: rest.trim().parse().map_err(|_| bad())?,
            }),
            "affine" => {
                let (coeffs, offset) = rest.split_once('@').unwrap_or((rest, "0"));
                let coeffs = coeffs
                    .split(',')
                    .map(|c| c.trim().parse::<f64>())
                    .collect::<std::result::Result<Vec<_>, _>>()
                    .map_err(|_| bad())?;
                Ok(ObservableSpec::Affine {
                    coeffs,
                    offset: offset.trim().parse().map_err(|_| bad())?,
                })
            }
            _ => Err(bad()),
        }
    }
}

/// A real observable with its Lipschitz constant (taxicab metric) and the
/// centering constant subtracted from it.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Observable {
    pub spec: ObservableSpec,
    pub dim: usize,
    pub lipschitz: f64,
    pub center: f64,
    #[serde(skip)]
    table: Option<PointCloud>,
}

impl Observable {
    pub fn new(spec: ObservableSpec, dim: usize) -> Result<Self> {
        let (lipschitz, table) = match &spec {
            ObservableSpec::Coordinate { index } => {
                if *index == 0 || *index > dim {
                    return Err(Error::usage(format!("coordinate {index} out of range 1..={dim}")));
                }
                (1.0, None)
            }
            ObservableSpec::Affine { coeffs, .. } => {
                if coeffs.len() != dim {
                    return Err(Error::DimensionMismatch {
                        expected: dim,
                        got: coeffs.len(),
                    });
                }
                (coeffs.iter().fold(0.0f64, |m, c| m.max(c.abs())), None)
            }
            ObservableSpec::Table { points, values } => {
                if points.is_empty() || points.len() != values.len() {
                    return Err(Error::usage("table observable needs one value per point"));
                }
                let cloud = PointCloud::from_points(dim, points)?;
                let mut l = 0.0f64;
                for i in 0..cloud.len() {
                    for j in 0..i {
                        let d = taxicab(cloud.get(i), cloud.get(j));
                        if d > 0.0 {
                            l = l.max((values[i] - values[j]).abs() / d);
                        }
                    }
                }
                (l, Some(cloud))
            }
        };
        Ok(Observable {
            spec,
            dim,
            lipschitz,
            center: 0.0,
            table,
        })
    }

    pub fn raw(&self, x: &[f64]) -> f64 {
        match &self.spec {
            ObservableSpec::Coordinate { index } => x[index - 1],
            ObservableSpec::Affine { coeffs, offset } => {
                offset + coeffs.iter().zip(x).map(|(c, v)| c * v).sum::<f64>()
            }
            ObservableSpec::Table { values, .. } => {
                let table = self.table.as_ref().expect("table cloud");
                let (best, _) = table
                    .iter()
                    .enumerate()
                    .map(|(i, p)| (i, taxicab(p, x)))
                    .fold((0, f64::INFINITY), |a, b| if b.1 < a.1 { b } else { a });
                values[best]
            }
        }
    }

    /// The centered value `phi(x) - center`.
    pub fn eval(&self, x: &[f64]) -> f64 {
        self.raw(x) - self.center
    }

    pub fn with_center(mut self, center: f64) -> Self {
        self.center = center;
        self
    }

    pub fn scaled(&self, factor: f64) -> Result<Self> {
        let spec = match &self.spec {
            ObservableSpec::Coordinate { index } => {
                let mut coeffs = vec![0.0; self.dim];
                coeffs[index - 1] = factor;
                ObservableSpec::Affine { coeffs, offset: 0.0 }
            }
            ObservableSpec::Affine { coeffs, offset } => ObservableSpec::Affine {
                coeffs: coeffs.iter().map(|c| c * factor).collect(),
                offset: offset * factor,
            },
            ObservableSpec::Table { points, values } => ObservableSpec::Table {
                points: points.clone(),
                values: values.iter().map(|v| v * factor).collect(),
            },
        };
        Ok(Observable::new(spec, self.dim)?.with_center(self.center * factor))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TransferMode {
    /// Weighted sum over the finite alphabet.
    Exact,
    MonteCarlo { samples: usize, seed: u64 },
}

/// `(P f)(x) = E f(f_alpha(x))` at every grid point.
pub fn transfer_apply<F>(fam: &MapFamily, f: F, grid: &PointCloud, mode: TransferMode) -> Result<Vec<f64>>
where
    F: Fn(&[f64]) -> f64 + Sync,
{
    let k = fam.dim();
    match mode {
        TransferMode::Exact => {
            let probs = fam
                .noise()
                .probs()
                .ok_or_else(|| Error::usage("exact transfer needs finite noise"))?;
            Ok(grid
                .iter()
                .collect::<Vec<_>>()
                .par_iter()
                .map(|x| {
                    let mut y = vec![0.0; k];
                    probs
                        .iter()
                        .enumerate()
                        .map(|(s, p)| {
                            fam.apply_into(Noise::Symbol(s), x, &mut y);
                            p * f(&y)
                        })
                        .sum()
                })
                .collect())
        }
        TransferMode::MonteCarlo { samples, seed } => {
            if samples < 100 {
                return Err(Error::usage("Monte Carlo transfer needs at least 100 samples"));
            }
            let sub = derive_seed(seed, "transfer", 0);
            Ok(grid
                .iter()
                .collect::<Vec<_>>()
                .par_iter()
                .enumerate()
                .map(|(i, x)| {
                    let mut stream = NoiseStream::new(fam.noise(), sub, i as u64);
                    let mut y = vec![0.0; k];
                    let total: f64 = (0..samples)
                        .map(|m| {
                            fam.apply_into(stream.value_at(m), x, &mut y);
                            f(&y)
                        })
                        .sum();
                    total / samples as f64
                })
                .collect())
        }
    }
}

/// `(P^j f)(x)` for `j = 0..=depth` by enumerating all `q^depth` compositions.
fn exact_terms(fam: &MapFamily, probs: &[f64], f: &(impl Fn(&[f64]) -> f64 + ?Sized), x: &[f64], depth: usize) -> Vec<f64> {
    let k = fam.dim();
    let mut level = PointCloud::from_flat(k, x.to_vec()).expect("point");
    let mut mass = vec![1.0];
    let mut terms = Vec::with_capacity(depth + 1);
    let mut y = vec![0.0; k];
    for j in 0..=depth {
        terms.push(level.iter().zip(&mass).map(|(p, m)| m * f(p)).sum());
        if j == depth {
            break;
        }
        let mut next = PointCloud::with_capacity(k, level.len() * probs.len());
        let mut next_mass = Vec::with_capacity(mass.len() * probs.len());
        for (p, m) in level.iter().zip(&mass) {
            for (s, q) in probs.iter().enumerate() {
                fam.apply_into(Noise::Symbol(s), p, &mut y);
                next.push(&y);
                next_mass.push(m * q);
            }
        }
        level = next;
        mass = next_mass;
    }
    terms
}

/// Largest depth whose full enumeration stays within the node budget.
fn exact_depth(q: usize) -> usize {
    if q <= 1 {
        return 64;
    }
    let (mut d, mut nodes, mut width) = (0, 1usize, 1usize);
    loop {
        width = width.saturating_mul(q);
        nodes = nodes.saturating_add(width);
        if nodes > EXACT_NODE_BUDGET {
            return d;
        }
        d += 1;
    }
}

/// `int phi dmu`: the enumerated limit of `P^d phi` at the probe centre for
/// finite noise, else the mean over the sample.
pub fn stationary_mean(fam: &MapFamily, obs: &Observable, sample: &EmpiricalMeasure) -> f64 {
    match fam.noise().probs() {
        Some(probs) if fam.is_bounded() => {
            let x0 = fam.probe_box().center();
            let d = exact_depth(probs.len());
            *exact_terms(fam, probs, &|y: &[f64]| obs.raw(y), &x0, d)
                .last()
                .expect("non-empty")
        }
        _ => {
            let vals: Vec<f64> = sample.points().iter().map(|p| obs.raw(p)).collect();
            vals.iter().zip(sample.weights()).map(|(v, w)| v * w).sum()
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PoissonParams {
    pub grid_size: usize,
    pub tol: f64,
    pub j_max: usize,
    /// Inner samples per grid point when the transfer operator is estimated.
    pub inner: usize,
    /// Steps before geometric decay is expected.
    pub m0: usize,
    pub seed: u64,
}

impl Default for PoissonParams {
    fn default() -> Self {
        PoissonParams {
            grid_size: 2048,
            tol: 1e-6,
            j_max: 60,
            inner: 256,
            m0: 0,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SolveMode {
    Exact,
    MonteCarlo,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PoissonSolution {
    #[serde(skip)]
    pub grid: PointCloud,
    pub psi: Vec<f64>,
    pub p_psi: Vec<f64>,
    pub phi: Vec<f64>,
    /// Truncation index: `psi = sum_{j=0}^{J} P^j phi`.
    pub truncation: usize,
    /// `sup_grid |P^j phi|` for `j = 0..=J+1`.
    pub term_norms: Vec<f64>,
    /// `max_grid |psi - P psi - phi|`.
    pub residual: f64,
    /// Stop threshold actually used (`tol`, or the Monte Carlo floor).
    pub threshold: f64,
    pub mode: SolveMode,
    pub converged: bool,
}

fn check_decay(norms: &[f64], m0: usize, threshold: f64) -> Result<()> {
    let mut run = 0;
    for j in m0.max(1)..norms.len() {
        if norms[j - 1] <= threshold {
            break;
        }
        if norms[j] >= DECAY_FACTOR * norms[j - 1] {
            run += 1;
            if run >= DECAY_WINDOW {
                return Err(Error::NoDecay { j });
            }
        } else {
            run = 0;
        }
    }
    Ok(())
}

/// First `J >= 1` whose term norm is at most `threshold`.
fn truncation(norms: &[f64], threshold: impl Fn(usize) -> f64) -> Option<usize> {
    (1..norms.len()).find(|&j| norms[j] <= threshold(j))
}

fn sup_norms(terms: &[Vec<f64>], depth: usize) -> Vec<f64> {
    (0..=depth)
        .map(|j| terms.iter().fold(0.0f64, |m, t| m.max(t[j].abs())))
        .collect()
}

/// `psi = sum_j P^j phi` on the first `grid_size` points of `mu_sample`.
pub fn poisson_solve(fam: &MapFamily, obs: &Observable, mu_sample: &EmpiricalMeasure, params: &PoissonParams) -> Result<PoissonSolution> {
    if obs.dim != fam.dim() || mu_sample.dim() != fam.dim() {
        return Err(Error::DimensionMismatch {
            expected: fam.dim(),
            got: mu_sample.dim(),
        });
    }
    if !(params.tol > 0.0) || params.grid_size == 0 {
        return Err(Error::usage("poisson solve needs tol > 0 and a non-empty grid"));
    }
    let g = params.grid_size.min(mu_sample.len());
    let flat = mu_sample.points().as_flat()[..g * fam.dim()].to_vec();
    let grid = PointCloud::from_flat(fam.dim(), flat)?;
    let phi: Vec<f64> = grid.iter().map(|x| obs.eval(x)).collect();
    let f = |y: &[f64]| obs.eval(y);

    if let Some(probs) = fam.noise().probs() {
        let depth = exact_depth(probs.len()).min(params.j_max + 1);
        let terms: Vec<Vec<f64>> = grid
            .iter()
            .collect::<Vec<_>>()
            .par_iter()
            .map(|x| exact_terms(fam, probs, &f, x, depth))
            .collect();
        let norms = sup_norms(&terms, depth);
        match truncation(&norms[..depth], |_| params.tol) {
            Some(j) => return Ok(assemble(grid, phi, &terms, norms, j, params.tol, SolveMode::Exact)),
            None => {
                check_decay(&norms, params.m0, params.tol)?;
                if depth == params.j_max + 1 {
                    let j = params.j_max;
                    let mut sol = assemble(grid, phi, &terms, norms, j, params.tol, SolveMode::Exact);
                    sol.converged = false;
                    return Ok(sol);
                }
            }
        }
    }
    monte_carlo_solve(fam, &f, grid, phi, params)
}

fn assemble(
    grid: PointCloud,
    phi: Vec<f64>,
    terms: &[Vec<f64>],
    norms: Vec<f64>,
    j: usize,
    threshold: f64,
    mode: SolveMode,
) -> PoissonSolution {
    let psi: Vec<f64> = terms.iter().map(|t| t[..=j].iter().sum()).collect();
    let p_psi: Vec<f64> = terms.iter().map(|t| t[1..=j + 1].iter().sum()).collect();
    let residual = psi
        .iter()
        .zip(&p_psi)
        .zip(&phi)
        .fold(0.0f64, |m, ((a, b), c)| m.max((a - b - c).abs()));
    PoissonSolution {
        grid,
        psi,
        p_psi,
        phi,
        truncation: j,
        term_norms: norms[..=j + 1].to_vec(),
        residual,
        threshold,
        mode,
        converged: true,
    }
}

/// Estimated terms from `inner` forward paths per grid point; stops at the
/// larger of `tol` and three standard errors.
fn monte_carlo_solve(
    fam: &MapFamily,
    f: &(dyn Fn(&[f64]) -> f64 + Sync),
    grid: PointCloud,
    phi: Vec<f64>,
    params: &PoissonParams,
) -> Result<PoissonSolution> {
    if params.inner < 100 {
        return Err(Error::usage("inner sample count must be at least 100"));
    }
    let depth = params.j_max + 1;
    let sub = derive_seed(params.seed, "poisson", 0);
    let m = params.inner;
    let k = fam.dim();
    let rows: Vec<(Vec<f64>, Vec<f64>)> = grid
        .iter()
        .collect::<Vec<_>>()
        .par_iter()
        .enumerate()
        .map(|(i, x)| {
            let mut sum = vec![0.0; depth + 1];
            let mut sq = vec![0.0; depth + 1];
            let mut z = vec![0.0; k];
            let mut y = vec![0.0; k];
            for r in 0..m {
                let mut stream = NoiseStream::new(fam.noise(), sub, (i * m + r) as u64);
                let noise: Vec<Noise> = stream.range(0, depth);
                z.copy_from_slice(x);
                for j in 0..=depth {
                    let v = f(&z);
                    sum[j] += v;
                    sq[j] += v * v;
                    if j < depth {
                        fam.apply_into(noise[j], &z, &mut y);
                        z.copy_from_slice(&y);
                    }
                }
            }
            let mf = m as f64;
            let mean: Vec<f64> = sum.iter().map(|s| s / mf).collect();
            let se = sum
                .iter()
                .zip(&sq)
                .map(|(s, q)| ((q / mf - (s / mf).powi(2)).max(0.0) / mf).sqrt())
                .collect();
            // the j = 0 term is phi itself
            let mut mean = mean;
            mean[0] = f(x);
            (mean, se)
        })
        .collect();
    let (terms, ses): (Vec<_>, Vec<_>) = rows.into_iter().unzip();
    let norms = sup_norms(&terms, depth);
    let floor: Vec<f64> = (0..=depth)
        .map(|j| ses.iter().fold(0.0f64, |a, s: &Vec<f64>| a.max(3.0 * s[j])))
        .collect();
    let thr = |j: usize| params.tol.max(floor[j]);
    match truncation(&norms[..depth], thr) {
        Some(j) => Ok(assemble(grid, phi, &terms, norms, j, thr(j), SolveMode::MonteCarlo)),
        None => {
            check_decay(&norms, params.m0, params.tol)?;
            let j = params.j_max;
            let mut sol = assemble(grid, phi, &terms, norms, j, thr(j), SolveMode::MonteCarlo);
            sol.converged = false;
            Ok(sol)
        }
    }
}

/// Martingale form `mean psi^2 - mean (P psi)^2` and the residual form
/// `mean (psi - P psi)^2` over the grid.
pub fn sigma_estimate(sol: &PoissonSolution) -> Result<(f64, f64)> {
    let n = sol.psi.len() as f64;
    let mg = sol.psi.iter().zip(&sol.p_psi).map(|(a, b)| a * a - b * b).sum::<f64>() / n;
    let resid = sol.psi.iter().zip(&sol.p_psi).map(|(a, b)| (a - b).powi(2)).sum::<f64>() / n;
    if !(mg > 0.0) {
        return Err(Error::NonPositive { sigma2: mg });
    }
    Ok((mg, resid))
}

#[derive(Debug, Clone, PartialEq)]
pub struct PathEnsemble {
    pub n: usize,
    pub grid_t: Vec<f64>,
    pub sigma2: f64,
    /// `y[r][i] = Y_r(grid_t[i])`.
    pub y: Vec<Vec<f64>>,
    /// `S_n = sum_{j<n} phi(Z_j)` per replica.
    pub sums: Vec<f64>,
}

impl PathEnsemble {
    /// `Var(S_n) / n` over replicas.
    pub fn direct_variance(&self) -> f64 {
        variance(&self.sums) / self.n as f64
    }
}

/// Normalized partial sums `Y(t) = (sigma sqrt n)^{-1} sum_{j=0}^{[nt]} phi(Z_j)`
/// of chains started at `starts` (cycled) or at a fixed point.
#[allow(clippy::too_many_arguments)]
pub fn partial_sum_paths(
    fam: &MapFamily,
    obs: &Observable,
    sigma2: f64,
    n: usize,
    grid_t: &[f64],
    starts: &PointCloud,
    replicas: usize,
    seed: u64,
) -> Result<PathEnsemble> {
    if !(sigma2 > 0.0) {
        return Err(Error::NonPositive { sigma2 });
    }
    if starts.is_empty() || starts.dim() != fam.dim() || n == 0 {
        return Err(Error::usage("partial sums need start points of the family dimension and n >= 1"));
    }
    if grid_t.iter().any(|t| !(0.0..=1.0).contains(t)) {
        return Err(Error::usage("time grid must lie in [0, 1]"));
    }
    let steps: Vec<usize> = grid_t.iter().map(|t| (n as f64 * t).floor() as usize).collect();
    let norm = 1.0 / (sigma2.sqrt() * (n as f64).sqrt());
    let sub = derive_seed(seed, "chain", 0);
    let k = fam.dim();
    let rows: Vec<(Vec<f64>, f64)> = (0..replicas)
        .into_par_iter()
        .map(|r| {
            let mut stream = NoiseStream::new(fam.noise(), sub, r as u64);
            let noise = stream.range(0, n);
            let mut z = starts.get(r % starts.len()).to_vec();
            let mut y = vec![0.0; k];
            let mut acc = vec![0.0; n + 1];
            let mut s = 0.0;
            for j in 0..=n {
                s += obs.eval(&z);
                acc[j] = s;
                if j < n {
                    fam.apply_into(noise[j], &z, &mut y);
                    z.copy_from_slice(&y);
                }
            }
            let path = steps.iter().map(|&i| acc[i] * norm).collect();
            (path, acc[n - 1])
        })
        .collect();
    let (y, sums) = rows.into_iter().unzip();
    Ok(PathEnsemble {
        n,
        grid_t: grid_t.to_vec(),
        sigma2,
        y,
        sums,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FcltStats {
    pub ks_stat: f64,
    pub p_value: f64,
    pub var_slope: f64,
    pub var_intercept: f64,
    pub increment_corr: f64,
}

/// KS test of `Y(1)` (last grid time) against N(0,1), slope of `Var Y(t)`
/// on `t`, and mean correlation of adjacent disjoint increments.
pub fn fclt_tests(paths: &PathEnsemble) -> Result<FcltStats> {
    let r = paths.y.len();
    let nt = paths.grid_t.len();
    if r < 2 || nt < 3 {
        return Err(Error::usage("fclt tests need at least 2 replicas and 3 grid times"));
    }
    let last: Vec<f64> = paths.y.iter().map(|p| p[nt - 1]).collect();
    let ks_stat = ks_statistic(&last, normal_cdf);
    let col = |i: usize| paths.y.iter().map(|p| p[i]).collect::<Vec<_>>();
    let vars: Vec<f64> = (0..nt).map(|i| variance(&col(i))).collect();
    let fit = linear_fit(&paths.grid_t, &vars).ok_or_else(|| Error::usage("degenerate time grid"))?;
    let incs: Vec<Vec<f64>> = (1..nt)
        .map(|i| paths.y.iter().map(|p| p[i] - p[i - 1]).collect())
        .collect();
    let corrs: Vec<f64> = incs.windows(2).map(|w| correlation(&w[0], &w[1])).collect();
    Ok(FcltStats {
        ks_stat,
        p_value: ks_p_value(ks_stat, r),
        var_slope: fit.slope,
        var_intercept: fit.intercept,
        increment_corr: mean(&corrs),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CltParams {
    pub observable: ObservableSpec,
    pub n: usize,
    pub replicas: usize,
    pub grid_t: Vec<f64>,
    pub poisson: PoissonParams,
    /// Size of the pullback sample standing in for the stationary law.
    pub mu_size: usize,
    pub pullback_tol: f64,
    pub pullback_max: usize,
    /// Start every chain here instead of at stationary samples.
    pub start: Option<Vec<f64>>,
    pub seed: u64,
}

impl Default for CltParams {
    fn default() -> Self {
        CltParams {
            observable: ObservableSpec::Coordinate { index: 1 },
            n: 10_000,
            replicas: 1000,
            grid_t: (1..=10).map(|i| i as f64 / 10.0).collect(),
            poisson: PoissonParams::default(),
            mu_size: 20_000,
            pullback_tol: 1e-9,
            pullback_max: 400,
            start: None,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CltReport {
    pub observable: ObservableSpec,
    pub center: f64,
    pub lipschitz: f64,
    /// Mean of the centered observable over the stationary sample.
    pub sample_mean: f64,
    pub sigma2_mg: f64,
    pub sigma2_resid: f64,
    pub sigma2_direct: f64,
    /// `|sigma2_mg - sigma2_direct| / sigma2_direct`.
    pub direct_rel_err: f64,
    pub poisson: PoissonSolution,
    pub fclt: FcltStats,
    pub n: usize,
    pub replicas: usize,
    pub seed: u64,
    pub warnings: Vec<String>,
}

/// Full pipeline: stationary sample, centering, Poisson solve, variance
/// estimates, and path diagnostics normalized by the martingale variance.
pub fn run_clt(fam: &MapFamily, params: &CltParams) -> Result<(CltReport, PathEnsemble)> {
    let seed = params.seed;
    let mu = pullback_sample(
        fam,
        derive_seed(seed, "clt_mu", 0),
        params.mu_size.max(params.poisson.grid_size),
        params.pullback_tol,
        params.pullback_max,
    )?
    .measure;
    let obs = Observable::new(params.observable.clone(), fam.dim())?;
    let center = stationary_mean(fam, &obs, &mu);
    let obs = obs.with_center(center);
    let sample_mean: f64 = mu
        .points()
        .iter()
        .zip(mu.weights())
        .map(|(p, w)| w * obs.eval(p))
        .sum();
    let mut warnings = Vec::new();
    if sample_mean.abs() > CENTER_MEAN_TOL {
        warnings.push(format!(
            "centered observable has sample mean {sample_mean:.2e} over the stationary sample"
        ));
    }
    let poisson = PoissonParams {
        seed: derive_seed(seed, "poisson", 0),
        ..params.poisson.clone()
    };
    let sol = poisson_solve(fam, &obs, &mu, &poisson)?;
    if !sol.converged {
        warnings.push(format!("Poisson series truncated at J_max = {}", sol.truncation));
    }
    let (sigma2_mg, sigma2_resid) = sigma_estimate(&sol)?;
    let starts = match &params.start {
        Some(x) => PointCloud::from_flat(fam.dim(), x.clone())?,
        None => {
            pullback_sample(
                fam,
                derive_seed(seed, "clt_starts", 0),
                params.replicas,
                params.pullback_tol,
                params.pullback_max,
            )?
            .measure
            .points()
            .clone()
        }
    };
    let paths = partial_sum_paths(
        fam,
        &obs,
        sigma2_mg,
        params.n,
        &params.grid_t,
        &starts,
        params.replicas,
        derive_seed(seed, "clt_paths", 0),
    )?;
    let sigma2_direct = paths.direct_variance();
    let fclt = fclt_tests(&paths)?;
    let report = CltReport {
        observable: params.observable.clone(),
        center,
        lipschitz: obs.lipschitz,
        sample_mean,
        sigma2_mg,
        sigma2_resid,
        sigma2_direct,
        direct_rel_err: (sigma2_mg - sigma2_direct).abs() / sigma2_direct,
        poisson: sol,
        fclt,
        n: params.n,
        replicas: params.replicas,
        seed,
        warnings,
    };
    Ok((report, paths))
}

/// Exact enumeration for finite noise, otherwise 1000 inner samples.
pub fn default_transfer_mode(noise: &NoiseSpec, seed: u64) -> TransferMode {
    match noise {
        NoiseSpec::Finite { .. } => TransferMode::Exact,
        NoiseSpec::Uniform { .. } => TransferMode::MonteCarlo { samples: 1000, seed },
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::transport::Provenance;
    use approx::assert_abs_diff_eq;

    fn cantor() -> MapFamily {
        MapFamily::builtin("cantor1d").unwrap()
    }

    fn centered_x(dim: usize, c: f64) -> Observable {
        Observable::new(ObservableSpec::Coordinate { index: 1 }, dim)
            .unwrap()
            .with_center(c)
    }

    fn uniform_grid(n: usize) -> PointCloud {
        PointCloud::from_flat(1, (0..n).map(|i| i as f64 / (n - 1) as f64).collect()).unwrap()
    }

    #[test]
    fn parses_observables() {
        assert_eq!(
            "coord:2".parse::<ObservableSpec>().unwrap(),
            ObservableSpec::Coordinate { index: 2 }
        );
        assert_eq!(
            "affine:1,-2@0.5".parse::<ObservableSpec>().unwrap(),
            ObservableSpec::Affine {
                coeffs: vec![1.0, -2.0],
                offset: 0.5
            }
        );
        assert!("poly:3".parse::<ObservableSpec>().is_err());
    }

    #[test]
    fn exact_transfer_of_centered_coordinate() {
        let fam = cantor();
        let phi = centered_x(1, 0.5);
        let grid = uniform_grid(11);
        let p = transfer_apply(&fam, |y| phi.eval(y), &grid, TransferMode::Exact).unwrap();
        for (x, v) in grid.iter().zip(&p) {
            assert_abs_diff_eq!(*v, (x[0] - 0.5) / 3.0, epsilon = 1e-12);
        }
        let c = transfer_apply(&fam, |_| 2.5, &grid, TransferMode::Exact).unwrap();
        assert!(c.iter().all(|&v| v == 2.5));
    }

    #[test]
    fn monte_carlo_transfer_within_three_sd() {
        let fam = cantor();
        let phi = centered_x(1, 0.5);
        let grid = uniform_grid(5);
        let m = 4000;
        let p = transfer_apply(&fam, |y| phi.eval(y), &grid, TransferMode::MonteCarlo { samples: m, seed: 9 }).unwrap();
        // phi(f(x)) takes two values 1/3 apart with equal odds: sd 1/3
        for (x, v) in grid.iter().zip(&p) {
            assert!((v - (x[0] - 0.5) / 3.0).abs() < 3.0 / (m as f64).sqrt() / 3.0 + 1e-12);
        }
    }

    #[test]
    fn stationary_mean_of_cantor() {
        let fam = cantor();
        let mu = EmpiricalMeasure::dirac(&[0.0]);
        let obs = Observable::new(ObservableSpec::Coordinate { index: 1 }, 1).unwrap();
        assert_abs_diff_eq!(stationary_mean(&fam, &obs, &mu), 0.5, epsilon = 1e-6);
    }

    #[test]
    fn poisson_closed_form_on_cantor() {
        let fam = cantor();
        let mu = pullback_sample(&fam, 3, 512, 1e-9, 200).unwrap().measure;
        let phi = centered_x(1, 0.5);
        let params = PoissonParams {
            grid_size: 512,
            tol: 1e-6,
            ..Default::default()
        };
        let sol = poisson_solve(&fam, &phi, &mu, &params).unwrap();
        assert_eq!(sol.mode, SolveMode::Exact);
        assert!(sol.residual <= 3.0 * params.tol);
        for ((x, psi), ppsi) in sol.grid.iter().zip(&sol.psi).zip(&sol.p_psi) {
            assert_abs_diff_eq!(*psi, 1.5 * (x[0] - 0.5), epsilon = 1e-6);
            assert_abs_diff_eq!(*ppsi, 0.5 * (x[0] - 0.5), epsilon = 1e-6);
        }
        for w in sol.term_norms.windows(2) {
            assert!(w[1] <= DECAY_FACTOR * w[0]);
        }
        let (mg, resid) = sigma_estimate(&sol).unwrap();
        let second: f64 = sol.phi.iter().map(|v| v * v).sum::<f64>() / sol.phi.len() as f64;
        assert_abs_diff_eq!(mg, 2.0 * second, epsilon = 1e-5);
        assert_abs_diff_eq!(resid, second, epsilon = 1e-5);

        let doubled = poisson_solve(&fam, &phi.scaled(2.0).unwrap(), &mu, &params).unwrap();
        let (mg2, resid2) = sigma_estimate(&doubled).unwrap();
        assert_abs_diff_eq!(mg2, 4.0 * mg, epsilon = 1e-5);
        assert_abs_diff_eq!(resid2, 4.0 * resid, epsilon = 1e-5);
    }

    #[test]
    fn constant_family_poisson_is_phi() {
        let fam = MapFamily::from_json(r#"{"family":"constant","values":[[0.25],[0.25]]}"#).unwrap();
        let pts = PointCloud::from_flat(1, vec![0.0, 0.3, 0.9]).unwrap();
        let mu = EmpiricalMeasure::uniform(pts, Provenance::User).unwrap();
        let phi = centered_x(1, 0.25);
        let sol = poisson_solve(&fam, &phi, &mu, &PoissonParams::default()).unwrap();
        assert_eq!(sol.psi, sol.phi);
        assert!(sol.p_psi.iter().all(|&v| v == 0.0));
        let (mg, resid) = sigma_estimate(&sol).unwrap();
        assert_abs_diff_eq!(mg, resid, epsilon = 1e-15);
    }

    #[test]
    fn non_contracting_family_reports_no_decay() {
        let fam = MapFamily::builtin("lip-pair").unwrap();
        let pts = PointCloud::from_flat(1, vec![-0.5, 0.25, 0.75]).unwrap();
        let mu = EmpiricalMeasure::uniform(pts, Provenance::User).unwrap();
        let phi = centered_x(1, 0.0);
        assert!(matches!(
            poisson_solve(&fam, &phi, &mu, &PoissonParams::default()),
            Err(Error::NoDecay { .. })
        ));
    }

    #[test]
    fn continuous_noise_uses_monte_carlo() {
        let fam = MapFamily::from_json(
            r#"{"family":"affine-general","matrices":[[[0.5]]],"offsets":[[0.0]],
                "noise":{"kind":"uniform","lo":[0.0],"hi":[1.0]}}"#,
        )
        .unwrap();
        // x -> x/2 + u: P phi = phi/2 for phi = x - 1
        let pts = PointCloud::from_flat(1, vec![0.2, 1.0, 1.8]).unwrap();
        let mu = EmpiricalMeasure::uniform(pts, Provenance::User).unwrap();
        let phi = centered_x(1, 1.0);
        let params = PoissonParams {
            tol: 1e-3,
            inner: 4000,
            ..Default::default()
        };
        let sol = poisson_solve(&fam, &phi, &mu, &params).unwrap();
        assert_eq!(sol.mode, SolveMode::MonteCarlo);
        for (x, psi) in sol.grid.iter().zip(&sol.psi) {
            assert!((psi - 2.0 * (x[0] - 1.0)).abs() < 0.05, "{psi} at {x:?}");
        }
    }

    #[test]
    fn iid_partial_sums_have_linear_variance() {
        // f_alpha(x) = alpha: the chain is i.i.d. after one step
        let fam = MapFamily::from_json(r#"{"family":"constant","values":[[-1.0],[1.0]]}"#).unwrap();
        let phi = centered_x(1, 0.0);
        let starts = PointCloud::from_flat(1, vec![-1.0, 1.0]).unwrap();
        let grid_t: Vec<f64> = (1..=10).map(|i| i as f64 / 10.0).collect();
        let paths = partial_sum_paths(&fam, &phi, 1.0, 2000, &grid_t, &starts, 1000, 4).unwrap();
        let stats = fclt_tests(&paths).unwrap();
        assert!((stats.var_slope - 1.0).abs() < 0.15, "{stats:?}");
        assert!(stats.increment_corr.abs() < 0.1);
        assert!(stats.p_value > 0.001);
    }
}
