//! Empirical measures, sampling of the stationary law by pullback, the
//! Markov push-forward, and Wasserstein-1 distances.

use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::family::MapFamily;
use crate::noise::{derive_seed, Noise, NoiseStream};
use crate::order::{taxicab, PointCloud};
use crate::sim::pullback_point;
use crate::sync::{fit_exponential, RateFit};

/// Largest size solved by exact matching when `k > 1`.
pub const EXACT_MATCHING_MAX: usize = 512;
pub const SLICED_PROJECTIONS: usize = 128;
const WEIGHT_TOL: f64 = 1e-12;
const MAX_FAILURE_RATE: f64 = 0.01;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Provenance {
    Pullback,
    PushForward,
    User,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EmpiricalMeasure {
    points: PointCloud,
    weights: Vec<f64>,
    provenance: Provenance,
    saturated: bool,
}

impl EmpiricalMeasure {
    pub fn uniform(points: PointCloud, provenance: Provenance) -> Result<Self> {
        if points.is_empty() {
            return Err(Error::WeightMismatch("empty measure".into()));
        }
        let w = 1.0 / points.len() as f64;
        let weights = vec![w; points.len()];
        Ok(EmpiricalMeasure {
            points,
            weights,
            provenance,
            saturated: false,
        })
    }

    pub fn weighted(points: PointCloud, weights: Vec<f64>, provenance: Provenance) -> Result<Self> {
        if points.is_empty() || weights.len() != points.len() {
            return Err(Error::WeightMismatch(format!(
                "{} weights for {} points",
                weights.len(),
                points.len()
            )));
        }
        if weights.iter().any(|w| !(*w >= 0.0)) {
            return Err(Error::WeightMismatch("weights must be nonnegative".into()));
        }
        let total: f64 = weights.iter().sum();
        if (total - 1.0).abs() > WEIGHT_TOL {
            return Err(Error::WeightMismatch(format!("weights sum to {total}")));
        }
        Ok(EmpiricalMeasure {
            points,
            weights,
            provenance,
            saturated: false,
        })
    }

    pub fn dirac(x: &[f64]) -> Self {
        let mut points = PointCloud::new(x.len());
        points.push(x);
        EmpiricalMeasure {
            points,
            weights: vec![1.0],
            provenance: Provenance::User,
            saturated: false,
        }
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.points.dim()
    }

    pub fn points(&self) -> &PointCloud {
        &self.points
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn provenance(&self) -> Provenance {
        self.provenance
    }

    pub fn is_saturated(&self) -> bool {
        self.saturated
    }

    pub fn is_uniform(&self) -> bool {
        let w = 1.0 / self.len() as f64;
        self.weights.iter().all(|&x| x == w)
    }

    pub fn mean(&self) -> Vec<f64> {
        let mut m = vec![0.0; self.dim()];
        for (p, w) in self.points.iter().zip(&self.weights) {
            for (mi, xi) in m.iter_mut().zip(p) {
                *mi += w * xi;
            }
        }
        m
    }

    /// Coordinate-wise variance; the unbiased form for uniform weights.
    pub fn variance(&self) -> Vec<f64> {
        let m = self.mean();
        let mut v = vec![0.0; self.dim()];
        for (p, w) in self.points.iter().zip(&self.weights) {
            for ((vi, xi), mi) in v.iter_mut().zip(p).zip(&m) {
                *vi += w * (xi - mi).powi(2);
            }
        }
        let n = self.len() as f64;
        if self.is_uniform() && n > 1.0 {
            v.iter_mut().for_each(|x| *x *= n / (n - 1.0));
        }
        v
    }

    /// Resamples `n` particles by weight (identity when uniform of size `n`).
    fn particles(&self, n: usize, seed: u64) -> Vec<usize> {
        if self.is_uniform() && self.len() == n {
            return (0..n).collect();
        }
        let dist = WeightedIndex::new(&self.weights).expect("validated weights");
        let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(seed, "resample", 0));
        (0..n).map(|_| dist.sample(&mut rng)).collect()
    }
}

/// Seed of the noise streams behind [`pullback_sample`]; sample `i` uses
/// stream `i`.
pub fn pullback_stream_seed(seed: u64) -> u64 {
    derive_seed(seed, "pullback_sample", 0)
}

#[derive(Debug, Clone)]
pub struct PullbackSample {
    pub measure: EmpiricalMeasure,
    /// Stream index of each retained sample.
    pub streams: Vec<u64>,
    pub failed: usize,
    pub mean_depth: f64,
    pub max_depth: usize,
}

/// `n` independent pullback points; samples that do not converge within
/// `n_max` are dropped and counted.
pub fn pullback_sample(fam: &MapFamily, seed: u64, n: usize, tol: f64, n_max: usize) -> Result<PullbackSample> {
    if n == 0 {
        return Err(Error::usage("sample size must be at least 1"));
    }
    let probe = fam.default_probe();
    let sub = pullback_stream_seed(seed);
    let results: Vec<_> = (0..n as u64)
        .into_par_iter()
        .map(|i| pullback_point(fam, sub, i, &probe, tol, n_max))
        .collect();
    let mut points = PointCloud::with_capacity(fam.dim(), n);
    let mut streams = Vec::with_capacity(n);
    let (mut failed, mut depth_sum, mut max_depth, mut saturated) = (0, 0usize, 0, false);
    for (i, r) in results.into_iter().enumerate() {
        match r {
            Ok(p) => {
                points.push(&p.point);
                streams.push(i as u64);
                depth_sum += p.n_used;
                max_depth = max_depth.max(p.n_used);
                saturated |= p.saturated;
            }
            Err(Error::NotConverged { .. }) => failed += 1,
            Err(e) => return Err(e),
        }
    }
    if failed as f64 > MAX_FAILURE_RATE * n as f64 || points.is_empty() {
        return Err(Error::TooManyFailures { failed, total: n });
    }
    let kept = streams.len();
    let mut measure = EmpiricalMeasure::uniform(points, Provenance::Pullback)?;
    measure.saturated = saturated;
    Ok(PullbackSample {
        measure,
        streams,
        failed,
        mean_depth: depth_sum as f64 / kept as f64,
        max_depth,
    })
}

fn advance(fam: &MapFamily, block: &[Noise], x: &mut [f64], scratch: &mut [f64]) -> bool {
    let mut sat = false;
    for &a in block {
        sat |= fam.apply_into(a, x, scratch);
        x.copy_from_slice(scratch);
    }
    sat
}

/// Advances every particle `steps` Markov steps with its own noise stream.
pub fn push_forward(fam: &MapFamily, mu: &EmpiricalMeasure, steps: usize, seed: u64) -> Result<EmpiricalMeasure> {
    if mu.dim() != fam.dim() {
        return Err(Error::DimensionMismatch {
            expected: fam.dim(),
            got: mu.dim(),
        });
    }
    let sub = derive_seed(seed, "push_forward", 0);
    let mut points = mu.points.clone();
    let sat = points
        .as_flat_mut()
        .par_chunks_mut(fam.dim())
        .enumerate()
        .map(|(i, x)| {
            let block = NoiseStream::new(fam.noise(), sub, i as u64).range(0, steps);
            let mut scratch = vec![0.0; x.len()];
            advance(fam, &block, x, &mut scratch)
        })
        .reduce(|| false, |a, b| a | b);
    Ok(EmpiricalMeasure {
        points,
        weights: mu.weights.clone(),
        provenance: if steps == 0 { mu.provenance } else { Provenance::PushForward },
        saturated: mu.saturated || sat,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TransportMethod {
    Sorted1D,
    ExactMatching,
    Sliced,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TransportReport {
    pub distance: f64,
    pub method: TransportMethod,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub n_projections: Option<usize>,
}

/// Wasserstein-1 distance with the taxicab ground metric.
pub fn wasserstein1(mu1: &EmpiricalMeasure, mu2: &EmpiricalMeasure) -> Result<TransportReport> {
    if mu1.dim() != mu2.dim() {
        return Err(Error::DimensionMismatch {
            expected: mu1.dim(),
            got: mu2.dim(),
        });
    }
    if mu1.dim() == 1 {
        return Ok(TransportReport {
            distance: sorted_1d(mu1.points.as_flat(), &mu1.weights, mu2.points.as_flat(), &mu2.weights),
            method: TransportMethod::Sorted1D,
            n_projections: None,
        });
    }
    if mu1.len().max(mu2.len()) <= EXACT_MATCHING_MAX {
        return exact_matching(mu1, mu2).map(|distance| TransportReport {
            distance,
            method: TransportMethod::ExactMatching,
            n_projections: None,
        });
    }
    Ok(TransportReport {
        distance: sliced(mu1, mu2, SLICED_PROJECTIONS),
        method: TransportMethod::Sliced,
        n_projections: Some(SLICED_PROJECTIONS),
    })
}

/// `int |F_1 - F_2| dx` for weighted samples on the line.
pub fn sorted_1d(x: &[f64], wx: &[f64], y: &[f64], wy: &[f64]) -> f64 {
    let sort = |v: &[f64], w: &[f64]| {
        let mut idx: Vec<usize> = (0..v.len()).collect();
        idx.sort_by(|&a, &b| v[a].total_cmp(&v[b]));
        idx.into_iter().map(|i| (v[i], w[i])).collect::<Vec<_>>()
    };
    let (a, b) = (sort(x, wx), sort(y, wy));
    let uniform = |w: &[f64]| w.iter().all(|&v| v == w[0]);
    if a.len() == b.len() && uniform(wx) && uniform(wy) {
        // equal uniform weights: the quantile coupling pairs order statistics
        let s: f64 = a.iter().zip(&b).map(|(p, q)| (p.0 - q.0).abs()).sum();
        return s / a.len() as f64;
    }
    let (mut i, mut j) = (0, 0);
    let (mut fa, mut fb) = (0.0f64, 0.0f64);
    let mut last = a[0].0.min(b[0].0);
    let mut total = 0.0;
    while i < a.len() || j < b.len() {
        let next = match (a.get(i), b.get(j)) {
            (Some(p), Some(q)) => p.0.min(q.0),
            (Some(p), None) => p.0,
            (None, Some(q)) => q.0,
            (None, None) => unreachable!(),
        };
        total += (fa - fb).abs() * (next - last);
        last = next;
        while i < a.len() && a[i].0 == next {
            fa += a[i].1;
            i += 1;
        }
        while j < b.len() && b[j].0 == next {
            fb += b[j].1;
            j += 1;
        }
    }
    total
}

fn exact_matching(mu1: &EmpiricalMeasure, mu2: &EmpiricalMeasure) -> Result<f64> {
    if mu1.len() != mu2.len() || !mu1.is_uniform() || !mu2.is_uniform() {
        return Err(Error::WeightMismatch(
            "exact matching needs uniform measures of equal size".into(),
        ));
    }
    // L1 costs produce exactly tied optima that rounding separates; solving
    // in a canonical argument order keeps the distance bit-symmetric
    let (mu1, mu2) = if canonical_le(mu1, mu2) { (mu1, mu2) } else { (mu2, mu1) };
    let n = mu1.len();
    let cost: Vec<f64> = mu1
        .points
        .iter()
        .flat_map(|p| mu2.points.iter().map(move |q| taxicab(p, q)))
        .collect();
    let assign = min_cost_assignment(n, &cost);
    let total: f64 = assign.iter().enumerate().map(|(i, &j)| cost[i * n + j]).sum();
    Ok(total / n as f64)
}

fn canonical_le(a: &EmpiricalMeasure, b: &EmpiricalMeasure) -> bool {
    let (x, y) = (a.points.as_flat(), b.points.as_flat());
    x.iter()
        .zip(y)
        .map(|(p, q)| p.total_cmp(q))
        .find(|o| o.is_ne())
        .is_none_or(|o| o.is_lt())
}

/// Minimum-cost perfect matching on a dense `n x n` cost matrix (row-major),
/// by shortest augmenting paths with potentials. Returns the column of each
/// row.
pub fn min_cost_assignment(n: usize, cost: &[f64]) -> Vec<usize> {
    assert_eq!(cost.len(), n * n);
    // 1-based arrays; column 0 is the virtual root
    let mut u = vec![0.0; n + 1];
    let mut v = vec![0.0; n + 1];
    let mut row_of = vec![0usize; n + 1];
    let mut way = vec![0usize; n + 1];
    let mut minv = vec![0.0; n + 1];
    let mut used = vec![false; n + 1];
    for i in 1..=n {
        row_of[0] = i;
        let mut j0 = 0;
        minv.fill(f64::INFINITY);
        used.fill(false);
        loop {
            used[j0] = true;
            let i0 = row_of[j0];
            let mut delta = f64::INFINITY;
            let mut j1 = 0;
            for j in 1..=n {
                if used[j] {
                    continue;
                }
                let cur = cost[(i0 - 1) * n + (j - 1)] - u[i0] - v[j];
                if cur < minv[j] {
                    minv[j] = cur;
                    way[j] = j0;
                }
                if minv[j] < delta {
                    delta = minv[j];
                    j1 = j;
                }
            }
            for j in 0..=n {
                if used[j] {
                    u[row_of[j]] += delta;
                    v[j] -= delta;
                } else {
                    minv[j] -= delta;
                }
            }
            j0 = j1;
            if row_of[j0] == 0 {
                break;
            }
        }
        loop {
            let j1 = way[j0];
            row_of[j0] = row_of[j1];
            j0 = j1;
            if j0 == 0 {
                break;
            }
        }
    }
    let mut col_of = vec![0; n];
    for j in 1..=n {
        col_of[row_of[j] - 1] = j - 1;
    }
    col_of
}

/// Mean over fixed random unit directions of the 1D distance between the
/// projected measures.
fn sliced(mu1: &EmpiricalMeasure, mu2: &EmpiricalMeasure, n_proj: usize) -> f64 {
    let k = mu1.dim();
    let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(0, "sliced", k as u64));
    let dirs: Vec<Vec<f64>> = (0..n_proj)
        .map(|_| {
            let g: Vec<f64> = (0..k).map(|_| StandardNormal.sample(&mut rng)).collect();
            let norm = g.iter().map(|x| x * x).sum::<f64>().sqrt();
            g.into_iter().map(|x| x / norm).collect()
        })
        .collect();
    let project = |mu: &EmpiricalMeasure, d: &[f64]| -> Vec<f64> {
        mu.points
            .iter()
            .map(|p| p.iter().zip(d).map(|(a, b)| a * b).sum())
            .collect()
    };
    let total: f64 = dirs
        .par_iter()
        .map(|d| sorted_1d(&project(mu1, d), &mu1.weights, &project(mu2, d), &mu2.weights))
        .collect::<Vec<_>>()
        .iter()
        .sum();
    total / n_proj as f64
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Coupling {
    /// Particle `i` is driven by the noise of reference sample `i`, composed
    /// in reverse order, so both measures are sampled with shared noise.
    Synchronous,
    /// Fresh noise per particle.
    Independent,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct W1DecayParams {
    pub n_max: usize,
    pub sample_size: usize,
    pub tol: f64,
    pub pullback_max: usize,
    pub coupling: Coupling,
    pub seed: u64,
}

impl Default for W1DecayParams {
    fn default() -> Self {
        W1DecayParams {
            n_max: 12,
            sample_size: 4096,
            tol: 1e-9,
            pullback_max: 400,
            coupling: Coupling::Synchronous,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct W1Decay {
    /// `w1[n]` for `n = 0..=n_max`.
    pub w1: Vec<f64>,
    pub method: TransportMethod,
    pub fit: Option<RateFit>,
    pub warnings: Vec<String>,
}

/// `W1(T^n initial, pi)` for `n = 0..=n_max` against one fixed pullback
/// sample, with an exponential fit over `n >= 1`.
pub fn w1_decay_curve(fam: &MapFamily, initial: &EmpiricalMeasure, params: &W1DecayParams) -> Result<W1Decay> {
    if initial.dim() != fam.dim() {
        return Err(Error::DimensionMismatch {
            expected: fam.dim(),
            got: initial.dim(),
        });
    }
    let reference = pullback_sample(fam, params.seed, params.sample_size, params.tol, params.pullback_max)?;
    let mut warnings = Vec::new();
    if !fam.is_bounded() {
        warnings.push("family has unbounded support; the decay bound is not guaranteed".to_string());
    }
    if reference.measure.saturated {
        warnings.push("reference sample saturated".to_string());
    }
    let n_part = reference.streams.len();
    let start = initial.particles(n_part, params.seed);
    let ref_seed = pullback_stream_seed(params.seed);
    let fresh_seed = derive_seed(params.seed, "w1_decay", 0);
    let k = fam.dim();
    let curve: Vec<Result<TransportReport>> = (0..=params.n_max)
        .into_par_iter()
        .map(|n| {
            let mut points = PointCloud::with_capacity(k, n_part);
            let mut scratch = vec![0.0; k];
            let mut sat = false;
            for (i, &src) in start.iter().enumerate() {
                let mut x = initial.points.get(src).to_vec();
                sat |= match params.coupling {
                    Coupling::Synchronous => {
                        let block =
                            NoiseStream::new(fam.noise(), ref_seed, reference.streams[i]).range(0, n);
                        fam.compose_in_place(&block, &mut x, &mut scratch)
                    }
                    Coupling::Independent => {
                        let block = NoiseStream::new(fam.noise(), fresh_seed, i as u64).range(0, n);
                        advance(fam, &block, &mut x, &mut scratch)
                    }
                };
                points.push(&x);
            }
            let mut mu = EmpiricalMeasure::uniform(points, Provenance::PushForward)?;
            mu.saturated = sat;
            wasserstein1(&mu, &reference.measure)
        })
        .collect();
    let reports = curve.into_iter().collect::<Result<Vec<_>>>()?;
    let w1: Vec<f64> = reports.iter().map(|r| r.distance).collect();
    let fit = match fit_exponential(&w1, 1) {
        Ok(f) => {
            if let Some(w) = &f.warning {
                warnings.push(w.clone());
            }
            Some(f)
        }
        Err(Error::DegenerateSeries { usable }) => {
            warnings.push(format!("only {usable} usable steps for the rate fit"));
            None
        }
        Err(e) => return Err(e),
    };
    Ok(W1Decay {
        w1,
        method: reports[0].method,
        fit,
        warnings,
    })
}

/// Distance between two independent pullback samples of size `n`, averaged
/// over `pairs` pairs.
pub fn stationary_noise_floor(fam: &MapFamily, n: usize, tol: f64, n_max: usize, pairs: usize, seed: u64) -> Result<f64> {
    let mut total = 0.0;
    for p in 0..pairs as u64 {
        let a = pullback_sample(fam, derive_seed(seed, "floor_a", p), n, tol, n_max)?;
        let b = pullback_sample(fam, derive_seed(seed, "floor_b", p), n, tol, n_max)?;
        total += wasserstein1(&a.measure, &b.measure)?.distance;
    }
    Ok(total / pairs.max(1) as f64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn line(xs: &[f64]) -> EmpiricalMeasure {
        EmpiricalMeasure::uniform(PointCloud::from_flat(1, xs.to_vec()).unwrap(), Provenance::User).unwrap()
    }

    #[test]
    fn w1_examples() {
        let a = line(&[0.0, 0.5, 1.0]);
        assert_eq!(wasserstein1(&a, &a).unwrap().distance, 0.0);
        assert_eq!(wasserstein1(&line(&[0.0]), &line(&[1.0])).unwrap().distance, 1.0);
        let r = wasserstein1(&a, &line(&[0.1, 0.6, 1.1])).unwrap();
        assert_eq!(r.method, TransportMethod::Sorted1D);
        assert_abs_diff_eq!(r.distance, 0.1, epsilon = 1e-15);
    }

    #[test]
    fn weighted_1d_matches_cdf_area() {
        let a = EmpiricalMeasure::weighted(
            PointCloud::from_flat(1, vec![0.0, 1.0]).unwrap(),
            vec![0.25, 0.75],
            Provenance::User,
        )
        .unwrap();
        // mass 0.75 moves from 1 to 0
        let b = line(&[0.0]);
        assert_abs_diff_eq!(wasserstein1(&a, &b).unwrap().distance, 0.75, epsilon = 1e-15);
        // unequal sizes, uniform weights
        let c = line(&[0.0, 1.0]);
        assert_abs_diff_eq!(wasserstein1(&c, &line(&[0.5])).unwrap().distance, 0.5, epsilon = 1e-15);
    }

    #[test]
    fn exact_matching_small_cases() {
        let a = EmpiricalMeasure::uniform(
            PointCloud::from_points(2, &[vec![0.0, 0.0], vec![1.0, 1.0]]).unwrap(),
            Provenance::User,
        )
        .unwrap();
        let b = EmpiricalMeasure::uniform(
            PointCloud::from_points(2, &[vec![1.0, 1.5], vec![0.0, 0.5]]).unwrap(),
            Provenance::User,
        )
        .unwrap();
        let r = wasserstein1(&a, &b).unwrap();
        assert_eq!(r.method, TransportMethod::ExactMatching);
        assert_abs_diff_eq!(r.distance, 0.5, epsilon = 1e-15);
        let c = EmpiricalMeasure::dirac(&[0.0, 0.0]);
        assert!(matches!(wasserstein1(&a, &c), Err(Error::WeightMismatch(_))));
    }

    #[test]
    fn assignment_on_known_matrix() {
        let cost = [4.0, 1.0, 3.0, 2.0, 0.0, 5.0, 3.0, 2.0, 2.0];
        let a = min_cost_assignment(3, &cost);
        let total: f64 = a.iter().enumerate().map(|(i, &j)| cost[i * 3 + j]).sum();
        assert_eq!(total, 5.0);
    }

    #[test]
    fn push_forward_examples() {
        let fam = MapFamily::builtin("cantor1d").unwrap();
        let mu = line(&[0.0; 10000]);
        assert_eq!(push_forward(&fam, &mu, 0, 1).unwrap().points(), mu.points());
        let one = push_forward(&fam, &mu, 1, 1).unwrap();
        let ones = one.points().as_flat().iter().filter(|&&x| x == 2.0 / 3.0).count();
        let zeros = one.points().as_flat().iter().filter(|&&x| x == 0.0).count();
        assert_eq!(ones + zeros, 10000);
        assert!((ones as f64 / 1e4 - 0.5).abs() < 0.02);
        let c = MapFamily::from_json(r#"{"family":"constant","values":[[0.3],[0.3]]}"#).unwrap();
        let pushed = push_forward(&c, &mu, 1, 2).unwrap();
        assert!(pushed.points().as_flat().iter().all(|&x| x == 0.3));
    }

    #[test]
    fn exp1d_sign_fraction() {
        let fam = MapFamily::from_config(
            &crate::family::FamilyConfig::named("exp1d").with_probs(vec![0.3, 0.7]),
        )
        .unwrap();
        let s = pullback_sample(&fam, 5, 4000, 1e-9, 200).unwrap();
        let neg = s.measure.points().as_flat().iter().filter(|&&x| x < 0.0).count() as f64 / 4000.0;
        assert!((neg - 0.7).abs() < 0.03, "{neg}");
    }

    #[test]
    fn constant_family_decay_is_zero_after_one_step() {
        let fam = MapFamily::from_json(r#"{"family":"constant","values":[[0.2],[0.2]]}"#).unwrap();
        let params = W1DecayParams {
            n_max: 4,
            sample_size: 64,
            ..Default::default()
        };
        let d = w1_decay_curve(&fam, &EmpiricalMeasure::dirac(&[0.9]), &params).unwrap();
        assert_abs_diff_eq!(d.w1[0], 0.7, epsilon = 1e-15);
        assert!(d.w1[1..].iter().all(|&w| w == 0.0));
    }
}
