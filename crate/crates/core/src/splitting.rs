//! Certificates for the J-splitting condition and the decay of the
//! probability that a point stays inside the projected image.
//!
//! A certificate is a pair of noise-block sets `A`, `B` of length `m`, both of
//! positive mass, such that the probe image of every block in `A` lies
//! strictly `<_J`-below the probe image of every block in `B`. Image sets are
//! represented by bounding boxes of sampled probe clouds, so a positive
//! answer is sound for the sampled images while a negative answer never
//! disproves the condition.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::family::{image_box, MapFamily};
use crate::noise::{derive_seed, Noise, NoiseSpec, NoiseStream};
use crate::order::{Hyperbox, JOrder, PointCloud, SetOrder};

pub const MAX_EXACT_BLOCKS: usize = 1_000_000;
const ALL_PAIRS_LIMIT: usize = 4096;
const EXTREME_CANDIDATES: usize = 64;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum SplitMethod {
    ExactScan,
    MonteCarlo,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SplittingReport {
    pub m: usize,
    /// Blocks on the lower side, as 1-based symbols (finite noise) or
    /// parameter labels (continuous noise).
    pub witness_a: Vec<Vec<String>>,
    pub witness_b: Vec<Vec<String>>,
    pub mass_a: f64,
    pub mass_b: f64,
    /// Binomial standard errors (Monte Carlo only).
    pub stderr_a: Option<f64>,
    pub stderr_b: Option<f64>,
    /// Image boxes of the two seed blocks.
    pub box_a: Hyperbox,
    pub box_b: Hyperbox,
    pub method: SplitMethod,
    pub verified: bool,
}

impl SplittingReport {
    /// `1 - min(mass_A, mass_B)`: the per-block survival bound.
    pub fn lambda(&self) -> f64 {
        1.0 - self.mass_a.min(self.mass_b)
    }

    pub fn rho(&self) -> f64 {
        self.mass_a.min(self.mass_b)
    }
}

fn labels(block: &[Noise]) -> Vec<String> {
    block.iter().map(Noise::label).collect()
}

fn decode_block(mut idx: usize, q: usize, m: usize) -> Vec<Noise> {
    let mut out = vec![Noise::Symbol(0); m];
    for slot in out.iter_mut().rev() {
        *slot = Noise::Symbol(idx % q);
        idx /= q;
    }
    out
}

/// Signed position of a box along the J-order: larger means higher.
fn order_key(ord: &JOrder, b: &Hyperbox) -> f64 {
    let c = b.center();
    (0..ord.dim())
        .map(|i| if ord.in_j(i) { c[i] } else { -c[i] })
        .sum()
}

/// Running envelope of a set of boxes for the mutual-order test.
struct Envelope {
    // J coords: max hi (lower side) or min lo (upper side); non-J mirrored.
    bound: Vec<f64>,
}

impl Envelope {
    fn lower(ord: &JOrder, b: &Hyperbox) -> Self {
        let bound = (0..ord.dim())
            .map(|i| if ord.in_j(i) { b.hi[i] } else { b.lo[i] })
            .collect();
        Envelope { bound }
    }

    fn upper(ord: &JOrder, b: &Hyperbox) -> Self {
        let bound = (0..ord.dim())
            .map(|i| if ord.in_j(i) { b.lo[i] } else { b.hi[i] })
            .collect();
        Envelope { bound }
    }

    fn add_lower(&mut self, ord: &JOrder, b: &Hyperbox) {
        for i in 0..ord.dim() {
            self.bound[i] = if ord.in_j(i) {
                self.bound[i].max(b.hi[i])
            } else {
                self.bound[i].min(b.lo[i])
            };
        }
    }

    fn add_upper(&mut self, ord: &JOrder, b: &Hyperbox) {
        for i in 0..ord.dim() {
            self.bound[i] = if ord.in_j(i) {
                self.bound[i].min(b.lo[i])
            } else {
                self.bound[i].max(b.hi[i])
            };
        }
    }

    /// Whether `b` lies strictly below every box of this upper envelope.
    fn admits_below(&self, ord: &JOrder, b: &Hyperbox) -> bool {
        let tol = ord.strict_tol();
        (0..ord.dim()).all(|i| {
            if ord.in_j(i) {
                b.hi[i] + tol < self.bound[i]
            } else {
                b.lo[i] - tol > self.bound[i]
            }
        })
    }

    /// Whether `b` lies strictly above every box of this lower envelope.
    fn admits_above(&self, ord: &JOrder, b: &Hyperbox) -> bool {
        let tol = ord.strict_tol();
        (0..ord.dim()).all(|i| {
            if ord.in_j(i) {
                self.bound[i] + tol < b.lo[i]
            } else {
                self.bound[i] - tol > b.hi[i]
            }
        })
    }
}

fn check_inputs(fam: &MapFamily, ord: &JOrder, probe: &PointCloud) -> Result<()> {
    if ord.dim() != fam.dim() || probe.dim() != fam.dim() {
        return Err(Error::DimensionMismatch {
            expected: fam.dim(),
            got: if ord.dim() != fam.dim() { ord.dim() } else { probe.dim() },
        });
    }
    if probe.is_empty() {
        return Err(Error::usage("probe cloud is empty"));
    }
    Ok(())
}

/// Enumerates every block of length `m` and builds maximal-mass witness
/// sets `A <_J B` from the best seed pair.
pub fn exact_splitting_scan(
    fam: &MapFamily,
    ord: &JOrder,
    m: usize,
    probe: &PointCloud,
) -> Result<SplittingReport> {
    check_inputs(fam, ord, probe)?;
    let probs = fam
        .noise()
        .probs()
        .ok_or_else(|| Error::usage("exact scan requires finite noise"))?;
    let q = probs.len();
    if m == 0 {
        return Err(Error::usage("block length m must be at least 1"));
    }
    let n_blocks = (q as u128)
        .checked_pow(m as u32)
        .filter(|&n| n <= MAX_EXACT_BLOCKS as u128)
        .ok_or_else(|| Error::usage(format!("q^m exceeds {MAX_EXACT_BLOCKS} blocks")))?
        as usize;

    let blocks: Vec<(Vec<Noise>, Hyperbox, f64)> = (0..n_blocks)
        .into_par_iter()
        .map(|idx| {
            let block = decode_block(idx, q, m);
            let (b, _) = image_box(fam, &block, probe)?;
            let mass = fam.noise().block_mass(&block).expect("finite noise");
            Ok((block, b, mass))
        })
        .collect::<Result<_>>()?;
    let live: Vec<usize> = (0..n_blocks).filter(|&i| blocks[i].2 > 0.0).collect();

    // best seed pair by min(mass_a, mass_b)
    let mut seed: Option<(usize, usize, f64)> = None;
    let mut consider = |i: usize, j: usize| {
        let (a, b) = match ord.cmp_boxes_unchecked(&blocks[i].1, &blocks[j].1) {
            SetOrder::Less => (i, j),
            SetOrder::Greater => (j, i),
            SetOrder::Inconclusive => return,
        };
        let score = blocks[a].2.min(blocks[b].2);
        if seed.is_none_or(|(_, _, s)| score > s) {
            seed = Some((a, b, score));
        }
    };
    if live.len() <= ALL_PAIRS_LIMIT {
        for (n, &i) in live.iter().enumerate() {
            for &j in &live[n + 1..] {
                consider(i, j);
            }
        }
    } else {
        let mut sorted = live.clone();
        sorted.sort_by(|&a, &b| order_key(ord, &blocks[a].1).total_cmp(&order_key(ord, &blocks[b].1)));
        let lo = &sorted[..EXTREME_CANDIDATES];
        let hi = &sorted[sorted.len() - EXTREME_CANDIDATES..];
        for &i in lo {
            for &j in hi {
                consider(i, j);
            }
        }
    }
    let (a0, b0, _) = seed.ok_or(Error::Unverified { m })?;

    let mut in_a = vec![a0];
    let mut in_b = vec![b0];
    let (mut mass_a, mut mass_b) = (blocks[a0].2, blocks[b0].2);
    let mut low_env = Envelope::lower(ord, &blocks[a0].1);
    let mut up_env = Envelope::upper(ord, &blocks[b0].1);
    let mut rest: Vec<usize> = live.into_iter().filter(|&i| i != a0 && i != b0).collect();
    rest.sort_by(|&x, &y| blocks[y].2.total_cmp(&blocks[x].2).then(x.cmp(&y)));
    for c in rest {
        let bx = &blocks[c].1;
        let to_a = up_env.admits_below(ord, bx);
        let to_b = low_env.admits_above(ord, bx);
        match (to_a, to_b) {
            (true, true) if mass_a <= mass_b => {
                in_a.push(c);
                mass_a += blocks[c].2;
                low_env.add_lower(ord, bx);
            }
            (true, true) | (false, true) => {
                in_b.push(c);
                mass_b += blocks[c].2;
                up_env.add_upper(ord, bx);
            }
            (true, false) => {
                in_a.push(c);
                mass_a += blocks[c].2;
                low_env.add_lower(ord, bx);
            }
            (false, false) => {}
        }
    }
    in_a.sort_unstable();
    in_b.sort_unstable();
    Ok(SplittingReport {
        m,
        witness_a: in_a.iter().map(|&i| labels(&blocks[i].0)).collect(),
        witness_b: in_b.iter().map(|&i| labels(&blocks[i].0)).collect(),
        mass_a: in_a.iter().map(|&i| blocks[i].2).sum(),
        mass_b: in_b.iter().map(|&i| blocks[i].2).sum(),
        stderr_a: None,
        stderr_b: None,
        box_a: blocks[a0].1.clone(),
        box_b: blocks[b0].1.clone(),
        method: SplitMethod::ExactScan,
        verified: true,
    })
}

/// Exact scan for `m = 1..=m_max`, returning the first certificate.
pub fn exact_splitting_search(
    fam: &MapFamily,
    ord: &JOrder,
    m_max: usize,
    probe: &PointCloud,
) -> Result<SplittingReport> {
    for m in 1..=m_max {
        match exact_splitting_scan(fam, ord, m, probe) {
            Err(Error::Unverified { .. }) => continue,
            other => return other,
        }
    }
    Err(Error::Unverified { m: m_max })
}

/// Whether an exact scan at block length `m` is within budget.
pub fn exact_scan_feasible(noise: &NoiseSpec, m: usize) -> bool {
    noise
        .alphabet_size()
        .and_then(|q| (q as u128).checked_pow(m as u32))
        .is_some_and(|n| n <= MAX_EXACT_BLOCKS as u128)
}

fn binomial_stderr(p: f64, n: usize) -> f64 {
    (p * (1.0 - p) / n as f64).sqrt()
}

/// Monte Carlo witness search over sampled blocks.
pub fn find_splitting_witness(
    fam: &MapFamily,
    ord: &JOrder,
    m_max: usize,
    probe: &PointCloud,
    n_blocks: usize,
    seed: u64,
) -> Result<SplittingReport> {
    check_inputs(fam, ord, probe)?;
    if n_blocks < 2 {
        return Err(Error::usage("n_blocks must be at least 2"));
    }
    for m in 1..=m_max {
        let sub = derive_seed(seed, "splitting", m as u64);
        let sampled: Vec<(Vec<Noise>, Hyperbox)> = (0..n_blocks)
            .into_par_iter()
            .map(|i| {
                let block = NoiseStream::new(fam.noise(), sub, i as u64).range(0, m);
                let (b, _) = image_box(fam, &block, probe)?;
                Ok((block, b))
            })
            .collect::<Result<_>>()?;
        let mut found = None;
        'search: for i in 0..n_blocks {
            for j in i + 1..n_blocks {
                match ord.cmp_boxes_unchecked(&sampled[i].1, &sampled[j].1) {
                    SetOrder::Less => {
                        found = Some((i, j));
                        break 'search;
                    }
                    SetOrder::Greater => {
                        found = Some((j, i));
                        break 'search;
                    }
                    SetOrder::Inconclusive => {}
                }
            }
        }
        let Some((a, b)) = found else { continue };
        let below_b = sampled
            .iter()
            .filter(|(_, bx)| ord.cmp_boxes_unchecked(bx, &sampled[b].1) == SetOrder::Less)
            .count();
        let above_a = sampled
            .iter()
            .filter(|(_, bx)| ord.cmp_boxes_unchecked(&sampled[a].1, bx) == SetOrder::Less)
            .count();
        let mass_a = below_b as f64 / n_blocks as f64;
        let mass_b = above_a as f64 / n_blocks as f64;
        return Ok(SplittingReport {
            m,
            witness_a: vec![labels(&sampled[a].0)],
            witness_b: vec![labels(&sampled[b].0)],
            mass_a,
            mass_b,
            stderr_a: Some(binomial_stderr(mass_a, n_blocks)),
            stderr_b: Some(binomial_stderr(mass_b, n_blocks)),
            box_a: sampled[a].1.clone(),
            box_b: sampled[b].1.clone(),
            method: SplitMethod::MonteCarlo,
            verified: true,
        });
    }
    Err(Error::Unverified { m: m_max })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SigmaEstimate {
    pub j: usize,
    pub p_hat: f64,
    pub stderr: f64,
    /// Replica mean of the projected hull length clipped to `[-clip, clip]`.
    pub mean_length: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SigmaDecaySeries {
    pub x: f64,
    /// 1-based coordinate index.
    pub s: usize,
    pub m: usize,
    pub replicas: usize,
    pub estimates: Vec<SigmaEstimate>,
    /// `lambda` fitted to `p_hat_j ~ lambda^j` on the positive estimates.
    pub lambda_fit: Option<f64>,
    /// First `j` with a zero estimate; the series is truncated there.
    pub zero_at: Option<usize>,
}

#[derive(Debug, Clone)]
pub struct SigmaDecayParams {
    pub m: usize,
    pub x: f64,
    /// 1-based coordinate index.
    pub s: usize,
    pub j_max: usize,
    pub replicas: usize,
    pub clip: f64,
    pub seed: u64,
}

/// Estimates `P(x in pi_s(f_{X_0} o ... o f_{X_{jm-1}}(S)))` for
/// `j = 1..=j_max`.
pub fn sigma_decay(fam: &MapFamily, probe: &PointCloud, params: &SigmaDecayParams) -> Result<SigmaDecaySeries> {
    let SigmaDecayParams {
        m,
        x,
        s,
        j_max,
        replicas,
        clip,
        seed,
    } = *params;
    if s == 0 || s > fam.dim() {
        return Err(Error::usage(format!("coordinate index {s} outside 1..={}", fam.dim())));
    }
    if m == 0 || j_max == 0 || replicas == 0 {
        return Err(Error::usage("m, j_max and replicas must be positive"));
    }
    if probe.is_empty() || probe.dim() != fam.dim() {
        return Err(Error::usage("probe cloud must be non-empty and match the family dimension"));
    }
    let sub = derive_seed(seed, "sigma-decay", 0);
    let coord = s - 1;
    // per replica: (membership, clipped length) for each j
    let rows: Vec<Vec<(bool, f64)>> = (0..replicas)
        .into_par_iter()
        .map(|r| {
            let block = NoiseStream::new(fam.noise(), sub, r as u64).range(0, j_max * m);
            (1..=j_max)
                .map(|j| {
                    let (img, _) = fam.compose_cloud(&block[..j * m], probe);
                    let (lo, hi) = img
                        .iter()
                        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), p| {
                            (lo.min(p[coord]), hi.max(p[coord]))
                        });
                    let len = (hi.min(clip) - lo.max(-clip)).max(0.0);
                    (lo <= x && x <= hi, len)
                })
                .collect()
        })
        .collect();

    let n = replicas as f64;
    let mut estimates = Vec::with_capacity(j_max);
    let mut zero_at = None;
    for j in 1..=j_max {
        let hits = rows.iter().filter(|row| row[j - 1].0).count();
        let p_hat = hits as f64 / n;
        let mean_length = rows.iter().map(|row| row[j - 1].1).sum::<f64>() / n;
        estimates.push(SigmaEstimate {
            j,
            p_hat,
            stderr: binomial_stderr(p_hat, replicas),
            mean_length,
        });
        if hits == 0 {
            zero_at = Some(j);
            break;
        }
    }
    if zero_at == Some(1) {
        return Err(Error::AllZero { j: 1 });
    }
    let positive: Vec<&SigmaEstimate> = estimates.iter().filter(|e| e.p_hat > 0.0).collect();
    let lambda_fit = fit_lambda(&positive, replicas);
    Ok(SigmaDecaySeries {
        x,
        s,
        m,
        replicas,
        estimates,
        lambda_fit,
        zero_at,
    })
}

/// Weighted fit of `log p_j = j log lambda` through the origin, with
/// inverse-variance weights `n p / (1 - p)` of the log-binomial estimate.
fn fit_lambda(est: &[&SigmaEstimate], replicas: usize) -> Option<f64> {
    if est.is_empty() {
        return None;
    }
    let n = replicas as f64;
    let (mut num, mut den) = (0.0, 0.0);
    for e in est {
        let w = n * e.p_hat / (1.0 - e.p_hat).max(1.0 / n);
        let j = e.j as f64;
        num += w * j * e.p_hat.ln();
        den += w * j * j;
    }
    Some((num / den).exp())
}
