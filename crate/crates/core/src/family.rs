//! Families of maps `{f_alpha}` driven by a noise law, the built-in registry,
//! and empirical classification of J-monotonicity.

use std::fmt;
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::noise::{derive_seed, Noise, NoiseSpec};
use crate::order::{Hyperbox, JOrder, PointCloud, PointOrder};

pub const DEFAULT_CLAMP: f64 = 1e300;
pub const DEFAULT_INTERIOR_PROBES: usize = 32;
const MAX_CORNER_DIM: usize = 10;

/// User-supplied map: `(alpha, x, out)`.
pub type MapFn = dyn Fn(Noise, &[f64], &mut [f64]) + Send + Sync;

/// JSON-shaped description of a family.
///
/// Keys used by each built-in:
///
/// | family           | keys                                                        |
/// |------------------|-------------------------------------------------------------|
/// | `cantor1d`       | `probs`                                                     |
/// | `cantor2d`       | `probs`                                                     |
/// | `exp1d`          | `probs`, `probe`                                            |
/// | `fig1-2d`        | (single map)                                                |
/// | `lip-pair`       | `probs`, `mode` (`linear` or `split`)                       |
/// | `affine-general` | `matrices`, `offsets`, `probs` or `noise`                   |
/// | `constant`       | `values`, `probs`                                           |
///
/// Common keys: `domain`, `probe`, `J`, `clamp`, `strict_tol`.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FamilyConfig {
    pub family: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub probs: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub noise: Option<NoiseSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub domain: Option<Hyperbox>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub probe: Option<Hyperbox>,
    #[serde(rename = "J", default, skip_serializing_if = "Option::is_none")]
    pub j: Option<Vec<usize>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub clamp: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub strict_tol: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mode: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub matrices: Option<Vec<Vec<Vec<f64>>>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub offsets: Option<Vec<Vec<f64>>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub values: Option<Vec<Vec<f64>>>,
}

impl FamilyConfig {
    pub fn named(family: &str) -> Self {
        FamilyConfig {
            family: family.to_string(),
            ..Default::default()
        }
    }

    pub fn with_probs(mut self, probs: Vec<f64>) -> Self {
        self.probs = Some(probs);
        self
    }

    pub fn with_j(mut self, j: Vec<usize>) -> Self {
        self.j = Some(j);
        self
    }
}

#[derive(Clone)]
enum Rule {
    Cantor1d,
    Cantor2d,
    Exp1d,
    Fig1,
    LipPair { split: bool },
    Affine {
        // row-major k x k per symbol (or one for continuous noise)
        matrices: Vec<Vec<f64>>,
        offsets: Vec<Vec<f64>>,
    },
    Constant { values: Vec<Vec<f64>> },
    Custom(Arc<MapFn>),
}

/// An i.i.d. random iteration `{f_alpha}` with law `nu`, ready to iterate.
#[derive(Clone)]
pub struct MapFamily {
    name: String,
    dim: usize,
    noise: NoiseSpec,
    rule: Rule,
    domain: Option<Hyperbox>,
    probe: Hyperbox,
    order: JOrder,
    clamp: f64,
    bounded: bool,
    config: FamilyConfig,
}

impl fmt::Debug for MapFamily {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("MapFamily")
            .field("name", &self.name)
            .field("dim", &self.dim)
            .field("noise", &self.noise)
            .field("domain", &self.domain)
            .field("probe", &self.probe)
            .field("clamp", &self.clamp)
            .finish()
    }
}

fn unit_box(dim: usize) -> Hyperbox {
    Hyperbox {
        lo: vec![0.0; dim],
        hi: vec![1.0; dim],
    }
}

fn symmetric_box(dim: usize, r: f64) -> Hyperbox {
    Hyperbox {
        lo: vec![-r; dim],
        hi: vec![r; dim],
    }
}

impl MapFamily {
    pub fn builtin(name: &str) -> Result<Self> {
        Self::from_config(&FamilyConfig::named(name))
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: FamilyConfig = serde_json::from_str(text)?;
        Self::from_config(&cfg)
    }

    pub fn from_config(cfg: &FamilyConfig) -> Result<Self> {
        let name = cfg.family.as_str();
        let fixed_two = |cfg: &FamilyConfig| -> Result<NoiseSpec> {
            let probs = cfg.probs.clone().unwrap_or_else(|| vec![0.5, 0.5]);
            if probs.len() != 2 {
                return Err(Error::usage(format!("family {name} takes exactly 2 probabilities")));
            }
            NoiseSpec::finite(probs)
        };
        let (dim, rule, noise, domain, probe_default, j_default, bounded) = match name {
            "cantor1d" => (1, Rule::Cantor1d, fixed_two(cfg)?, Some(unit_box(1)), None, vec![1], true),
            "cantor2d" => (
                2,
                Rule::Cantor2d,
                fixed_two(cfg)?,
                Some(Hyperbox {
                    lo: vec![0.0, -1.0],
                    hi: vec![1.0, 0.0],
                }),
                None,
                vec![1],
                true,
            ),
            "exp1d" => (
                1,
                Rule::Exp1d,
                fixed_two(cfg)?,
                None,
                Some(symmetric_box(1, 1.0)),
                vec![1],
                false,
            ),
            "fig1-2d" => {
                let probs = cfg.probs.clone().unwrap_or_else(|| vec![1.0]);
                if probs.len() != 1 {
                    return Err(Error::usage("fig1-2d is a single map; probs must be [1]"));
                }
                (
                    2,
                    Rule::Fig1,
                    NoiseSpec::finite(probs)?,
                    None,
                    Some(symmetric_box(2, 1.0)),
                    vec![1],
                    false,
                )
            }
            "lip-pair" => {
                let split = match cfg.mode.as_deref().unwrap_or("linear") {
                    "linear" => false,
                    "split" => true,
                    other => return Err(Error::usage(format!("lip-pair mode `{other}` unknown"))),
                };
                let (domain, probe) = if split {
                    (Some(unit_box(1)), None)
                } else {
                    (None, Some(symmetric_box(1, 1.0)))
                };
                (1, Rule::LipPair { split }, fixed_two(cfg)?, domain, probe, vec![1], split)
            }
            "affine-general" => Self::affine_parts(cfg)?,
            "constant" => {
                let values = cfg
                    .values
                    .clone()
                    .ok_or_else(|| Error::usage("constant family needs `values`"))?;
                let dim = values.first().map(|v| v.len()).unwrap_or(0);
                if dim == 0 || values.iter().any(|v| v.len() != dim) {
                    return Err(Error::usage("constant `values` must be non-empty points of one dimension"));
                }
                let probs = cfg
                    .probs
                    .clone()
                    .unwrap_or_else(|| vec![1.0 / values.len() as f64; values.len()]);
                if probs.len() != values.len() {
                    return Err(Error::usage("constant family needs one probability per value"));
                }
                let mut hull = Hyperbox::point(&values[0]);
                values.iter().for_each(|v| hull.include(v));
                let all: Vec<usize> = (1..=dim).collect();
                (
                    dim,
                    Rule::Constant { values },
                    NoiseSpec::finite(probs)?,
                    Some(hull),
                    None,
                    all,
                    true,
                )
            }
            other => return Err(Error::UnknownFamily(other.to_string())),
        };
        let noise = match &cfg.noise {
            Some(spec) if !matches!(rule, Rule::Affine { .. }) => {
                if spec.alphabet_size() != noise.alphabet_size() {
                    return Err(Error::usage(format!(
                        "family {name} does not accept this noise law"
                    )));
                }
                spec.validate()?;
                spec.clone()
            }
            _ => noise,
        };
        let domain = cfg.domain.clone().or(domain);
        let probe = cfg
            .probe
            .clone()
            .or(probe_default)
            .or_else(|| domain.clone())
            .ok_or_else(|| Error::usage("unbounded domain needs an explicit `probe` box"))?;
        for b in domain.iter().chain(std::iter::once(&probe)) {
            if b.dim() != dim {
                return Err(Error::DimensionMismatch {
                    expected: dim,
                    got: b.dim(),
                });
            }
            Hyperbox::new(b.lo.clone(), b.hi.clone())?;
        }
        let clamp = cfg.clamp.unwrap_or(DEFAULT_CLAMP);
        if !(clamp > 0.0) {
            return Err(Error::usage("clamp must be positive"));
        }
        let j = cfg.j.clone().unwrap_or(j_default);
        let order = JOrder::with_tol(
            dim,
            &j,
            cfg.strict_tol.unwrap_or(crate::order::DEFAULT_STRICT_TOL),
        )?;
        let mut resolved = cfg.clone();
        resolved.noise = Some(noise.clone());
        resolved.probs = None;
        resolved.domain = domain.clone();
        resolved.probe = Some(probe.clone());
        resolved.j = Some(j);
        resolved.clamp = Some(clamp);
        resolved.strict_tol = Some(order.strict_tol());
        if let Rule::LipPair { split } = rule {
            resolved.mode = Some(if split { "split" } else { "linear" }.into());
        }
        Ok(MapFamily {
            name: name.to_string(),
            dim,
            noise,
            rule,
            bounded: bounded || domain.is_some(),
            domain,
            probe,
            order,
            clamp,
            config: resolved,
        })
    }

    #[allow(clippy::type_complexity)]
    fn affine_parts(
        cfg: &FamilyConfig,
    ) -> Result<(usize, Rule, NoiseSpec, Option<Hyperbox>, Option<Hyperbox>, Vec<usize>, bool)> {
        let mats = cfg
            .matrices
            .clone()
            .ok_or_else(|| Error::usage("affine-general needs `matrices`"))?;
        let dim = mats.first().map(|m| m.len()).unwrap_or(0);
        if dim == 0 {
            return Err(Error::usage("affine-general needs at least one non-empty matrix"));
        }
        let mut matrices = Vec::with_capacity(mats.len());
        for m in &mats {
            if m.len() != dim || m.iter().any(|row| row.len() != dim) {
                return Err(Error::usage(format!("affine matrices must be {dim}x{dim}")));
            }
            matrices.push(m.iter().flatten().copied().collect::<Vec<f64>>());
        }
        let offsets = cfg
            .offsets
            .clone()
            .unwrap_or_else(|| vec![vec![0.0; dim]; matrices.len()]);
        if offsets.len() != matrices.len() || offsets.iter().any(|b| b.len() != dim) {
            return Err(Error::usage("affine-general needs one offset of length k per matrix"));
        }
        let noise = match (&cfg.noise, &cfg.probs) {
            (Some(spec @ NoiseSpec::Uniform { lo, .. }), _) => {
                if matrices.len() != 1 || lo.len() != dim {
                    return Err(Error::usage(
                        "continuous noise needs a single matrix and a k-dimensional noise box (added to the offset)",
                    ));
                }
                spec.validate()?;
                spec.clone()
            }
            (Some(NoiseSpec::Finite { probs }), _) | (None, Some(probs)) => {
                if probs.len() != matrices.len() {
                    return Err(Error::usage("affine-general needs one probability per matrix"));
                }
                NoiseSpec::finite(probs.clone())?
            }
            (None, None) => {
                let q = matrices.len();
                NoiseSpec::finite(vec![1.0 / q as f64; q])?
            }
        };
        let all: Vec<usize> = (1..=dim).collect();
        Ok((
            dim,
            Rule::Affine { matrices, offsets },
            noise,
            None,
            Some(unit_box(dim)),
            all,
            false,
        ))
    }

    /// Wraps a user closure as a family with finite noise.
    pub fn custom(
        name: &str,
        dim: usize,
        noise: NoiseSpec,
        domain: Option<Hyperbox>,
        probe: Hyperbox,
        j: &[usize],
        f: Arc<MapFn>,
    ) -> Result<Self> {
        noise.validate()?;
        let order = JOrder::new(dim, j)?;
        if probe.dim() != dim {
            return Err(Error::DimensionMismatch {
                expected: dim,
                got: probe.dim(),
            });
        }
        Ok(MapFamily {
            name: name.to_string(),
            dim,
            noise: noise.clone(),
            rule: Rule::Custom(f),
            bounded: domain.is_some(),
            domain: domain.clone(),
            probe: probe.clone(),
            order,
            clamp: DEFAULT_CLAMP,
            config: FamilyConfig {
                family: name.to_string(),
                noise: Some(noise),
                domain,
                probe: Some(probe),
                j: Some(j.to_vec()),
                ..Default::default()
            },
        })
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn noise(&self) -> &NoiseSpec {
        &self.noise
    }

    pub fn domain(&self) -> Option<&Hyperbox> {
        self.domain.as_ref()
    }

    /// Box used to build probe clouds: the domain when bounded.
    pub fn probe_box(&self) -> &Hyperbox {
        &self.probe
    }

    pub fn order(&self) -> &JOrder {
        &self.order
    }

    pub fn clamp_bound(&self) -> f64 {
        self.clamp
    }

    /// Whether the family is known to map into a bounded set.
    pub fn is_bounded(&self) -> bool {
        self.bounded
    }

    /// The fully resolved configuration, suitable for a run manifest.
    pub fn config(&self) -> &FamilyConfig {
        &self.config
    }

    /// Largest Lyapunov exponent implied by the Lipschitz constants 2 and
    /// 1/2 of the `lip-pair` maps: `(p1 - p2) log 2`.
    pub fn lip_pair_lyapunov(&self) -> Option<f64> {
        match (&self.rule, self.noise.probs()) {
            (Rule::LipPair { .. }, Some(p)) => Some((p[0] - p[1]) * std::f64::consts::LN_2),
            _ => None,
        }
    }

    /// Evaluates `f_alpha(x)` into `out`, saturating to `[-M, M]^k`.
    /// Returns `true` when any coordinate had to be saturated.
    pub fn apply_into(&self, alpha: Noise, x: &[f64], out: &mut [f64]) -> bool {
        debug_assert_eq!(x.len(), self.dim);
        match &self.rule {
            Rule::Cantor1d => {
                out[0] = x[0] / 3.0 + if sym(alpha) == 1 { 2.0 / 3.0 } else { 0.0 };
            }
            Rule::Cantor2d => {
                let second = sym(alpha) == 1;
                out[0] = x[0] / 3.0 + if second { 2.0 / 3.0 } else { 0.0 };
                out[1] = x[1] / 3.0 - if second { 2.0 / 3.0 } else { 0.0 };
            }
            Rule::Exp1d => {
                let e = x[0].exp();
                out[0] = if sym(alpha) == 0 { e } else { -e };
            }
            Rule::Fig1 => {
                out[0] = (x[1] - x[0]).atan();
                out[1] = (x[0] - x[1]).exp();
            }
            Rule::LipPair { split } => {
                out[0] = match (sym(alpha), split) {
                    (0, false) => 2.0 * x[0],
                    (0, true) => 0.6 + 0.4 * (1.0 - (-5.0 * x[0]).exp()),
                    (_, _) => 0.5 * x[0],
                };
            }
            Rule::Affine { matrices, offsets } => {
                let k = self.dim;
                let (idx, shift) = match alpha {
                    Noise::Symbol(s) => (s, None),
                    Noise::Param { .. } => (0, Some(alpha)),
                };
                let a = &matrices[idx];
                for i in 0..k {
                    let row = &a[i * k..(i + 1) * k];
                    let mut v = offsets[idx][i];
                    for (aij, xj) in row.iter().zip(x) {
                        v += aij * xj;
                    }
                    if let Some(n) = &shift {
                        v += n.params()[i];
                    }
                    out[i] = v;
                }
            }
            Rule::Constant { values } => out.copy_from_slice(&values[sym(alpha)]),
            Rule::Custom(f) => f(alpha, x, out),
        }
        self.saturate(out)
    }

    fn saturate(&self, out: &mut [f64]) -> bool {
        let m = self.clamp;
        let mut hit = false;
        for v in out.iter_mut() {
            if v.is_nan() || *v > m {
                *v = m;
                hit = true;
            } else if *v < -m {
                *v = -m;
                hit = true;
            }
        }
        hit
    }

    /// Convenience form of [`apply_into`](Self::apply_into).
    pub fn apply(&self, alpha: Noise, x: &[f64]) -> Result<(Vec<f64>, bool)> {
        if x.len() != self.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                got: x.len(),
            });
        }
        self.check_noise(alpha)?;
        let mut out = vec![0.0; self.dim];
        let sat = self.apply_into(alpha, x, &mut out);
        Ok((out, sat))
    }

    pub fn check_noise(&self, alpha: Noise) -> Result<()> {
        match (alpha, &self.noise) {
            (Noise::Symbol(s), NoiseSpec::Finite { probs }) if s < probs.len() => Ok(()),
            (Noise::Param { len, .. }, NoiseSpec::Uniform { lo, .. }) if len as usize == lo.len() => Ok(()),
            _ => Err(Error::usage(format!(
                "noise value {} outside the support of family {}",
                alpha.label(),
                self.name
            ))),
        }
    }

    /// Applies `f_{b_0} o ... o f_{b_{m-1}}` in place (rightmost first).
    pub fn compose_in_place(&self, block: &[Noise], x: &mut [f64], scratch: &mut [f64]) -> bool {
        let mut sat = false;
        for &a in block.iter().rev() {
            sat |= self.apply_into(a, x, scratch);
            x.copy_from_slice(scratch);
        }
        sat
    }

    /// Applies a composition to every probe point.
    pub fn compose_cloud(&self, block: &[Noise], probe: &PointCloud) -> (PointCloud, bool) {
        let mut out = probe.clone();
        let mut scratch = vec![0.0; self.dim];
        let mut sat = false;
        for p in out.iter_mut() {
            sat |= self.compose_in_place(block, p, &mut scratch);
        }
        (out, sat)
    }

    /// Probe cloud: the `2^k` corners of the probe box (for `k <= 10`) plus
    /// `interior` Halton points.
    pub fn probe_cloud(&self, interior: usize) -> PointCloud {
        probe_cloud(&self.probe, interior)
    }

    pub fn default_probe(&self) -> PointCloud {
        self.probe_cloud(DEFAULT_INTERIOR_PROBES)
    }
}

#[inline]
fn sym(alpha: Noise) -> usize {
    alpha.symbol().unwrap_or(0)
}

const PRIMES: [u64; 16] = [2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37, 41, 43, 47, 53];

fn radical_inverse(mut i: u64, base: u64) -> f64 {
    let inv = 1.0 / base as f64;
    let (mut f, mut r) = (inv, 0.0);
    while i > 0 {
        r += f * (i % base) as f64;
        i /= base;
        f *= inv;
    }
    r
}

/// Corners (when `k <= 10`) plus `interior` Halton points of `b`.
pub fn probe_cloud(b: &Hyperbox, interior: usize) -> PointCloud {
    let k = b.dim();
    let mut cloud = if k <= MAX_CORNER_DIM {
        b.corners()
    } else {
        let mut c = PointCloud::new(k);
        c.push(&b.lo);
        c.push(&b.hi);
        c
    };
    let mut u = vec![0.0; k];
    let mut p = vec![0.0; k];
    for i in 1..=interior as u64 {
        for (s, us) in u.iter_mut().enumerate() {
            *us = radical_inverse(i, PRIMES[s % PRIMES.len()]);
        }
        b.scale_unit(&u, &mut p);
        cloud.push(&p);
    }
    cloud
}

/// Bounding box of the image of `probe` under `f_{b_0} o ... o f_{b_{m-1}}`.
pub fn image_box(fam: &MapFamily, block: &[Noise], probe: &PointCloud) -> Result<(Hyperbox, bool)> {
    if probe.is_empty() {
        return Err(Error::usage("probe cloud is empty"));
    }
    if block.is_empty() {
        return Err(Error::usage("noise block must have length at least 1"));
    }
    if probe.dim() != fam.dim() {
        return Err(Error::DimensionMismatch {
            expected: fam.dim(),
            got: probe.dim(),
        });
    }
    for &a in block {
        fam.check_noise(a)?;
    }
    let (img, sat) = fam.compose_cloud(block, probe);
    Ok((Hyperbox::bounding(&img).expect("non-empty"), sat))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Monotonicity {
    Increasing,
    Decreasing,
    Neither,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MonotonicityVerdict {
    pub kind: Monotonicity,
    /// A pair `x <_J y` whose images break the observed pattern.
    pub witness: Option<(Vec<f64>, Vec<f64>)>,
    pub pairs_tested: usize,
}

/// Classifies `f_alpha` as J-increasing, J-decreasing or neither on pairs
/// sampled from `probe`.
pub fn classify_monotonicity(
    fam: &MapFamily,
    alpha: Noise,
    ord: &JOrder,
    probe: &Hyperbox,
    n_pairs: usize,
    seed: u64,
) -> Result<MonotonicityVerdict> {
    if n_pairs == 0 {
        return Err(Error::usage("n_pairs must be at least 1"));
    }
    if ord.dim() != fam.dim() || probe.dim() != fam.dim() {
        return Err(Error::DimensionMismatch {
            expected: fam.dim(),
            got: if ord.dim() != fam.dim() { ord.dim() } else { probe.dim() },
        });
    }
    fam.check_noise(alpha)?;
    let label_index = alpha.symbol().map(|s| s as u64).unwrap_or(u64::MAX);
    let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(seed, "monotone", label_index));
    let k = fam.dim();
    let (mut x, mut y) = (vec![0.0; k], vec![0.0; k]);
    let (mut fx, mut fy) = (vec![0.0; k], vec![0.0; k]);
    let mut u = vec![0.0; k];
    let max_draws = 100 * n_pairs;
    let mut draws = 0;
    let mut tested = 0;
    let mut first_order: Option<PointOrder> = None;
    let mut mixed_witness: Option<(Vec<f64>, Vec<f64>)> = None;
    let mut broken_witness: Option<(Vec<f64>, Vec<f64>)> = None;
    while tested < n_pairs {
        if draws >= max_draws {
            if tested == 0 {
                return Err(Error::DegenerateProbe { draws });
            }
            break;
        }
        draws += 1;
        u.iter_mut().for_each(|v| *v = rng.random());
        probe.scale_unit(&u, &mut x);
        u.iter_mut().for_each(|v| *v = rng.random());
        probe.scale_unit(&u, &mut y);
        match ord.cmp_points_unchecked(&x, &y) {
            PointOrder::Less => {}
            PointOrder::Greater => std::mem::swap(&mut x, &mut y),
            _ => continue,
        }
        tested += 1;
        fam.apply_into(alpha, &x, &mut fx);
        fam.apply_into(alpha, &y, &mut fy);
        let img = ord.cmp_points_unchecked(&fx, &fy);
        match img {
            PointOrder::Less | PointOrder::Greater => {
                let first = *first_order.get_or_insert(img);
                if first != img && mixed_witness.is_none() {
                    mixed_witness = Some((x.clone(), y.clone()));
                }
            }
            _ => {
                if broken_witness.is_none() {
                    broken_witness = Some((x.clone(), y.clone()));
                }
            }
        }
    }
    let witness = broken_witness.or(mixed_witness);
    let kind = match (&witness, first_order) {
        (None, Some(PointOrder::Less)) => Monotonicity::Increasing,
        (None, Some(PointOrder::Greater)) => Monotonicity::Decreasing,
        _ => Monotonicity::Neither,
    };
    Ok(MonotonicityVerdict {
        kind,
        witness,
        pairs_tested: tested,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn s(i: usize) -> Noise {
        Noise::Symbol(i - 1)
    }

    #[test]
    fn apply_examples() {
        let c = MapFamily::builtin("cantor1d").unwrap();
        assert_abs_diff_eq!(c.apply(s(2), &[0.0]).unwrap().0[0], 2.0 / 3.0);
        let e = MapFamily::builtin("exp1d").unwrap();
        assert_eq!(e.apply(s(1), &[0.0]).unwrap().0, vec![1.0]);
        let f = MapFamily::builtin("fig1-2d").unwrap();
        assert_eq!(f.apply(s(1), &[0.0, 0.0]).unwrap().0, vec![0.0, 1.0]);
        let l = MapFamily::builtin("lip-pair").unwrap();
        assert_eq!(l.apply(s(1), &[1.0]).unwrap().0, vec![2.0]);
        assert_eq!(l.apply(s(2), &[1.0]).unwrap().0, vec![0.5]);
    }

    #[test]
    fn saturation_is_flagged() {
        let e = MapFamily::builtin("exp1d").unwrap();
        let (v, sat) = e.apply(s(1), &[1000.0]).unwrap();
        assert!(sat);
        assert_eq!(v[0], DEFAULT_CLAMP);
        let (v, sat) = e.apply(s(2), &[1000.0]).unwrap();
        assert!(sat);
        assert_eq!(v[0], -DEFAULT_CLAMP);
        assert!(!e.apply(s(1), &[1.0]).unwrap().1);
    }

    #[test]
    fn unknown_family_and_bad_noise() {
        assert!(matches!(
            MapFamily::builtin("nope"),
            Err(Error::UnknownFamily(_))
        ));
        let c = MapFamily::builtin("cantor1d").unwrap();
        assert!(c.apply(s(3), &[0.0]).is_err());
        assert!(MapFamily::from_config(&FamilyConfig::named("cantor1d").with_probs(vec![0.7, 0.7])).is_err());
    }

    #[test]
    fn image_box_examples() {
        let c = MapFamily::builtin("cantor1d").unwrap();
        let probe = PointCloud::from_points(1, &[vec![0.0], vec![1.0]]).unwrap();
        let (b, _) = image_box(&c, &[s(1)], &probe).unwrap();
        assert_abs_diff_eq!(b.lo[0], 0.0);
        assert_abs_diff_eq!(b.hi[0], 1.0 / 3.0);
        let (b, _) = image_box(&c, &[s(1), s(2)], &probe).unwrap();
        assert_abs_diff_eq!(b.lo[0], 2.0 / 9.0, epsilon = 1e-15);
        assert_abs_diff_eq!(b.hi[0], 1.0 / 3.0, epsilon = 1e-15);
        let e = MapFamily::builtin("exp1d").unwrap();
        let probe01 = PointCloud::from_points(1, &[vec![0.0], vec![1.0]]).unwrap();
        let (b, _) = image_box(&e, &[s(2)], &probe01).unwrap();
        assert_abs_diff_eq!(b.lo[0], -std::f64::consts::E);
        assert_abs_diff_eq!(b.hi[0], -1.0);
        assert!(image_box(&c, &[], &probe).is_err());
    }

    #[test]
    fn probe_cloud_has_corners_and_interior() {
        let f = MapFamily::builtin("cantor2d").unwrap();
        let p = f.default_probe();
        assert_eq!(p.len(), 4 + 32);
        let b = f.probe_box();
        assert!(p.iter().all(|x| b.contains(x, 0.0)));
    }

    #[test]
    fn classify_examples() {
        let f = MapFamily::builtin("fig1-2d").unwrap();
        let ord = JOrder::new(2, &[1]).unwrap();
        let probe = symmetric_box(2, 1.0);
        let v = classify_monotonicity(&f, s(1), &ord, &probe, 200, 1).unwrap();
        assert_eq!(v.kind, Monotonicity::Decreasing);
        assert!(v.witness.is_none());

        let c = MapFamily::builtin("cantor1d").unwrap();
        let ord1 = JOrder::new(1, &[1]).unwrap();
        let v = classify_monotonicity(&c, s(1), &ord1, &unit_box(1), 100, 1).unwrap();
        assert_eq!(v.kind, Monotonicity::Increasing);
        assert_eq!(v.pairs_tested, 100);

        let exp = MapFamily::builtin("exp1d").unwrap();
        let v = classify_monotonicity(&exp, s(2), &ord1, &symmetric_box(1, 1.0), 100, 1).unwrap();
        assert_eq!(v.kind, Monotonicity::Decreasing);
    }

    #[test]
    fn classify_degenerate_probe() {
        let c = MapFamily::builtin("cantor1d").unwrap();
        let ord = JOrder::new(1, &[1]).unwrap();
        let flat = Hyperbox::point(&[0.5]);
        assert!(matches!(
            classify_monotonicity(&c, s(1), &ord, &flat, 10, 0),
            Err(Error::DegenerateProbe { .. })
        ));
    }

    #[test]
    fn lyapunov_constant() {
        let l = MapFamily::from_config(&FamilyConfig::named("lip-pair").with_probs(vec![0.25, 0.75])).unwrap();
        assert_abs_diff_eq!(l.lip_pair_lyapunov().unwrap(), -0.5 * std::f64::consts::LN_2);
    }

    #[test]
    fn config_round_trips_through_json() {
        let text = r#"{"family": "cantor1d", "probs": [0.5,0.5], "domain": {"lo":[0],"hi":[1]}, "J":[1], "clamp": 1e300}"#;
        let fam = MapFamily::from_json(text).unwrap();
        let again = serde_json::to_string(fam.config()).unwrap();
        let fam2 = MapFamily::from_json(&again).unwrap();
        assert_eq!(fam.config(), fam2.config());
        assert!(MapFamily::from_json(r#"{"family":"cantor1d","bogus":1}"#).is_err());
    }

    #[test]
    fn affine_general_and_constant() {
        let cfg: FamilyConfig = serde_json::from_str(
            r#"{"family":"affine-general","matrices":[[[0.5,0],[0,0.5]],[[0.5,0],[0,0.5]]],"offsets":[[0,0],[0.5,0.5]],"probs":[0.5,0.5]}"#,
        )
        .unwrap();
        let fam = MapFamily::from_config(&cfg).unwrap();
        assert_eq!(fam.apply(s(2), &[1.0, 0.0]).unwrap().0, vec![1.0, 0.5]);
        let cfg: FamilyConfig = serde_json::from_str(
            r#"{"family":"affine-general","matrices":[[[0.5]]],"noise":{"kind":"uniform","lo":[0],"hi":[1]}}"#,
        )
        .unwrap();
        let fam = MapFamily::from_config(&cfg).unwrap();
        assert_eq!(fam.apply(Noise::from_params(&[0.25]), &[1.0]).unwrap().0, vec![0.75]);

        let cfg: FamilyConfig = serde_json::from_str(r#"{"family":"constant","values":[[0.25]]}"#).unwrap();
        let fam = MapFamily::from_config(&cfg).unwrap();
        assert_eq!(fam.apply(s(1), &[9.0]).unwrap().0, vec![0.25]);
    }
}
