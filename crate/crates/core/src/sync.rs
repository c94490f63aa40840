//! Synchronization of random orbits: diameter decay of reverse-order images,
//! exponential rate fits, and the distance between a forward orbit and the
//! pullback point of the shifted noise.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::family::MapFamily;
use crate::noise::{derive_seed, Noise, NoiseStream};
use crate::order::{taxicab, Hyperbox, PointCloud};
use crate::sim::pullback_with;
use crate::stats::{linear_fit, quantile};

/// Smallest mean diameter kept in a rate fit.
pub const FIT_FLOOR: f64 = 1e3 * f64::EPSILON;
const M0_VOLUME_RATIO: f64 = 10.0;
const MIN_FIT_STEPS: usize = 5;

#[derive(Debug, Clone)]
pub struct DiamSeries {
    /// `diam[r][n]`: taxicab diameter of the probe image at depth `n` for
    /// replica `r`, `n = 0..=n_max`.
    pub diam: Vec<Vec<f64>>,
    /// Image boxes, same indexing as `diam`.
    pub boxes: Vec<Vec<Hyperbox>>,
    pub m0: Option<usize>,
    /// Every replica box from `m0` on stays inside the step-`m0` hull and no
    /// value saturated.
    pub bounded: bool,
    pub saturated: bool,
    pub seed: u64,
}

impl DiamSeries {
    pub fn n_max(&self) -> usize {
        self.diam.first().map_or(0, |d| d.len() - 1)
    }

    pub fn replicas(&self) -> usize {
        self.diam.len()
    }

    pub fn mean(&self) -> Vec<f64> {
        mean_series(&self.diam, None)
    }

    pub fn quantiles(&self, q: f64) -> Vec<f64> {
        (0..=self.n_max())
            .map(|n| {
                let col: Vec<f64> = self.diam.iter().map(|d| d[n]).collect();
                quantile(&col, q)
            })
            .collect()
    }

    /// Hull of all replica boxes at step `n`.
    pub fn hull(&self, n: usize) -> Hyperbox {
        let mut h = self.boxes[0][n].clone();
        for b in &self.boxes[1..] {
            h.include(&b[n].lo);
            h.include(&b[n].hi);
        }
        h
    }
}

fn mean_series(diam: &[Vec<f64>], pick: Option<&[usize]>) -> Vec<f64> {
    let len = diam[0].len();
    let mut acc = vec![0.0; len];
    let mut count = 0.0;
    let mut add = |row: &Vec<f64>| {
        for (a, v) in acc.iter_mut().zip(row) {
            *a += v;
        }
        count += 1.0;
    };
    match pick {
        Some(idx) => idx.iter().for_each(|&i| add(&diam[i])),
        None => diam.iter().for_each(add),
    }
    acc.iter_mut().for_each(|a| *a /= count);
    acc
}

/// First step at which the hull of all replica boxes has volume at most ten
/// times the median replica volume.
pub fn detect_m0(boxes: &[Vec<Hyperbox>]) -> Option<usize> {
    let n_steps = boxes.first()?.len();
    (0..n_steps).find(|&n| {
        let mut hull = boxes[0][n].clone();
        let mut vols = Vec::with_capacity(boxes.len());
        for b in boxes {
            hull.include(&b[n].lo);
            hull.include(&b[n].hi);
            vols.push(b[n].volume());
        }
        hull.is_finite() && hull.volume() <= M0_VOLUME_RATIO * quantile(&vols, 0.5)
    })
}

/// Reverse-order image diameters of `probe` for `replicas` independent noise
/// streams.
pub fn diameter_series(
    fam: &MapFamily,
    probe: &PointCloud,
    n_max: usize,
    replicas: usize,
    seed: u64,
    m0_override: Option<usize>,
) -> Result<DiamSeries> {
    if probe.is_empty() || probe.dim() != fam.dim() {
        return Err(Error::usage("probe cloud must be non-empty and match the family dimension"));
    }
    if replicas == 0 {
        return Err(Error::usage("replicas must be at least 1"));
    }
    let sub = derive_seed(seed, "sync", 0);
    let rows: Vec<(Vec<f64>, Vec<Hyperbox>, bool)> = (0..replicas)
        .into_par_iter()
        .map(|r| {
            let block = NoiseStream::new(fam.noise(), sub, r as u64).range(0, n_max);
            let mut sat = false;
            let boxes: Vec<Hyperbox> = (0..=n_max)
                .map(|n| {
                    let (img, s) = fam.compose_cloud(&block[..n], probe);
                    sat |= s;
                    Hyperbox::bounding(&img).expect("non-empty probe")
                })
                .collect();
            let diam = boxes.iter().map(Hyperbox::diameter).collect();
            (diam, boxes, sat)
        })
        .collect();
    let saturated = rows.iter().any(|r| r.2);
    let (diam, boxes): (Vec<_>, Vec<_>) = rows.into_iter().map(|(d, b, _)| (d, b)).unzip();
    let m0 = m0_override.or_else(|| detect_m0(&boxes));
    let bounded = match m0 {
        Some(m0) if !saturated && m0 <= n_max => {
            let mut hull = boxes[0][m0].clone();
            for b in &boxes {
                hull.include(&b[m0].lo);
                hull.include(&b[m0].hi);
            }
            let tol = fam.order().strict_tol() * (1.0 + hull.diameter());
            boxes
                .iter()
                .all(|row| row[m0..].iter().all(|b| b.is_within(&hull, tol)))
        }
        _ => false,
    };
    Ok(DiamSeries {
        diam,
        boxes,
        m0,
        bounded,
        saturated,
        seed,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RateFit {
    pub r_hat: f64,
    pub c_hat: f64,
    /// 95% bootstrap interval for `r_hat`, when replicas were available.
    pub r_ci: Option<(f64, f64)>,
    /// Inclusive fit window.
    pub n_range: (usize, usize),
    pub r_squared: f64,
    /// The series reached exactly zero before enough steps were usable;
    /// `r_hat = 0` by convention.
    pub degenerate: bool,
    pub warning: Option<String>,
}

impl RateFit {
    fn degenerate(n: usize) -> Self {
        RateFit {
            r_hat: 0.0,
            c_hat: 0.0,
            r_ci: None,
            n_range: (n, n),
            r_squared: 1.0,
            degenerate: true,
            warning: Some("series reached zero; r_hat = 0 by convention".into()),
        }
    }

    pub fn bound(&self, n: usize) -> f64 {
        self.c_hat * self.r_hat.powi(n as i32)
    }
}

/// Contiguous window starting at `start` on which values stay above the
/// fit floor. Returns the window end and whether an exact zero stopped it.
fn fit_window(values: &[f64], start: usize) -> (usize, bool) {
    let mut end = start;
    while end < values.len() && values[end] >= FIT_FLOOR && values[end].is_finite() {
        end += 1;
    }
    let hit_zero = values.get(end).is_some_and(|&v| v == 0.0);
    (end, hit_zero)
}

/// Log-linear fit `values[n] ~ c r^n` over `n = start..` until the values
/// drop below the floor.
pub fn fit_exponential(values: &[f64], start: usize) -> Result<RateFit> {
    let (end, hit_zero) = fit_window(values, start);
    let usable = end.saturating_sub(start);
    if usable < MIN_FIT_STEPS {
        if hit_zero {
            return Ok(RateFit::degenerate(start));
        }
        return Err(Error::DegenerateSeries { usable });
    }
    let xs: Vec<f64> = (start..end).map(|n| n as f64).collect();
    let ys: Vec<f64> = values[start..end].iter().map(|v| v.ln()).collect();
    let fit = linear_fit(&xs, &ys).ok_or(Error::DegenerateSeries { usable })?;
    let r_hat = fit.slope.exp();
    Ok(RateFit {
        r_hat,
        c_hat: fit.intercept.exp(),
        r_ci: None,
        n_range: (start, end - 1),
        r_squared: fit.r_squared,
        degenerate: false,
        warning: (r_hat >= 1.0).then(|| "no contraction: fitted ratio is not below 1".to_string()),
    })
}

/// Fits `mean_r d_r(n) ~ c r^n` on `n >= m0` with a replica bootstrap
/// interval for `r`.
pub fn fit_rate(series: &DiamSeries, bootstrap: usize, seed: u64) -> Result<RateFit> {
    let start = series.m0.unwrap_or(0);
    let mean = series.mean();
    let mut fit = fit_exponential(&mean, start)?;
    if fit.degenerate || bootstrap == 0 || series.replicas() < 2 {
        return Ok(fit);
    }
    let (lo, hi) = fit.n_range;
    let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(seed, "bootstrap", 0));
    let n_rep = series.replicas();
    let xs: Vec<f64> = (lo..=hi).map(|n| n as f64).collect();
    let mut slopes = Vec::with_capacity(bootstrap);
    for _ in 0..bootstrap {
        let pick: Vec<usize> = (0..n_rep).map(|_| rng.random_range(0..n_rep)).collect();
        let m = mean_series(&series.diam, Some(&pick));
        if m[lo..=hi].iter().any(|&v| !(v > 0.0)) {
            continue;
        }
        let ys: Vec<f64> = m[lo..=hi].iter().map(|v| v.ln()).collect();
        if let Some(f) = linear_fit(&xs, &ys) {
            slopes.push(f.slope.exp());
        }
    }
    if !slopes.is_empty() {
        fit.r_ci = Some((quantile(&slopes, 0.025), quantile(&slopes, 0.975)));
    }
    Ok(fit)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GapPoint {
    pub n: usize,
    /// Taxicab distance between `Z_n(x0)` and the pullback point of the
    /// shifted noise.
    pub gap: f64,
    /// Taxicab diameter of the probe image under the first `n` forward maps.
    pub image_diameter: f64,
    pub pullback_depth: usize,
}

/// Forward orbit `Z_n(x0)` versus `pi(sigma^n omega)` for `n = 1..=n_max`.
///
/// The pullback for checkpoint `n` consumes the forward noise backwards
/// (`a_{n-1}, ..., a_0`) and then continues with fresh noise from the
/// sub-stream labelled `("pullback", n)`.
pub fn forward_attractor_gap(
    fam: &MapFamily,
    seed: u64,
    stream_id: u64,
    x0: &[f64],
    n_max: usize,
    tail_tol: f64,
    pullback_max: usize,
) -> Result<Vec<GapPoint>> {
    if x0.len() != fam.dim() {
        return Err(Error::DimensionMismatch {
            expected: fam.dim(),
            got: x0.len(),
        });
    }
    let probe = fam.default_probe();
    let forward: Vec<Noise> =
        NoiseStream::new(fam.noise(), derive_seed(seed, "forward", 0), stream_id).range(0, n_max);
    let mut z = x0.to_vec();
    let mut scratch = vec![0.0; fam.dim()];
    let mut out = Vec::with_capacity(n_max);
    for n in 1..=n_max {
        fam.apply_into(forward[n - 1], &z, &mut scratch);
        z.copy_from_slice(&scratch);
        let mut tail = NoiseStream::new(fam.noise(), derive_seed(seed, "pullback", n as u64), stream_id);
        let recent = &forward[..n];
        let pb = pullback_with(
            fam,
            |j| if j < n { recent[n - 1 - j] } else { tail.value_at(j - n) },
            &probe,
            tail_tol,
            n,
            pullback_max.max(n),
        )?;
        let reversed: Vec<Noise> = recent.iter().rev().copied().collect();
        let (img, _) = fam.compose_cloud(&reversed, &probe);
        out.push(GapPoint {
            n,
            gap: taxicab(&z, &pb.point),
            image_diameter: Hyperbox::bounding(&img).expect("non-empty").diameter(),
            pullback_depth: pb.n_used,
        });
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn cantor_diameters_are_exact_powers() {
        let fam = MapFamily::builtin("cantor1d").unwrap();
        let s = diameter_series(&fam, &fam.default_probe(), 15, 8, 1, None).unwrap();
        for row in &s.diam {
            for (n, d) in row.iter().enumerate() {
                assert_abs_diff_eq!(*d, 3f64.powi(-(n as i32)), epsilon = 1e-12);
            }
        }
        assert!(s.bounded);
        let fit = fit_rate(&s, 50, 1).unwrap();
        assert_abs_diff_eq!(fit.r_hat, 1.0 / 3.0, epsilon = 1e-9);
    }

    #[test]
    fn cantor2d_diameters() {
        let fam = MapFamily::builtin("cantor2d").unwrap();
        let s = diameter_series(&fam, &fam.default_probe(), 12, 4, 2, None).unwrap();
        for row in &s.diam {
            for (n, d) in row.iter().enumerate() {
                assert_abs_diff_eq!(*d, 2.0 * 3f64.powi(-(n as i32)), epsilon = 1e-12);
            }
        }
    }

    #[test]
    fn constant_family_is_degenerate() {
        let fam = MapFamily::from_json(r#"{"family":"constant","values":[[0.2],[0.7]]}"#).unwrap();
        let s = diameter_series(&fam, &fam.default_probe(), 10, 5, 0, None).unwrap();
        assert!(s.diam.iter().all(|row| row[1..].iter().all(|&d| d == 0.0)));
        let fit = fit_rate(&s, 10, 0).unwrap();
        assert!(fit.degenerate);
        assert_eq!(fit.r_hat, 0.0);
    }

    #[test]
    fn short_series_is_an_error() {
        assert!(matches!(
            fit_exponential(&[1.0, 0.5, 0.25], 0),
            Err(Error::DegenerateSeries { usable: 3 })
        ));
    }

    #[test]
    fn exp1d_is_not_bounded() {
        let fam = MapFamily::builtin("exp1d").unwrap();
        let s = diameter_series(&fam, &fam.default_probe(), 25, 50, 3, None).unwrap();
        assert!(!s.bounded);
    }

    #[test]
    fn linear_lip_pair_does_not_contract() {
        let fam = MapFamily::builtin("lip-pair").unwrap();
        let s = diameter_series(&fam, &fam.default_probe(), 20, 200, 4, Some(0)).unwrap();
        let fit = fit_rate(&s, 0, 0).unwrap();
        assert!(fit.r_hat >= 1.0);
        assert!(fit.warning.is_some());
    }

    #[test]
    fn split_lip_pair_contracts_for_either_sign_of_lyapunov() {
        for p1 in [0.2, 0.8] {
            let cfg = crate::family::FamilyConfig {
                mode: Some("split".into()),
                ..crate::family::FamilyConfig::named("lip-pair").with_probs(vec![p1, 1.0 - p1])
            };
            let fam = MapFamily::from_config(&cfg).unwrap();
            let s = diameter_series(&fam, &fam.default_probe(), 15, 200, 5, None).unwrap();
            let fit = fit_rate(&s, 0, 0).unwrap();
            assert!(fit.r_hat < 1.0, "p1={p1}: r_hat={}", fit.r_hat);
        }
    }

    #[test]
    fn forward_gap_cantor() {
        let fam = MapFamily::builtin("cantor1d").unwrap();
        for stream in 0..5 {
            let g = forward_attractor_gap(&fam, 11, stream, &[0.4], 15, 1e-9, 200).unwrap();
            for p in &g {
                assert!(p.gap <= 3f64.powi(-(p.n as i32)), "{p:?}");
                assert!(p.gap <= p.image_diameter + 1e-12);
            }
        }
    }

    #[test]
    fn forward_gap_constant_family_vanishes() {
        let fam = MapFamily::from_json(r#"{"family":"constant","values":[[0.2],[0.7]]}"#).unwrap();
        let g = forward_attractor_gap(&fam, 0, 0, &[0.5], 6, 1e-12, 50).unwrap();
        assert!(g.iter().all(|p| p.gap == 0.0 && p.image_diameter == 0.0), "{g:?}");
    }
}
