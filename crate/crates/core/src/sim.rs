//! Orbit computation: forward iterates `Z_n`, reverse-order iterates
//! `Z^_n = f_{a_0} o ... o f_{a_{n-1}}(x)` and adaptive pullback limits.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::family::MapFamily;
use crate::noise::{Noise, NoiseBlock, NoiseStream};
use crate::order::{Hyperbox, PointCloud};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Direction {
    Forward,
    Reverse,
}

#[derive(Debug, Clone)]
pub struct OrbitTrace {
    pub direction: Direction,
    pub block: NoiseBlock,
    /// `n + 1` positions, starting with `x0`.
    pub positions: PointCloud,
    /// Image boxes of the probe cloud, one per position.
    pub boxes: Option<Vec<Hyperbox>>,
    pub saturated: bool,
}

fn check_start(fam: &MapFamily, x0: &[f64], block: &NoiseBlock) -> Result<()> {
    if x0.len() != fam.dim() {
        return Err(Error::DimensionMismatch {
            expected: fam.dim(),
            got: x0.len(),
        });
    }
    block.values.iter().try_for_each(|&a| fam.check_noise(a))
}

/// `Z_{j+1} = f_{a_j}(Z_j)` for every entry of the block.
pub fn forward_orbit(fam: &MapFamily, block: &NoiseBlock, x0: &[f64]) -> Result<OrbitTrace> {
    check_start(fam, x0, block)?;
    let mut positions = PointCloud::with_capacity(fam.dim(), block.len() + 1);
    positions.push(x0);
    let mut cur = x0.to_vec();
    let mut next = vec![0.0; fam.dim()];
    let mut saturated = false;
    for &a in &block.values {
        saturated |= fam.apply_into(a, &cur, &mut next);
        std::mem::swap(&mut cur, &mut next);
        positions.push(&cur);
    }
    Ok(OrbitTrace {
        direction: Direction::Forward,
        block: block.clone(),
        positions,
        boxes: None,
        saturated,
    })
}

/// Reverse-order iterates: entry `j` is `f_{a_0} o ... o f_{a_{j-1}}(x0)`,
/// recomputed from scratch for every `j`. With a probe cloud, also records
/// the bounding box of the probe image at every depth.
pub fn reverse_orbit(
    fam: &MapFamily,
    block: &NoiseBlock,
    x0: &[f64],
    probe: Option<&PointCloud>,
) -> Result<OrbitTrace> {
    check_start(fam, x0, block)?;
    if let Some(p) = probe {
        if p.is_empty() || p.dim() != fam.dim() {
            return Err(Error::usage("probe cloud must be non-empty and match the family dimension"));
        }
    }
    let k = fam.dim();
    let mut positions = PointCloud::with_capacity(k, block.len() + 1);
    let mut boxes = probe.map(|_| Vec::with_capacity(block.len() + 1));
    let mut scratch = vec![0.0; k];
    let mut saturated = false;
    for j in 0..=block.len() {
        let prefix = &block.values[..j];
        let mut x = x0.to_vec();
        saturated |= fam.compose_in_place(prefix, &mut x, &mut scratch);
        positions.push(&x);
        if let (Some(p), Some(bs)) = (probe, boxes.as_mut()) {
            let (img, sat) = fam.compose_cloud(prefix, p);
            saturated |= sat;
            bs.push(Hyperbox::bounding(&img).expect("non-empty probe"));
        }
    }
    Ok(OrbitTrace {
        direction: Direction::Reverse,
        block: block.clone(),
        positions,
        boxes,
        saturated,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct PullbackPoint {
    /// Centroid of the probe image at the accepted depth.
    pub point: Vec<f64>,
    pub n_used: usize,
    /// Taxicab diameter of the probe image at `n_used`.
    pub diameter: f64,
    pub saturated: bool,
}

/// Probe-image diameter at a given depth of a lazily extended noise prefix.
struct PrefixProbe<'f, 'p, F> {
    fam: &'f MapFamily,
    probe: &'p PointCloud,
    prefix: Vec<Noise>,
    source: F,
    saturated: bool,
}

impl<F: FnMut(usize) -> Noise> PrefixProbe<'_, '_, F> {
    fn image(&mut self, depth: usize) -> PointCloud {
        while self.prefix.len() < depth {
            let j = self.prefix.len();
            self.prefix.push((self.source)(j));
        }
        let (img, sat) = self.fam.compose_cloud(&self.prefix[..depth], self.probe);
        self.saturated |= sat;
        img
    }

    fn diameter(&mut self, depth: usize) -> f64 {
        Hyperbox::bounding(&self.image(depth))
            .expect("non-empty probe")
            .diameter()
    }
}

/// Pullback limit for an arbitrary indexed noise source `j -> a_j`.
///
/// Finds the smallest depth `n` in `[n_min.max(1), n_max]` at which the
/// probe image under `f_{a_0} o ... o f_{a_{n-1}}` has taxicab diameter at
/// most `tol`, relying on nestedness of reverse-order images (doubling, then
/// bisection). The noise prefix is extended at the tail, so every depth uses
/// the same `a_0, a_1, ...`.
pub fn pullback_with<F: FnMut(usize) -> Noise>(
    fam: &MapFamily,
    source: F,
    probe: &PointCloud,
    tol: f64,
    n_min: usize,
    n_max: usize,
) -> Result<PullbackPoint> {
    if !(tol > 0.0) {
        return Err(Error::usage("pullback tolerance must be positive"));
    }
    if probe.len() < 2 || probe.dim() != fam.dim() {
        return Err(Error::usage(
            "pullback probe needs at least 2 points of the family dimension",
        ));
    }
    let start = n_min.max(1);
    if n_max < start {
        return Err(Error::usage("n_max is smaller than the minimal depth"));
    }
    let mut pp = PrefixProbe {
        fam,
        probe,
        prefix: Vec::new(),
        source,
        saturated: false,
    };
    let mut hi = start;
    let mut lo = start - 1; // largest depth known to fail (or below range)
    loop {
        let d = pp.diameter(hi);
        if d <= tol {
            break;
        }
        if hi == n_max {
            return Err(Error::NotConverged {
                n_max,
                last_diameter: d,
            });
        }
        lo = hi;
        hi = (2 * hi).min(n_max);
    }
    while hi - lo > 1 && hi > start {
        let mid = lo + (hi - lo) / 2;
        if pp.diameter(mid) <= tol {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    let img = pp.image(hi);
    let diameter = Hyperbox::bounding(&img).expect("non-empty").diameter();
    Ok(PullbackPoint {
        point: img.centroid(),
        n_used: hi,
        diameter,
        saturated: pp.saturated,
    })
}

/// Pullback limit `pi(omega)` for the noise stream `(seed, stream_id)`.
pub fn pullback_point(
    fam: &MapFamily,
    seed: u64,
    stream_id: u64,
    probe: &PointCloud,
    tol: f64,
    n_max: usize,
) -> Result<PullbackPoint> {
    let mut stream = NoiseStream::new(fam.noise(), seed, stream_id);
    // sequential draws are cheaper than per-index seeks
    let mut buf: Vec<Noise> = Vec::new();
    pullback_with(
        fam,
        move |j| {
            if j >= buf.len() {
                let want = (j + 1).max(2 * buf.len()).max(16);
                stream.fill_to(&mut buf, want);
            }
            buf[j]
        },
        probe,
        tol,
        1,
        n_max,
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::family::FamilyConfig;
    use crate::noise::sample_block;
    use approx::assert_abs_diff_eq;

    fn cantor() -> MapFamily {
        MapFamily::builtin("cantor1d").unwrap()
    }

    #[test]
    fn forward_examples() {
        let c = cantor();
        let t = forward_orbit(&c, &NoiseBlock::from_symbols(&[1, 1]), &[1.0]).unwrap();
        assert_eq!(t.positions.len(), 3);
        assert_abs_diff_eq!(t.positions.get(1)[0], 1.0 / 3.0);
        assert_abs_diff_eq!(t.positions.get(2)[0], 1.0 / 9.0);
        let t = forward_orbit(&c, &NoiseBlock::from_symbols(&[2, 1]), &[0.0]).unwrap();
        assert_abs_diff_eq!(t.positions.get(1)[0], 2.0 / 3.0);
        assert_abs_diff_eq!(t.positions.get(2)[0], 2.0 / 9.0);
        let l = MapFamily::builtin("lip-pair").unwrap();
        let t = forward_orbit(&l, &NoiseBlock::from_symbols(&[1]), &[1.0]).unwrap();
        assert_eq!(t.positions.get(1), &[2.0]);
    }

    #[test]
    fn reverse_examples() {
        let c = cantor();
        let t = reverse_orbit(&c, &NoiseBlock::from_symbols(&[1, 2]), &[0.0], None).unwrap();
        assert_eq!(t.positions.get(0), &[0.0]);
        assert_eq!(t.positions.get(1), &[0.0]);
        assert_abs_diff_eq!(t.positions.get(2)[0], 2.0 / 9.0, epsilon = 1e-15);
        let b = NoiseBlock::from_symbols(&[2]);
        let f = forward_orbit(&c, &b, &[0.3]).unwrap();
        let r = reverse_orbit(&c, &b, &[0.3], None).unwrap();
        assert_eq!(f.positions, r.positions);
    }

    #[test]
    fn reverse_boxes_nest() {
        for name in ["cantor1d", "cantor2d"] {
            let fam = MapFamily::builtin(name).unwrap();
            let block = sample_block(fam.noise(), 3, 0, 12).unwrap();
            let probe = fam.default_probe();
            let x0 = fam.probe_box().center();
            let t = reverse_orbit(&fam, &block, &x0, Some(&probe)).unwrap();
            let boxes = t.boxes.unwrap();
            for w in boxes.windows(2).skip(1) {
                if w[1].is_finite() && !t.saturated {
                    let tol = fam.order().strict_tol() * (1.0 + w[0].diameter());
                    assert!(w[1].is_within(&w[0], tol), "{name}: {:?} not in {:?}", w[1], w[0]);
                }
            }
        }
    }

    #[test]
    fn pullback_cantor_depth() {
        let c = cantor();
        let probe = c.default_probe();
        let p = pullback_point(&c, 1, 0, &probe, 1e-9, 200).unwrap();
        assert_eq!(p.n_used, 19);
        assert!(p.point[0] >= 0.0 && p.point[0] <= 1.0);
        assert!(p.diameter <= 1e-9);
    }

    #[test]
    fn pullback_constant_family_collapses_in_one_step() {
        let cfg: FamilyConfig = serde_json::from_str(r#"{"family":"constant","values":[[0.25]]}"#).unwrap();
        let fam = MapFamily::from_config(&cfg).unwrap();
        let probe = crate::family::probe_cloud(&Hyperbox::new(vec![0.0], vec![1.0]).unwrap(), 4);
        let p = pullback_point(&fam, 0, 0, &probe, 1e-12, 10).unwrap();
        assert_eq!(p.n_used, 1);
        assert_eq!(p.point, vec![0.25]);
    }

    #[test]
    fn pullback_not_converged() {
        let l = MapFamily::builtin("lip-pair").unwrap();
        let probe = l.default_probe();
        let err = pullback_point(&l, 5, 0, &probe, 1e-9, 20).unwrap_err();
        assert!(matches!(err, Error::NotConverged { n_max: 20, .. }));
    }

    #[test]
    fn pullback_sign_follows_outermost_map() {
        let e = MapFamily::builtin("exp1d").unwrap();
        let probe = e.default_probe();
        let mut checked = 0;
        for stream in 0..50 {
            let first = NoiseStream::new(e.noise(), 9, stream).value_at(0);
            if let Ok(p) = pullback_point(&e, 9, stream, &probe, 1e-9, 200) {
                checked += 1;
                match first.symbol().unwrap() {
                    0 => assert!(p.point[0] > 0.0),
                    _ => assert!(p.point[0] < 0.0),
                }
            }
        }
        assert!(checked > 40);
    }

    #[test]
    fn pullback_is_probe_independent() {
        let c = cantor();
        let a = PointCloud::from_points(1, &[vec![0.0], vec![0.9]]).unwrap();
        let b = PointCloud::from_points(1, &[vec![0.1], vec![1.0]]).unwrap();
        for stream in 0..20 {
            let pa = pullback_point(&c, 4, stream, &a, 1e-9, 100).unwrap();
            let pb = pullback_point(&c, 4, stream, &b, 1e-9, 100).unwrap();
            assert!((pa.point[0] - pb.point[0]).abs() <= 2e-9);
        }
    }
}
