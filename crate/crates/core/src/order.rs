//! The partial order `<_J` on points of R^k and its conservative lift to
//! axis-aligned boxes.
//!
//! For a subset `J` of the coordinates, `x <_J y` holds when `x_i < y_i` on
//! every coordinate in `J` and `x_i > y_i` on every coordinate outside `J`.
//! Strict inequalities are certified with an absolute margin `strict_tol`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Default margin for certifying strict inequalities.
pub const DEFAULT_STRICT_TOL: f64 = 1e-12;

/// Largest dimension supported by the bitmask representation of `J`.
pub const MAX_DIM: usize = 64;

/// The subset `J` of `{1..k}` together with the numerical margin used to
/// decide strict inequalities.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct JOrder {
    dim: usize,
    mask: u64,
    strict_tol: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum PointOrder {
    Less,
    Greater,
    Equal,
    Incomparable,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum SetOrder {
    Less,
    Greater,
    Inconclusive,
}

impl JOrder {
    /// Builds the order from 1-based coordinate indices.
    pub fn new(dim: usize, j: &[usize]) -> Result<Self> {
        Self::with_tol(dim, j, DEFAULT_STRICT_TOL)
    }

    pub fn with_tol(dim: usize, j: &[usize], strict_tol: f64) -> Result<Self> {
        if dim == 0 || dim > MAX_DIM {
            return Err(Error::usage(format!(
                "dimension must be in 1..={MAX_DIM}, got {dim}"
            )));
        }
        if !(strict_tol >= 0.0) || !strict_tol.is_finite() {
            return Err(Error::usage(format!(
                "strict_tol must be finite and non-negative, got {strict_tol}"
            )));
        }
        let mut mask = 0u64;
        for &i in j {
            if i == 0 || i > dim {
                return Err(Error::usage(format!(
                    "J index {i} outside 1..={dim}"
                )));
            }
            mask |= 1 << (i - 1);
        }
        Ok(JOrder {
            dim,
            mask,
            strict_tol,
        })
    }

    /// The order where `J` is every coordinate (componentwise strict order).
    pub fn increasing(dim: usize) -> Result<Self> {
        let all: Vec<usize> = (1..=dim).collect();
        Self::new(dim, &all)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn strict_tol(&self) -> f64 {
        self.strict_tol
    }

    /// Whether 0-based coordinate `i` belongs to `J`.
    #[inline]
    pub fn in_j(&self, i: usize) -> bool {
        self.mask >> i & 1 == 1
    }

    /// 1-based indices of `J`.
    pub fn members(&self) -> Vec<usize> {
        (0..self.dim).filter(|&i| self.in_j(i)).map(|i| i + 1).collect()
    }

    fn check_dim(&self, len: usize) -> Result<()> {
        if len != self.dim {
            Err(Error::DimensionMismatch {
                expected: self.dim,
                got: len,
            })
        } else {
            Ok(())
        }
    }

    pub fn cmp_points(&self, x: &[f64], y: &[f64]) -> Result<PointOrder> {
        self.check_dim(x.len())?;
        self.check_dim(y.len())?;
        Ok(self.cmp_points_unchecked(x, y))
    }

    pub(crate) fn cmp_points_unchecked(&self, x: &[f64], y: &[f64]) -> PointOrder {
        let tol = self.strict_tol;
        let (mut less, mut greater, mut equal) = (true, true, true);
        for i in 0..self.dim {
            // oriented gap: positive when x sits below y in the J-order
            let gap = if self.in_j(i) { y[i] - x[i] } else { x[i] - y[i] };
            less &= gap > tol;
            greater &= -gap > tol;
            equal &= gap.abs() <= tol;
        }
        if less {
            PointOrder::Less
        } else if greater {
            PointOrder::Greater
        } else if equal {
            PointOrder::Equal
        } else {
            PointOrder::Incomparable
        }
    }

    /// Conservative set order on boxes. `Less` is only returned when every
    /// point of `b1` is `<_J` every point of `b2`.
    pub fn cmp_boxes(&self, b1: &Hyperbox, b2: &Hyperbox) -> Result<SetOrder> {
        self.check_dim(b1.dim())?;
        self.check_dim(b2.dim())?;
        Ok(self.cmp_boxes_unchecked(b1, b2))
    }

    pub(crate) fn cmp_boxes_unchecked(&self, b1: &Hyperbox, b2: &Hyperbox) -> SetOrder {
        if self.box_below(b1, b2) {
            SetOrder::Less
        } else if self.box_below(b2, b1) {
            SetOrder::Greater
        } else {
            SetOrder::Inconclusive
        }
    }

    fn box_below(&self, a: &Hyperbox, b: &Hyperbox) -> bool {
        let tol = self.strict_tol;
        (0..self.dim).all(|i| {
            if self.in_j(i) {
                a.hi[i] + tol < b.lo[i]
            } else {
                a.lo[i] - tol > b.hi[i]
            }
        })
    }
}

/// Axis-aligned box `[lo_1, hi_1] x ... x [lo_k, hi_k]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Hyperbox {
    pub lo: Vec<f64>,
    pub hi: Vec<f64>,
}

impl Hyperbox {
    pub fn new(lo: Vec<f64>, hi: Vec<f64>) -> Result<Self> {
        if lo.len() != hi.len() {
            return Err(Error::DimensionMismatch {
                expected: lo.len(),
                got: hi.len(),
            });
        }
        if lo.is_empty() {
            return Err(Error::usage("box must have dimension at least 1"));
        }
        if let Some(i) = (0..lo.len()).find(|&i| !(lo[i] <= hi[i])) {
            return Err(Error::usage(format!(
                "box coordinate {} has lo {} > hi {}",
                i + 1,
                lo[i],
                hi[i]
            )));
        }
        Ok(Hyperbox { lo, hi })
    }

    /// Degenerate box containing a single point.
    pub fn point(x: &[f64]) -> Self {
        Hyperbox {
            lo: x.to_vec(),
            hi: x.to_vec(),
        }
    }

    /// Componentwise bounding box of a point cloud.
    pub fn bounding(cloud: &PointCloud) -> Option<Self> {
        let mut it = cloud.iter();
        let first = it.next()?;
        let mut b = Hyperbox::point(first);
        for p in it {
            b.include(p);
        }
        Some(b)
    }

    pub fn include(&mut self, x: &[f64]) {
        for ((lo, hi), &v) in self.lo.iter_mut().zip(&mut self.hi).zip(x) {
            *lo = lo.min(v);
            *hi = hi.max(v);
        }
    }

    pub fn dim(&self) -> usize {
        self.lo.len()
    }

    pub fn span(&self, i: usize) -> f64 {
        self.hi[i] - self.lo[i]
    }

    /// Taxicab diameter: the sum of the coordinate spans.
    pub fn diameter(&self) -> f64 {
        (0..self.dim()).map(|i| self.span(i)).sum()
    }

    pub fn volume(&self) -> f64 {
        (0..self.dim()).map(|i| self.span(i)).product()
    }

    pub fn center(&self) -> Vec<f64> {
        (0..self.dim())
            .map(|i| 0.5 * (self.lo[i] + self.hi[i]))
            .collect()
    }

    pub fn contains(&self, x: &[f64], tol: f64) -> bool {
        (0..self.dim()).all(|i| x[i] >= self.lo[i] - tol && x[i] <= self.hi[i] + tol)
    }

    /// Whether `self` lies inside `other` inflated by `tol`.
    pub fn is_within(&self, other: &Hyperbox, tol: f64) -> bool {
        (0..self.dim())
            .all(|i| self.lo[i] >= other.lo[i] - tol && self.hi[i] <= other.hi[i] + tol)
    }

    pub fn is_finite(&self) -> bool {
        self.lo.iter().chain(&self.hi).all(|v| v.is_finite())
    }

    /// All `2^k` corners, enumerated by bit pattern (bit `i` set picks `hi_i`).
    pub fn corners(&self) -> PointCloud {
        let k = self.dim();
        let mut cloud = PointCloud::with_capacity(k, 1 << k);
        let mut p = vec![0.0; k];
        for bits in 0u64..(1u64 << k) {
            for (i, v) in p.iter_mut().enumerate() {
                *v = if bits >> i & 1 == 1 { self.hi[i] } else { self.lo[i] };
            }
            cloud.push(&p);
        }
        cloud
    }

    /// Maps a point of the unit cube into this box.
    pub fn scale_unit(&self, u: &[f64], out: &mut [f64]) {
        for i in 0..self.dim() {
            out[i] = self.lo[i] + u[i] * self.span(i);
        }
    }
}

/// True iff the coordinate intervals of the two boxes are disjoint in every
/// coordinate.
pub fn projections_disjoint(b1: &Hyperbox, b2: &Hyperbox) -> Result<bool> {
    if b1.dim() != b2.dim() {
        return Err(Error::DimensionMismatch {
            expected: b1.dim(),
            got: b2.dim(),
        });
    }
    Ok((0..b1.dim()).all(|s| b1.hi[s] < b2.lo[s] || b2.hi[s] < b1.lo[s]))
}

/// A flat, row-major collection of points in R^k.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PointCloud {
    dim: usize,
    coords: Vec<f64>,
}

impl PointCloud {
    pub fn new(dim: usize) -> Self {
        PointCloud {
            dim,
            coords: Vec::new(),
        }
    }

    pub fn with_capacity(dim: usize, n: usize) -> Self {
        PointCloud {
            dim,
            coords: Vec::with_capacity(dim * n),
        }
    }

    pub fn from_flat(dim: usize, coords: Vec<f64>) -> Result<Self> {
        if dim == 0 || !coords.len().is_multiple_of(dim) {
            return Err(Error::usage(format!(
                "flat buffer of length {} is not a multiple of dimension {dim}",
                coords.len()
            )));
        }
        Ok(PointCloud { dim, coords })
    }

    pub fn from_points(dim: usize, points: &[Vec<f64>]) -> Result<Self> {
        let mut cloud = PointCloud::with_capacity(dim, points.len());
        for p in points {
            if p.len() != dim {
                return Err(Error::DimensionMismatch {
                    expected: dim,
                    got: p.len(),
                });
            }
            cloud.push(p);
        }
        Ok(cloud)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.coords.len() / self.dim
    }

    pub fn is_empty(&self) -> bool {
        self.coords.is_empty()
    }

    pub fn push(&mut self, p: &[f64]) {
        debug_assert_eq!(p.len(), self.dim);
        self.coords.extend_from_slice(p);
    }

    pub fn extend(&mut self, other: &PointCloud) {
        debug_assert_eq!(other.dim, self.dim);
        self.coords.extend_from_slice(&other.coords);
    }

    pub fn get(&self, i: usize) -> &[f64] {
        &self.coords[i * self.dim..(i + 1) * self.dim]
    }

    pub fn get_mut(&mut self, i: usize) -> &mut [f64] {
        &mut self.coords[i * self.dim..(i + 1) * self.dim]
    }

    pub fn iter(&self) -> std::slice::ChunksExact<'_, f64> {
        self.coords.chunks_exact(self.dim)
    }

    pub fn iter_mut(&mut self) -> std::slice::ChunksExactMut<'_, f64> {
        self.coords.chunks_exact_mut(self.dim)
    }

    pub fn as_flat(&self) -> &[f64] {
        &self.coords
    }

    pub fn as_flat_mut(&mut self) -> &mut [f64] {
        &mut self.coords
    }

    pub fn into_flat(self) -> Vec<f64> {
        self.coords
    }

    /// Arithmetic mean of the points, accumulated as offsets from the first
    /// point so that coincident points give that point exactly.
    pub fn centroid(&self) -> Vec<f64> {
        let base = self.get(0).to_vec();
        let mut acc = vec![0.0; self.dim];
        for p in self.iter().skip(1) {
            for ((a, pi), b) in acc.iter_mut().zip(p).zip(&base) {
                *a += pi - b;
            }
        }
        let n = self.len() as f64;
        base.iter().zip(acc).map(|(b, a)| b + a / n).collect()
    }
}

/// Taxicab distance.
pub fn taxicab(x: &[f64], y: &[f64]) -> f64 {
    x.iter().zip(y).map(|(a, b)| (a - b).abs()).sum()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn bx(lo: &[f64], hi: &[f64]) -> Hyperbox {
        Hyperbox::new(lo.to_vec(), hi.to_vec()).unwrap()
    }

    #[test]
    fn point_order_examples() {
        let ord = JOrder::new(2, &[1]).unwrap();
        assert_eq!(ord.cmp_points(&[0.0, 1.0], &[1.0, 0.0]).unwrap(), PointOrder::Less);
        assert_eq!(
            ord.cmp_points(&[0.0, 0.0], &[1.0, 1.0]).unwrap(),
            PointOrder::Incomparable
        );
        let ord1 = JOrder::new(1, &[1]).unwrap();
        assert_eq!(ord1.cmp_points(&[0.3], &[0.7]).unwrap(), PointOrder::Less);
        assert_eq!(ord1.cmp_points(&[0.7], &[0.3]).unwrap(), PointOrder::Greater);
    }

    #[test]
    fn roundoff_gaps_are_not_strict() {
        let ord = JOrder::new(1, &[1]).unwrap();
        assert_eq!(ord.cmp_points(&[0.0], &[1e-13]).unwrap(), PointOrder::Equal);
        let ord2 = JOrder::new(2, &[1, 2]).unwrap();
        assert_eq!(
            ord2.cmp_points(&[0.0, 0.0], &[1.0, 1e-13]).unwrap(),
            PointOrder::Incomparable
        );
    }

    #[test]
    fn dimension_mismatch_is_usage_error() {
        let ord = JOrder::new(2, &[1]).unwrap();
        assert!(matches!(
            ord.cmp_points(&[0.0], &[1.0, 0.0]),
            Err(Error::DimensionMismatch { .. })
        ));
        assert!(JOrder::new(2, &[3]).is_err());
        assert!(JOrder::new(0, &[]).is_err());
    }

    #[test]
    fn box_order_examples() {
        let ord = JOrder::new(1, &[1]).unwrap();
        let b1 = bx(&[0.0], &[1.0 / 3.0]);
        let b2 = bx(&[2.0 / 3.0], &[1.0]);
        assert_eq!(ord.cmp_boxes(&b1, &b2).unwrap(), SetOrder::Less);
        assert_eq!(ord.cmp_boxes(&b2, &b1).unwrap(), SetOrder::Greater);
        let b3 = bx(&[0.4], &[1.0]);
        assert_eq!(
            ord.cmp_boxes(&bx(&[0.0], &[0.5]), &b3).unwrap(),
            SetOrder::Inconclusive
        );

        let ord2 = JOrder::new(2, &[1]).unwrap();
        let c1 = bx(&[0.0, 0.0], &[1.0 / 3.0, 1.0 / 3.0]);
        let c2 = bx(&[2.0 / 3.0, -2.0 / 3.0], &[1.0, -1.0 / 3.0]);
        assert_eq!(ord2.cmp_boxes(&c1, &c2).unwrap(), SetOrder::Less);
        // corner enumeration agrees
        for p in c1.corners().iter() {
            for q in c2.corners().iter() {
                assert_eq!(ord2.cmp_points(p, q).unwrap(), PointOrder::Less);
            }
        }
    }

    #[test]
    fn disjoint_projection_examples() {
        let b1 = bx(&[0.0], &[1.0 / 3.0]);
        let b2 = bx(&[2.0 / 3.0], &[1.0]);
        assert!(projections_disjoint(&b1, &b2).unwrap());
        let c1 = bx(&[0.0, 0.0], &[1.0, 1.0]);
        let c2 = bx(&[2.0, 0.0], &[3.0, 1.0]);
        assert!(!projections_disjoint(&c1, &c2).unwrap());
        assert!(!projections_disjoint(&c1, &c1).unwrap());
    }

    #[test]
    fn box_geometry() {
        let b = bx(&[0.0, -1.0], &[1.0, 0.0]);
        assert_eq!(b.diameter(), 2.0);
        assert_eq!(b.corners().len(), 4);
        assert!(Hyperbox::new(vec![1.0], vec![0.0]).is_err());
    }
}
