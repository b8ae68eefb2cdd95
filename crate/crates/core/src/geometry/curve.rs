use serde::{Deserialize, Serialize};

use super::point::{wrap_diff, TorusPoint, Vec2};
use super::GeometryError;
use crate::scalar::Scalar;

/// Minimum admissible number of markers on a closed curve.
pub const MIN_NODES: usize = 8;
/// Consecutive markers closer than this are rejected.
pub const MIN_SEGMENT: f64 = 1e-10;

/// Which side of the traversal the enclosed region lies on.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Orientation {
    /// Region on the left; the outward normal is the clockwise rotation of the tangent.
    Standard,
    /// Region on the right; stored reversed on construction.
    Reversed,
}

/// Closed marker curve on the torus.
///
/// Nodes are kept as a continuous lift to R². Following the curve once
/// shifts the lift by the integer `winding` vector, so `node(i + n) =
/// node(i) + winding`. Curves are always stored in standard orientation.
#[derive(Clone, Debug, PartialEq)]
pub struct MarkerCurve<T = f64> {
    nodes: Vec<Vec2<T>>,
    winding: [i32; 2],
}

impl<T: Scalar> MarkerCurve<T> {
    /// Builds a curve from a continuous lift in standard orientation.
    pub fn from_lift(nodes: Vec<Vec2<T>>, winding: [i32; 2]) -> Result<Self, GeometryError> {
        if nodes.len() < MIN_NODES {
            return Err(GeometryError::TooFewNodes(nodes.len()));
        }
        let curve = Self { nodes, winding };
        let min = T::lit(MIN_SEGMENT);
        for i in 0..curve.len() {
            if curve.segment(i).norm() < min {
                return Err(GeometryError::DegenerateCurve { index: i });
            }
        }
        Ok(curve)
    }

    /// Builds a curve from canonical torus points, unwrapping them into a
    /// continuous lift and checking that the closure matches `winding`.
    pub fn from_points(
        points: &[TorusPoint<T>],
        winding: [i32; 2],
        orientation: Orientation,
    ) -> Result<Self, GeometryError> {
        if points.len() < MIN_NODES {
            return Err(GeometryError::TooFewNodes(points.len()));
        }
        let mut lift = Vec::with_capacity(points.len());
        lift.push(points[0].as_vec());
        for w in points.windows(2) {
            let last = *lift.last().unwrap();
            lift.push(last + wrap_diff(w[1], w[0]));
        }
        let closing = *lift.last().unwrap() + wrap_diff(points[0], points[points.len() - 1]);
        let shift = closing - lift[0];
        let found = [shift.x.round(), shift.y.round()];
        let expected = Vec2::from_winding(winding);
        if (shift - expected).norm() > T::lit(1e-6) {
            return Err(GeometryError::WindingMismatch {
                declared: winding,
                found: [
                    found[0].to_f64_lossy() as i32,
                    found[1].to_f64_lossy() as i32,
                ],
            });
        }
        let curve = Self::from_lift(lift, winding)?;
        Ok(match orientation {
            Orientation::Standard => curve,
            Orientation::Reversed => curve.reversed(),
        })
    }

    /// Same point set traversed the other way.
    pub fn reversed(&self) -> Self {
        let mut nodes = self.nodes.clone();
        nodes.reverse();
        Self {
            nodes,
            winding: [-self.winding[0], -self.winding[1]],
        }
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn winding(&self) -> [i32; 2] {
        self.winding
    }

    pub fn winding_vec(&self) -> Vec2<T> {
        Vec2::from_winding(self.winding)
    }

    pub fn is_contractible(&self) -> bool {
        self.winding == [0, 0]
    }

    /// Lifted nodes `0..n`.
    pub fn lift(&self) -> &[Vec2<T>] {
        &self.nodes
    }

    /// Lifted node for any integer index, continuing periodically.
    #[inline]
    pub fn node(&self, i: isize) -> Vec2<T> {
        let n = self.nodes.len() as isize;
        let q = i.div_euclid(n);
        let r = i.rem_euclid(n) as usize;
        if q == 0 {
            self.nodes[r]
        } else {
            self.nodes[r] + self.winding_vec() * T::lit(q as f64)
        }
    }

    /// Vector from node `i` to node `i + 1` in the lift.
    #[inline]
    pub fn segment(&self, i: usize) -> Vec2<T> {
        self.node(i as isize + 1) - self.nodes[i]
    }

    pub fn points(&self) -> Vec<TorusPoint<T>> {
        self.nodes
            .iter()
            .map(|&v| TorusPoint::from_lift(v))
            .collect()
    }

    /// Rigid translation of the whole curve.
    pub fn translated(&self, d: Vec2<T>) -> Self {
        Self {
            nodes: self.nodes.iter().map(|&v| v + d).collect(),
            winding: self.winding,
        }
    }

    /// Shifts the lift by an integer vector so node 0 lies in `[0,1)²`.
    pub fn recentered(&self) -> Self {
        let p0 = self.nodes[0];
        let shift = Vec2::new(-p0.x.floor(), -p0.y.floor());
        if shift == Vec2::zero() {
            return self.clone();
        }
        self.translated(shift)
    }

    /// New curve with the nodes displaced by `disp`; no validation besides
    /// segment length and count.
    pub fn displaced(&self, disp: &[Vec2<T>]) -> Result<Self, GeometryError> {
        assert_eq!(disp.len(), self.len());
        let nodes = self.nodes.iter().zip(disp).map(|(&p, &d)| p + d).collect();
        Self::from_lift(nodes, self.winding)
    }

    /// Polygon length (sum of chords).
    pub fn chord_length(&self) -> T {
        (0..self.len()).map(|i| self.segment(i).norm()).sum()
    }

    /// Cyclically relabels nodes so that `start` becomes node 0.
    pub fn rotated(&self, start: usize) -> Self {
        let n = self.len() as isize;
        let nodes = (0..n).map(|i| self.node(i + start as isize)).collect();
        Self {
            nodes,
            winding: self.winding,
        }
    }
}

/// Periodic finite-difference stencils (6th order) in the node parameter.
pub(crate) mod stencil {
    pub const D1: [f64; 3] = [3.0 / 4.0, -3.0 / 20.0, 1.0 / 60.0];
    pub const D2_CENTER: f64 = -49.0 / 18.0;
    pub const D2: [f64; 3] = [3.0 / 2.0, -3.0 / 20.0, 1.0 / 90.0];
}

impl<T: Scalar> MarkerCurve<T> {
    /// First and second derivatives of the lift with respect to the node index.
    pub fn param_derivatives(&self) -> (Vec<Vec2<T>>, Vec<Vec2<T>>) {
        let n = self.len();
        let mut d1 = Vec::with_capacity(n);
        let mut d2 = Vec::with_capacity(n);
        let c1: [T; 3] = stencil::D1.map(T::lit);
        let c2: [T; 3] = stencil::D2.map(T::lit);
        let c0 = T::lit(stencil::D2_CENTER);
        for i in 0..n {
            let ii = i as isize;
            let xi = self.nodes[i];
            let mut a = Vec2::zero();
            let mut b = xi * c0;
            for k in 0..3 {
                let off = k as isize + 1;
                let p = self.node(ii + off);
                let m = self.node(ii - off);
                a += (p - m) * c1[k];
                b += (p + m) * c2[k];
            }
            d1.push(a);
            d2.push(b);
        }
        (d1, d2)
    }
}

/// Segment–segment intersection test for closed segments `[a,b]` and `[c,d]`.
pub(crate) fn segments_intersect<T: Scalar>(
    a: Vec2<T>,
    b: Vec2<T>,
    c: Vec2<T>,
    d: Vec2<T>,
) -> bool {
    let r = b - a;
    let s = d - c;
    let denom = r.cross(s);
    let qp = c - a;
    if denom.abs() <= T::tiny() * r.norm() * s.norm() {
        // parallel: only overlapping collinear segments count
        if qp.cross(r).abs() > T::tiny() * r.norm().max(T::one()) {
            return false;
        }
        let rr = r.norm2();
        let t0 = qp.dot(r) / rr;
        let t1 = t0 + s.dot(r) / rr;
        let (lo, hi) = if t0 < t1 { (t0, t1) } else { (t1, t0) };
        return hi >= T::zero() && lo <= T::one();
    }
    let t = qp.cross(s) / denom;
    let u = qp.cross(r) / denom;
    t >= T::zero() && t <= T::one() && u >= T::zero() && u <= T::one()
}
