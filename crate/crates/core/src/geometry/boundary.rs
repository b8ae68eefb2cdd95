use std::fmt;

use super::curve::{segments_intersect, MarkerCurve};
use super::frame::CurveFrame;
use super::point::{wrap_vec, Vec2};
use super::GeometryError;
use crate::scalar::Scalar;

/// Boundary of a region `E ⊂ T²` as a list of disjoint closed curves.
///
/// Every component is stored in standard orientation (region on the left),
/// so the region is fully determined by the curves; holes are simply
/// components traversed clockwise. The windings of all components must add
/// up to zero for the curves to bound anything.
#[derive(Clone, Debug, PartialEq)]
pub struct BoundarySet<T = f64> {
    components: Vec<MarkerCurve<T>>,
}

/// Location of a pair of crossing segments.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Crossing {
    pub component_a: usize,
    pub segment_a: usize,
    pub component_b: usize,
    pub segment_b: usize,
}

impl fmt::Display for Crossing {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "segment {} of component {} meets segment {} of component {}",
            self.segment_a, self.component_a, self.segment_b, self.component_b
        )
    }
}

impl<T: Scalar> BoundarySet<T> {
    /// Builds a boundary, checking winding balance and that the enclosed
    /// volume lies strictly between 0 and 1. Crossing checks are separate
    /// (see [`BoundarySet::check_embedded`]) because they are quadratic in
    /// the worst case.
    pub fn new(components: Vec<MarkerCurve<T>>) -> Result<Self, GeometryError> {
        if components.is_empty() {
            return Err(GeometryError::InvalidRegion(
                "no boundary components".into(),
            ));
        }
        let total = components.iter().fold([0i32; 2], |acc, c| {
            let w = c.winding();
            [acc[0] + w[0], acc[1] + w[1]]
        });
        if total != [0, 0] {
            return Err(GeometryError::InvalidRegion(format!(
                "component windings sum to {total:?}, expected [0, 0]"
            )));
        }
        let set = Self { components };
        let vol = set.enclosed_volume();
        let tol = T::lit(1e-12);
        if !(vol > tol && vol < T::one() - tol) {
            return Err(GeometryError::InvalidRegion(format!(
                "enclosed volume {vol} outside (0, 1)"
            )));
        }
        Ok(set)
    }

    /// Builds and additionally rejects crossing curves.
    pub fn new_embedded(components: Vec<MarkerCurve<T>>) -> Result<Self, GeometryError> {
        let set = Self::new(components)?;
        set.check_embedded()?;
        Ok(set)
    }

    pub fn components(&self) -> &[MarkerCurve<T>] {
        &self.components
    }

    pub fn into_components(self) -> Vec<MarkerCurve<T>> {
        self.components
    }

    pub fn len(&self) -> usize {
        self.components.len()
    }

    pub fn is_empty(&self) -> bool {
        self.components.is_empty()
    }

    /// Total number of markers over all components.
    pub fn total_nodes(&self) -> usize {
        self.components.iter().map(MarkerCurve::len).sum()
    }

    /// Start index of each component in the concatenated node list.
    pub fn offsets(&self) -> Vec<usize> {
        let mut acc = 0;
        self.components
            .iter()
            .map(|c| {
                let o = acc;
                acc += c.len();
                o
            })
            .collect()
    }

    pub fn frames(&self) -> Result<Vec<CurveFrame<T>>, GeometryError> {
        self.components.iter().map(CurveFrame::build).collect()
    }

    /// Total boundary length.
    pub fn length(&self) -> Result<T, GeometryError> {
        Ok(self.frames()?.iter().map(CurveFrame::length).sum())
    }

    pub fn translated(&self, d: Vec2<T>) -> Self {
        Self {
            components: self.components.iter().map(|c| c.translated(d)).collect(),
        }
    }

    /// Replaces the components without re-validating the volume.
    pub fn with_components_unchecked(components: Vec<MarkerCurve<T>>) -> Self {
        Self { components }
    }

    /// Moves every node by `heights[c][i]` along its outward normal.
    pub fn offset_along_normals(&self, heights: &[Vec<T>]) -> Result<Self, GeometryError> {
        let frames = self.frames()?;
        let comps = self
            .components
            .iter()
            .zip(&frames)
            .zip(heights)
            .map(|((c, f), h)| {
                let disp: Vec<_> = f.normal.iter().zip(h).map(|(&n, &t)| n * t).collect();
                c.displaced(&disp)
            })
            .collect::<Result<Vec<_>, _>>()?;
        Self::new(comps)
    }

    /// Area of the enclosed region.
    ///
    /// Each component is written as `x(u) = p(u) + w u` with `p` periodic on
    /// `[0, 1)`. The contribution `-∮ p₂ dp₁ - w₁ p̄₂ + w₂ p̄₁ - w₁w₂/2`
    /// changes only by integers under integer shifts of the lift, and the
    /// sum over components is translation invariant because the windings
    /// cancel; the fractional part is the area. Derivatives use the same
    /// periodic stencil as the frame, so smooth curves get spectral-like
    /// accuracy rather than the polygon's `O(h²)`.
    pub fn enclosed_volume(&self) -> T {
        let total: T = self.components.iter().map(component_integral).sum();
        let f = total - total.floor();
        if f >= T::one() {
            T::zero()
        } else {
            f
        }
    }

    /// Checks that no two segments (same or different component) cross,
    /// using a bucket grid over the torus.
    pub fn check_embedded(&self) -> Result<(), GeometryError> {
        match self.find_crossing() {
            Some(c) => Err(GeometryError::SelfIntersection(c)),
            None => Ok(()),
        }
    }

    pub fn find_crossing(&self) -> Option<Crossing> {
        let total = self.total_nodes();
        let mut longest = T::zero();
        for c in &self.components {
            for i in 0..c.len() {
                longest = longest.max(c.segment(i).norm());
            }
        }
        let by_count = ((total as f64).sqrt().ceil() as usize).clamp(1, 256);
        let by_size = (1.0 / longest.to_f64_lossy().max(1e-9)).floor().max(1.0) as usize;
        let g = by_count.min(by_size).max(1);
        let gf = T::from_usize_lossy(g);
        let mut cells: Vec<Vec<(u32, u32)>> = vec![Vec::new(); g * g];
        let cell_of = |v: T| -> isize { (v * gf).floor().to_isize().unwrap_or(0) };
        for (ci, c) in self.components.iter().enumerate() {
            for i in 0..c.len() {
                let a = c.node(i as isize);
                let a = Vec2::new(a.x - a.x.floor(), a.y - a.y.floor());
                let b = a + c.segment(i);
                let (x0, x1) = (cell_of(a.x.min(b.x)), cell_of(a.x.max(b.x)));
                let (y0, y1) = (cell_of(a.y.min(b.y)), cell_of(a.y.max(b.y)));
                for cx in x0..=x1 {
                    for cy in y0..=y1 {
                        let ix = cx.rem_euclid(g as isize) as usize;
                        let iy = cy.rem_euclid(g as isize) as usize;
                        cells[iy * g + ix].push((ci as u32, i as u32));
                    }
                }
            }
        }
        for cell in &cells {
            for (k, &(ca, sa)) in cell.iter().enumerate() {
                for &(cb, sb) in &cell[k + 1..] {
                    if let Some(x) =
                        self.segments_cross(ca as usize, sa as usize, cb as usize, sb as usize)
                    {
                        return Some(x);
                    }
                }
            }
        }
        None
    }

    fn segments_cross(&self, ca: usize, sa: usize, cb: usize, sb: usize) -> Option<Crossing> {
        let a = &self.components[ca];
        let b = &self.components[cb];
        if ca == cb {
            let n = a.len();
            if sa == sb || (sa + 1) % n == sb || (sb + 1) % n == sa {
                return None;
            }
        }
        let p0 = a.node(sa as isize);
        let p1 = p0 + a.segment(sa);
        let q0raw = b.node(sb as isize);
        let q0 = p0 + wrap_vec(q0raw - p0);
        let q1 = q0 + b.segment(sb);
        if segments_intersect(p0, p1, q0, q1) {
            Some(Crossing {
                component_a: ca,
                segment_a: sa,
                component_b: cb,
                segment_b: sb,
            })
        } else {
            None
        }
    }
}

fn component_integral<T: Scalar>(c: &MarkerCurve<T>) -> T {
    let n = c.len();
    let nf = T::from_usize_lossy(n);
    let w = c.winding_vec();
    let (d1, _) = c.param_derivatives();
    let mut line = T::zero();
    let mut mean = Vec2::zero();
    for (i, (&q, d)) in c.lift().iter().zip(&d1).enumerate() {
        let u = T::from_usize_lossy(i) / nf;
        let p = q - w * u;
        let dp1 = d.x - w.x / nf;
        line = line + p.y * dp1;
        mean += p;
    }
    mean = mean / nf;
    -line - w.x * mean.y + w.y * mean.x - w.x * w.y * T::lit(0.5)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use std::f64::consts::PI;

    fn circle(r: f64, c: (f64, f64), n: usize) -> MarkerCurve {
        let nodes = (0..n)
            .map(|i| {
                let t = 2.0 * PI * i as f64 / n as f64;
                Vec2::new(c.0 + r * t.cos(), c.1 + r * t.sin())
            })
            .collect();
        MarkerCurve::from_lift(nodes, [0, 0]).unwrap()
    }

    fn line(y: f64, n: usize, rightward: bool) -> MarkerCurve {
        let nodes = (0..n)
            .map(|i| {
                let s = i as f64 / n as f64;
                Vec2::new(if rightward { s } else { 1.0 - s }, y)
            })
            .collect();
        MarkerCurve::from_lift(nodes, if rightward { [1, 0] } else { [-1, 0] }).unwrap()
    }

    fn stripe(n: usize) -> BoundarySet {
        BoundarySet::new(vec![line(0.75, n, false), line(0.25, n, true)]).unwrap()
    }

    #[test]
    fn disk_area() {
        let b = BoundarySet::new(vec![circle(0.2, (0.5, 0.5), 256)]).unwrap();
        assert!((b.enclosed_volume() - PI * 0.04).abs() < 1e-8);
    }

    #[test]
    fn stripe_area() {
        assert!((stripe(64).enclosed_volume() - 0.5).abs() < 1e-12);
    }

    #[test]
    fn two_disks_add() {
        let b = BoundarySet::new(vec![
            circle(0.2, (0.3, 0.3), 256),
            circle(0.1, (0.75, 0.75), 256),
        ])
        .unwrap();
        assert!((b.enclosed_volume() - PI * 0.05).abs() < 1e-8);
    }

    #[test]
    fn hole_gives_complement() {
        let b = BoundarySet::new(vec![circle(0.2, (0.5, 0.5), 256).reversed()]).unwrap();
        assert!((b.enclosed_volume() - (1.0 - PI * 0.04)).abs() < 1e-8);
    }

    #[test]
    fn disk_across_the_seam() {
        let b = BoundarySet::new(vec![circle(0.2, (0.02, 0.97), 256)]).unwrap();
        assert!((b.enclosed_volume() - PI * 0.04).abs() < 1e-8);
    }

    #[test]
    fn unbalanced_winding_rejected() {
        let err = BoundarySet::new(vec![line(0.25, 32, true)]);
        assert!(matches!(err, Err(GeometryError::InvalidRegion(_))));
        assert!(matches!(
            BoundarySet::<f64>::new(vec![]),
            Err(GeometryError::InvalidRegion(_))
        ));
    }

    #[test]
    fn crossing_detection() {
        let b = BoundarySet::new(vec![
            circle(0.2, (0.4, 0.5), 128),
            circle(0.2, (0.6, 0.5), 128),
        ]);
        // The union still has a valid fractional area; crossings are caught separately.
        let b = b.unwrap();
        assert!(b.find_crossing().is_some());
        assert!(stripe(64).find_crossing().is_none());
        let ok = BoundarySet::new(vec![
            circle(0.2, (0.3, 0.3), 128),
            circle(0.1, (0.75, 0.75), 128),
        ])
        .unwrap();
        assert!(ok.check_embedded().is_ok());
        // figure eight
        let nodes = (0..64)
            .map(|i| {
                let t = 2.0 * PI * i as f64 / 64.0;
                Vec2::new(0.5 + 0.2 * t.sin(), 0.5 + 0.1 * (2.0 * t).sin())
            })
            .collect();
        let eight = MarkerCurve::from_lift(nodes, [0, 0]).unwrap();
        let set = BoundarySet::with_components_unchecked(vec![eight]);
        assert!(set.find_crossing().is_some());
    }

    #[test]
    fn seam_crossing_circle_is_embedded() {
        let b = BoundarySet::new(vec![circle(0.2, (0.01, 0.99), 128)]).unwrap();
        assert!(b.check_embedded().is_ok());
    }

    proptest! {
        #[test]
        fn volume_translation_invariant(dx in -3.0f64..3.0, dy in -3.0f64..3.0) {
            let b = BoundarySet::new(vec![
                circle(0.15, (0.3, 0.3), 128),
                circle(0.1, (0.7, 0.7), 96),
            ]).unwrap();
            let v0 = b.enclosed_volume();
            prop_assert!((b.translated(Vec2::new(dx, dy)).enclosed_volume() - v0).abs() <= 1e-12);
            let s = stripe(32);
            prop_assert!((s.translated(Vec2::new(dx, dy)).enclosed_volume() - 0.5).abs() <= 1e-12);
        }
    }
}
