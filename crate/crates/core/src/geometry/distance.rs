use super::boundary::BoundarySet;
use super::curve::MarkerCurve;
use super::frame::CurveFrame;
use super::point::{wrap_vec, TorusPoint, Vec2};
use super::spline::CurveSpline;
use super::GeometryError;
use crate::scalar::Scalar;

/// Result of a closest-point query.
#[derive(Clone, Copy, Debug)]
pub struct SignedDistance<T = f64> {
    /// Negative inside the region, positive outside.
    pub distance: T,
    pub foot: TorusPoint<T>,
    /// Outward unit normal at the foot.
    pub normal: Vec2<T>,
    pub component: usize,
    /// Spline parameter of the foot (node index units).
    pub param: T,
    /// False when the query point lies outside the tubular neighbourhood,
    /// where the nearest point need not be unique.
    pub unique: bool,
}

/// Closest-point machinery for a fixed boundary.
#[derive(Clone, Debug)]
pub struct DistanceField<T = f64> {
    curves: Vec<MarkerCurve<T>>,
    splines: Vec<CurveSpline<T>>,
    tube: T,
}

impl<T: Scalar> DistanceField<T> {
    pub fn new(b: &BoundarySet<T>) -> Result<Self, GeometryError> {
        let frames = b.frames()?;
        let tube = tube_width(b.components(), &frames);
        Ok(Self {
            curves: b.components().to_vec(),
            splines: b.components().iter().map(CurveSpline::new).collect(),
            tube,
        })
    }

    /// Half-width ε of the tubular neighbourhood in which the projection
    /// onto the boundary is treated as unique.
    pub fn tube_width(&self) -> T {
        self.tube
    }

    pub fn splines(&self) -> &[CurveSpline<T>] {
        &self.splines
    }

    pub fn query(&self, p: TorusPoint<T>) -> SignedDistance<T> {
        let pv = p.as_vec();
        let mut best: Option<(T, SignedDistance<T>)> = None;
        for (ci, (curve, spline)) in self.curves.iter().zip(&self.splines).enumerate() {
            let mut near = 0usize;
            let mut dmin = T::infinity();
            for (i, &x) in curve.lift().iter().enumerate() {
                let d = wrap_vec(pv - x).norm2();
                if d < dmin {
                    dmin = d;
                    near = i;
                }
            }
            let q = curve.lift()[near] + wrap_vec(pv - curve.lift()[near]);
            let u = closest_param(spline, q, T::from_usize_lossy(near));
            let (s, d1, _) = spline.eval(u);
            let diff = q - s;
            let normal = (d1 / d1.norm()).rot_cw();
            let dist = diff.norm();
            let signed = if diff.dot(normal) < T::zero() {
                -dist
            } else {
                dist
            };
            let rec = SignedDistance {
                distance: signed,
                foot: TorusPoint::from_lift(s),
                normal,
                component: ci,
                param: u,
                unique: dist < self.tube,
            };
            if best.as_ref().is_none_or(|(d, _)| dist < *d) {
                best = Some((dist, rec));
            }
        }
        best.expect("boundary has components").1
    }
}

/// Signed distance from `p` to `∂E` with the foot point and its normal.
pub fn signed_distance<T: Scalar>(
    b: &BoundarySet<T>,
    p: TorusPoint<T>,
) -> Result<SignedDistance<T>, GeometryError> {
    Ok(DistanceField::new(b)?.query(p))
}

/// Parameter of the local minimum of `|s(u) - q|` in `[u0 - 1, u0 + 1]`.
fn closest_param<T: Scalar>(spline: &CurveSpline<T>, q: Vec2<T>, u0: T) -> T {
    let g = |u: T| {
        let (s, d1, d2) = spline.eval(u);
        let r = s - q;
        (r.dot(d1), d1.norm2() + r.dot(d2))
    };
    let one = T::one();
    let (mut lo, mut hi) = (u0 - one, u0 + one);
    let (glo, ghi) = (g(lo).0, g(hi).0);
    if !(glo <= T::zero() && ghi >= T::zero()) {
        // no sign change: pick the better end or the node itself
        let dist = |u: T| (spline.position(u) - q).norm2();
        let cands = [lo, u0, hi];
        let mut bestu = u0;
        for &c in &cands {
            if dist(c) < dist(bestu) {
                bestu = c;
            }
        }
        return bestu;
    }
    let mut u = u0;
    for _ in 0..60 {
        let (f, fp) = g(u);
        if f > T::zero() {
            hi = u;
        } else {
            lo = u;
        }
        let mut next = if fp > T::zero() {
            u - f / fp
        } else {
            (lo + hi) * T::lit(0.5)
        };
        if !(next > lo && next < hi) {
            next = (lo + hi) * T::lit(0.5);
        }
        let done = (next - u).abs() <= T::epsilon() * T::lit(32.0) * (one + u.abs());
        u = next;
        if done {
            break;
        }
    }
    u
}

/// Tube half-width: 0.4 times the smallest of the curvature radius, half
/// the distance between different components, and half the width of
/// same-component bottlenecks (or of nearby periodic images).
fn tube_width<T: Scalar>(curves: &[MarkerCurve<T>], frames: &[CurveFrame<T>]) -> T {
    let kmax = frames
        .iter()
        .flat_map(|f| f.kappa.iter())
        .fold(T::zero(), |a, &k| a.max(k.abs()));
    let mut reach = if kmax > T::zero() {
        kmax.recip()
    } else {
        T::infinity()
    };
    let half = T::lit(0.5);
    for a in 0..curves.len() {
        for b in a + 1..curves.len() {
            for &x in curves[a].lift() {
                for &y in curves[b].lift() {
                    reach = reach.min(wrap_vec(x - y).norm() * half);
                }
            }
        }
    }
    for (c, f) in curves.iter().zip(frames) {
        let n = c.len();
        let mut cum = Vec::with_capacity(n + 1);
        cum.push(T::zero());
        for &d in &f.ds {
            let last = *cum.last().unwrap();
            cum.push(last + d);
        }
        let total = cum[n];
        let arc_gap = if kmax > T::zero() {
            T::PI() / kmax
        } else {
            T::infinity()
        };
        let w = c.winding_vec();
        let tol = T::lit(1e-9);
        for i in 0..n {
            for j in i + 1..n {
                let along = cum[j] - cum[i];
                let sep = along.min(total - along);
                let d = c.lift()[j] - c.lift()[i];
                let wd = wrap_vec(d);
                let same_image = (wd - d).norm() < tol || (wd - (d - w)).norm() < tol;
                if sep >= arc_gap * (T::one() - tol) || !same_image {
                    reach = reach.min(wd.norm() * half);
                }
            }
        }
        if !c.is_contractible() {
            // a winding curve is at distance at most 1/|w| from its own image
            reach = reach.min(half / w.norm());
        }
    }
    reach.min(T::lit(0.5)) * T::lit(0.4)
}

/// Heights `ψ` with `y + ψ(y) ν(y)` on the target for every reference node `y`.
///
/// The normal segment of half-length ε through each reference node is
/// intersected with the target polygon; exactly one crossing is required.
/// The crossing is then refined onto the target's cubic spline.
pub fn normal_graph<T: Scalar>(
    reference: &BoundarySet<T>,
    target: &BoundarySet<T>,
) -> Result<Vec<Vec<T>>, GeometryError> {
    let field = DistanceField::new(reference)?;
    let eps = field.tube_width();
    let frames = reference.frames()?;
    let tsplines: Vec<_> = target.components().iter().map(CurveSpline::new).collect();
    let mut out = Vec::with_capacity(reference.len());
    for (ci, (rc, rf)) in reference.components().iter().zip(&frames).enumerate() {
        let mut heights = Vec::with_capacity(rc.len());
        for (i, (&y, &nu)) in rc.lift().iter().zip(&rf.normal).enumerate() {
            let mut hits: Vec<(T, usize, usize, T, Vec2<T>)> = Vec::new();
            for (tj, tc) in target.components().iter().enumerate() {
                for k in 0..tc.len() {
                    let raw = tc.lift()[k];
                    let q0 = y + wrap_vec(raw - y);
                    let seg = tc.segment(k);
                    let reach = eps + seg.norm();
                    if (q0 - y).norm() > reach {
                        continue;
                    }
                    // solve y + t ν = q0 + s seg
                    let den = nu.cross(seg);
                    if den.abs() <= T::tiny() * seg.norm() {
                        continue;
                    }
                    let r = q0 - y;
                    let t = r.cross(seg) / den;
                    let s = r.cross(nu) / den;
                    let slack = T::lit(1e-9);
                    if s >= -slack && s <= T::one() + slack && t.abs() <= eps {
                        let duplicate = hits
                            .iter()
                            .any(|h| (h.0 - t).abs() < T::lit(1e-9) * (T::one() + seg.norm()));
                        if !duplicate {
                            hits.push((t, tj, k, s, q0 - raw));
                        }
                    }
                }
            }
            if hits.len() != 1 {
                return Err(GeometryError::NotAGraph {
                    component: ci,
                    node: i,
                });
            }
            let (t0, tj, k, s, shift) = hits[0];
            let sp = &tsplines[tj];
            let h = |u: T| {
                let (p, d1, _) = sp.eval(u);
                ((p + shift - y).cross(nu), d1.cross(nu), p + shift)
            };
            let mut u = T::from_usize_lossy(k) + s;
            let mut t = t0;
            for _ in 0..20 {
                let (f, fp, p) = h(u);
                t = (p - y).dot(nu);
                if fp.abs() <= T::tiny() {
                    break;
                }
                let du = f / fp;
                u = u - du;
                if du.abs() <= T::epsilon() * T::lit(8.0) {
                    let (_, _, p) = h(u);
                    t = (p - y).dot(nu);
                    break;
                }
            }
            if (t - t0).abs() > eps {
                t = t0;
            }
            heights.push(t);
        }
        out.push(heights);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use std::f64::consts::PI;

    fn circle_set(r: f64, c: (f64, f64), n: usize) -> BoundarySet {
        let nodes = (0..n)
            .map(|i| {
                let t = 2.0 * PI * i as f64 / n as f64;
                Vec2::new(c.0 + r * t.cos(), c.1 + r * t.sin())
            })
            .collect();
        BoundarySet::new(vec![MarkerCurve::from_lift(nodes, [0, 0]).unwrap()]).unwrap()
    }

    fn stripe(n: usize) -> BoundarySet {
        let top = (0..n)
            .map(|i| Vec2::new(1.0 - i as f64 / n as f64, 0.75))
            .collect();
        let bot = (0..n)
            .map(|i| Vec2::new(i as f64 / n as f64, 0.25))
            .collect();
        BoundarySet::new(vec![
            MarkerCurve::from_lift(top, [-1, 0]).unwrap(),
            MarkerCurve::from_lift(bot, [1, 0]).unwrap(),
        ])
        .unwrap()
    }

    #[test]
    fn radial_query() {
        let b = circle_set(0.2, (0.5, 0.5), 256);
        let r = signed_distance(&b, TorusPoint::new(0.5, 0.75)).unwrap();
        assert!((r.distance - 0.05).abs() < 1e-9);
        assert!((r.foot.as_vec() - Vec2::new(0.5, 0.7)).norm() < 1e-9);
        assert!(r.unique);
        let inside = signed_distance(&b, TorusPoint::new(0.5, 0.6)).unwrap();
        assert!((inside.distance + 0.1).abs() < 1e-9);
    }

    #[test]
    fn boundary_point_is_its_own_foot() {
        let b = circle_set(0.2, (0.5, 0.5), 256);
        let p = TorusPoint::from_lift(b.components()[0].node(17));
        let r = signed_distance(&b, p).unwrap();
        assert!(r.distance.abs() < 1e-12);
        assert!((r.foot.as_vec() - p.as_vec()).norm() < 1e-12);
    }

    #[test]
    fn stripe_midline() {
        let r = signed_distance(&stripe(64), TorusPoint::new(0.3, 0.5)).unwrap();
        assert!((r.distance + 0.25).abs() < 1e-12);
        let out = signed_distance(&stripe(64), TorusPoint::new(0.3, 0.9)).unwrap();
        assert!((out.distance - 0.15).abs() < 1e-12);
    }

    #[test]
    fn query_across_the_seam() {
        let b = circle_set(0.2, (0.05, 0.5), 256);
        let r = signed_distance(&b, TorusPoint::new(0.80, 0.5)).unwrap();
        assert!((r.distance - 0.05).abs() < 1e-9);
        assert!((r.foot.as_vec() - Vec2::new(0.85, 0.5)).norm() < 1e-9);
    }

    #[test]
    fn tube_widths() {
        let c = DistanceField::new(&circle_set(0.2, (0.5, 0.5), 128)).unwrap();
        assert!((c.tube_width() - 0.08).abs() < 1e-6);
        let s = DistanceField::new(&stripe(32)).unwrap();
        assert!((s.tube_width() - 0.1).abs() < 1e-12);
    }

    #[test]
    fn graph_of_identity_and_offsets() {
        let e = circle_set(0.2, (0.5, 0.5), 128);
        let h = normal_graph(&e, &e).unwrap();
        assert!(h[0].iter().all(|t| t.abs() < 1e-13));
        let f = circle_set(0.22, (0.5, 0.5), 200);
        let h = normal_graph(&e, &f).unwrap();
        assert!(h[0].iter().all(|t| (t - 0.02).abs() < 1e-6));
    }

    #[test]
    fn graph_reads_back_perturbation() {
        let e = circle_set(0.2, (0.5, 0.5), 128);
        let psi: Vec<f64> = (0..128)
            .map(|i| 0.01 * (3.0 * 2.0 * PI * i as f64 / 128.0).cos())
            .collect();
        let f = e.offset_along_normals(std::slice::from_ref(&psi)).unwrap();
        let h = normal_graph(&e, &f).unwrap();
        for (a, b) in h[0].iter().zip(&psi) {
            assert!((a - b).abs() < 1e-4);
        }
    }

    #[test]
    fn far_target_is_not_a_graph() {
        let e = circle_set(0.2, (0.5, 0.5), 64);
        let f = circle_set(0.1, (0.5, 0.5), 64);
        assert!(matches!(
            normal_graph(&e, &f),
            Err(GeometryError::NotAGraph { .. })
        ));
    }

    proptest! {
        #[test]
        fn foot_satisfies_projection_identity(th in 0.0f64..std::f64::consts::TAU, d in -0.07f64..0.07) {
            let b = circle_set(0.2, (0.5, 0.5), 256);
            let p = TorusPoint::new(0.5 + (0.2 + d) * th.cos(), 0.5 + (0.2 + d) * th.sin());
            let r = signed_distance(&b, p).unwrap();
            let back = r.foot.as_vec() + r.normal * r.distance;
            prop_assert!(wrap_vec(back - p.as_vec()).norm() < 1e-8);
            prop_assert!((r.distance - d).abs() < 1e-7);
        }

        #[test]
        fn graph_round_trip_second_order(a in 0.0f64..0.01, k in 2usize..5) {
            let e = circle_set(0.25, (0.5, 0.5), 128);
            let psi: Vec<f64> = (0..128)
                .map(|i| a * (k as f64 * 2.0 * PI * i as f64 / 128.0).sin())
                .collect();
            let f = e.offset_along_normals(std::slice::from_ref(&psi)).unwrap();
            let h = normal_graph(&e, &f).unwrap();
            let h2 = (2.0 * PI * 0.25 / 128.0f64).powi(2);
            for (x, y) in h[0].iter().zip(&psi) {
                prop_assert!((x - y).abs() <= 10.0 * h2);
            }
        }
    }
}
