//! Exact area fractions of a region on a periodic grid.
//!
//! The boundary is refined along its cubic spline and treated as a
//! polygon. For each row of cells the indicator along `x1` is the value on
//! the seam `x1 = 0` plus the signed crossings of edges to the left; both
//! parts are accumulated per cell from the clipped edge pieces (the
//! signed-area accumulation used by scanline font rasterizers) and turned
//! into coverages by prefix sums. The seam value is fixed up to a global
//! integer constant, which is recovered from the known enclosed area.

use super::grid::GridField;
use super::GreensError;
use crate::geometry::{BoundarySet, CurveSpline, Vec2};

/// Area fraction of `E` in every cell of an `M × M` grid.
pub fn rasterize(b: &BoundarySet, m: usize) -> Result<GridField, GreensError> {
    let mut field = GridField::zeros(m)?;
    let h = 1.0 / m as f64;
    let mf = m as f64;
    let mut acc = vec![0.0; m * (m + 1)];
    let mut seam = vec![0.0; m + 1];

    let mut add_piece = |p0: Vec2, p1: Vec2| {
        let dy = p1.y - p0.y;
        let mid = (p0 + p1) * 0.5;
        let cx = (mid.x * mf).floor();
        let cy = (mid.y * mf).floor();
        let ix = (cx as i64).rem_euclid(m as i64) as usize;
        let iy = (cy as i64).rem_euclid(m as i64) as usize;
        if dy != 0.0 {
            let xl = (mid.x - cx * h).clamp(0.0, h);
            let row = iy * (m + 1);
            acc[row + ix] -= dy * (h - xl) / (h * h);
            acc[row + ix + 1] -= dy * xl / (h * h);
        }
    };
    let mut add_seam = |y: f64, dx: f64| {
        let cy = (y * mf).floor();
        let iy = (cy as i64).rem_euclid(m as i64) as usize;
        let yl = (y - cy * h).clamp(0.0, h);
        let s = dx.signum();
        seam[iy] += s * (h - yl) / h;
        seam[iy + 1] += s * yl / h;
    };

    // coordinates within 1e-9 cells of a grid line are moved onto it, so
    // rounding noise cannot decide on which side of a line a node lies
    let snap = |p: Vec2| {
        let s = |v: f64| {
            let r = (v * mf).round();
            if (v * mf - r).abs() < 1e-9 {
                r / mf
            } else {
                v
            }
        };
        Vec2::new(s(p.x), s(p.y))
    };
    let mut cuts: Vec<f64> = Vec::new();
    for c in b.components() {
        let spline = CurveSpline::new(c);
        for i in 0..c.len() {
            let len = c.segment(i).norm();
            let q = ((len / (0.25 * h).min(1e-3)).ceil() as usize).clamp(1, 256);
            for s in 0..q {
                let u0 = i as f64 + s as f64 / q as f64;
                let u1 = i as f64 + (s + 1) as f64 / q as f64;
                let a = snap(spline.position(u0));
                let bb = snap(spline.position(u1));
                let d = bb - a;
                // split at every grid line crossed
                cuts.clear();
                cuts.push(0.0);
                cuts.push(1.0);
                for (lo_v, hi_v, start, delta) in [
                    (a.x.min(bb.x), a.x.max(bb.x), a.x, d.x),
                    (a.y.min(bb.y), a.y.max(bb.y), a.y, d.y),
                ] {
                    if delta == 0.0 {
                        continue;
                    }
                    let mut k = (lo_v * mf).ceil();
                    while k * h <= hi_v {
                        let t = (k * h - start) / delta;
                        if t > 0.0 && t < 1.0 {
                            cuts.push(t);
                        }
                        k += 1.0;
                    }
                }
                cuts.sort_by(f64::total_cmp);
                for w in cuts.windows(2) {
                    if w[1] > w[0] {
                        add_piece(a + d * w[0], a + d * w[1]);
                    }
                }
                // seam lines passed, counted half-open by the cell index so
                // that consecutive pieces telescope exactly
                let (fa, fb) = ((a.x * mf).floor() as i64, (bb.x * mf).floor() as i64);
                for k in fa.min(fb) + 1..=fa.max(fb) {
                    if k.rem_euclid(m as i64) == 0 {
                        let t = ((k as f64 * h - a.x) / d.x).clamp(0.0, 1.0);
                        add_seam(a.y + d.y * t, d.x);
                    }
                }
            }
        }
    }

    let data = field.data_mut();
    let mut base = 0.0;
    for iy in 0..m {
        base += seam[iy];
        let row = &acc[iy * (m + 1)..iy * (m + 1) + m];
        let mut run = base;
        for ix in 0..m {
            run += row[ix];
            data[iy * m + ix] = run;
        }
    }
    let raw_area = field.mean();
    let offset = (b.enclosed_volume() - raw_area).round();
    let data = field.data_mut();
    for v in data.iter_mut() {
        *v = (*v + offset).clamp(0.0, 1.0);
    }
    Ok(field)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::MarkerCurve;
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

    fn stripe(n: usize, lo: f64, hi: f64) -> BoundarySet {
        let top = (0..n)
            .map(|i| Vec2::new(1.0 - i as f64 / n as f64, hi))
            .collect();
        let bot = (0..n).map(|i| Vec2::new(i as f64 / n as f64, lo)).collect();
        BoundarySet::new(vec![
            MarkerCurve::from_lift(top, [-1, 0]).unwrap(),
            MarkerCurve::from_lift(bot, [1, 0]).unwrap(),
        ])
        .unwrap()
    }

    #[test]
    fn disk_area_and_range() {
        for &c in &[(0.5, 0.5), (0.03, 0.98), (0.0, 0.0)] {
            let b = BoundarySet::new(vec![circle(0.2, c, 256)]).unwrap();
            let g = rasterize(&b, 128).unwrap();
            assert!((g.mean() - PI * 0.04).abs() < 1e-6, "{c:?}: {}", g.mean());
            assert!(g.data().iter().all(|&v| (0.0..=1.0).contains(&v)));
            // a cell at the centre is full, a far cell is empty
            let ic = ((c.0 * 128.0) as isize, (c.1 * 128.0) as isize);
            assert!((g.at(ic.0, ic.1) - 1.0).abs() < 1e-12);
            assert!(g.at(ic.0 + 64, ic.1 + 64).abs() < 1e-12);
        }
    }

    #[test]
    fn stripe_rows_exact() {
        let g = rasterize(&stripe(64, 0.25, 0.75), 64).unwrap();
        for i2 in 0..64 {
            let expect = if (16..48).contains(&i2) { 1.0 } else { 0.0 };
            for i1 in 0..64 {
                assert!((g.at(i1, i2 as isize) - expect).abs() < 1e-12);
            }
        }
        let g = rasterize(&stripe(64, 0.3, 0.71), 64).unwrap();
        assert!((g.mean() - 0.41).abs() < 1e-12);
        let row = (0.3 * 64.0f64).floor() as isize;
        assert!((g.at(3, row) - (1.0 - (0.3 * 64.0 - row as f64))).abs() < 1e-9);
    }

    #[test]
    fn hole_is_complement() {
        let disk = BoundarySet::new(vec![circle(0.2, (0.4, 0.6), 200)]).unwrap();
        let hole = BoundarySet::new(vec![circle(0.2, (0.4, 0.6), 200).reversed()]).unwrap();
        let a = rasterize(&disk, 64).unwrap();
        let b = rasterize(&hole, 64).unwrap();
        for (x, y) in a.data().iter().zip(b.data()) {
            assert!((x + y - 1.0).abs() < 1e-10);
        }
    }

    #[test]
    fn vertical_stripe_on_the_seam() {
        let left = (0..32)
            .map(|i| Vec2::new(0.0, 1.0 - i as f64 / 32.0))
            .collect();
        let right = (0..32).map(|i| Vec2::new(0.5, i as f64 / 32.0)).collect();
        let b = BoundarySet::new(vec![
            MarkerCurve::from_lift(left, [0, -1]).unwrap(),
            MarkerCurve::from_lift(right, [0, 1]).unwrap(),
        ])
        .unwrap();
        assert!((b.enclosed_volume() - 0.5).abs() < 1e-12);
        let g = rasterize(&b, 32).unwrap();
        for i2 in 0..32 {
            for i1 in 0..32 {
                let expect = if i1 < 16 { 1.0 } else { 0.0 };
                assert!(
                    (g.at(i1, i2) - expect).abs() < 1e-12,
                    "{i1} {i2} {}",
                    g.at(i1, i2)
                );
            }
        }
    }

    #[test]
    fn seam_nodes_with_rounding_noise() {
        for eps in [-1e-25, 1e-25, -1e-17, 1e-17] {
            let bot: Vec<Vec2> = (0..64)
                .map(|i| Vec2::new(i as f64 / 64.0 + if i == 0 { eps } else { 1e-16 }, 0.25))
                .collect();
            let top: Vec<Vec2> = (0..64)
                .map(|i| Vec2::new(1.0 - i as f64 / 64.0, 0.75))
                .collect();
            let b = BoundarySet::new(vec![
                MarkerCurve::from_lift(top, [-1, 0]).unwrap(),
                MarkerCurve::from_lift(bot, [1, 0]).unwrap(),
            ])
            .unwrap();
            let g = rasterize(&b, 256).unwrap();
            assert!((g.mean() - 0.5).abs() < 1e-12, "{eps}: {}", g.mean());
        }
    }

    #[test]
    fn circle_touching_the_seam() {
        let b = BoundarySet::new(vec![circle(0.25, (0.25, 0.5), 128)]).unwrap();
        let g = rasterize(&b, 64).unwrap();
        assert!((g.mean() - b.enclosed_volume()).abs() < 1e-6);
        assert!(g.data().iter().all(|&v| (0.0..=1.0).contains(&v)));
    }
}
