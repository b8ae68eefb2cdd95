//! Nyström discretization of the single layer `(Sσ)(x) = ∫ G(x, y) σ(y) dμ(y)`.
//!
//! On each component the node index is mapped to `τ ∈ [0, 2π)` and the
//! kernel is split as `G = -(1/4π) ln(4 sin²((t-τ)/2)) + K(t, τ)` with `K`
//! smooth. The logarithm is integrated exactly against the trigonometric
//! interpolant of the density (Kress product weights) and `K` by the
//! trapezoid rule, which is spectrally accurate for smooth closed curves.
//! Pairs on different components use the plain trapezoid rule.

use std::f64::consts::PI;

use nalgebra::DMatrix;

use super::table::GreensTable;
use crate::geometry::{BoundarySet, CurveFrame};

/// Product weights `∫₀^{2π} ln(4 sin²((t_i - τ)/2)) f(τ) dτ ≈ Σ_j w_{i-j} f(τ_j)`
/// for `n` equispaced nodes, indexed by `(i - j) mod n`.
pub fn log_weights(n: usize) -> Vec<f64> {
    let p = n / 2;
    let even = n.is_multiple_of(2);
    let kmax = if even { p - 1 } else { p };
    let nf = n as f64;
    (0..n)
        .map(|m| {
            let mut s = 0.0;
            for k in 1..=kmax {
                s += (2.0 * PI * (k * m % n) as f64 / nf).cos() / k as f64;
            }
            if even {
                s += if m % 2 == 0 { 1.0 } else { -1.0 } / nf;
            }
            -4.0 * PI / nf * s
        })
        .collect()
}

/// Single-layer matrix over all nodes of `b`, in component order:
/// `(Sσ)_i = Σ_j S_ij σ_j ≈ ∫ G(x_i, y) σ(y) dμ(y)`.
pub fn single_layer_matrix(
    b: &BoundarySet,
    frames: &[CurveFrame],
    table: &GreensTable,
) -> DMatrix<f64> {
    let offsets = b.offsets();
    let total = b.total_nodes();
    let mut s = DMatrix::zeros(total, total);
    let r0 = table.regular_at_zero();
    let comps = b.components();
    for (ca, curve_a) in comps.iter().enumerate() {
        let n = curve_a.len();
        let nf = n as f64;
        let weights = log_weights(n);
        // ln(4 sin²(π m / n)) for the smooth remainder
        let log_sin: Vec<f64> = (0..n)
            .map(|m| {
                let sn = (PI * m as f64 / nf).sin();
                (4.0 * sn * sn).ln()
            })
            .collect();
        let fa = &frames[ca];
        let xa = curve_a.lift();
        for i in 0..n {
            let row = offsets[ca] + i;
            for j in 0..n {
                let m = (i + n - j) % n;
                let dsj = fa.ds[j];
                let k = if m == 0 {
                    r0 - (dsj * nf / (2.0 * PI)).ln() / (2.0 * PI)
                } else {
                    table.value(xa[i] - xa[j]) + log_sin[m] / (4.0 * PI)
                };
                let singular = -weights[m] * nf / (2.0 * PI) / (4.0 * PI);
                s[(row, offsets[ca] + j)] = dsj * (singular + k);
            }
            for (cb, curve_b) in comps.iter().enumerate() {
                if cb == ca {
                    continue;
                }
                let fb = &frames[cb];
                for (j, &y) in curve_b.lift().iter().enumerate() {
                    s[(row, offsets[cb] + j)] = fb.ds[j] * table.value(xa[i] - y);
                }
            }
        }
    }
    s
}

/// Normal derivative of the potential on the boundary,
/// `∂_ν v_E(x_i) = ⟨-2 ∫ G(x_i, y) ν(y) dμ(y), ν(x_i)⟩`.
pub fn potential_normal_derivative(frames: &[CurveFrame], s: &DMatrix<f64>) -> Vec<f64> {
    let normals: Vec<_> = frames
        .iter()
        .flat_map(|f| f.normal.iter().copied())
        .collect();
    (0..normals.len())
        .map(|i| {
            let ni = normals[i];
            -2.0 * normals
                .iter()
                .enumerate()
                .map(|(j, nj)| s[(i, j)] * nj.dot(ni))
                .sum::<f64>()
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{MarkerCurve, Vec2};
    use crate::greens::GreensEvaluator;

    fn circle(r: f64, c: Vec2, n: usize) -> MarkerCurve {
        let nodes = (0..n)
            .map(|i| {
                let t = 2.0 * PI * i as f64 / n as f64;
                c + Vec2::new(r * t.cos(), r * t.sin())
            })
            .collect();
        MarkerCurve::from_lift(nodes, [0, 0]).unwrap()
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
    fn log_weights_integrate_modes() {
        // ∫ ln(4 sin²((t-τ)/2)) cos(kτ) dτ = -2π cos(kt)/k
        for n in [32usize, 33] {
            let w = log_weights(n);
            for k in 0..n / 2 {
                let mut acc = 0.0;
                for j in 0..n {
                    let tj = 2.0 * PI * j as f64 / n as f64;
                    acc += w[(5 + n - j) % n] * (k as f64 * tj).cos();
                }
                let ti = 2.0 * PI * 5.0 / n as f64;
                let expect = if k == 0 {
                    0.0
                } else {
                    -2.0 * PI * (k as f64 * ti).cos() / k as f64
                };
                assert!(
                    (acc - expect).abs() < 1e-12,
                    "n={n} k={k}: {acc} vs {expect}"
                );
            }
        }
    }

    #[test]
    fn circle_modes_against_split_quadrature() {
        // oracle: closed-form log part r/(2k) cos kθ plus a fine trapezoid
        // sum of the smooth remainder with the direct evaluator
        let ev = GreensEvaluator::default();
        let r = 0.2;
        let c = Vec2::new(0.41, 0.57);
        let n = 64;
        let b = BoundarySet::new(vec![circle(r, c, n)]).unwrap();
        let frames = b.frames().unwrap();
        let s = single_layer_matrix(&b, &frames, GreensTable::shared());
        let fine = 1024;
        for k in [1usize, 2, 5] {
            for i in (0..n).step_by(7) {
                let th = 2.0 * PI * i as f64 / n as f64;
                let xi = c + Vec2::new(r * th.cos(), r * th.sin());
                let mut smooth = 0.0;
                for q in 0..fine {
                    let t = 2.0 * PI * q as f64 / fine as f64;
                    let y = c + Vec2::new(r * t.cos(), r * t.sin());
                    smooth += ev.regular_part(xi - y) * (k as f64 * t).cos();
                }
                smooth *= 2.0 * PI * r / fine as f64;
                let expect = r / (2.0 * k as f64) * (k as f64 * th).cos() + smooth;
                let got: f64 = (0..n)
                    .map(|j| s[(i, j)] * (k as f64 * 2.0 * PI * j as f64 / n as f64).cos())
                    .sum();
                assert!(
                    (got - expect).abs() < 1e-9,
                    "k={k} i={i}: {got} vs {expect}"
                );
            }
        }
    }

    #[test]
    fn stripe_normal_derivative() {
        let b = stripe(64);
        let frames = b.frames().unwrap();
        let s = single_layer_matrix(&b, &frames, GreensTable::shared());
        for v in potential_normal_derivative(&frames, &s) {
            assert!((v + 0.25).abs() < 1e-8, "{v}");
        }
    }

    #[test]
    fn disk_normal_derivative_against_area_quadrature() {
        // ∂_ν v = -r + 2 ∫_E ∇R(x - y)·ν dy with R the smooth part of G
        let ev = GreensEvaluator::default();
        let r = 0.2;
        let c = Vec2::new(0.5, 0.5);
        let n = 128;
        let b = BoundarySet::new(vec![circle(r, c, n)]).unwrap();
        let frames = b.frames().unwrap();
        let s = single_layer_matrix(&b, &frames, GreensTable::shared());
        let dn = potential_normal_derivative(&frames, &s);
        // Gauss-Legendre nodes on [0, 1]
        let gl = gauss_legendre_20();
        for i in [0usize, 17, 64] {
            let th = 2.0 * PI * i as f64 / n as f64;
            let nu = Vec2::new(th.cos(), th.sin());
            let xi = c + nu * r;
            let mut acc = 0.0;
            for &(u, wu) in &gl {
                let rho = r * u;
                for q in 0..128 {
                    let t = 2.0 * PI * q as f64 / 128.0;
                    let d = xi - (c + Vec2::new(rho * t.cos(), rho * t.sin()));
                    let grad_r = ev.gradient_disp(d).unwrap() + d * (1.0 / (2.0 * PI * d.norm2()));
                    acc += grad_r.dot(nu) * wu * r * rho * 2.0 * PI / 128.0;
                }
            }
            let expect = -r + 2.0 * acc;
            assert!(
                (dn[i] - expect).abs() < 1e-8,
                "{}: {} vs {}",
                i,
                dn[i],
                expect
            );
        }
    }

    fn gauss_legendre_20() -> Vec<(f64, f64)> {
        // Golub-Welsch would do; Newton on P_20 is enough here
        let n = 20;
        let mut out = Vec::new();
        for i in 1..=n {
            let mut x = (PI * (i as f64 - 0.25) / (n as f64 + 0.5)).cos();
            let mut dp = 0.0;
            for _ in 0..100 {
                let (mut p0, mut p1) = (1.0, x);
                for k in 2..=n {
                    let p2 = ((2 * k - 1) as f64 * x * p1 - (k - 1) as f64 * p0) / k as f64;
                    p0 = p1;
                    p1 = p2;
                }
                dp = n as f64 * (x * p1 - p0) / (x * x - 1.0);
                let dx = p1 / dp;
                x -= dx;
                if dx.abs() < 1e-15 {
                    break;
                }
            }
            let w = 2.0 / ((1.0 - x * x) * dp * dp);
            out.push(((x + 1.0) / 2.0, w / 2.0));
        }
        out
    }
}
