//! Reference boundaries: circles, perturbed circles and lamellae.

use std::f64::consts::PI;

use crate::geometry::{BoundarySet, GeometryError, MarkerCurve, Vec2};

/// One cosine mode `amplitude · cos(k θ + phase)` of a normal perturbation.
#[derive(Clone, Copy, Debug, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct Mode {
    pub k: u32,
    pub amplitude: f64,
    pub phase: f64,
}

impl Mode {
    pub fn new(k: u32, amplitude: f64) -> Self {
        Self {
            k,
            amplitude,
            phase: 0.0,
        }
    }

    pub fn eval(&self, theta: f64) -> f64 {
        self.amplitude * (self.k as f64 * theta + self.phase).cos()
    }
}

/// Counter-clockwise circle with `n` nodes at equal angles, node 0 at `θ = 0`.
pub fn circle(r: f64, center: Vec2, n: usize) -> Result<MarkerCurve, GeometryError> {
    perturbed_circle(r, center, n, &[])
}

/// Normal graph `r + Σ a_k cos(kθ + φ_k)` over a circle, sampled at equal angles.
pub fn perturbed_circle(
    r: f64,
    center: Vec2,
    n: usize,
    modes: &[Mode],
) -> Result<MarkerCurve, GeometryError> {
    let nodes = (0..n)
        .map(|i| {
            let t = 2.0 * PI * i as f64 / n as f64;
            let rho = r + modes.iter().map(|m| m.eval(t)).sum::<f64>();
            center + Vec2::new(rho * t.cos(), rho * t.sin())
        })
        .collect();
    MarkerCurve::from_lift(nodes, [0, 0])
}

/// Disk of radius `r`.
pub fn disk(r: f64, center: Vec2, n: usize) -> Result<BoundarySet, GeometryError> {
    BoundarySet::new(vec![circle(r, center, n)?])
}

/// Horizontal stripe `|x2 - center| < width/2` with `n` nodes per line.
pub fn lamella(width: f64, center: f64, n: usize) -> Result<BoundarySet, GeometryError> {
    if !(width > 0.0 && width < 1.0) {
        return Err(GeometryError::InvalidRegion(format!(
            "stripe width {width} not in (0, 1)"
        )));
    }
    let hi = center + width / 2.0;
    let lo = center - width / 2.0;
    let top = (0..n)
        .map(|i| Vec2::new(1.0 - i as f64 / n as f64, hi))
        .collect();
    let bot = (0..n).map(|i| Vec2::new(i as f64 / n as f64, lo)).collect();
    BoundarySet::new(vec![
        MarkerCurve::from_lift(top, [-1, 0])?,
        MarkerCurve::from_lift(bot, [1, 0])?,
    ])
}

/// Two disjoint disks.
pub fn two_circles(
    (r1, c1): (f64, Vec2),
    (r2, c2): (f64, Vec2),
    n: usize,
) -> Result<BoundarySet, GeometryError> {
    BoundarySet::new_embedded(vec![circle(r1, c1, n)?, circle(r2, c2, n)?])
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn shapes_have_expected_volume() {
        let d = disk(0.2, Vec2::new(0.5, 0.5), 256).unwrap();
        assert!((d.enclosed_volume() - PI * 0.04).abs() < 1e-8);
        let s = lamella(0.5, 0.5, 64).unwrap();
        assert!((s.enclosed_volume() - 0.5).abs() < 1e-12);
        let two = two_circles(
            (0.2, Vec2::new(0.3, 0.3)),
            (0.1, Vec2::new(0.75, 0.75)),
            256,
        )
        .unwrap();
        assert!((two.enclosed_volume() - PI * 0.05).abs() < 1e-8);
    }

    #[test]
    fn perturbation_changes_volume_at_second_order() {
        let c = perturbed_circle(0.35, Vec2::new(0.5, 0.5), 256, &[Mode::new(3, 0.02)]).unwrap();
        let b = BoundarySet::new(vec![c]).unwrap();
        let expect = PI * (0.35f64 * 0.35 + 0.02 * 0.02 / 2.0);
        assert!((b.enclosed_volume() - expect).abs() < 1e-8);
    }
}
