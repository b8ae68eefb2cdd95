use super::curve::{MarkerCurve, MIN_NODES};
use super::spline::CurveSpline;
use super::GeometryError;
use crate::scalar::Scalar;

/// Redistributes `n` markers at equal arclength along the periodic cubic
/// spline through the input nodes. Node 0 stays in place.
pub fn resample_equal_arclength<T: Scalar>(
    c: &MarkerCurve<T>,
    n: usize,
) -> Result<MarkerCurve<T>, GeometryError> {
    if n < MIN_NODES {
        return Err(GeometryError::TooFewNodes(n));
    }
    let spline = CurveSpline::new(c);
    let nodes = spline
        .equal_arclength_params(n)
        .into_iter()
        .map(|u| spline.position(u))
        .collect();
    MarkerCurve::from_lift(nodes, c.winding())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{CurveFrame, CurveSpline, Vec2};
    use std::f64::consts::PI;

    fn param_curve(n: usize, f: impl Fn(f64) -> Vec2) -> MarkerCurve {
        MarkerCurve::from_lift((0..n).map(|i| f(i as f64 / n as f64)).collect(), [0, 0]).unwrap()
    }

    fn spacing(c: &MarkerCurve) -> (f64, f64) {
        let s: Vec<f64> = (0..c.len()).map(|i| c.segment(i).norm()).collect();
        (
            s.iter().copied().fold(f64::INFINITY, f64::min),
            s.iter().copied().fold(0.0, f64::max),
        )
    }

    #[test]
    fn upsampled_circle_is_uniform() {
        let c = param_curve(64, |s| {
            let t = 2.0 * PI * s;
            Vec2::new(0.5 + 0.2 * t.cos(), 0.5 + 0.2 * t.sin())
        });
        let r = resample_equal_arclength(&c, 256).unwrap();
        let f = CurveFrame::build(&r).unwrap();
        let expect = 2.0 * PI * 0.2 / 256.0;
        for &ds in &f.ds {
            assert!((ds - expect).abs() < 1e-8, "{ds} vs {expect}");
        }
        for i in 0..256 {
            let rad = (r.node(i) - Vec2::new(0.5, 0.5)).norm();
            assert!((rad - 0.2).abs() < 1e-7);
        }
    }

    #[test]
    fn uniform_curve_is_a_fixed_point() {
        let c = param_curve(128, |s| {
            let t = 2.0 * PI * s;
            Vec2::new(0.5 + 0.2 * t.cos(), 0.5 + 0.2 * t.sin())
        });
        let r = resample_equal_arclength(&c, 128).unwrap();
        let worst = (0..128)
            .map(|i| (r.node(i) - c.node(i)).norm())
            .fold(0.0, f64::max);
        assert!(worst <= 1e-10, "{worst}");
    }

    #[test]
    fn peanut_becomes_uniform() {
        // strongly non-uniform parametrization of a peanut shape
        let c = param_curve(200, |s| {
            let t = 2.0 * PI * (s + 0.12 * (2.0 * PI * s).sin() / (2.0 * PI));
            let r = 0.2 * (1.0 + 0.3 * (2.0 * t).cos());
            Vec2::new(0.5 + r * t.cos(), 0.5 + r * t.sin())
        });
        let r = resample_equal_arclength(&c, 200).unwrap();
        let arcs = CurveSpline::new(&r).interval_lengths();
        let (lo, hi) = arcs
            .iter()
            .fold((f64::INFINITY, 0.0f64), |(a, b), &d| (a.min(d), b.max(d)));
        assert!(hi / lo <= 1.0 + 1e-6, "{}", hi / lo);
        // the differentiated speed agrees up to stencil truncation
        let f = CurveFrame::build(&r).unwrap();
        let (dlo, dhi) =
            f.ds.iter()
                .fold((f64::INFINITY, 0.0f64), |(a, b), &d| (a.min(d), b.max(d)));
        assert!(dhi / dlo <= 1.0 + 1e-5, "{}", dhi / dlo);
        let (clo, chi) = spacing(&r);
        assert!(chi / clo < 1.01, "{}", chi / clo);
    }

    #[test]
    fn winding_line_keeps_winding() {
        let nodes = (0..40)
            .map(|i| {
                let s = i as f64 / 40.0;
                Vec2::new(s + 0.05 * (2.0 * PI * s).sin(), 0.25)
            })
            .collect();
        let c = MarkerCurve::from_lift(nodes, [1, 0]).unwrap();
        let r = resample_equal_arclength(&c, 32).unwrap();
        assert_eq!(r.winding(), [1, 0]);
        let (lo, hi) = spacing(&r);
        assert!((hi - lo).abs() < 1e-12 && (lo - 1.0 / 32.0).abs() < 1e-12);
    }

    #[test]
    fn too_few_nodes() {
        let c = param_curve(16, |s| {
            let t = 2.0 * PI * s;
            Vec2::new(0.5 + 0.2 * t.cos(), 0.5 + 0.2 * t.sin())
        });
        assert!(matches!(
            resample_equal_arclength(&c, 4),
            Err(GeometryError::TooFewNodes(4))
        ));
    }
}
