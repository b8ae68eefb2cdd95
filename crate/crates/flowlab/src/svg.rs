//! Deterministic SVG drawings of boundaries in the fundamental domain.

use std::fmt::Write as _;
use std::path::Path;

use flowlab_core::geometry::{BoundarySet, GeometryError, MarkerCurve};
use flowlab_core::Vector;

use crate::error::{HarnessError, Result};

const SIZE: f64 = 512.0;

fn px(p: Vector) -> (f64, f64) {
    (p.x * SIZE, (1.0 - p.y) * SIZE)
}

/// Lift nodes of one period; open curves get their closing node appended.
fn period_nodes(c: &MarkerCurve) -> Vec<Vector> {
    let mut nodes = c.lift().to_vec();
    if !c.is_contractible() {
        nodes.push(nodes[0] + c.winding_vec());
    }
    nodes
}

/// Integer shifts whose copy of `nodes` overlaps the open unit square.
fn shifts(nodes: &[Vector]) -> Vec<(i64, i64)> {
    let (mut lo, mut hi) = (nodes[0], nodes[0]);
    for p in nodes {
        lo = Vector::new(lo.x.min(p.x), lo.y.min(p.y));
        hi = Vector::new(hi.x.max(p.x), hi.y.max(p.y));
    }
    let mut out = Vec::new();
    for j in (-hi.y).floor() as i64..=(1.0 - lo.y).ceil() as i64 {
        for i in (-hi.x).floor() as i64..=(1.0 - lo.x).ceil() as i64 {
            let (sx, sy) = (i as f64, j as f64);
            if hi.x + sx > 0.0 && lo.x + sx < 1.0 && hi.y + sy > 0.0 && lo.y + sy < 1.0 {
                out.push((i, j));
            }
        }
    }
    out
}

/// SVG text of `b`. Contractible components become closed `path`
/// elements, the others `polyline` elements, each drawn once per periodic
/// copy that meets the unit square.
pub fn render_svg(b: &BoundarySet) -> Result<String> {
    if b.is_empty() {
        return Err(GeometryError::InvalidRegion("boundary has no components".into()).into());
    }
    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{SIZE}" height="{SIZE}" viewBox="0 0 {SIZE} {SIZE}">"#
    );
    let _ = writeln!(
        s,
        r#"<defs><clipPath id="domain"><rect x="0" y="0" width="{SIZE}" height="{SIZE}"/></clipPath></defs>"#
    );
    let _ = writeln!(
        s,
        r##"<rect x="0" y="0" width="{SIZE}" height="{SIZE}" fill="#ffffff" stroke="#888888"/>"##
    );
    let _ = writeln!(
        s,
        r#"<g clip-path="url(#domain)" fill="none" stroke-width="1.5">"#
    );
    for (c, curve) in b.components().iter().enumerate() {
        let nodes = period_nodes(curve);
        for (i, j) in shifts(&nodes) {
            let shift = Vector::new(i as f64, j as f64);
            let mut pts = String::new();
            for (k, p) in nodes.iter().enumerate() {
                let (x, y) = px(*p + shift);
                if curve.is_contractible() {
                    let _ = write!(pts, "{}{x:.3} {y:.3} ", if k == 0 { "M" } else { "L" });
                } else {
                    let _ = write!(pts, "{x:.3},{y:.3} ");
                }
            }
            if curve.is_contractible() {
                let _ = writeln!(
                    s,
                    r##"<path data-component="{c}" stroke="#1f4e9c" d="{pts}Z"/>"##
                );
            } else {
                let _ = writeln!(
                    s,
                    r##"<polyline data-component="{c}" stroke="#9c1f4e" points="{}"/>"##,
                    pts.trim_end()
                );
            }
        }
    }
    s.push_str("</g>\n</svg>\n");
    Ok(s)
}

/// Writes [`render_svg`] to `path`.
pub fn emit_svg(b: &BoundarySet, path: &Path) -> Result<()> {
    let text = render_svg(b)?;
    std::fs::write(path, text).map_err(HarnessError::io(path))
}

#[cfg(test)]
mod tests {
    use super::*;
    use flowlab_core::fixtures::{disk, lamella};

    #[test]
    fn circle_is_one_closed_path() {
        let s = render_svg(&disk(0.2, Vector::new(0.5, 0.5), 64).unwrap()).unwrap();
        assert_eq!(s.matches("<path").count(), 1);
        assert_eq!(s.matches("<polyline").count(), 0);
        assert!(s.contains("Z\"/>"));
    }

    #[test]
    fn seam_circle_gets_copies() {
        let s = render_svg(&disk(0.2, Vector::new(0.05, 0.5), 64).unwrap()).unwrap();
        assert_eq!(s.matches("<path").count(), 2);
        let s = render_svg(&disk(0.2, Vector::new(0.05, 0.95), 64).unwrap()).unwrap();
        assert_eq!(s.matches("<path").count(), 4);
    }

    #[test]
    fn lamella_is_two_polylines() {
        let s = render_svg(&lamella(0.5, 0.5, 32).unwrap()).unwrap();
        assert_eq!(s.matches("<polyline").count(), 2);
        assert_eq!(s.matches("<path").count(), 0);
    }

    #[test]
    fn output_is_byte_stable() {
        let b = disk(0.3, Vector::new(0.4, 0.6), 128).unwrap();
        assert_eq!(render_svg(&b).unwrap(), render_svg(&b.clone()).unwrap());
    }

    #[test]
    fn empty_boundary_is_invalid_region() {
        let b = BoundarySet::with_components_unchecked(Vec::new());
        let err = render_svg(&b).unwrap_err();
        assert!(matches!(
            err,
            HarnessError::Core(flowlab_core::Error::Geometry(GeometryError::InvalidRegion(
                _
            )))
        ));
    }
}
