//! Text snapshot format for boundaries (`torus-curve v1`).
//!
//! ```text
//! torus-curve v1 components=<k>
//! component n=<N> winding=<w1>,<w2> inside=<0|1>
//! <x1> <x2>
//! ...
//! ```
//!
//! Coordinates are canonical torus coordinates printed with 17 significant
//! digits. `inside=1` means the region lies to the left of the listed
//! traversal; `inside=0` curves are reversed on load.

use std::io::{BufRead, Write};

use super::boundary::BoundarySet;
use super::curve::{MarkerCurve, Orientation};
use super::point::TorusPoint;
use super::GeometryError;

const MAGIC: &str = "torus-curve v1";

pub fn write_snapshot<W: Write>(b: &BoundarySet, mut w: W) -> Result<(), GeometryError> {
    writeln!(w, "{MAGIC} components={}", b.len())?;
    for c in b.components() {
        let [w1, w2] = c.winding();
        writeln!(w, "component n={} winding={w1},{w2} inside=1", c.len())?;
        for p in c.points() {
            writeln!(w, "{:.16e} {:.16e}", p.x1, p.x2)?;
        }
    }
    Ok(())
}

pub fn snapshot_to_string(b: &BoundarySet) -> String {
    let mut buf = Vec::new();
    write_snapshot(b, &mut buf).expect("writing to memory");
    String::from_utf8(buf).expect("ascii output")
}

pub fn read_snapshot<R: BufRead>(r: R) -> Result<BoundarySet, GeometryError> {
    let mut lines = r
        .lines()
        .enumerate()
        .map(|(i, l)| l.map(|s| (i + 1, s)))
        .filter(|l| l.as_ref().map_or(true, |(_, s)| !s.trim().is_empty()));
    let fmt_err = |line: usize, message: String| GeometryError::Format { line, message };

    let (ln, header) = lines
        .next()
        .ok_or_else(|| fmt_err(1, "empty snapshot".into()))??;
    let rest = header
        .trim()
        .strip_prefix(MAGIC)
        .ok_or_else(|| fmt_err(ln, format!("expected `{MAGIC}` header")))?;
    let k: usize = field(rest, "components", ln)?
        .parse()
        .map_err(|_| fmt_err(ln, "bad component count".into()))?;

    let mut comps = Vec::with_capacity(k);
    for _ in 0..k {
        let (ln, head) = lines
            .next()
            .ok_or_else(|| fmt_err(ln, "missing component header".into()))??;
        let head = head.trim();
        let body = head
            .strip_prefix("component")
            .ok_or_else(|| fmt_err(ln, "expected `component` header".into()))?;
        let n: usize = field(body, "n", ln)?
            .parse()
            .map_err(|_| fmt_err(ln, "bad node count".into()))?;
        let wtxt = field(body, "winding", ln)?;
        let mut ws = wtxt.split(',').map(str::parse::<i32>);
        let winding = match (ws.next(), ws.next(), ws.next()) {
            (Some(Ok(a)), Some(Ok(b)), None) => [a, b],
            _ => return Err(fmt_err(ln, format!("bad winding `{wtxt}`"))),
        };
        let orientation = match field(body, "inside", ln)? {
            "1" => Orientation::Standard,
            "0" => Orientation::Reversed,
            other => return Err(fmt_err(ln, format!("bad inside flag `{other}`"))),
        };
        let mut pts = Vec::with_capacity(n);
        for _ in 0..n {
            let (pl, text) = lines
                .next()
                .ok_or_else(|| fmt_err(ln, "truncated component".into()))??;
            let mut it = text.split_whitespace().map(str::parse::<f64>);
            match (it.next(), it.next(), it.next()) {
                (Some(Ok(x)), Some(Ok(y)), None) if x.is_finite() && y.is_finite() => {
                    pts.push(TorusPoint::new(x, y))
                }
                _ => return Err(fmt_err(pl, format!("bad coordinate line `{text}`"))),
            }
        }
        comps.push(MarkerCurve::from_points(&pts, winding, orientation)?);
    }
    if let Some(extra) = lines.next() {
        let (ln, _) = extra?;
        return Err(fmt_err(ln, "trailing content after last component".into()));
    }
    BoundarySet::new(comps)
}

pub fn snapshot_from_str(s: &str) -> Result<BoundarySet, GeometryError> {
    read_snapshot(s.as_bytes())
}

fn field<'a>(text: &'a str, key: &str, line: usize) -> Result<&'a str, GeometryError> {
    text.split_whitespace()
        .find_map(|tok| tok.strip_prefix(key).and_then(|r| r.strip_prefix('=')))
        .ok_or_else(|| GeometryError::Format {
            line,
            message: format!("missing `{key}=`"),
        })
}
