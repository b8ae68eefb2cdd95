use std::f64::consts::PI;
use std::sync::OnceLock;

use super::ewald::GreensEvaluator;
use crate::geometry::{wrap_coord, Vec2};

/// Intervals per unit length of the lookup table.
const CELLS_PER_UNIT: usize = 1024;

/// Tabulated regular part `R(r) = G(r) + (1/2π) ln|r|` for fast kernel
/// assembly.
///
/// `R` is even in each coordinate and symmetric under swapping them, so the
/// table covers `[0, 1/2]²` of the wrapped displacement and is read with
/// tensor cubic Lagrange interpolation. Stencils are reflected across the
/// axes and shifted inwards at the outer edges, where the wrapped distance
/// has a kink.
#[derive(Clone, Debug)]
pub struct GreensTable {
    n: usize,
    h: f64,
    /// `(n + 2)²` values with one reflected row and column in front.
    values: Vec<f64>,
    regular_at_zero: f64,
}

impl GreensTable {
    pub fn new(ev: &GreensEvaluator) -> Self {
        let n = CELLS_PER_UNIT / 2;
        let h = 0.5 / n as f64;
        let w = n + 2;
        let mut values = vec![0.0; w * w];
        for j in 0..=n {
            for i in 0..=j {
                let r = ev.regular_part(Vec2::new(i as f64 * h, j as f64 * h));
                values[(j + 1) * w + (i + 1)] = r;
                values[(i + 1) * w + (j + 1)] = r;
            }
        }
        // index -1 mirrors index 1
        for j in 0..w {
            values[j * w] = values[j * w + 2];
        }
        for i in 0..w {
            values[i] = values[2 * w + i];
        }
        Self {
            n,
            h,
            values,
            regular_at_zero: ev.regular_at_zero(),
        }
    }

    /// Table for the default evaluator, built once per process.
    pub fn shared() -> &'static GreensTable {
        static TABLE: OnceLock<GreensTable> = OnceLock::new();
        TABLE.get_or_init(|| GreensTable::new(&GreensEvaluator::default()))
    }

    pub fn regular_at_zero(&self) -> f64 {
        self.regular_at_zero
    }

    /// `R` at the displacement `d` (any lift).
    pub fn regular_part(&self, d: Vec2) -> f64 {
        let a = wrap_coord(d.x).abs();
        let b = wrap_coord(d.y).abs();
        let (i0, wa) = self.stencil(a);
        let (j0, wb) = self.stencil(b);
        let w = self.n + 2;
        let mut acc = 0.0;
        for (q, wq) in wb.iter().enumerate() {
            let row = &self.values[(j0 + q) * w + i0..(j0 + q) * w + i0 + 4];
            acc += wq * (wa[0] * row[0] + wa[1] * row[1] + wa[2] * row[2] + wa[3] * row[3]);
        }
        acc
    }

    /// `G` at the displacement `d`; `d` must not wrap to zero.
    pub fn value(&self, d: Vec2) -> f64 {
        let r = Vec2::new(wrap_coord(d.x), wrap_coord(d.y));
        self.regular_part(r) - r.norm().ln() / (2.0 * PI)
    }

    /// First storage index of the 4-point stencil and its weights.
    fn stencil(&self, a: f64) -> (usize, [f64; 4]) {
        let s = a / self.h;
        // storage index = table index + 1; the stencil spans table indices k-1..=k+2
        let k = (s.floor() as usize).min(self.n - 2);
        let t = s - k as f64;
        let w = [
            -t * (t - 1.0) * (t - 2.0) / 6.0,
            (t + 1.0) * (t - 1.0) * (t - 2.0) / 2.0,
            -(t + 1.0) * t * (t - 2.0) / 2.0,
            (t + 1.0) * t * (t - 1.0) / 6.0,
        ];
        (k, w)
    }
}
