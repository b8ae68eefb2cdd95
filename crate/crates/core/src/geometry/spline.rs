use super::curve::MarkerCurve;
use super::point::Vec2;
use crate::scalar::Scalar;

const GAUSS5_X: [f64; 5] = [
    -0.906_179_845_938_664,
    -0.538_469_310_105_683,
    0.0,
    0.538_469_310_105_683,
    0.906_179_845_938_664,
];
const GAUSS5_W: [f64; 5] = [
    0.236_926_885_056_189,
    0.478_628_670_499_366,
    0.568_888_888_888_889,
    0.478_628_670_499_366,
    0.236_926_885_056_189,
];

/// Periodic cubic spline through the lifted markers of a closed curve,
/// parametrized by the node index `u` (node `i` at `u = i`).
#[derive(Clone, Debug)]
pub struct CurveSpline<T = f64> {
    nodes: Vec<Vec2<T>>,
    moments: Vec<Vec2<T>>,
    winding: Vec2<T>,
}

impl<T: Scalar> CurveSpline<T> {
    pub fn new(curve: &MarkerCurve<T>) -> Self {
        let n = curve.len();
        let rhs: Vec<Vec2<T>> = (0..n as isize)
            .map(|i| {
                (curve.node(i + 1) - curve.node(i) * T::lit(2.0) + curve.node(i - 1)) * T::lit(6.0)
            })
            .collect();
        let mx = solve_cyclic_141(&rhs.iter().map(|v| v.x).collect::<Vec<_>>());
        let my = solve_cyclic_141(&rhs.iter().map(|v| v.y).collect::<Vec<_>>());
        Self {
            nodes: curve.lift().to_vec(),
            moments: mx
                .into_iter()
                .zip(my)
                .map(|(x, y)| Vec2::new(x, y))
                .collect(),
            winding: curve.winding_vec(),
        }
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    #[inline]
    fn split(&self, u: T) -> (usize, T, T) {
        let n = T::from_usize_lossy(self.len());
        let q = (u / n).floor();
        let r = u - q * n;
        let mut i = r.floor().to_usize().unwrap_or(0);
        let mut t = r - T::from_usize_lossy(i);
        if i >= self.len() {
            i = self.len() - 1;
            t = T::one();
        }
        (i, t, q)
    }

    #[inline]
    fn node_next(&self, i: usize) -> Vec2<T> {
        if i + 1 == self.len() {
            self.nodes[0] + self.winding
        } else {
            self.nodes[i + 1]
        }
    }

    /// Position, first and second derivative at parameter `u`.
    pub fn eval(&self, u: T) -> (Vec2<T>, Vec2<T>, Vec2<T>) {
        let (i, t, q) = self.split(u);
        let j = (i + 1) % self.len();
        let (p0, p1) = (self.nodes[i], self.node_next(i));
        let (m0, m1) = (self.moments[i], self.moments[j]);
        let s = T::one() - t;
        let six = T::lit(6.0);
        let pos = p0 * s + p1 * t + m0 * ((s * s * s - s) / six) + m1 * ((t * t * t - t) / six);
        let d1 = p1 - p0
            + m0 * ((T::one() - T::lit(3.0) * s * s) / six)
            + m1 * ((T::lit(3.0) * t * t - T::one()) / six);
        let d2 = m0 * s + m1 * t;
        (pos + self.winding * q, d1, d2)
    }

    pub fn position(&self, u: T) -> Vec2<T> {
        self.eval(u).0
    }

    /// Arclength of the spline between parameters `a` and `b` within one
    /// knot interval (5-point Gauss rule).
    pub fn arc(&self, a: T, b: T) -> T {
        let half = (b - a) * T::lit(0.5);
        let mid = (a + b) * T::lit(0.5);
        (0..5)
            .map(|k| T::lit(GAUSS5_W[k]) * self.eval(mid + half * T::lit(GAUSS5_X[k])).1.norm())
            .sum::<T>()
            * half
    }

    /// Arclength of each knot interval.
    pub fn interval_lengths(&self) -> Vec<T> {
        (0..self.len())
            .map(|i| {
                let a = T::from_usize_lossy(i);
                self.arc(a, a + T::one())
            })
            .collect()
    }

    /// Parameter values at `count` equally spaced arclength stations,
    /// starting from node 0.
    pub fn equal_arclength_params(&self, count: usize) -> Vec<T> {
        let lens = self.interval_lengths();
        let mut cum = Vec::with_capacity(lens.len() + 1);
        cum.push(T::zero());
        for &l in &lens {
            let last = *cum.last().unwrap();
            cum.push(last + l);
        }
        let total = *cum.last().unwrap();
        let step = total / T::from_usize_lossy(count);
        let mut out = Vec::with_capacity(count);
        let mut seg = 0usize;
        for k in 0..count {
            let target = step * T::from_usize_lossy(k);
            while seg + 1 < lens.len() && cum[seg + 1] <= target {
                seg += 1;
            }
            let a = T::from_usize_lossy(seg);
            let local = target - cum[seg];
            // Newton on the arclength from the knot, bracketed in [0, 1].
            let mut t = if lens[seg] > T::zero() {
                local / lens[seg]
            } else {
                T::zero()
            };
            let (mut lo, mut hi) = (T::zero(), T::one());
            for _ in 0..50 {
                let f = self.arc(a, a + t) - local;
                if f > T::zero() {
                    hi = t;
                } else {
                    lo = t;
                }
                let speed = self.eval(a + t).1.norm();
                let mut next = t - f / speed;
                if !(next > lo && next < hi) {
                    next = (lo + hi) * T::lit(0.5);
                }
                let done = (next - t).abs() <= T::epsilon() * T::lit(16.0);
                t = next;
                if done {
                    break;
                }
            }
            out.push(a + t);
        }
        out
    }
}

/// Solves the periodic system `x[i-1] + 4 x[i] + x[i+1] = r[i]`.
/// Periodic cubic spline of nodal values `f_i` in the node index.
#[derive(Clone, Debug)]
pub struct PeriodicSpline<T = f64> {
    values: Vec<T>,
    moments: Vec<T>,
}

impl<T: Scalar> PeriodicSpline<T> {
    pub fn new(values: &[T]) -> Self {
        let n = values.len();
        let rhs: Vec<T> = (0..n)
            .map(|i| {
                (values[(i + 1) % n] - values[i] * T::lit(2.0) + values[(i + n - 1) % n])
                    * T::lit(6.0)
            })
            .collect();
        Self {
            values: values.to_vec(),
            moments: solve_cyclic_141(&rhs),
        }
    }

    /// Value and first derivative at parameter `u`.
    pub fn eval(&self, u: T) -> (T, T) {
        let n = self.values.len();
        let nf = T::from_usize_lossy(n);
        let r = u - (u / nf).floor() * nf;
        let i = r.floor().to_usize().unwrap_or(0).min(n - 1);
        let t = r - T::from_usize_lossy(i);
        let j = (i + 1) % n;
        let s = T::one() - t;
        let six = T::lit(6.0);
        let (f0, f1, m0, m1) = (
            self.values[i],
            self.values[j],
            self.moments[i],
            self.moments[j],
        );
        let v = f0 * s + f1 * t + m0 * ((s * s * s - s) / six) + m1 * ((t * t * t - t) / six);
        let d = f1 - f0
            + m0 * ((T::one() - T::lit(3.0) * s * s) / six)
            + m1 * ((T::lit(3.0) * t * t - T::one()) / six);
        (v, d)
    }
}

fn solve_cyclic_141<T: Scalar>(r: &[T]) -> Vec<T> {
    let n = r.len();
    // Sherman–Morrison on the tridiagonal part with corner corrections.
    let (a, b, c) = (T::one(), T::lit(4.0), T::one());
    let gamma = -b;
    let mut diag = vec![b; n];
    diag[0] = b - gamma;
    diag[n - 1] = b - a * c / gamma;
    let mut u = vec![T::zero(); n];
    u[0] = gamma;
    u[n - 1] = c;
    let x = thomas(a, &diag, c, r);
    let z = thomas(a, &diag, c, &u);
    let fact = (x[0] + a * x[n - 1] / gamma) / (T::one() + z[0] + a * z[n - 1] / gamma);
    x.iter().zip(&z).map(|(&xi, &zi)| xi - fact * zi).collect()
}

fn thomas<T: Scalar>(sub: T, diag: &[T], sup: T, r: &[T]) -> Vec<T> {
    let n = diag.len();
    let mut cp = vec![T::zero(); n];
    let mut dp = vec![T::zero(); n];
    cp[0] = sup / diag[0];
    dp[0] = r[0] / diag[0];
    for i in 1..n {
        let m = diag[i] - sub * cp[i - 1];
        cp[i] = sup / m;
        dp[i] = (r[i] - sub * dp[i - 1]) / m;
    }
    let mut x = vec![T::zero(); n];
    x[n - 1] = dp[n - 1];
    for i in (0..n - 1).rev() {
        x[i] = dp[i] - cp[i] * x[i + 1];
    }
    x
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn cyclic_solver_matches_definition() {
        let r: Vec<f64> = (0..11).map(|i| (i as f64 * 0.7).sin()).collect();
        let x = solve_cyclic_141(&r);
        let n = r.len();
        for i in 0..n {
            let lhs = x[(i + n - 1) % n] + 4.0 * x[i] + x[(i + 1) % n];
            assert!((lhs - r[i]).abs() < 1e-13);
        }
    }

    #[test]
    fn interpolates_nodes_and_tracks_circle() {
        let n = 64;
        let nodes = (0..n)
            .map(|i| {
                let t = 2.0 * PI * i as f64 / n as f64;
                Vec2::new(0.5 + 0.2 * t.cos(), 0.5 + 0.2 * t.sin())
            })
            .collect();
        let c = MarkerCurve::from_lift(nodes, [0, 0]).unwrap();
        let s = CurveSpline::new(&c);
        for i in 0..n {
            assert!((s.position(i as f64) - c.node(i as isize)).norm() < 1e-15);
            let mid = s.position(i as f64 + 0.5);
            let r = (mid - Vec2::new(0.5, 0.5)).norm();
            assert!((r - 0.2).abs() < 1e-7, "{r}");
        }
        let total: f64 = s.interval_lengths().iter().sum();
        assert!(
            (total - 2.0 * PI * 0.2).abs() < 1e-6,
            "{}",
            total - 2.0 * PI * 0.2
        );
    }

    #[test]
    fn winding_curve_continues_across_period() {
        let nodes = (0..16).map(|i| Vec2::new(i as f64 / 16.0, 0.25)).collect();
        let c = MarkerCurve::from_lift(nodes, [1, 0]).unwrap();
        let s = CurveSpline::new(&c);
        let p = s.position(15.5);
        assert!((p - Vec2::new(15.5 / 16.0, 0.25)).norm() < 1e-14);
        let p = s.position(17.25);
        assert!((p - Vec2::new(1.0 + 1.25 / 16.0, 0.25)).norm() < 1e-14);
    }
}
