use std::f64::consts::PI;

use super::expint::{e1, e1_plus_log};
use super::GreensError;
use crate::geometry::{wrap_vec, TorusPoint, Vec2};

/// Images with `|r + n|² / 4τ` beyond this contribute below 1e-16.
const Z_CUTOFF: f64 = 36.0;

/// Zero-mean periodic Green's function of `-Δ` on the unit torus,
/// `-Δ_x G(x, y) = δ_y - 1`, evaluated by Ewald splitting.
///
/// With heat time `τ = σ²/4`,
///
/// `G(r) = (1/4π) Σ_n E1(|r+n|²/4τ) - τ + Σ_{k≠0} e^{-4π²|k|²τ} cos(2πk·r) / (4π²|k|²)`.
///
/// The real-space sum runs over the 3×3 images of the wrapped displacement
/// and the Fourier sum over `|k_i| ≤ k_spectral`.
#[derive(Clone, Debug)]
pub struct GreensEvaluator {
    sigma: f64,
    tau: f64,
    k_spectral: usize,
    k_real: i32,
    /// Half-plane Fourier weights `e^{-4π²|k|²τ}/(4π²|k|²)` doubled, stored
    /// as `(k1, k2, weight)` with `k1 > 0` or `k1 = 0, k2 > 0`.
    modes: Vec<(usize, i64, f64)>,
    regular_at_zero: f64,
}

impl Default for GreensEvaluator {
    fn default() -> Self {
        Self::new(0.27, 7)
    }
}

impl GreensEvaluator {
    /// Builds an evaluator with screening width `sigma` (`4τ = σ²`) and
    /// spectral cutoff `k_spectral`.
    pub fn new(sigma: f64, k_spectral: usize) -> Self {
        assert!(sigma > 0.0 && sigma < 0.5, "screening width out of range");
        let tau = sigma * sigma / 4.0;
        let k = k_spectral as i64;
        let mut modes = Vec::new();
        for k1 in 0..=k {
            for k2 in -k..=k {
                if k1 == 0 && k2 <= 0 {
                    continue;
                }
                let kk = (k1 * k1 + k2 * k2) as f64;
                let lam = 4.0 * PI * PI * kk;
                modes.push((k1 as usize, k2, 2.0 * (-lam * tau).exp() / lam));
            }
        }
        // reach of the real-space sum so that all images with z ≤ cutoff are kept
        let k_real = ((Z_CUTOFF * 4.0 * tau).sqrt() + 0.5).ceil() as i32;
        let mut ev = Self {
            sigma,
            tau,
            k_spectral,
            k_real,
            modes,
            regular_at_zero: 0.0,
        };
        ev.regular_at_zero = ev.regular_part_wrapped(Vec2::zero());
        ev
    }

    pub fn sigma(&self) -> f64 {
        self.sigma
    }

    pub fn k_spectral(&self) -> usize {
        self.k_spectral
    }

    pub fn k_real(&self) -> i32 {
        self.k_real
    }

    /// `G(x, y)`.
    pub fn value(&self, x: TorusPoint, y: TorusPoint) -> Result<f64, GreensError> {
        self.value_disp(x.as_vec() - y.as_vec())
    }

    /// `∇_x G(x, y)`.
    pub fn gradient(&self, x: TorusPoint, y: TorusPoint) -> Result<Vec2, GreensError> {
        self.gradient_disp(x.as_vec() - y.as_vec())
    }

    /// `G` as a function of the displacement `x - y` (any lift).
    pub fn value_disp(&self, d: Vec2) -> Result<f64, GreensError> {
        let r = wrap_vec(d);
        if r.norm2() == 0.0 {
            return Err(GreensError::SingularArgument);
        }
        Ok(self.regular_part_wrapped(r) - r.norm().ln() / (2.0 * PI))
    }

    /// Smooth part `R(r) = G(r) + (1/2π) ln|r|` for the wrapped
    /// displacement; finite at `r = 0`.
    pub fn regular_part(&self, d: Vec2) -> f64 {
        self.regular_part_wrapped(wrap_vec(d))
    }

    /// `R(0)`, the Robin-type constant of the torus.
    pub fn regular_at_zero(&self) -> f64 {
        self.regular_at_zero
    }

    fn regular_part_wrapped(&self, r: Vec2) -> f64 {
        let four_tau = 4.0 * self.tau;
        let mut real = 0.0;
        let kr = self.k_real;
        for n1 in -kr..=kr {
            for n2 in -kr..=kr {
                let p = Vec2::new(r.x + n1 as f64, r.y + n2 as f64);
                let z = p.norm2() / four_tau;
                if n1 == 0 && n2 == 0 {
                    // E1(z) = [E1(z) + ln z] - ln|r|² + ln 4τ
                    real += e1_plus_log(z) + four_tau.ln();
                } else if z < Z_CUTOFF {
                    real += e1(z);
                }
            }
        }
        real / (4.0 * PI) - self.tau + self.spectral_value(r)
    }

    fn spectral_value(&self, r: Vec2) -> f64 {
        let (c1, s1) = trig_table(r.x, self.k_spectral);
        let (c2, s2) = trig_table(r.y, self.k_spectral);
        let mut sum = 0.0;
        for &(k1, k2, w) in &self.modes {
            let (cb, sb) = if k2 >= 0 {
                (c2[k2 as usize], s2[k2 as usize])
            } else {
                (c2[(-k2) as usize], -s2[(-k2) as usize])
            };
            sum += w * (c1[k1] * cb - s1[k1] * sb);
        }
        sum
    }

    /// `∇G` as a function of the displacement `x - y`.
    pub fn gradient_disp(&self, d: Vec2) -> Result<Vec2, GreensError> {
        let r = wrap_vec(d);
        if r.norm2() == 0.0 {
            return Err(GreensError::SingularArgument);
        }
        let four_tau = 4.0 * self.tau;
        let mut g = Vec2::zero();
        let kr = self.k_real;
        for n1 in -kr..=kr {
            for n2 in -kr..=kr {
                let p = Vec2::new(r.x + n1 as f64, r.y + n2 as f64);
                let z = p.norm2() / four_tau;
                if z < Z_CUTOFF || (n1 == 0 && n2 == 0) {
                    g -= p * ((-z).exp() / p.norm2());
                }
            }
        }
        g = g / (2.0 * PI);
        let (c1, s1) = trig_table(r.x, self.k_spectral);
        let (c2, s2) = trig_table(r.y, self.k_spectral);
        for &(k1, k2, w) in &self.modes {
            let (cb, sb) = if k2 >= 0 {
                (c2[k2 as usize], s2[k2 as usize])
            } else {
                (c2[(-k2) as usize], -s2[(-k2) as usize])
            };
            let sin = s1[k1] * cb + c1[k1] * sb;
            let f = -w * 2.0 * PI * sin;
            g += Vec2::new(f * k1 as f64, f * k2 as f64);
        }
        Ok(g)
    }

    /// `G(x_i, x_j)` for all pairs; the diagonal is left at zero.
    pub fn matrix(&self, pts: &[Vec2]) -> Vec<Vec<f64>> {
        use rayon::prelude::*;
        pts.par_iter()
            .enumerate()
            .map(|(i, &x)| {
                pts.iter()
                    .enumerate()
                    .map(|(j, &y)| {
                        if i == j {
                            0.0
                        } else {
                            self.value_disp(x - y).unwrap_or(0.0)
                        }
                    })
                    .collect()
            })
            .collect()
    }
}

/// `cos(2πk t)` and `sin(2πk t)` for `k = 0..=kmax` by angle addition.
fn trig_table(t: f64, kmax: usize) -> (Vec<f64>, Vec<f64>) {
    let mut c = vec![1.0; kmax + 1];
    let mut s = vec![0.0; kmax + 1];
    if kmax >= 1 {
        let (sn, cs) = (2.0 * PI * t).sin_cos();
        c[1] = cs;
        s[1] = sn;
        for k in 2..=kmax {
            c[k] = c[k - 1] * cs - s[k - 1] * sn;
            s[k] = s[k - 1] * cs + c[k - 1] * sn;
        }
    }
    (c, s)
}
