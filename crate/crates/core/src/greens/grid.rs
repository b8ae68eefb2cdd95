use std::cell::RefCell;
use std::f64::consts::PI;
use std::io::{BufRead, Write};

use num_complex::Complex64;
use rustfft::FftPlanner;

use super::GreensError;
use crate::geometry::{TorusPoint, Vec2};

thread_local! {
    static PLANNER: RefCell<FftPlanner<f64>> = RefCell::new(FftPlanner::new());
}

/// Samples of a periodic function at the cell centres of an `M × M` grid,
/// stored row-major (`x2` selects the row).
#[derive(Clone, Debug, PartialEq)]
pub struct GridField {
    m: usize,
    data: Vec<f64>,
}

impl GridField {
    pub fn zeros(m: usize) -> Result<Self, GreensError> {
        if m < 4 || !m.is_power_of_two() {
            return Err(GreensError::BadGrid(m));
        }
        Ok(Self {
            m,
            data: vec![0.0; m * m],
        })
    }

    pub fn from_data(m: usize, data: Vec<f64>) -> Result<Self, GreensError> {
        let mut g = Self::zeros(m)?;
        if data.len() != m * m {
            return Err(GreensError::BadGrid(m));
        }
        g.data = data;
        Ok(g)
    }

    /// Samples `f(x1, x2)` at the cell centres.
    pub fn from_fn(m: usize, f: impl Fn(f64, f64) -> f64) -> Result<Self, GreensError> {
        let mut g = Self::zeros(m)?;
        let h = 1.0 / m as f64;
        for i2 in 0..m {
            for i1 in 0..m {
                g.data[i2 * m + i1] = f((i1 as f64 + 0.5) * h, (i2 as f64 + 0.5) * h);
            }
        }
        Ok(g)
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn spacing(&self) -> f64 {
        1.0 / self.m as f64
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn cell_center(&self, i1: usize, i2: usize) -> Vec2 {
        let h = self.spacing();
        Vec2::new((i1 as f64 + 0.5) * h, (i2 as f64 + 0.5) * h)
    }

    /// Periodic access.
    #[inline]
    pub fn at(&self, i1: isize, i2: isize) -> f64 {
        let m = self.m as isize;
        self.data[(i2.rem_euclid(m) * m + i1.rem_euclid(m)) as usize]
    }

    pub fn mean(&self) -> f64 {
        self.data.iter().sum::<f64>() / self.data.len() as f64
    }

    /// `∫ f` over the torus by the midpoint rule.
    pub fn integral(&self) -> f64 {
        self.mean()
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Self {
        Self {
            m: self.m,
            data: self.data.iter().map(|&v| f(v)).collect(),
        }
    }

    /// `∫ f g` by the midpoint rule.
    pub fn dot(&self, other: &Self) -> f64 {
        assert_eq!(self.m, other.m);
        self.data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| a * b)
            .sum::<f64>()
            / self.data.len() as f64
    }

    /// Keys bicubic interpolation (`a = -1/2`) at a torus point.
    pub fn sample(&self, p: TorusPoint) -> f64 {
        let m = self.m as f64;
        let u = p.x1 * m - 0.5;
        let v = p.x2 * m - 0.5;
        let (i0, j0) = (u.floor(), v.floor());
        let wu = keys_weights(u - i0);
        let wv = keys_weights(v - j0);
        let (i0, j0) = (i0 as isize, j0 as isize);
        let mut acc = 0.0;
        for (b, wb) in wv.iter().enumerate() {
            let mut row = 0.0;
            for (a, wa) in wu.iter().enumerate() {
                row += wa * self.at(i0 - 1 + a as isize, j0 - 1 + b as isize);
            }
            acc += wb * row;
        }
        acc
    }

    /// Text dump: header `torus-field v1 M=<M>` then `M` rows of `M` values.
    pub fn write_dump<W: Write>(&self, mut w: W) -> Result<(), GreensError> {
        writeln!(w, "torus-field v1 M={}", self.m)?;
        for row in self.data.chunks(self.m) {
            let line: Vec<String> = row.iter().map(|v| format!("{v:e}")).collect();
            writeln!(w, "{}", line.join(" "))?;
        }
        Ok(())
    }

    pub fn read_dump<R: BufRead>(r: R) -> Result<Self, GreensError> {
        let mut lines = r.lines();
        let bad = |line: usize, message: &str| GreensError::Format {
            line,
            message: message.to_string(),
        };
        let header = lines.next().ok_or_else(|| bad(1, "empty dump"))??;
        let m: usize = header
            .trim()
            .strip_prefix("torus-field v1 M=")
            .and_then(|s| s.parse().ok())
            .ok_or_else(|| bad(1, "expected `torus-field v1 M=<M>`"))?;
        let mut data = Vec::with_capacity(m * m);
        for (k, line) in lines.enumerate() {
            let line = line?;
            for tok in line.split_whitespace() {
                data.push(tok.parse::<f64>().map_err(|_| bad(k + 2, "bad sample"))?);
            }
        }
        if data.len() != m * m {
            return Err(bad(m + 1, "sample count does not match M²"));
        }
        Self::from_data(m, data)
    }

    /// Normalized Fourier coefficients `f̂_k = M⁻² Σ f_j e^{-2πi k·x_j}`,
    /// indexed like the samples.
    pub fn fft(&self) -> Vec<Complex64> {
        let mut buf: Vec<Complex64> = self.data.iter().map(|&v| Complex64::new(v, 0.0)).collect();
        fft2(&mut buf, self.m, false);
        let scale = 1.0 / (self.m * self.m) as f64;
        buf.iter_mut().for_each(|c| *c *= scale);
        buf
    }

    /// Inverse of [`GridField::fft`], keeping the real part.
    pub fn from_fft(m: usize, coeffs: &[Complex64]) -> Result<Self, GreensError> {
        let mut buf = coeffs.to_vec();
        fft2(&mut buf, m, true);
        Self::from_data(m, buf.iter().map(|c| c.re).collect())
    }
}

/// Signed wavenumber for FFT index `k`.
#[inline]
pub fn wavenumber(k: usize, m: usize) -> i64 {
    if k < m / 2 {
        k as i64
    } else {
        k as i64 - m as i64
    }
}

fn fft2(buf: &mut [Complex64], m: usize, inverse: bool) {
    PLANNER.with(|p| {
        let mut p = p.borrow_mut();
        let fft = if inverse {
            p.plan_fft_inverse(m)
        } else {
            p.plan_fft_forward(m)
        };
        fft.process(buf);
        transpose(buf, m);
        fft.process(buf);
        transpose(buf, m);
    });
}

fn transpose(buf: &mut [Complex64], m: usize) {
    for i in 0..m {
        for j in i + 1..m {
            buf.swap(i * m + j, j * m + i);
        }
    }
}

fn keys_weights(t: f64) -> [f64; 4] {
    let k = |x: f64| {
        let x = x.abs();
        if x <= 1.0 {
            1.5 * x * x * x - 2.5 * x * x + 1.0
        } else if x < 2.0 {
            -0.5 * x * x * x + 2.5 * x * x - 4.0 * x + 2.0
        } else {
            0.0
        }
    };
    [k(1.0 + t), k(t), k(1.0 - t), k(2.0 - t)]
}

/// Zero-mean solution of `-Δv = f - mean(f)`, solved spectrally.
pub fn poisson_solve(rhs: &GridField) -> GridField {
    let m = rhs.m;
    let mut c = rhs.fft();
    for k2 in 0..m {
        let q2 = wavenumber(k2, m) as f64;
        for k1 in 0..m {
            let q1 = wavenumber(k1, m) as f64;
            let lam = 4.0 * PI * PI * (q1 * q1 + q2 * q2);
            let idx = k2 * m + k1;
            c[idx] = if lam == 0.0 {
                Complex64::new(0.0, 0.0)
            } else {
                c[idx] / lam
            };
        }
    }
    GridField::from_fft(m, &c).expect("same grid size")
}

/// `∫|∇v|²` for the zero-mean solution of `-Δv = f - mean(f)`, computed as
/// `Σ_{k≠0} |f̂_k|² / (4π²|k|²)`.
pub fn h_minus_one_energy(rhs: &GridField) -> f64 {
    let m = rhs.m;
    let c = rhs.fft();
    let mut sum = 0.0;
    for k2 in 0..m {
        let q2 = wavenumber(k2, m) as f64;
        for k1 in 0..m {
            let q1 = wavenumber(k1, m) as f64;
            let lam = 4.0 * PI * PI * (q1 * q1 + q2 * q2);
            if lam > 0.0 {
                sum += c[k2 * m + k1].norm_sqr() / lam;
            }
        }
    }
    sum
}

/// `∫|∇v|²` from spectral derivatives of the samples.
pub fn dirichlet_energy(v: &GridField) -> f64 {
    let m = v.m;
    let c = v.fft();
    let mut sum = 0.0;
    for k2 in 0..m {
        let q2 = wavenumber(k2, m) as f64;
        for k1 in 0..m {
            let q1 = wavenumber(k1, m) as f64;
            sum += 4.0 * PI * PI * (q1 * q1 + q2 * q2) * c[k2 * m + k1].norm_sqr();
        }
    }
    sum
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn single_mode_solution() {
        let f = GridField::from_fn(64, |x, _| (2.0 * PI * x).cos()).unwrap();
        let v = poisson_solve(&f);
        for i2 in 0..64 {
            for i1 in 0..64 {
                let c = v.cell_center(i1, i2);
                let exact = (2.0 * PI * c.x).cos() / (4.0 * PI * PI);
                assert!((v.at(i1 as isize, i2 as isize) - exact).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn zero_rhs_and_mean_removal() {
        let v = poisson_solve(&GridField::zeros(32).unwrap());
        assert!(v.data().iter().all(|&x| x == 0.0));
        let f = GridField::from_fn(32, |x, y| 3.0 + (2.0 * PI * (x + 2.0 * y)).sin()).unwrap();
        let v = poisson_solve(&f);
        assert!(v.mean().abs() < 1e-12);
    }

    #[test]
    fn discrete_residual_of_spectral_laplacian() {
        let f = GridField::from_fn(64, |x, y| {
            (2.0 * PI * x).sin() * (4.0 * PI * y).cos() + 0.3 * (6.0 * PI * (x - y)).cos()
        })
        .unwrap();
        let v = poisson_solve(&f);
        // apply -Δ spectrally and compare
        let mut c = v.fft();
        for k2 in 0..64 {
            for k1 in 0..64 {
                let (q1, q2) = (wavenumber(k1, 64) as f64, wavenumber(k2, 64) as f64);
                c[k2 * 64 + k1] *= 4.0 * PI * PI * (q1 * q1 + q2 * q2);
            }
        }
        let back = GridField::from_fft(64, &c).unwrap();
        let fmean = f.mean();
        let num: f64 = back
            .data()
            .iter()
            .zip(f.data())
            .map(|(a, b)| (a - (b - fmean)).powi(2))
            .sum::<f64>()
            .sqrt();
        let den: f64 = f.data().iter().map(|b| b * b).sum::<f64>().sqrt();
        assert!(num / den < 1e-10);
    }

    #[test]
    fn energy_two_ways_agree() {
        let f = GridField::from_fn(64, |x, y| {
            if (x - 0.5).abs() < 0.2 && y < 0.6 {
                1.0
            } else {
                -0.4
            }
        })
        .unwrap();
        let v = poisson_solve(&f);
        let a = h_minus_one_energy(&f);
        let b = dirichlet_energy(&v);
        let c = v.dot(&f.map(|u| u - f.mean()));
        assert!((a - b).abs() < 1e-12 * a && (a - c).abs() < 1e-10 * a);
    }

    #[test]
    fn bicubic_reproduces_smooth_field() {
        let f = |x: f64, y: f64| (2.0 * PI * x).sin() * (2.0 * PI * y).cos();
        let g = GridField::from_fn(128, f).unwrap();
        for &(x, y) in &[(0.1, 0.2), (0.999, 0.001), (0.5, 0.5), (0.0031, 0.77)] {
            let s = g.sample(TorusPoint::new(x, y));
            assert!((s - f(x, y)).abs() < 1e-4, "{s} {}", f(x, y));
        }
        // exact at cell centres
        let c = g.cell_center(5, 9);
        assert!((g.sample(TorusPoint::from_lift(c)) - g.at(5, 9)).abs() < 1e-14);
    }

    #[test]
    fn dump_round_trip_and_errors() {
        let g = GridField::from_fn(8, |x, y| x * 3.0 - y).unwrap();
        let mut buf = Vec::new();
        g.write_dump(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.starts_with("torus-field v1 M=8\n"));
        let back = GridField::read_dump(text.as_bytes()).unwrap();
        assert_eq!(back, g);
        assert!(GridField::read_dump("torus-field v1 M=8\n1 2\n".as_bytes()).is_err());
        assert!(matches!(
            GridField::zeros(12),
            Err(GreensError::BadGrid(12))
        ));
    }
}
