//! Distances between sets, normal-graph norms and exponential decay fits.

use std::f64::consts::PI;
use std::io::Write;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fixtures::disk;
use crate::geometry::{normal_graph, BoundarySet, DistanceField, TorusPoint, Vec2};
use crate::greens::{rasterize, wavenumber, GridField};

/// Minimal symmetric difference over translations and its minimizer.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct AlphaDistance {
    /// `min_η Vol(E △ (F + η))`.
    pub value: f64,
    /// Minimizing translation, wrapped into `[-1/2, 1/2)²`.
    pub eta: Vec2,
}

/// Grid tolerance `2 · perimeter / M` of [`alpha_distance`].
pub fn alpha_tolerance(perimeter: f64, m: usize) -> f64 {
    2.0 * perimeter / m as f64
}

/// `α(E, F) = min_η Vol(E △ (F + η))` by spectral cross-correlation of
/// the cut-cell indicators on an `m × m` grid, a quadratic fit around the
/// best grid shift and up to two Newton steps on the trigonometric
/// interpolant of the correlation.
pub fn alpha_distance(e: &BoundarySet, f: &BoundarySet, m: usize) -> Result<AlphaDistance> {
    let ce = rasterize(e, m)?;
    let cf = rasterize(f, m)?;
    let ve = ce.integral();
    let vf = cf.integral();
    let fe = ce.fft();
    let ff = cf.fft();
    let prod: Vec<Complex64> = fe.iter().zip(&ff).map(|(a, b)| a * b.conj()).collect();
    let corr = GridField::from_fft(m, &prod)?;
    let data = corr.data();
    let (best, _) =
        data.iter().enumerate().fold(
            (0, f64::NEG_INFINITY),
            |acc, (i, &v)| if v > acc.1 { (i, v) } else { acc },
        );
    let (j1, j2) = ((best % m) as isize, (best / m) as isize);
    let h = 1.0 / m as f64;
    let at = |a: isize, b: isize| corr.at(j1 + a, j2 + b);
    // separable quadratic fit on the 3×3 neighbourhood
    let c0 = at(0, 0);
    let g1 = (at(1, 0) - at(-1, 0)) / 2.0;
    let g2 = (at(0, 1) - at(0, -1)) / 2.0;
    let h11 = at(1, 0) - 2.0 * c0 + at(-1, 0);
    let h22 = at(0, 1) - 2.0 * c0 + at(0, -1);
    let h12 = (at(1, 1) - at(1, -1) - at(-1, 1) + at(-1, -1)) / 4.0;
    let mut shift = Vec2::zero();
    let det = h11 * h22 - h12 * h12;
    if h11 < 0.0 && det > 0.0 {
        let s1 = -(h22 * g1 - h12 * g2) / det;
        let s2 = -(h11 * g2 - h12 * g1) / det;
        if s1.abs() <= 1.0 && s2.abs() <= 1.0 {
            shift = Vec2::new(s1, s2);
        }
    }
    let mut eta = Vec2::new((j1 as f64 + shift.x) * h, (j2 as f64 + shift.y) * h);
    let series = CorrelationSeries::new(&prod, m);
    let mut value = series.eval(eta).0;
    for _ in 0..2 {
        let (_, grad, hess) = series.eval(eta);
        let det = hess[0] * hess[2] - hess[1] * hess[1];
        if !(hess[0] < 0.0 && det > 0.0) {
            break;
        }
        let step = Vec2::new(
            -(hess[2] * grad.x - hess[1] * grad.y) / det,
            -(hess[0] * grad.y - hess[1] * grad.x) / det,
        );
        if step.norm() > h {
            break;
        }
        let trial = eta + step;
        let v = series.eval(trial).0;
        if v <= value {
            break;
        }
        eta = trial;
        value = v;
    }
    let wrap = |x: f64| x - (x + 0.5).floor();
    Ok(AlphaDistance {
        value: (ve + vf - 2.0 * value).max(0.0),
        eta: Vec2::new(wrap(eta.x), wrap(eta.y)),
    })
}

/// Trigonometric interpolant `c(η) = Σ ĉ_k e^{2πi k·η}` of a correlation.
struct CorrelationSeries<'a> {
    coeffs: &'a [Complex64],
    m: usize,
}

impl<'a> CorrelationSeries<'a> {
    fn new(coeffs: &'a [Complex64], m: usize) -> Self {
        Self { coeffs, m }
    }

    /// Value, gradient and Hessian `[h11, h12, h22]`.
    fn eval(&self, eta: Vec2) -> (f64, Vec2, [f64; 3]) {
        let m = self.m;
        let phase = |x: f64| -> Vec<(f64, Complex64)> {
            (0..m)
                .map(|k| {
                    let w = wavenumber(k, m) as f64;
                    (w, Complex64::from_polar(1.0, 2.0 * PI * w * x))
                })
                .collect()
        };
        let p1 = phase(eta.x);
        let p2 = phase(eta.y);
        let (mut v, mut g1, mut g2, mut h11, mut h12, mut h22) = (0.0, 0.0, 0.0, 0.0, 0.0, 0.0);
        for (k2, &(w2, e2)) in p2.iter().enumerate() {
            for (k1, &(w1, e1)) in p1.iter().enumerate() {
                let t = (self.coeffs[k2 * m + k1] * e1 * e2).re;
                let s = -(self.coeffs[k2 * m + k1] * e1 * e2).im;
                v += t;
                g1 += w1 * s;
                g2 += w2 * s;
                h11 -= w1 * w1 * t;
                h12 -= w1 * w2 * t;
                h22 -= w2 * w2 * t;
            }
        }
        let c = 2.0 * PI;
        (
            v,
            Vec2::new(c * g1, c * g2),
            [c * c * h11, c * c * h12, c * c * h22],
        )
    }
}

/// `D(F) = ∫_{F △ E} d(x, ∂E) dx` by cell quadrature of the rasterized
/// symmetric difference against the distance to `∂E` at cell centres.
pub fn d_distance(e_ref: &BoundarySet, f: &BoundarySet, m: usize) -> Result<f64> {
    let ce = rasterize(e_ref, m)?;
    let cf = rasterize(f, m)?;
    let field = DistanceField::new(e_ref)?;
    let cell = 1.0 / (m * m) as f64;
    let mut acc = 0.0;
    for i2 in 0..m {
        for i1 in 0..m {
            let k = i2 * m + i1;
            let diff = (cf.data()[k] - ce.data()[k]).abs();
            if diff == 0.0 {
                continue;
            }
            let p = ce.cell_center(i1, i2);
            let d = field.query(TorusPoint::new(p.x, p.y)).distance.abs();
            acc += diff * d * cell;
        }
    }
    Ok(acc)
}

/// Norms of normal-graph heights `ψ` with arclength weights `ds`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct GraphNorms {
    pub l2: f64,
    pub c0: f64,
    /// Discrete `H¹` norm.
    pub h1: f64,
}

pub fn graph_norms(reference: &BoundarySet, heights: &[Vec<f64>]) -> Result<GraphNorms> {
    let frames = reference.frames()?;
    let (mut l2, mut c0, mut d2) = (0.0, 0.0f64, 0.0);
    for (f, h) in frames.iter().zip(heights) {
        let n = h.len();
        for i in 0..n {
            let j = (i + 1) % n;
            l2 += h[i] * h[i] * f.ds[i];
            c0 = c0.max(h[i].abs());
            let hs = 0.5 * (f.ds[i] + f.ds[j]);
            d2 += (h[j] - h[i]).powi(2) / hs;
        }
    }
    Ok(GraphNorms {
        l2: l2.sqrt(),
        c0,
        h1: (l2 + d2).sqrt(),
    })
}

/// Amplitude `(2/n)|Σ ψ_j e^{-ikθ_j}|` of mode `k` in equally spaced samples.
pub fn mode_amplitude(heights: &[f64], k: u32) -> f64 {
    let n = heights.len() as f64;
    let s: Complex64 = heights
        .iter()
        .enumerate()
        .map(|(j, &h)| Complex64::from_polar(h, -2.0 * PI * k as f64 * j as f64 / n))
        .sum();
    let scale = if k == 0 { 1.0 } else { 2.0 };
    scale * s.norm() / n
}

/// Normal-graph heights of `f` over the circle of equal volume centred at
/// `center`, sampled at `n` equal angles.
pub fn heights_over_circle(f: &BoundarySet, center: Vec2, n: usize) -> Result<Vec<f64>> {
    let r = (f.enclosed_volume() / PI).sqrt();
    let reference = disk(r, center, n)?;
    let mut h = normal_graph(&reference, f)?;
    Ok(h.swap_remove(0))
}

/// Least-squares fit `log y ≈ log C - β t`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DecayFit {
    pub beta: f64,
    #[serde(rename = "C")]
    pub c: f64,
    pub r2: f64,
    /// First and last time of the fit window.
    pub window: [f64; 2],
    pub samples: usize,
}

pub const MIN_FIT_SAMPLES: usize = 20;
pub const DEFAULT_BURN_IN: f64 = 0.2;

/// Fits an exponential to the samples after discarding the first
/// `burn_in` fraction of the time span.
pub fn fit_decay(times: &[f64], values: &[f64], burn_in: f64) -> Result<DecayFit> {
    if times.len() != values.len() {
        return Err(Error::InvalidArgument(format!(
            "{} times but {} values",
            times.len(),
            values.len()
        )));
    }
    if !(0.0..1.0).contains(&burn_in) {
        return Err(Error::InvalidArgument(format!(
            "burn-in fraction {burn_in} not in [0, 1)"
        )));
    }
    let (Some(&t0), Some(&t1)) = (times.first(), times.last()) else {
        return Err(Error::FitDomainError("no samples".into()));
    };
    let start = t0 + burn_in * (t1 - t0);
    let window: Vec<(f64, f64)> = times
        .iter()
        .zip(values)
        .filter(|(t, _)| **t >= start)
        .map(|(&t, &v)| (t, v))
        .collect();
    if window.len() < MIN_FIT_SAMPLES {
        return Err(Error::FitDomainError(format!(
            "{} samples after burn-in, need at least {MIN_FIT_SAMPLES}",
            window.len()
        )));
    }
    if let Some((t, v)) = window.iter().find(|(_, v)| v.is_nan() || *v <= 0.0) {
        return Err(Error::FitDomainError(format!(
            "non-positive sample {v} at t = {t}"
        )));
    }
    let n = window.len() as f64;
    let mt = window.iter().map(|(t, _)| t).sum::<f64>() / n;
    let my = window.iter().map(|(_, v)| v.ln()).sum::<f64>() / n;
    let (mut stt, mut sty, mut syy) = (0.0, 0.0, 0.0);
    for (t, v) in &window {
        let dt = t - mt;
        let dy = v.ln() - my;
        stt += dt * dt;
        sty += dt * dy;
        syy += dy * dy;
    }
    if stt == 0.0 {
        return Err(Error::FitDomainError(
            "fit window has zero time span".into(),
        ));
    }
    let slope = sty / stt;
    let intercept = my - slope * mt;
    let r2 = if syy == 0.0 {
        1.0
    } else {
        (sty * sty / (stt * syy)).clamp(0.0, 1.0)
    };
    Ok(DecayFit {
        beta: -slope,
        c: intercept.exp(),
        r2,
        window: [window[0].0, window[window.len() - 1].0],
        samples: window.len(),
    })
}

/// One row of `run.csv`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Sample {
    pub t: f64,
    pub volume: f64,
    pub area: f64,
    pub nonlocal: f64,
    #[serde(rename = "J")]
    pub j: f64,
    pub dissipation: f64,
    pub alpha_to_reference: f64,
    #[serde(rename = "D_to_reference")]
    pub d_to_reference: f64,
    pub min_ds: f64,
    pub dt: f64,
}

/// Time series of a run plus the quantities the decay fit needs.
#[derive(Clone, Debug, Default, Serialize)]
pub struct RunRecord {
    pub samples: Vec<Sample>,
    /// Best translation `η` per sample.
    pub eta: Vec<Vec2>,
    /// Mode amplitude of `ψ` per sample, when tracked.
    pub mode_amplitude: Vec<f64>,
    pub fit: Option<DecayFit>,
}

impl RunRecord {
    pub fn push(&mut self, s: Sample, eta: Vec2, amplitude: f64) -> Result<()> {
        if let Some(last) = self.samples.last() {
            if s.t <= last.t {
                return Err(Error::InvalidArgument(format!(
                    "sample time {} does not increase past {}",
                    s.t, last.t
                )));
            }
        }
        self.samples.push(s);
        self.eta.push(eta);
        self.mode_amplitude.push(amplitude);
        Ok(())
    }

    pub fn times(&self) -> Vec<f64> {
        self.samples.iter().map(|s| s.t).collect()
    }

    /// Writes `run.csv` with a header row.
    pub fn write_csv<W: Write>(&self, w: W) -> Result<(), csv::Error> {
        let mut out = csv::Writer::from_writer(w);
        for s in &self.samples {
            out.serialize(s)?;
        }
        if self.samples.is_empty() {
            out.write_record([
                "t",
                "volume",
                "area",
                "nonlocal",
                "J",
                "dissipation",
                "alpha_to_reference",
                "D_to_reference",
                "min_ds",
                "dt",
            ])?;
        }
        out.flush()?;
        Ok(())
    }
}

/// Largest `|dE/dt + dissipation| / dissipation` over interior samples,
/// with `dE/dt` from centred differences of `energy`.
pub fn dissipation_mismatch(
    times: &[f64],
    energy: &[f64],
    dissipation: &[f64],
    range: (usize, usize),
) -> f64 {
    let mut worst: f64 = 0.0;
    for i in range.0.max(1)..range.1.min(times.len() - 1) {
        let slope = (energy[i + 1] - energy[i - 1]) / (times[i + 1] - times[i - 1]);
        worst = worst.max((slope + dissipation[i]).abs() / dissipation[i].abs());
    }
    worst
}
