//! Surface diffusion (`V = κ_ss`) and modified Mullins–Sekerka
//! (`V = [∂_ν w]`) flows with explicit RK4 stepping and per-step
//! dissipation.

use nalgebra::{DMatrix, DVector, Dyn, LU};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::functional::{flat_nodes, potential_on_nodes, DEFAULT_GRID};
use crate::geometry::{resample_equal_arclength, BoundarySet, CurveFrame, MarkerCurve, Vec2};
use crate::greens::{single_layer_matrix, GreensTable};

/// Condition estimate above which the layer system is rejected.
pub const MAX_LAYER_CONDITION: f64 = 1e12;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FlowKind {
    Sdf,
    Mmsf,
}

impl FlowKind {
    /// Power of `h` in the explicit step restriction.
    pub fn order(self) -> i32 {
        match self {
            FlowKind::Sdf => 4,
            FlowKind::Mmsf => 3,
        }
    }

    /// Safety factor that keeps RK4 inside its stability region on
    /// equally spaced curves.
    pub fn default_c_dt(self) -> f64 {
        match self {
            FlowKind::Sdf => 0.1,
            FlowKind::Mmsf => 0.05,
        }
    }
}

impl std::str::FromStr for FlowKind {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s.to_ascii_lowercase().as_str() {
            "sdf" => Ok(FlowKind::Sdf),
            "mmsf" | "msf" => Ok(FlowKind::Mmsf),
            other => Err(format!("unknown flow `{other}` (expected sdf or mmsf)")),
        }
    }
}

impl std::fmt::Display for FlowKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            FlowKind::Sdf => "sdf",
            FlowKind::Mmsf => "mmsf",
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DtPolicy {
    /// `dt = c_dt · h^p` with `h` the smallest node spacing.
    Adaptive {
        c_dt: f64,
    },
    Fixed {
        dt: f64,
    },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FlowConfig {
    pub kind: FlowKind,
    /// Weight of the nonlocal term; ignored by surface diffusion.
    pub gamma: f64,
    /// Grid used for the potential `v_E` when `γ > 0`.
    pub grid: usize,
    pub dt: DtPolicy,
    pub resample_every: usize,
    pub volume_correction: bool,
}

impl FlowConfig {
    pub fn new(kind: FlowKind, gamma: f64) -> Self {
        Self {
            kind,
            gamma,
            grid: DEFAULT_GRID,
            dt: DtPolicy::Adaptive {
                c_dt: kind.default_c_dt(),
            },
            resample_every: 10,
            volume_correction: false,
        }
    }

    pub fn sdf() -> Self {
        Self::new(FlowKind::Sdf, 0.0)
    }

    pub fn mmsf(gamma: f64) -> Self {
        Self::new(FlowKind::Mmsf, gamma)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.gamma >= 0.0 && self.gamma.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "gamma = {} must be ≥ 0",
                self.gamma
            )));
        }
        match self.dt {
            DtPolicy::Adaptive { c_dt } if !(c_dt > 0.0 && c_dt <= 1.0) => {
                return Err(Error::InvalidArgument(format!(
                    "c_dt = {c_dt} not in (0, 1]"
                )))
            }
            DtPolicy::Fixed { dt } if !(dt > 0.0 && dt.is_finite()) => {
                return Err(Error::InvalidArgument(format!(
                    "dt = {dt} must be positive"
                )))
            }
            _ => {}
        }
        if self.resample_every == 0 {
            return Err(Error::InvalidArgument("resample_every must be ≥ 1".into()));
        }
        if self.grid < 8 {
            return Err(Error::InvalidArgument(format!(
                "grid {} too coarse",
                self.grid
            )));
        }
        Ok(())
    }

    pub fn time_step(&self, h: f64) -> f64 {
        match self.dt {
            DtPolicy::Adaptive { c_dt } => c_dt * h.powi(self.kind.order()),
            DtPolicy::Fixed { dt } => dt,
        }
    }
}

/// Bordered first-kind system `[S 1; wᵀ 0] [σ; c] = [g; 0]` with `S` the
/// single-layer matrix and `w` the arclength weights.
pub struct SingleLayerSystem {
    s: DMatrix<f64>,
    weights: Vec<f64>,
    lu: LU<f64, Dyn, Dyn>,
    condition: f64,
}

impl SingleLayerSystem {
    pub fn assemble(b: &BoundarySet, frames: &[CurveFrame]) -> Result<Self> {
        let s = single_layer_matrix(b, frames, GreensTable::shared());
        let (_, weights) = flat_nodes(b, frames);
        let n = weights.len();
        let mut a = DMatrix::zeros(n + 1, n + 1);
        a.view_mut((0, 0), (n, n)).copy_from(&s);
        for i in 0..n {
            a[(i, n)] = 1.0;
            a[(n, i)] = weights[i];
        }
        let norm1 = (0..=n).map(|j| a.column(j).abs().sum()).fold(0.0, f64::max);
        let lu = a.lu();
        let mut inv_norm: f64 = 0.0;
        for probe in 0..3 {
            let p = DVector::from_fn(n + 1, |i, _| match probe {
                0 => 1.0,
                1 => {
                    if i % 2 == 0 {
                        1.0
                    } else {
                        -1.0
                    }
                }
                _ => 1.0 + i as f64 / n as f64,
            });
            match lu.solve(&p) {
                Some(x) if x.iter().all(|v| v.is_finite()) => {
                    inv_norm = inv_norm.max(x.abs().sum() / p.abs().sum());
                }
                _ => return Err(Error::IllConditionedLayer(f64::INFINITY)),
            }
        }
        let condition = norm1 * inv_norm;
        if condition > MAX_LAYER_CONDITION {
            return Err(Error::IllConditionedLayer(condition));
        }
        Ok(Self {
            s,
            weights,
            lu,
            condition,
        })
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.s
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// Lower-bound estimate of the 1-norm condition number.
    pub fn condition_estimate(&self) -> f64 {
        self.condition
    }

    /// Returns the density `σ` and the constant `c`.
    pub fn solve(&self, g: &[f64]) -> Result<(Vec<f64>, f64)> {
        let n = self.weights.len();
        let mut rhs = DVector::zeros(n + 1);
        rhs.rows_mut(0, n).copy_from_slice(g);
        let x = self
            .lu
            .solve(&rhs)
            .ok_or(Error::IllConditionedLayer(f64::INFINITY))?;
        Ok((x.rows(0, n).iter().copied().collect(), x[n]))
    }
}

/// `κ_ss` on one equally spaced component by the three-point stencil with
/// half-node spacings `(ds_i + ds_{i+1})/2`. Weighted by `ds` the values
/// sum to zero exactly.
pub fn sdf_velocity(frame: &CurveFrame) -> Vec<f64> {
    let n = frame.len();
    let slopes = curvature_slopes(frame);
    (0..n)
        .map(|i| (slopes[i] - slopes[(i + n - 1) % n]) / frame.ds[i])
        .collect()
}

/// `∫ κ_s² ds` with the same stencil as [`sdf_velocity`].
pub fn sdf_dissipation(frame: &CurveFrame) -> f64 {
    let n = frame.len();
    curvature_slopes(frame)
        .iter()
        .enumerate()
        .map(|(i, s)| s * s * 0.5 * (frame.ds[i] + frame.ds[(i + 1) % n]))
        .sum()
}

/// `(κ_{i+1} - κ_i) / h_{i+1/2}`.
fn curvature_slopes(frame: &CurveFrame) -> Vec<f64> {
    let n = frame.len();
    (0..n)
        .map(|i| {
            let j = (i + 1) % n;
            (frame.kappa[j] - frame.kappa[i]) / (0.5 * (frame.ds[i] + frame.ds[j]))
        })
        .collect()
}

/// Layer solution behind the Mullins–Sekerka velocity.
#[derive(Clone, Debug)]
pub struct LayerVelocity {
    /// `V = [∂_ν w] = -σ`.
    pub velocity: Vec<f64>,
    pub sigma: Vec<f64>,
    /// Dirichlet data `κ + 4γ v_E`.
    pub g: Vec<f64>,
    /// Additive constant of `w` on the boundary.
    pub constant: f64,
    pub condition: f64,
}

impl LayerVelocity {
    /// `∫|∇w|² = ∫ g σ dμ`.
    pub fn dissipation(&self, ds: &[f64]) -> f64 {
        self.g
            .iter()
            .zip(&self.sigma)
            .zip(ds)
            .map(|((g, s), w)| g * s * w)
            .sum()
    }
}

/// Velocity of the modified Mullins–Sekerka flow.
pub fn ms_velocity(
    b: &BoundarySet,
    frames: &[CurveFrame],
    gamma: f64,
    m: usize,
) -> Result<LayerVelocity> {
    let mut g: Vec<f64> = frames
        .iter()
        .flat_map(|f| f.kappa.iter().copied())
        .collect();
    if gamma != 0.0 {
        for (gi, v) in g.iter_mut().zip(potential_on_nodes(b, m)?) {
            *gi += 4.0 * gamma * v;
        }
    }
    let system = SingleLayerSystem::assemble(b, frames)?;
    let (sigma, constant) = system.solve(&g)?;
    Ok(LayerVelocity {
        velocity: sigma.iter().map(|s| -s).collect(),
        sigma,
        g,
        constant,
        condition: system.condition_estimate(),
    })
}

/// Normal velocity and dissipation at one configuration.
#[derive(Clone, Debug)]
pub struct Velocity {
    pub normal: Vec<f64>,
    pub dissipation: f64,
}

pub fn velocity(b: &BoundarySet, frames: &[CurveFrame], cfg: &FlowConfig) -> Result<Velocity> {
    match cfg.kind {
        FlowKind::Sdf => Ok(Velocity {
            normal: frames.iter().flat_map(sdf_velocity).collect(),
            dissipation: frames.iter().map(sdf_dissipation).sum(),
        }),
        FlowKind::Mmsf => {
            let lv = ms_velocity(b, frames, cfg.gamma, cfg.grid)?;
            let (_, ds) = flat_nodes(b, frames);
            Ok(Velocity {
                dissipation: lv.dissipation(&ds),
                normal: lv.velocity,
            })
        }
    }
}

#[derive(Clone, Debug)]
pub struct FlowState {
    pub t: f64,
    pub steps: u64,
    pub boundary: BoundarySet,
    pub frames: Vec<CurveFrame>,
    /// Normal velocity at `boundary`, node order of the components.
    pub velocity: Vec<f64>,
    pub dissipation: f64,
    /// Volume at the start of the run.
    pub volume0: f64,
    pub last_dt: f64,
    /// Normal offset applied by the last volume correction.
    pub last_correction: f64,
}

impl FlowState {
    pub fn new(boundary: BoundarySet, cfg: &FlowConfig) -> Result<Self> {
        cfg.validate()?;
        let frames = boundary.frames()?;
        let v = velocity(&boundary, &frames, cfg)?;
        Ok(Self {
            t: 0.0,
            steps: 0,
            volume0: boundary.enclosed_volume(),
            boundary,
            frames,
            velocity: v.normal,
            dissipation: v.dissipation,
            last_dt: 0.0,
            last_correction: 0.0,
        })
    }

    pub fn volume(&self) -> f64 {
        self.boundary.enclosed_volume()
    }

    pub fn min_ds(&self) -> f64 {
        self.frames
            .iter()
            .map(CurveFrame::min_ds)
            .fold(f64::INFINITY, f64::min)
    }

    pub fn next_dt(&self, cfg: &FlowConfig) -> f64 {
        cfg.time_step(self.min_ds())
    }
}

/// `V ν` at every node.
fn normal_motion(frames: &[CurveFrame], v: &[f64]) -> Vec<Vec2> {
    frames
        .iter()
        .flat_map(|f| f.normal.iter().copied())
        .zip(v)
        .map(|(n, &s)| n * s)
        .collect()
}

fn displaced(b: &BoundarySet, disp: &[Vec2], scale: f64) -> Result<BoundarySet> {
    let offsets = b.offsets();
    let comps = b
        .components()
        .iter()
        .enumerate()
        .map(|(c, curve)| {
            let d: Vec<Vec2> = disp[offsets[c]..offsets[c] + curve.len()]
                .iter()
                .map(|&d| d * scale)
                .collect();
            curve.displaced(&d)
        })
        .collect::<Result<Vec<_>, _>>()?;
    Ok(BoundarySet::with_components_unchecked(comps))
}

fn stage(b: &BoundarySet, cfg: &FlowConfig) -> Result<Vec<Vec2>> {
    let frames = b.frames()?;
    let v = velocity(b, &frames, cfg)?;
    Ok(normal_motion(&frames, &v.normal))
}

/// Uniform normal offset restoring `target` volume (Newton on the offset).
fn correct_volume(b: &BoundarySet, target: f64) -> Result<(BoundarySet, f64)> {
    let kmax = b
        .frames()?
        .iter()
        .flat_map(|f| f.kappa.iter())
        .fold(0.0f64, |a, k| a.max(k.abs()));
    let mut offset = 0.0;
    let mut current = b.clone();
    for _ in 0..8 {
        let err = target - current.enclosed_volume();
        if err.abs() <= 1e-15 {
            break;
        }
        offset += err / current.length()?;
        if offset.abs() * kmax >= 1.0 {
            return Err(Error::TubeTooWide(1.0 - offset.abs() * kmax));
        }
        let heights: Vec<Vec<f64>> = b
            .components()
            .iter()
            .map(|c| vec![offset; c.len()])
            .collect();
        current = b.offset_along_normals(&heights)?;
    }
    Ok((current, offset))
}

/// One RK4 step along `V ν`. The input state is left untouched, so a
/// failed step keeps the last valid configuration.
pub fn step(state: &FlowState, cfg: &FlowConfig) -> Result<FlowState> {
    let dt = state.next_dt(cfg);
    let b0 = &state.boundary;
    let k1 = normal_motion(&state.frames, &state.velocity);
    let k2 = stage(&displaced(b0, &k1, dt / 2.0)?, cfg)?;
    let k3 = stage(&displaced(b0, &k2, dt / 2.0)?, cfg)?;
    let k4 = stage(&displaced(b0, &k3, dt)?, cfg)?;
    let total: Vec<Vec2> = (0..k1.len())
        .map(|i| (k1[i] + k2[i] * 2.0 + k3[i] * 2.0 + k4[i]) * (1.0 / 6.0))
        .collect();
    let mut next = displaced(b0, &total, dt)?;
    let steps = state.steps + 1;
    let t = state.t + dt;
    if steps.is_multiple_of(cfg.resample_every as u64) {
        let comps = next
            .components()
            .iter()
            .map(|c| resample_equal_arclength(c, c.len()))
            .collect::<Result<Vec<MarkerCurve>, _>>()?;
        next = BoundarySet::with_components_unchecked(comps);
        if let Some(crossing) = next.find_crossing() {
            return Err(Error::TopologyBreak { t, crossing });
        }
    }
    let mut correction = 0.0;
    if cfg.volume_correction {
        let (corrected, offset) = correct_volume(&next, state.volume0)?;
        next = corrected;
        correction = offset;
    }
    let frames = next.frames()?;
    let v = velocity(&next, &frames, cfg)?;
    Ok(FlowState {
        t,
        steps,
        boundary: next,
        frames,
        velocity: v.normal,
        dissipation: v.dissipation,
        volume0: state.volume0,
        last_dt: dt,
        last_correction: correction,
    })
}

/// Energy dissipation rate at the current state: `∫κ_s² ds` for surface
/// diffusion, `∫|∇w|²` for Mullins–Sekerka.
pub fn dissipation(state: &FlowState) -> f64 {
    state.dissipation
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures::{disk, lamella, perturbed_circle, Mode};
    use crate::functional::area;
    use std::f64::consts::PI;

    fn perturbed(r: f64, a: f64, n: usize) -> BoundarySet {
        BoundarySet::new(vec![perturbed_circle(
            r,
            Vec2::new(0.5, 0.5),
            n,
            &[Mode::new(3, a)],
        )
        .unwrap()])
        .unwrap()
    }

    #[test]
    fn stationary_shapes_have_zero_velocity() {
        let b = disk(0.2, Vec2::new(0.5, 0.5), 128).unwrap();
        let f = b.frames().unwrap();
        assert!(sdf_velocity(&f[0]).iter().all(|v| v.abs() < 1e-6));
        let lv = ms_velocity(&b, &f, 0.0, 64).unwrap();
        assert!(lv.velocity.iter().all(|v| v.abs() < 1e-6));
        assert!(lv.dissipation(&f[0].ds).abs() < 1e-8);
        assert!((lv.constant - 5.0).abs() < 1e-8);
        let s = lamella(0.5, 0.5, 64).unwrap();
        let fs = s.frames().unwrap();
        assert!(fs.iter().flat_map(sdf_velocity).all(|v| v == 0.0));
        let lv = ms_velocity(&s, &fs, 1.0, 256).unwrap();
        assert!(lv.velocity.iter().all(|v| v.abs() < 1e-4));
    }

    #[test]
    fn stripe_stays_stationary_through_resampling() {
        let mut cfg = FlowConfig::mmsf(1.0);
        cfg.grid = 256;
        let mut s = FlowState::new(lamella(0.5, 0.5, 64).unwrap(), &cfg).unwrap();
        for _ in 0..2 * cfg.resample_every {
            s = step(&s, &cfg).unwrap();
            assert!(
                s.velocity.iter().all(|v| v.abs() < 1e-4),
                "step {}",
                s.steps
            );
        }
    }

    #[test]
    fn linearized_rates() {
        let (r, eps, k) = (0.35, 1e-3, 3.0);
        let b = perturbed(r, eps, 256);
        let f = b.frames().unwrap();
        let v = sdf_velocity(&f[0]);
        let amp = -eps * k * k * (k * k - 1.0) / r.powi(4);
        let coef = |v: &[f64]| {
            v.iter()
                .enumerate()
                .map(|(i, v)| v * (k * 2.0 * PI * i as f64 / 256.0).cos())
                .sum::<f64>()
                * 2.0
                / 256.0
        };
        assert!(
            (coef(&v) - amp).abs() < 0.02 * amp.abs(),
            "{} vs {amp}",
            coef(&v)
        );
        let ds: f64 = v.iter().zip(&f[0].ds).map(|(v, w)| v * w).sum();
        let norm = v.iter().map(|v| v * v).sum::<f64>().sqrt();
        assert!(ds.abs() <= 1e-8 * norm);
        // Mullins–Sekerka on a circle in the plane decays mode k at 2k(k²-1)/r³
        let lv = ms_velocity(&b, &f, 0.0, 64).unwrap();
        let proj = coef(&lv.velocity);
        let planar = -eps * 2.0 * k * (k * k - 1.0) / r.powi(3);
        assert!(
            (proj - planar).abs() < 0.05 * planar.abs(),
            "{proj} vs {planar}"
        );
        let mean: f64 = lv.velocity.iter().zip(&f[0].ds).map(|(v, w)| v * w).sum();
        assert!(mean.abs() < 1e-6 * norm_l2(&lv.velocity, &f[0].ds) * f[0].length());
    }

    fn norm_l2(v: &[f64], ds: &[f64]) -> f64 {
        v.iter().zip(ds).map(|(v, w)| v * v * w).sum::<f64>().sqrt()
    }

    #[test]
    fn layer_system_reproduces_constants() {
        let b = perturbed(0.3, 0.03, 128);
        let f = b.frames().unwrap();
        let sys = SingleLayerSystem::assemble(&b, &f).unwrap();
        let (sigma, c) = sys.solve(&vec![2.5; 128]).unwrap();
        assert!(sigma.iter().all(|s| s.abs() < 1e-8));
        assert!((c - 2.5).abs() < 1e-8);
        assert!(sys.condition_estimate() > 1.0);
    }

    #[test]
    fn circle_is_stationary_under_sdf() {
        let b = disk(0.3, Vec2::new(0.5, 0.5), 64).unwrap();
        let cfg = FlowConfig::sdf();
        let mut s = FlowState::new(b.clone(), &cfg).unwrap();
        for _ in 0..1000 {
            s = step(&s, &cfg).unwrap();
        }
        let drift = s.boundary.components()[0]
            .lift()
            .iter()
            .zip(b.components()[0].lift())
            .map(|(p, q)| (*p - *q).norm())
            .fold(0.0, f64::max);
        assert!(drift < 1e-6, "{drift}");
        assert!(s.dissipation.abs() < 1e-8);
    }

    #[test]
    fn sdf_decreases_area_and_keeps_volume() {
        let b = perturbed(0.35, 0.02, 64);
        let cfg = FlowConfig::sdf();
        let mut s = FlowState::new(b, &cfg).unwrap();
        let mut a = area(&s.boundary).unwrap();
        for _ in 0..400 {
            s = step(&s, &cfg).unwrap();
            let a1 = area(&s.boundary).unwrap();
            assert!(a1 < a + 1e-10);
            a = a1;
        }
        assert!((s.volume() - s.volume0).abs() < 1e-6);
    }

    #[test]
    fn mmsf_decreases_energy_and_keeps_volume() {
        let b = perturbed(0.35, 0.02, 64);
        let cfg = FlowConfig::mmsf(0.0);
        let mut s = FlowState::new(b, &cfg).unwrap();
        let mut a = area(&s.boundary).unwrap();
        for _ in 0..300 {
            s = step(&s, &cfg).unwrap();
            let a1 = area(&s.boundary).unwrap();
            assert!(a1 < a + 1e-10);
            a = a1;
        }
        assert!((s.volume() - s.volume0).abs() < 1e-6);
    }

    #[test]
    fn volume_correction_restores_volume() {
        let b = perturbed(0.35, 0.02, 64);
        let cfg = FlowConfig {
            volume_correction: true,
            ..FlowConfig::sdf()
        };
        let mut s = FlowState::new(b, &cfg).unwrap();
        for _ in 0..50 {
            s = step(&s, &cfg).unwrap();
            assert!((s.volume() - s.volume0).abs() < 1e-12);
            assert!(s.last_correction.abs() < 1e-6);
        }
    }

    #[test]
    fn mmsf_velocity_is_translation_equivariant() {
        let b = perturbed(0.3, 0.02, 96);
        let shifted = b.translated(Vec2::new(0.137, -0.291));
        let v0 = ms_velocity(&b, &b.frames().unwrap(), 0.0, 64)
            .unwrap()
            .velocity;
        let v1 = ms_velocity(&shifted, &shifted.frames().unwrap(), 0.0, 64)
            .unwrap()
            .velocity;
        for (a, b) in v0.iter().zip(&v1) {
            assert!((a - b).abs() < 1e-8);
        }
    }

    #[test]
    fn config_validation() {
        let mut cfg = FlowConfig::mmsf(-1.0);
        assert!(cfg.validate().is_err());
        cfg.gamma = 0.5;
        cfg.dt = DtPolicy::Adaptive { c_dt: 1.5 };
        assert!(cfg.validate().is_err());
        assert_eq!("MMSF".parse::<FlowKind>(), Ok(FlowKind::Mmsf));
    }
}
