//! Area, the nonlocal interaction energy, `J = A + γ ∫|∇v_E|²`, boundary
//! traces of the potential and first-variation checks.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::geometry::{BoundarySet, CurveFrame, MarkerCurve, TorusPoint, Vec2};
use crate::greens::{
    h_minus_one_energy, poisson_solve, potential_normal_derivative, rasterize, single_layer_matrix,
    GreensTable, GridField,
};

/// Default grid resolution for potentials.
pub const DEFAULT_GRID: usize = 512;

/// `J = area + γ · nonlocal`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct EnergyBreakdown {
    pub area: f64,
    pub nonlocal: f64,
    pub gamma: f64,
    pub j: f64,
}

impl EnergyBreakdown {
    pub fn new(area: f64, nonlocal: f64, gamma: f64) -> Self {
        Self {
            area,
            nonlocal,
            gamma,
            j: area + gamma * nonlocal,
        }
    }
}

/// Nodal boundary data in component order; `offsets[c]` is the first node
/// of component `c`.
#[derive(Clone, Debug, Serialize)]
pub struct BoundaryTrace {
    pub offsets: Vec<usize>,
    pub ds: Vec<f64>,
    pub v: Vec<f64>,
    pub dv_dn: Vec<f64>,
    pub kappa: Vec<f64>,
    /// `κ + 4γ v_E`.
    pub residual: Vec<f64>,
    /// Arclength mean of the residual.
    pub lambda: f64,
    /// Arclength standard deviation of the residual.
    pub defect: f64,
    pub gamma: f64,
}

/// Total length of the boundary.
pub fn area(b: &BoundarySet) -> Result<f64> {
    Ok(b.length()?)
}

/// `u_E = 2χ_E - 1` with exact cell area fractions.
pub fn indicator(b: &BoundarySet, m: usize) -> Result<GridField> {
    Ok(rasterize(b, m)?.map(|f| 2.0 * f - 1.0))
}

/// Zero-mean potential `v_E` with `-Δv_E = u_E - m`.
pub fn potential(b: &BoundarySet, m: usize) -> Result<GridField> {
    Ok(poisson_solve(&indicator(b, m)?))
}

/// `∫|∇v_E|²` on an `m × m` grid.
pub fn nonlocal_energy(b: &BoundarySet, m: usize) -> Result<f64> {
    Ok(h_minus_one_energy(&indicator(b, m)?))
}

pub fn energy(b: &BoundarySet, gamma: f64, m: usize) -> Result<EnergyBreakdown> {
    Ok(EnergyBreakdown::new(
        area(b)?,
        nonlocal_energy(b, m)?,
        gamma,
    ))
}

/// `J` alone; the grid solve is skipped when `γ = 0`.
pub fn j_value(b: &BoundarySet, gamma: f64, m: usize) -> Result<f64> {
    let a = area(b)?;
    if gamma == 0.0 {
        Ok(a)
    } else {
        Ok(a + gamma * nonlocal_energy(b, m)?)
    }
}

/// Arclength weights and nodal positions of all components, flattened.
pub fn flat_nodes(b: &BoundarySet, frames: &[CurveFrame]) -> (Vec<Vec2>, Vec<f64>) {
    let pts = b
        .components()
        .iter()
        .flat_map(|c| c.lift().iter().copied())
        .collect();
    let ds = frames.iter().flat_map(|f| f.ds.iter().copied()).collect();
    (pts, ds)
}

/// Arclength mean and standard deviation.
pub fn weighted_stats(values: &[f64], ds: &[f64]) -> (f64, f64) {
    let total: f64 = ds.iter().sum();
    let mean = values.iter().zip(ds).map(|(v, w)| v * w).sum::<f64>() / total;
    let var = values
        .iter()
        .zip(ds)
        .map(|(v, w)| (v - mean).powi(2) * w)
        .sum::<f64>()
        / total;
    (mean, var.sqrt())
}

/// `v_E` sampled at the nodes by bicubic interpolation of the grid solve.
pub fn potential_on_nodes(b: &BoundarySet, m: usize) -> Result<Vec<f64>> {
    let v = potential(b, m)?;
    Ok(b.components()
        .iter()
        .flat_map(|c| c.lift().iter().map(|&p| v.sample(TorusPoint::from_lift(p))))
        .collect::<Vec<_>>())
}

pub fn boundary_trace(b: &BoundarySet, gamma: f64, m: usize) -> Result<BoundaryTrace> {
    let frames = b.frames()?;
    let (_, ds) = flat_nodes(b, &frames);
    let v = potential_on_nodes(b, m)?;
    let s = single_layer_matrix(b, &frames, GreensTable::shared());
    let dv_dn = potential_normal_derivative(&frames, &s);
    let kappa: Vec<f64> = frames
        .iter()
        .flat_map(|f| f.kappa.iter().copied())
        .collect();
    let residual: Vec<f64> = kappa
        .iter()
        .zip(&v)
        .map(|(k, v)| k + 4.0 * gamma * v)
        .collect();
    let (lambda, defect) = weighted_stats(&residual, &ds);
    Ok(BoundaryTrace {
        offsets: b.offsets(),
        ds,
        v,
        dv_dn,
        kappa,
        residual,
        lambda,
        defect,
        gamma,
    })
}

/// A smooth periodic vector field on the torus, evaluated on lifts.
pub trait VectorField: Sync {
    fn eval(&self, x: Vec2) -> Result<Vec2>;
}

impl<F: Fn(Vec2) -> Vec2 + Sync> VectorField for F {
    fn eval(&self, x: Vec2) -> Result<Vec2> {
        Ok(self(x))
    }
}

/// Flows every node through time `t` of the field with `steps` RK4 steps.
pub fn advect(
    b: &BoundarySet,
    field: &dyn VectorField,
    t: f64,
    steps: usize,
) -> Result<BoundarySet> {
    let dt = t / steps as f64;
    let comps = b
        .components()
        .iter()
        .map(|c| {
            let nodes = c
                .lift()
                .iter()
                .map(|&p0| {
                    let mut p = p0;
                    for _ in 0..steps {
                        let k1 = field.eval(p)?;
                        let k2 = field.eval(p + k1 * (dt / 2.0))?;
                        let k3 = field.eval(p + k2 * (dt / 2.0))?;
                        let k4 = field.eval(p + k3 * dt)?;
                        p += (k1 + k2 * 2.0 + k3 * 2.0 + k4) * (dt / 6.0);
                    }
                    Ok(p)
                })
                .collect::<Result<Vec<_>>>()?;
            Ok(MarkerCurve::from_lift(nodes, c.winding())?)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(BoundarySet::new(comps)?)
}

/// Step ladder for finite-difference derivatives: the step starts at
/// `start`, halves per level, and consecutive Richardson values must agree
/// within `atol + rtol·|value|`.
#[derive(Clone, Copy, Debug)]
pub struct FdLadder {
    pub start: f64,
    pub levels: usize,
    pub rtol: f64,
    pub atol: f64,
}

impl FdLadder {
    /// Ladder whose first step moves nodes by `1e-3 · min ds`.
    pub fn for_displacement(min_ds: f64, max_speed: f64) -> Self {
        Self {
            start: 1e-3 * min_ds / max_speed.max(1e-300),
            levels: 6,
            rtol: 1e-6,
            atol: 1e-8,
        }
    }

    /// Richardson extrapolation of a second-order difference quotient `q(δ)`.
    pub fn extrapolate(&self, mut q: impl FnMut(f64) -> Result<f64>) -> Result<f64> {
        let mut delta = self.start;
        let mut prev_q = q(delta)?;
        let mut prev_r: Option<f64> = None;
        let mut history = Vec::new();
        for _ in 1..self.levels.max(2) {
            delta /= 2.0;
            let qd = q(delta)?;
            let r = (4.0 * qd - prev_q) / 3.0;
            history.push(r);
            if let Some(p) = prev_r {
                if (r - p).abs() <= self.atol + self.rtol * r.abs() {
                    return Ok(r);
                }
            }
            prev_r = Some(r);
            prev_q = qd;
        }
        Err(Error::NonConvergedDerivative {
            levels: self.levels,
            last: history,
        })
    }
}

/// Finite-difference and formula values of a directional derivative.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct VariationCheck {
    pub fd: f64,
    pub formula: f64,
}

/// Compares `d/dt J(Φ_t(E))` at `t = 0` with `∫(κ + 4γ v_E)⟨X, ν⟩ dμ`.
pub fn first_variation_check(
    b: &BoundarySet,
    gamma: f64,
    m: usize,
    field: &dyn VectorField,
    ladder: Option<FdLadder>,
) -> Result<VariationCheck> {
    let frames = b.frames()?;
    let (pts, ds) = flat_nodes(b, &frames);
    let normals: Vec<Vec2> = frames
        .iter()
        .flat_map(|f| f.normal.iter().copied())
        .collect();
    let kappa: Vec<f64> = frames
        .iter()
        .flat_map(|f| f.kappa.iter().copied())
        .collect();
    let x: Vec<Vec2> = pts.iter().map(|&p| field.eval(p)).collect::<Result<_>>()?;
    let v = if gamma != 0.0 {
        potential_on_nodes(b, m)?
    } else {
        vec![0.0; pts.len()]
    };
    let formula: f64 = (0..pts.len())
        .map(|i| (kappa[i] + 4.0 * gamma * v[i]) * x[i].dot(normals[i]) * ds[i])
        .sum();
    let max_speed = x.iter().map(|v| v.norm()).fold(0.0, f64::max);
    if max_speed == 0.0 {
        return Ok(VariationCheck { fd: 0.0, formula });
    }
    let min_ds = ds.iter().copied().fold(f64::INFINITY, f64::min);
    let ladder = ladder.unwrap_or_else(|| FdLadder::for_displacement(min_ds, max_speed));
    let fd = ladder.extrapolate(|d| {
        let plus = j_value(&advect(b, field, d, 2)?, gamma, m)?;
        let minus = j_value(&advect(b, field, -d, 2)?, gamma, m)?;
        Ok((plus - minus) / (2.0 * d))
    })?;
    Ok(VariationCheck { fd, formula })
}
