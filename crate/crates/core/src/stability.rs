//! Second variation `Π_E` at critical sets: assembly, the translation
//! frame, the spectrum on `T⊥`, divergence-free normal extensions and
//! finite-difference checks.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::functional::{
    advect, boundary_trace, flat_nodes, j_value, BoundaryTrace, FdLadder, VariationCheck,
    VectorField,
};
use crate::geometry::{BoundarySet, CurveFrame, DistanceField, PeriodicSpline, TorusPoint, Vec2};
use crate::greens::{single_layer_matrix, GreensTable};

/// Criticality defect above which no stability verdict is issued.
pub const CRITICALITY_TOLERANCE: f64 = 1e-3;

/// Translation modes `t_i = ⟨ν, ε_i⟩` in the frame `{ε_i}` that
/// diagonalizes `A_ij = ∫⟨ν, e_i⟩⟨ν, e_j⟩ dμ`.
#[derive(Clone, Debug)]
pub struct TranslationFrame {
    /// Rotated orthonormal basis `ε_1, ε_2`.
    pub basis: [Vec2; 2],
    /// `‖t_i‖²_{L²(∂E)}`, the eigenvalues of `A`.
    pub norms2: [f64; 2],
    /// Nodal values of `t_1, t_2`.
    pub modes: [Vec<f64>; 2],
    /// Indices `i` with `‖t_i‖ ≥ 1e-8` (the set `I_E`).
    pub active: Vec<usize>,
}

pub fn translation_frame(b: &BoundarySet, frames: &[CurveFrame]) -> TranslationFrame {
    let (_, ds) = flat_nodes(b, frames);
    let normals: Vec<Vec2> = frames
        .iter()
        .flat_map(|f| f.normal.iter().copied())
        .collect();
    let (mut a11, mut a12, mut a22) = (0.0, 0.0, 0.0);
    for (n, w) in normals.iter().zip(&ds) {
        a11 += n.x * n.x * w;
        a12 += n.x * n.y * w;
        a22 += n.y * n.y * w;
    }
    // rotation angle that diagonalizes the 2×2 matrix
    let theta = 0.5 * (2.0 * a12).atan2(a11 - a22);
    let (s, c) = theta.sin_cos();
    let basis = [Vec2::new(c, s), Vec2::new(-s, c)];
    let quad = |e: Vec2| a11 * e.x * e.x + 2.0 * a12 * e.x * e.y + a22 * e.y * e.y;
    let norms2 = [quad(basis[0]).max(0.0), quad(basis[1]).max(0.0)];
    let modes = [
        normals.iter().map(|n| n.dot(basis[0])).collect(),
        normals.iter().map(|n| n.dot(basis[1])).collect(),
    ];
    let active = (0..2).filter(|&i| norms2[i].sqrt() >= 1e-8).collect();
    TranslationFrame {
        basis,
        norms2,
        modes,
        active,
    }
}

/// Discretized `Π_E(φ) = φᵀ Q φ` with its mass matrix and constraint data.
#[derive(Clone, Debug)]
pub struct QuadraticFormMatrix {
    pub q: DMatrix<f64>,
    /// Diagonal arclength weights.
    pub w: Vec<f64>,
    pub offsets: Vec<usize>,
    pub translations: TranslationFrame,
    pub gamma: f64,
    pub grid: usize,
    /// Boundary trace at the assembly point.
    pub trace: BoundaryTrace,
}

impl QuadraticFormMatrix {
    pub fn len(&self) -> usize {
        self.w.len()
    }

    pub fn is_empty(&self) -> bool {
        self.w.is_empty()
    }

    /// `φᵀ Q φ`.
    pub fn form(&self, phi: &[f64]) -> f64 {
        let p = DVector::from_column_slice(phi);
        p.dot(&(&self.q * &p))
    }

    /// `φᵀ W φ`.
    pub fn mass(&self, phi: &[f64]) -> f64 {
        phi.iter().zip(&self.w).map(|(p, w)| p * p * w).sum()
    }

    /// Largest asymmetry `|Q_ij - Q_ji|`.
    pub fn asymmetry(&self) -> f64 {
        let n = self.len();
        let mut worst: f64 = 0.0;
        for i in 0..n {
            for j in 0..i {
                worst = worst.max((self.q[(i, j)] - self.q[(j, i)]).abs());
            }
        }
        worst
    }
}

/// Fourth-order periodic Dirichlet form `∫ φ_s² ds` on one component,
/// written into the diagonal block starting at `off`. With `h_i = ds_i`,
/// entries are scaled by `1/√(h_i h_j)`, which is exact for equal spacing
/// and keeps the block symmetric.
fn dirichlet_block(q: &mut DMatrix<f64>, off: usize, ds: &[f64]) {
    let n = ds.len();
    let stencil = [(0usize, 2.5), (1, -4.0 / 3.0), (2, 1.0 / 12.0)];
    for i in 0..n {
        for &(k, c) in &stencil {
            for j in [(i + k) % n, (i + n - k) % n] {
                // the centre entry is visited twice
                let v = c / (ds[i] * ds[j]).sqrt();
                q[(off + i, off + j)] += if k == 0 { v / 2.0 } else { v };
            }
        }
    }
}

/// Assembles `Q = D - κ² W + 8γ G_W + 4γ diag(∂_ν v_E) W`.
///
/// `G_W` is the symmetrized product of the mass matrix with the single
/// layer matrix, so `φᵀ G_W φ ≈ ∬ G φ φ dμ dμ`. The nodes are assumed
/// close to equally spaced along each component.
pub fn assemble_pi(b: &BoundarySet, gamma: f64, m: usize) -> Result<QuadraticFormMatrix> {
    let frames = b.frames()?;
    let trace = boundary_trace(b, gamma, m)?;
    let offsets = b.offsets();
    let n = b.total_nodes();
    let w = trace.ds.clone();
    let mut q = DMatrix::zeros(n, n);
    for (c, f) in frames.iter().enumerate() {
        dirichlet_block(&mut q, offsets[c], &f.ds);
    }
    for i in 0..n {
        q[(i, i)] -= trace.kappa[i] * trace.kappa[i] * w[i];
        q[(i, i)] += 4.0 * gamma * trace.dv_dn[i] * w[i];
    }
    if gamma != 0.0 {
        let s = single_layer_matrix(b, &frames, GreensTable::shared());
        for i in 0..n {
            for j in 0..n {
                let g = 0.5 * (w[i] * s[(i, j)] + w[j] * s[(j, i)]);
                q[(i, j)] += 8.0 * gamma * g;
            }
        }
    }
    let translations = translation_frame(b, &frames);
    Ok(QuadraticFormMatrix {
        q,
        w,
        offsets,
        translations,
        gamma,
        grid: m,
        trace,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Verdict {
    StrictlyStable,
    Stable,
    Unstable,
}

impl std::fmt::Display for Verdict {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Verdict::StrictlyStable => "strictly-stable",
            Verdict::Stable => "stable",
            Verdict::Unstable => "unstable",
        })
    }
}

/// Spectrum of `Π_E` on `T⊥` and the derived verdict.
#[derive(Clone, Debug, Serialize)]
pub struct StabilityReport {
    /// Eigenvalues of `Q φ = λ W φ` on `T⊥`, ascending.
    pub eigenvalues: Vec<f64>,
    /// `Q(t_i) / ‖t_i‖²_W` for the active translation modes.
    pub translation_values: Vec<f64>,
    pub translation_norms2: Vec<f64>,
    /// Active translation modes whose value lies within `ζ_tol`.
    pub zero_modes: usize,
    pub zeta_tol: f64,
    /// `None` when the boundary is not critical.
    pub verdict: Option<Verdict>,
    pub gamma: f64,
    pub nodes: usize,
    pub components: usize,
    pub grid: usize,
    pub lambda: f64,
    pub criticality_defect: f64,
    pub warning: Option<String>,
}

/// Orthonormal basis of the complement of the columns of `c` (Householder).
fn complement_basis(c: &DMatrix<f64>) -> DMatrix<f64> {
    let (n, k) = c.shape();
    let qr = c.clone().qr();
    let mut full = DMatrix::<f64>::identity(n, n);
    qr.q_tr_mul(&mut full);
    // rows of Qᵀ beyond k span the complement
    full.rows(k, n - k).transpose()
}

/// Solves the eigenproblem of `Q` restricted to mean-zero functions that
/// are `L²`-orthogonal to the active translation modes.
pub fn constrained_spectrum(qf: &QuadraticFormMatrix) -> Result<StabilityReport> {
    let n = qf.len();
    let sq: Vec<f64> = qf.w.iter().map(|w| w.sqrt()).collect();
    let active = &qf.translations.active;
    let mut c = DMatrix::zeros(n, 1 + active.len());
    for i in 0..n {
        c[(i, 0)] = sq[i];
        for (a, &t) in active.iter().enumerate() {
            c[(i, a + 1)] = qf.translations.modes[t][i] * sq[i];
        }
    }
    let z = complement_basis(&c);
    let mut scaled = qf.q.clone();
    for i in 0..n {
        for j in 0..n {
            scaled[(i, j)] /= sq[i] * sq[j];
        }
    }
    let h = z.transpose() * &scaled * &z;
    let h = (&h + h.transpose()) * 0.5;
    if h.iter().any(|v| !v.is_finite()) {
        return Err(Error::NumericalBreakdown(
            "non-finite entries in the restricted form".into(),
        ));
    }
    let eig = SymmetricEigen::try_new(h, 1e-14, 0).ok_or_else(|| {
        Error::NumericalBreakdown("symmetric eigensolver did not converge".into())
    })?;
    let mut eigenvalues: Vec<f64> = eig.eigenvalues.iter().copied().collect();
    eigenvalues.sort_by(f64::total_cmp);
    let max_abs = eigenvalues.iter().fold(0.0f64, |a, v| a.max(v.abs()));
    let zeta_tol = 10.0 * max_abs / (n as f64 * n as f64);
    let mut translation_values = Vec::new();
    let mut translation_norms2 = Vec::new();
    for &t in active {
        let mode = &qf.translations.modes[t];
        let m2 = qf.mass(mode);
        translation_values.push(qf.form(mode) / m2);
        translation_norms2.push(m2);
    }
    let zero_modes = translation_values
        .iter()
        .filter(|v| v.abs() <= zeta_tol)
        .count();
    let defect = qf.trace.defect;
    let (verdict, warning) = if defect > CRITICALITY_TOLERANCE {
        (
            None,
            Some(format!(
                "criticality defect {defect:.3e} exceeds {CRITICALITY_TOLERANCE:e}; the second variation is not Π_E here and no verdict is given"
            )),
        )
    } else {
        let min = eigenvalues.first().copied().unwrap_or(f64::INFINITY);
        let v = if min > zeta_tol {
            Verdict::StrictlyStable
        } else if min < -zeta_tol {
            Verdict::Unstable
        } else {
            Verdict::Stable
        };
        (Some(v), None)
    };
    Ok(StabilityReport {
        eigenvalues,
        translation_values,
        translation_norms2,
        zero_modes,
        zeta_tol,
        verdict,
        gamma: qf.gamma,
        nodes: n,
        components: qf.offsets.len(),
        grid: qf.grid,
        lambda: qf.trace.lambda,
        criticality_defect: defect,
        warning,
    })
}

/// Volume-preserving extension `X = φ(π_E(x)) ξ(x) ∇d_E(x)` of the normal
/// field `φ ν` with `ξ(y + tν(y)) = 1 / (1 + tκ(y))`, so that `div X = 0`
/// in the tube around `∂E`.
pub struct DivFreeField {
    distance: DistanceField,
    phi: Vec<PeriodicSpline>,
}

impl DivFreeField {
    pub fn tube_width(&self) -> f64 {
        self.distance.tube_width()
    }
}

/// Builds the divergence-free extension of nodal values `phi` (component order).
pub fn divfree_normal_field(b: &BoundarySet, phi: &[f64]) -> Result<DivFreeField> {
    if phi.len() != b.total_nodes() {
        return Err(Error::InvalidArgument(format!(
            "{} values for {} nodes",
            phi.len(),
            b.total_nodes()
        )));
    }
    let offsets = b.offsets();
    let splines = b
        .components()
        .iter()
        .enumerate()
        .map(|(c, curve)| PeriodicSpline::new(&phi[offsets[c]..offsets[c] + curve.len()]))
        .collect();
    Ok(DivFreeField {
        distance: DistanceField::new(b)?,
        phi: splines,
    })
}

impl VectorField for DivFreeField {
    fn eval(&self, x: Vec2) -> Result<Vec2> {
        let q = self.distance.query(TorusPoint::from_lift(x));
        let width = self.distance.tube_width();
        if q.distance.abs() > width {
            return Err(Error::OutsideTube {
                distance: q.distance,
                width,
            });
        }
        let (_, d1, d2) = self.distance.splines()[q.component].eval(q.param);
        let speed = d1.norm();
        let kappa = d1.cross(d2) / (speed * speed * speed);
        let stretch = 1.0 + q.distance * kappa;
        if stretch <= 0.0 {
            return Err(Error::TubeTooWide(stretch));
        }
        let (phi, _) = self.phi[q.component].eval(q.param);
        Ok(q.normal * (phi / stretch))
    }
}

/// Compares the second derivative of `J` along the flow of the
/// divergence-free extension of `φ` with `φᵀ Q φ`.
pub fn second_variation_check(
    b: &BoundarySet,
    gamma: f64,
    m: usize,
    phi: &[f64],
    ladder: Option<FdLadder>,
) -> Result<VariationCheck> {
    let qf = assemble_pi(b, gamma, m)?;
    if qf.trace.defect > CRITICALITY_TOLERANCE {
        return Err(Error::InvalidArgument(format!(
            "boundary is not critical (defect {:.3e})",
            qf.trace.defect
        )));
    }
    let mean: f64 = phi.iter().zip(&qf.w).map(|(p, w)| p * w).sum();
    let scale: f64 = qf.mass(phi).sqrt() * qf.w.iter().sum::<f64>().sqrt();
    if mean.abs() > 1e-8 * scale.max(1e-300) {
        return Err(Error::InvalidArgument(format!(
            "φ has mean {mean:e}, expected zero"
        )));
    }
    let pi = qf.form(phi);
    let field = divfree_normal_field(b, phi)?;
    let max_phi = phi.iter().fold(0.0f64, |a, v| a.max(v.abs()));
    if max_phi == 0.0 {
        return Ok(VariationCheck {
            fd: 0.0,
            formula: pi,
        });
    }
    let min_ds = qf.w.iter().copied().fold(f64::INFINITY, f64::min);
    let ladder = ladder.unwrap_or(if gamma == 0.0 {
        FdLadder {
            rtol: 1e-4,
            atol: 1e-6,
            ..FdLadder::for_displacement(min_ds, max_phi)
        }
    } else {
        // the grid energy is piecewise quadratic in the cut-cell fractions,
        // so steps must sweep many cells for the kinks to average out
        FdLadder {
            start: 16.0 / (m as f64 * max_phi),
            levels: 4,
            rtol: 2e-3,
            atol: 1e-6,
        }
    });
    let j0 = j_value(b, gamma, m)?;
    let fd = ladder.extrapolate(|d| {
        let plus = j_value(&advect(b, &field, d, 4)?, gamma, m)?;
        let minus = j_value(&advect(b, &field, -d, 4)?, gamma, m)?;
        Ok((plus - 2.0 * j0 + minus) / (d * d))
    })?;
    Ok(VariationCheck { fd, formula: pi })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures::{disk, lamella};
    use std::f64::consts::PI;

    fn circle_phi(n: usize, k: usize) -> Vec<f64> {
        (0..n)
            .map(|i| (k as f64 * 2.0 * PI * i as f64 / n as f64).cos())
            .collect()
    }

    #[test]
    fn circle_form_values_and_spectrum() {
        let b = disk(0.2, Vec2::new(0.5, 0.5), 256).unwrap();
        let qf = assemble_pi(&b, 0.0, 128).unwrap();
        assert!(qf.asymmetry() < 1e-10);
        let phi = circle_phi(256, 2);
        let ratio = qf.form(&phi) / qf.mass(&phi);
        assert!((ratio - 75.0).abs() < 0.75, "{ratio}");
        let tf = &qf.translations;
        assert_eq!(tf.active.len(), 2);
        for i in 0..2 {
            assert!((tf.norms2[i] - PI * 0.2).abs() < 1e-6);
            assert!(qf.form(&tf.modes[i]).abs() <= 1e-3 * qf.mass(&tf.modes[i]));
        }
        let rep = constrained_spectrum(&qf).unwrap();
        let ev = &rep.eigenvalues;
        for (got, want) in ev.iter().zip([75.0, 75.0, 200.0, 200.0]) {
            assert!((got - want).abs() < 0.01 * want, "{ev:?}");
        }
        assert_eq!(rep.verdict, Some(Verdict::StrictlyStable));
        assert_eq!(rep.zero_modes, 2);
    }

    #[test]
    fn stripe_spectrum() {
        let b = lamella(0.5, 0.5, 64).unwrap();
        let qf = assemble_pi(&b, 0.0, 128).unwrap();
        assert_eq!(qf.translations.active.len(), 1);
        let mut phi = vec![0.0; 128];
        for i in 0..64 {
            phi[64 + i] = (2.0 * PI * i as f64 / 64.0).cos();
        }
        let ratio = qf.form(&phi) / qf.mass(&phi);
        assert!(
            (ratio - 4.0 * PI * PI).abs() < 0.01 * 4.0 * PI * PI,
            "{ratio}"
        );
        let rep = constrained_spectrum(&qf).unwrap();
        assert!((rep.eigenvalues[0] - 4.0 * PI * PI).abs() < 0.01 * 4.0 * PI * PI);
        assert_eq!(rep.verdict, Some(Verdict::StrictlyStable));
    }

    #[test]
    fn divergence_free_in_the_tube() {
        let b = disk(0.2, Vec2::new(0.5, 0.5), 128).unwrap();
        let phi = circle_phi(128, 2);
        let x = divfree_normal_field(&b, &phi).unwrap();
        let h = 1e-5;
        for k in 0..40 {
            let th = 0.37 + k as f64 * 0.61;
            let t = -0.05 + 0.1 * ((k * 7) % 40) as f64 / 40.0;
            let p = Vec2::new(0.5, 0.5) + Vec2::new(th.cos(), th.sin()) * (0.2 + t);
            let dx =
                (x.eval(p + Vec2::new(h, 0.0)).unwrap() - x.eval(p - Vec2::new(h, 0.0)).unwrap()).x;
            let dy =
                (x.eval(p + Vec2::new(0.0, h)).unwrap() - x.eval(p - Vec2::new(0.0, h)).unwrap()).y;
            assert!(
                ((dx + dy) / (2.0 * h)).abs() < 1e-5,
                "{}",
                (dx + dy) / (2.0 * h)
            );
        }
        // boundary values
        for i in (0..128).step_by(9) {
            let p = b.components()[0].lift()[i];
            let v = x.eval(p).unwrap();
            let nu = (p - Vec2::new(0.5, 0.5)) / 0.2;
            assert!((v.dot(nu) - phi[i]).abs() < 1e-10);
        }
        assert!(matches!(
            x.eval(Vec2::new(0.5, 0.5)),
            Err(Error::OutsideTube { .. })
        ));
    }

    #[test]
    fn second_variation_on_circle() {
        let b = disk(0.2, Vec2::new(0.5, 0.5), 256).unwrap();
        let phi = circle_phi(256, 2);
        let c = second_variation_check(&b, 0.0, 128, &phi, None).unwrap();
        assert!((c.fd - c.formula).abs() < 1e-3 * c.formula.abs(), "{c:?}");
    }

    #[test]
    fn second_variation_on_stripe_with_nonlocal_term() {
        let b = lamella(0.5, 0.5, 64).unwrap();
        let mut phi = vec![0.0; 128];
        for i in 0..64 {
            phi[64 + i] = (2.0 * PI * i as f64 / 64.0).cos();
        }
        let c = second_variation_check(&b, 1.0, 512, &phi, None).unwrap();
        assert!((c.fd - c.formula).abs() < 1e-2 * c.formula.abs(), "{c:?}");
    }
}
