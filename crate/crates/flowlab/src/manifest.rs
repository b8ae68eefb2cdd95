//! `flowlab oracles`: independent reference values and their agreement
//! with the production solvers, written to `oracles.json`.

use std::collections::BTreeMap;
use std::path::Path;

use flowlab_core::fixtures::{disk, lamella, perturbed_circle, Mode};
use flowlab_core::flows::ms_velocity;
use flowlab_core::functional::{boundary_trace, nonlocal_energy};
use flowlab_core::geometry::BoundarySet;
use flowlab_core::oracles::{
    dense_spectrum_result, greens_laplacian_result, stripe_oracle_result, stripe_potential_oracle,
    transmission_oracle_result, turning_numbers, OracleResult,
};
use flowlab_core::stability::{assemble_pi, constrained_spectrum};
use flowlab_core::Vector;
use serde::Serialize;

use crate::error::Result;
use crate::write_json;

/// One production-versus-oracle check.
#[derive(Clone, Debug, Serialize)]
pub struct Comparison {
    pub name: String,
    pub value: f64,
    pub tolerance: f64,
    pub pass: bool,
}

impl Comparison {
    fn new(name: &str, value: f64, tolerance: f64) -> Self {
        Self {
            name: name.into(),
            value,
            tolerance,
            pass: value <= tolerance,
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct Manifest {
    pub oracles: Vec<OracleResult>,
    pub comparisons: Vec<Comparison>,
}

impl Manifest {
    pub fn all_pass(&self) -> bool {
        self.comparisons.iter().all(|c| c.pass)
    }
}

fn spectrum_gap(
    b: &BoundarySet,
    gamma: f64,
    grid: usize,
    n_small: usize,
) -> Result<(f64, OracleResult)> {
    let report = constrained_spectrum(&assemble_pi(b, gamma, grid)?)?;
    let (dense, mut oracle) = dense_spectrum_result(b, gamma, n_small, 4)?;
    let gap = report.eigenvalues[..4]
        .iter()
        .zip(&dense)
        .map(|(a, d)| (a - d).abs() / d.abs())
        .fold(0.0, f64::max);
    oracle.values.insert("gamma".into(), gamma);
    Ok((gap, oracle))
}

/// Computes every oracle and comparison.
pub fn build_manifest() -> Result<Manifest> {
    let mut oracles = Vec::new();
    let mut comparisons = Vec::new();
    let center = Vector::new(0.5, 0.5);

    for width in [0.5, 0.3] {
        oracles.push(stripe_oracle_result(width)?);
    }
    let stripe = lamella(0.5, 0.5, 256)?;
    let exact = stripe_potential_oracle(0.5)?;
    let trace = boundary_trace(&stripe, 1.0, 512)?;
    let dnu = trace
        .dv_dn
        .iter()
        .fold(0.0, |a: f64, v| a.max((v - exact.dnu_v).abs()));
    comparisons.push(Comparison::new("stripe_dnu_v_abs_error", dnu, 2e-3));
    let energy = nonlocal_energy(&stripe, 512)?;
    comparisons.push(Comparison::new(
        "stripe_nonlocal_energy_abs_error",
        (energy - exact.nonlocal_energy).abs(),
        1e-4,
    ));

    let b = BoundarySet::new(vec![perturbed_circle(
        0.3,
        center,
        128,
        &[Mode::new(3, 0.02)],
    )?])?;
    let frames = b.frames()?;
    let lv = ms_velocity(&b, &frames, 0.0, 64)?;
    let (jump, oracle) = transmission_oracle_result(&b, &lv.g, 512)?;
    let scale = lv.velocity.iter().fold(0.0f64, |a, v| a.max(v.abs()));
    let worst = jump
        .jump
        .iter()
        .zip(&lv.velocity)
        .map(|(a, v)| (a - v).abs())
        .fold(0.0, f64::max);
    oracles.push(oracle);
    comparisons.push(Comparison::new(
        "layer_velocity_vs_transmission",
        worst / scale,
        0.01,
    ));

    let circle = disk(0.2, center, 256)?;
    let (gap, oracle) = spectrum_gap(&circle, 0.0, 512, 128)?;
    oracles.push(oracle);
    comparisons.push(Comparison::new("circle_spectrum_vs_dense", gap, 0.01));
    for gamma in [0.0, 1.0] {
        let (gap, mut oracle) = spectrum_gap(&stripe, gamma, 512, 64)?;
        oracle.name = format!("dense_spectrum_lamella_gamma{gamma}");
        oracles.push(oracle);
        comparisons.push(Comparison::new(
            &format!("lamella_gamma{gamma}_spectrum_vs_dense"),
            gap,
            0.01,
        ));
    }

    let mut values = BTreeMap::new();
    for (name, shape) in [("circle", &circle), ("lamella", &stripe)] {
        for (c, t) in turning_numbers(shape).into_iter().enumerate() {
            values.insert(format!("{name}_{c}"), t);
        }
    }
    oracles.push(OracleResult {
        name: "turning_numbers".into(),
        values,
        method: "summed exterior angles of the marker polygon".into(),
        resolution: [256, 256],
        estimated_error: 1e-12,
    });

    let lap = greens_laplacian_result(64)?;
    comparisons.push(Comparison::new(
        "greens_negative_laplacian",
        lap.values
            .get("max_deviation")
            .copied()
            .unwrap_or(f64::INFINITY),
        1e-4,
    ));
    oracles.push(lap);
    Ok(Manifest {
        oracles,
        comparisons,
    })
}

/// Builds the manifest and writes it to `path`.
pub fn write_manifest(path: &Path) -> Result<Manifest> {
    let m = build_manifest()?;
    write_json(path, &m)?;
    Ok(m)
}
