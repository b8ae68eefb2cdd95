//! `flowlab stability`: spectrum of the second variation for a fixture.

use std::path::PathBuf;

use flowlab_core::stability::{assemble_pi, constrained_spectrum, StabilityReport};
use serde::Serialize;

use crate::config::{build_fixture, ExperimentConfig, FixtureSpec};
use crate::error::{HarnessError, Result};
use crate::write_json;

/// Contents of `stability.json`.
#[derive(Clone, Debug, Serialize)]
pub struct StabilityFile {
    pub fixture: FixtureSpec,
    #[serde(flatten)]
    pub report: StabilityReport,
}

/// Assembles the second variation of the initial boundary of `cfg`,
/// restricts it to mean-zero functions orthogonal to translations and
/// writes `stability.json` into `cfg.output`.
pub fn analyze_stability(cfg: &ExperimentConfig) -> Result<(PathBuf, StabilityFile)> {
    let (b, _) = build_fixture(&cfg.fixture)?;
    let qf = assemble_pi(&b, cfg.gamma(), cfg.grid())?;
    let report = constrained_spectrum(&qf)?;
    let file = StabilityFile {
        fixture: cfg.fixture.clone(),
        report,
    };
    std::fs::create_dir_all(&cfg.output).map_err(HarnessError::io(&cfg.output))?;
    let path = cfg.output.join("stability.json");
    write_json(&path, &file)?;
    Ok((path, file))
}
