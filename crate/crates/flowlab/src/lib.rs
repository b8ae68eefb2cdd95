//! Configuration, experiment orchestration and reporting for `flowlab`.

pub mod config;
pub mod error;
pub mod manifest;
pub mod run;
pub mod stability;
pub mod svg;
pub mod sweep;

pub use config::{parse_config, ExperimentConfig};
pub use error::{HarnessError, Result};
pub use run::{run_experiment, ReportBundle, RunStatus};
pub use stability::analyze_stability;
pub use svg::{emit_svg, render_svg};

/// Writes pretty JSON followed by a newline.
pub(crate) fn write_json<T: serde::Serialize>(path: &std::path::Path, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    std::fs::write(path, text).map_err(HarnessError::io(path))
}
