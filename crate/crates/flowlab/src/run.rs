//! Experiment orchestration: fixture, flow loop, diagnostics and the
//! output bundle.

use std::fs;
use std::path::{Path, PathBuf};

use flowlab_core::flows::{self, FlowState};
use flowlab_core::functional;
use flowlab_core::geometry::io::snapshot_to_string;
use flowlab_core::geometry::BoundarySet;
use flowlab_core::metrics::{
    self, alpha_distance, alpha_tolerance, d_distance, fit_decay, heights_over_circle,
    mode_amplitude, DecayFit, RunRecord, Sample,
};
use flowlab_core::Vector;
use serde::Serialize;

use crate::config::{build_fixture, reference_center, ExperimentConfig};
use crate::error::{HarnessError, Result};
use crate::svg::emit_svg;
use crate::write_json;

/// Relative slack on `J` before a sample counts as an energy increase.
pub const MONOTONE_SLACK: f64 = 1e-9;

#[derive(Clone, Debug, Serialize)]
pub struct ErrorReport {
    pub kind: String,
    pub message: String,
}

impl From<&HarnessError> for ErrorReport {
    fn from(e: &HarnessError) -> Self {
        Self {
            kind: e.kind().into(),
            message: e.to_string(),
        }
    }
}

/// Decay fit as written to `status.json`.
#[derive(Clone, Debug, Serialize)]
pub struct FitSummary {
    pub field: String,
    pub beta: f64,
    #[serde(rename = "C")]
    pub c: f64,
    pub r2: f64,
    pub window: [f64; 2],
    pub samples: usize,
}

impl FitSummary {
    fn new(field: &str, fit: &DecayFit) -> Self {
        Self {
            field: field.into(),
            beta: fit.beta,
            c: fit.c,
            r2: fit.r2,
            window: fit.window,
            samples: fit.samples,
        }
    }
}

/// Terminal state of a run, serialized to `status.json`.
#[derive(Clone, Debug, Default, Serialize)]
pub struct RunStatus {
    /// `completed` or `aborted`.
    pub status: String,
    pub stop_reason: Option<String>,
    pub error: Option<ErrorReport>,
    pub t: f64,
    pub steps: u64,
    pub samples: usize,
    pub volume_initial: f64,
    pub volume_final: f64,
    pub max_volume_drift: f64,
    pub energy_initial: f64,
    pub energy_final: f64,
    pub energy_monotone: bool,
    pub max_energy_increase: f64,
    /// Largest `|V|` seen at any step.
    pub max_speed: f64,
    pub final_alpha: Option<f64>,
    pub alpha_tolerance: Option<f64>,
    /// Largest `|dJ/dt + dissipation| / dissipation` over the middle half.
    pub dissipation_mismatch: Option<f64>,
    pub fit: Option<FitSummary>,
    pub fit_error: Option<String>,
    pub snapshots: Vec<String>,
    pub config: Option<ExperimentConfig>,
}

impl RunStatus {
    pub fn aborted(err: &HarnessError) -> Self {
        Self {
            status: "aborted".into(),
            error: Some(err.into()),
            ..Self::default()
        }
    }
}

/// Everything a run leaves behind.
#[derive(Debug)]
pub struct ReportBundle {
    pub dir: PathBuf,
    pub status: RunStatus,
    pub record: RunRecord,
    /// Last valid boundary.
    pub final_boundary: Option<BoundarySet>,
    pub failure: Option<HarnessError>,
}

impl ReportBundle {
    pub fn exit_code(&self) -> i32 {
        self.failure.as_ref().map_or(0, HarnessError::exit_code)
    }
}

struct Monitor<'a> {
    cfg: &'a ExperimentConfig,
    reference: BoundarySet,
    center: Option<Vector>,
    record: RunRecord,
    status: RunStatus,
    last_energy: Option<f64>,
}

impl Monitor<'_> {
    fn sample(&mut self, s: &FlowState) -> Result<()> {
        let m = self.cfg.grid();
        let e = functional::energy(&s.boundary, self.cfg.gamma(), m)?;
        let alpha = alpha_distance(&self.reference, &s.boundary, m)?;
        let d = d_distance(&self.reference, &s.boundary, m)?;
        let amplitude = match (self.cfg.track_mode, self.center) {
            (k, Some(c)) if k > 0 => {
                let n = s.boundary.components()[0].len();
                mode_amplitude(&heights_over_circle(&s.boundary, c - alpha.eta, n)?, k)
            }
            _ => f64::NAN,
        };
        let sample = Sample {
            t: s.t,
            volume: s.volume(),
            area: e.area,
            nonlocal: e.nonlocal,
            j: e.j,
            dissipation: s.dissipation,
            alpha_to_reference: alpha.value,
            d_to_reference: d,
            min_ds: s.min_ds(),
            dt: s.last_dt,
        };
        if let Some(prev) = self.last_energy {
            let rise = e.j - prev;
            if rise > MONOTONE_SLACK * prev.abs() {
                self.status.energy_monotone = false;
            }
            self.status.max_energy_increase = self.status.max_energy_increase.max(rise);
        } else {
            self.status.energy_initial = e.j;
        }
        self.last_energy = Some(e.j);
        self.status.energy_final = e.j;
        self.status.final_alpha = Some(alpha.value);
        self.record.push(sample, alpha.eta, amplitude)?;
        Ok(())
    }

    fn stop_after_sample(&self) -> Option<&'static str> {
        let last = self.record.samples.last()?;
        let stop = &self.cfg.stop;
        if stop
            .alpha_threshold
            .is_some_and(|a| last.alpha_to_reference < a)
        {
            return Some("alpha-threshold");
        }
        if stop
            .dissipation_threshold
            .is_some_and(|d| last.dissipation < d)
        {
            return Some("dissipation-threshold");
        }
        None
    }
}

fn snapshot(
    dir: &Path,
    name: &str,
    b: &BoundarySet,
    svg: bool,
    list: &mut Vec<String>,
) -> Result<()> {
    let file = format!("{name}.curve");
    let path = dir.join(&file);
    fs::write(&path, snapshot_to_string(b)).map_err(HarnessError::io(&path))?;
    list.push(file);
    if svg {
        emit_svg(b, &dir.join(format!("{name}.svg")))?;
    }
    Ok(())
}

fn flow_loop(
    cfg: &ExperimentConfig,
    mon: &mut Monitor,
    last: &mut Option<FlowState>,
) -> Result<&'static str> {
    let dir = &cfg.output;
    let (initial, reference) = build_fixture(&cfg.fixture)?;
    mon.status.alpha_tolerance = Some(alpha_tolerance(reference.length()?, cfg.grid()));
    mon.reference = reference;
    snapshot(dir, "initial", &initial, cfg.svg, &mut mon.status.snapshots)?;
    let mut state = FlowState::new(initial, &cfg.flow)?;
    mon.status.volume_initial = state.volume0;
    mon.status.max_speed = max_abs(&state.velocity);
    *last = Some(state.clone());
    mon.sample(&state)?;
    if let Some(reason) = mon.stop_after_sample() {
        return Ok(reason);
    }
    loop {
        if cfg.stop.t_end.is_some_and(|t| state.t >= t) {
            return Ok("t-end");
        }
        if state.steps >= cfg.stop.max_steps {
            return Ok("max-steps");
        }
        state = flows::step(&state, &cfg.flow)?;
        mon.status.max_speed = mon.status.max_speed.max(max_abs(&state.velocity));
        let drift = (state.volume() - state.volume0).abs();
        mon.status.max_volume_drift = mon.status.max_volume_drift.max(drift);
        *last = Some(state.clone());
        if cfg.snapshot_every > 0 && state.steps % cfg.snapshot_every == 0 {
            let name = format!("step_{:08}", state.steps);
            snapshot(
                dir,
                &name,
                &state.boundary,
                cfg.svg,
                &mut mon.status.snapshots,
            )?;
        }
        let ends =
            cfg.stop.t_end.is_some_and(|t| state.t >= t) || state.steps >= cfg.stop.max_steps;
        if state.steps % cfg.sample_every == 0 || ends {
            mon.sample(&state)?;
            if let Some(reason) = mon.stop_after_sample() {
                return Ok(reason);
            }
        }
    }
}

fn max_abs(v: &[f64]) -> f64 {
    v.iter().fold(0.0, |a, x| a.max(x.abs()))
}

fn finish_fit(cfg: &ExperimentConfig, mon: &mut Monitor) {
    let times = mon.record.times();
    let tracked = cfg.track_mode > 0 && mon.center.is_some();
    let (field, values): (&str, Vec<f64>) = if tracked {
        ("mode_amplitude", mon.record.mode_amplitude.clone())
    } else {
        (
            "alpha_to_reference",
            mon.record
                .samples
                .iter()
                .map(|s| s.alpha_to_reference)
                .collect(),
        )
    };
    match fit_decay(&times, &values, cfg.burn_in) {
        Ok(fit) => {
            mon.status.fit = Some(FitSummary::new(field, &fit));
            mon.record.fit = Some(fit);
        }
        Err(e) => mon.status.fit_error = Some(format!("{field}: {e}")),
    }
    let n = mon.record.samples.len();
    if n >= 8 {
        let energy: Vec<f64> = mon.record.samples.iter().map(|s| s.j).collect();
        let diss: Vec<f64> = mon.record.samples.iter().map(|s| s.dissipation).collect();
        mon.status.dissipation_mismatch = Some(metrics::dissipation_mismatch(
            &times,
            &energy,
            &diss,
            (n / 4, 3 * n / 4),
        ));
    }
}

/// Runs one experiment and writes `run.csv`, the snapshots and
/// `status.json` into `cfg.output`. Failures inside the flow end the run
/// with an `aborted` status; only an unusable output directory is an error.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<ReportBundle> {
    let dir = cfg.output.clone();
    fs::create_dir_all(&dir).map_err(HarnessError::io(&dir))?;
    let mut mon = Monitor {
        cfg,
        reference: BoundarySet::with_components_unchecked(Vec::new()),
        center: reference_center(&cfg.fixture),
        record: RunRecord::default(),
        status: RunStatus {
            energy_monotone: true,
            config: Some(cfg.clone()),
            ..RunStatus::default()
        },
        last_energy: None,
    };
    let mut last = None;
    let outcome = flow_loop(cfg, &mut mon, &mut last);
    let mut failure = None;
    match outcome {
        Ok(reason) => {
            mon.status.status = "completed".into();
            mon.status.stop_reason = Some(reason.into());
        }
        Err(e) => {
            mon.status.status = "aborted".into();
            mon.status.stop_reason = Some("error".into());
            mon.status.error = Some((&e).into());
            failure = Some(e);
        }
    }
    if let Some(s) = &last {
        mon.status.t = s.t;
        mon.status.steps = s.steps;
        mon.status.volume_final = s.volume();
        if let Err(e) = snapshot(
            &dir,
            "final",
            &s.boundary,
            cfg.svg,
            &mut mon.status.snapshots,
        ) {
            failure.get_or_insert(e);
        }
    }
    finish_fit(cfg, &mut mon);
    mon.status.samples = mon.record.samples.len();
    let csv_path = dir.join("run.csv");
    let file = fs::File::create(&csv_path).map_err(HarnessError::io(&csv_path))?;
    mon.record
        .write_csv(std::io::BufWriter::new(file))
        .map_err(|e| HarnessError::Csv(e.to_string()))?;
    write_json(&dir.join("status.json"), &mon.status)?;
    Ok(ReportBundle {
        dir,
        status: mon.status,
        record: mon.record,
        final_boundary: last.map(|s| s.boundary),
        failure,
    })
}

/// Writes an `aborted` status for a configuration that never produced a
/// run, into `dir`.
pub fn write_failure_status(dir: &Path, err: &HarnessError) -> Result<()> {
    fs::create_dir_all(dir).map_err(HarnessError::io(dir))?;
    let mut status = RunStatus::aborted(err);
    status.stop_reason = Some("error".into());
    write_json(&dir.join("status.json"), &status)
}

/// Default output directory for the configuration file at `path`.
pub fn default_output_dir(path: &Path) -> PathBuf {
    let stem = path.file_stem().and_then(|s| s.to_str()).unwrap_or("run");
    path.parent()
        .unwrap_or(Path::new("."))
        .join(format!("{stem}.out"))
}
