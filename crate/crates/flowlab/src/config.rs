//! Strict `key = value` experiment configuration.
//!
//! One assignment per line, `#` starts a comment. Keys are case sensitive
//! and may appear once. Unknown keys are rejected.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use flowlab_core::fixtures::{self, Mode};
use flowlab_core::flows::{DtPolicy, FlowConfig, FlowKind};
use flowlab_core::geometry::io::read_snapshot;
use flowlab_core::geometry::BoundarySet;
use flowlab_core::Vector;
use serde::Serialize;

pub const DEFAULT_NODES: usize = 256;
pub const DEFAULT_GRID: usize = 512;

/// Documented keys with their defaults, shown by `--help`.
pub const KEY_HELP: &str = "\
Configuration keys (key = value, one per line, # comments):
  fixture            circle | lamella | two-circles | file        (required)
  r                  circle radius                                  (circle, required)
  center             x,y of the circle centre                       [0.5,0.5]
  modes              k:amplitude[:phase] list, comma separated     [none]
  N                  nodes per component                            [256]
  width              stripe width                                   (lamella, required)
  stripe_center      height of the stripe midline                   [0.5]
  r1, center1        first disk of two-circles                      (required)
  r2, center2        second disk of two-circles                     (required)
  path               torus-curve v1 snapshot                        (file, required)
  flow               sdf | mmsf                                     [sdf]
  gamma              nonlocal weight, >= 0                          [0]
  M                  grid size for potentials and distances         [512]
  c_dt               explicit step safety factor in (0, 1]          [0.1 sdf, 0.05 mmsf]
  dt                 fixed time step (overrides c_dt)               [adaptive]
  resample_every     steps between equal-arclength resampling       [10]
  volume_correction  true | false                                   [false]
  output             output directory, relative to the config file  [<config stem>.out]
  sample_every       steps between diagnostic samples               [100]
  snapshot_every     steps between curve snapshots, 0 = none        [0]
  svg                write an SVG next to every snapshot            [false]
  t_end              stop time                                      [none]
  max_steps          step limit                                     [100000]
  alpha_threshold    stop once alpha to the reference falls below   [none]
  dissipation_threshold  stop once the dissipation falls below      [none]
  track_mode         Fourier mode of psi fitted for decay, 0 = none [first perturbation mode]
  burn_in            fraction of the run skipped by the decay fit   [0.2]
";

#[derive(Debug, thiserror::Error, PartialEq)]
pub enum ConfigError {
    #[error("line {line}: missing required key `{key}`")]
    MissingKey { key: String, line: usize },
    #[error("line {line}: bad value for `{key}`: {message}")]
    BadValue {
        key: String,
        line: usize,
        message: String,
    },
    #[error("cannot read {path}: {message}")]
    Io { path: String, message: String },
}

#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum FixtureSpec {
    Circle {
        r: f64,
        center: [f64; 2],
        nodes: usize,
        modes: Vec<Mode>,
    },
    Lamella {
        width: f64,
        center: f64,
        nodes: usize,
    },
    TwoCircles {
        r1: f64,
        center1: [f64; 2],
        r2: f64,
        center2: [f64; 2],
        nodes: usize,
    },
    FromFile {
        path: PathBuf,
    },
}

#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct StopCriteria {
    pub t_end: Option<f64>,
    pub max_steps: u64,
    pub alpha_threshold: Option<f64>,
    pub dissipation_threshold: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ExperimentConfig {
    pub fixture: FixtureSpec,
    pub flow: FlowConfig,
    pub output: PathBuf,
    pub sample_every: u64,
    pub snapshot_every: u64,
    pub svg: bool,
    pub stop: StopCriteria,
    pub track_mode: u32,
    pub burn_in: f64,
}

impl ExperimentConfig {
    pub fn grid(&self) -> usize {
        self.flow.grid
    }

    pub fn gamma(&self) -> f64 {
        self.flow.gamma
    }
}

const KEYS: &[&str] = &[
    "fixture",
    "r",
    "center",
    "modes",
    "N",
    "width",
    "stripe_center",
    "r1",
    "center1",
    "r2",
    "center2",
    "path",
    "flow",
    "gamma",
    "M",
    "c_dt",
    "dt",
    "resample_every",
    "volume_correction",
    "output",
    "sample_every",
    "snapshot_every",
    "svg",
    "t_end",
    "max_steps",
    "alpha_threshold",
    "dissipation_threshold",
    "track_mode",
    "burn_in",
];

struct Entries {
    map: BTreeMap<String, (usize, String)>,
    fixture_line: usize,
}

impl Entries {
    fn raw(&self, key: &str) -> Option<(usize, &str)> {
        self.map.get(key).map(|(l, v)| (*l, v.as_str()))
    }

    fn bad(key: &str, line: usize, message: impl Into<String>) -> ConfigError {
        ConfigError::BadValue {
            key: key.into(),
            line,
            message: message.into(),
        }
    }

    fn parsed<T: std::str::FromStr>(&self, key: &str) -> Result<Option<T>, ConfigError> {
        match self.raw(key) {
            None => Ok(None),
            Some((line, v)) => v
                .parse()
                .map(Some)
                .map_err(|_| Self::bad(key, line, format!("cannot parse `{v}`"))),
        }
    }

    fn required<T: std::str::FromStr>(&self, key: &str) -> Result<T, ConfigError> {
        self.parsed(key)?.ok_or_else(|| ConfigError::MissingKey {
            key: key.into(),
            line: self.fixture_line,
        })
    }

    fn line(&self, key: &str) -> usize {
        self.map.get(key).map_or(0, |(l, _)| *l)
    }

    fn point(&self, key: &str, default: Option<[f64; 2]>) -> Result<[f64; 2], ConfigError> {
        let Some((line, v)) = self.raw(key) else {
            return default.ok_or_else(|| ConfigError::MissingKey {
                key: key.into(),
                line: self.fixture_line,
            });
        };
        let parts: Vec<&str> = v.split(',').map(str::trim).collect();
        match parts.as_slice() {
            [a, b] => match (a.parse(), b.parse()) {
                (Ok(x), Ok(y)) => Ok([x, y]),
                _ => Err(Self::bad(key, line, format!("cannot parse point `{v}`"))),
            },
            _ => Err(Self::bad(key, line, "expected `x,y`")),
        }
    }

    fn positive(&self, key: &str, value: f64) -> Result<f64, ConfigError> {
        if value > 0.0 && value.is_finite() {
            Ok(value)
        } else {
            Err(Self::bad(
                key,
                self.line(key),
                format!("{value} must be positive"),
            ))
        }
    }
}

fn parse_modes(text: &str, line: usize) -> Result<Vec<Mode>, ConfigError> {
    let bad = |m: String| Entries::bad("modes", line, m);
    text.split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|item| {
            let parts: Vec<&str> = item.split(':').collect();
            if !(2..=3).contains(&parts.len()) {
                return Err(bad(format!("expected k:amplitude[:phase], got `{item}`")));
            }
            let k: u32 = parts[0]
                .parse()
                .map_err(|_| bad(format!("bad mode number in `{item}`")))?;
            let amplitude: f64 = parts[1]
                .parse()
                .map_err(|_| bad(format!("bad amplitude in `{item}`")))?;
            let phase: f64 = match parts.get(2) {
                Some(p) => p
                    .parse()
                    .map_err(|_| bad(format!("bad phase in `{item}`")))?,
                None => 0.0,
            };
            Ok(Mode {
                k,
                amplitude,
                phase,
            })
        })
        .collect()
}

fn parse_bool(key: &str, line: usize, v: &str) -> Result<bool, ConfigError> {
    match v {
        "true" | "yes" | "1" => Ok(true),
        "false" | "no" | "0" => Ok(false),
        _ => Err(Entries::bad(
            key,
            line,
            format!("expected true or false, got `{v}`"),
        )),
    }
}

/// Parses configuration text. `base` resolves relative paths and `stem`
/// names the default output directory.
pub fn parse_config_str(
    text: &str,
    base: &Path,
    stem: &str,
) -> Result<ExperimentConfig, ConfigError> {
    let mut map = BTreeMap::new();
    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        let content = raw.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        let Some((k, v)) = content.split_once('=') else {
            return Err(Entries::bad(content, line, "expected `key = value`"));
        };
        let (k, v) = (k.trim(), v.trim());
        if !KEYS.contains(&k) {
            return Err(Entries::bad(k, line, "unknown key"));
        }
        if v.is_empty() {
            return Err(Entries::bad(k, line, "empty value"));
        }
        if map.insert(k.to_string(), (line, v.to_string())).is_some() {
            return Err(Entries::bad(k, line, "key given twice"));
        }
    }
    let fixture_line = map.get("fixture").map_or(0, |(l, _)| *l);
    let e = Entries { map, fixture_line };
    let nodes: usize = e.parsed("N")?.unwrap_or(DEFAULT_NODES);
    if nodes < 32 {
        return Err(Entries::bad(
            "N",
            e.line("N"),
            format!("{nodes} nodes, need at least 32"),
        ));
    }
    let (fline, fname) = e.raw("fixture").ok_or(ConfigError::MissingKey {
        key: "fixture".into(),
        line: 0,
    })?;
    let modes = match e.raw("modes") {
        Some((line, v)) => parse_modes(v, line)?,
        None => Vec::new(),
    };
    let fixture = match fname {
        "circle" => FixtureSpec::Circle {
            r: e.positive("r", e.required("r")?)?,
            center: e.point("center", Some([0.5, 0.5]))?,
            nodes,
            modes: modes.clone(),
        },
        "lamella" | "stripe" => {
            let width: f64 = e.required("width")?;
            if !(width > 0.0 && width < 1.0) {
                return Err(Entries::bad(
                    "width",
                    e.line("width"),
                    format!("{width} not in (0, 1)"),
                ));
            }
            FixtureSpec::Lamella {
                width,
                center: e.parsed("stripe_center")?.unwrap_or(0.5),
                nodes,
            }
        }
        "two-circles" => FixtureSpec::TwoCircles {
            r1: e.positive("r1", e.required("r1")?)?,
            center1: e.point("center1", None)?,
            r2: e.positive("r2", e.required("r2")?)?,
            center2: e.point("center2", None)?,
            nodes,
        },
        "file" | "from-file" => {
            let p: String = e.required("path")?;
            FixtureSpec::FromFile { path: base.join(p) }
        }
        other => {
            return Err(Entries::bad(
                "fixture",
                fline,
                format!("unknown fixture `{other}`"),
            ))
        }
    };
    let kind: FlowKind = match e.raw("flow") {
        Some((line, v)) => v
            .parse()
            .map_err(|m: String| Entries::bad("flow", line, m))?,
        None => FlowKind::Sdf,
    };
    let gamma: f64 = e.parsed("gamma")?.unwrap_or(0.0);
    if !(gamma >= 0.0 && gamma.is_finite()) {
        return Err(Entries::bad(
            "gamma",
            e.line("gamma"),
            format!("gamma = {gamma} must be ≥ 0"),
        ));
    }
    let grid: usize = e.parsed("M")?.unwrap_or(DEFAULT_GRID);
    if !(grid.is_power_of_two() && grid >= 16) {
        return Err(Entries::bad(
            "M",
            e.line("M"),
            format!("{grid} is not a power of two ≥ 16"),
        ));
    }
    let mut flow = FlowConfig::new(kind, gamma);
    flow.grid = grid;
    if let Some(c_dt) = e.parsed::<f64>("c_dt")? {
        if !(c_dt > 0.0 && c_dt <= 1.0) {
            return Err(Entries::bad(
                "c_dt",
                e.line("c_dt"),
                format!("{c_dt} not in (0, 1]"),
            ));
        }
        flow.dt = DtPolicy::Adaptive { c_dt };
    }
    if let Some(dt) = e.parsed::<f64>("dt")? {
        flow.dt = DtPolicy::Fixed {
            dt: e.positive("dt", dt)?,
        };
    }
    if let Some(k) = e.parsed::<usize>("resample_every")? {
        if k == 0 {
            return Err(Entries::bad(
                "resample_every",
                e.line("resample_every"),
                "must be ≥ 1",
            ));
        }
        flow.resample_every = k;
    }
    if let Some((line, v)) = e.raw("volume_correction") {
        flow.volume_correction = parse_bool("volume_correction", line, v)?;
    }
    let output = match e.raw("output") {
        Some((_, v)) => base.join(v),
        None => base.join(format!("{stem}.out")),
    };
    let sample_every: u64 = e.parsed("sample_every")?.unwrap_or(100);
    if sample_every == 0 {
        return Err(Entries::bad(
            "sample_every",
            e.line("sample_every"),
            "must be ≥ 1",
        ));
    }
    let svg = match e.raw("svg") {
        Some((line, v)) => parse_bool("svg", line, v)?,
        None => false,
    };
    let stop = StopCriteria {
        t_end: e
            .parsed::<f64>("t_end")?
            .map(|t| e.positive("t_end", t))
            .transpose()?,
        max_steps: e.parsed("max_steps")?.unwrap_or(100_000),
        alpha_threshold: e
            .parsed::<f64>("alpha_threshold")?
            .map(|t| e.positive("alpha_threshold", t))
            .transpose()?,
        dissipation_threshold: e
            .parsed::<f64>("dissipation_threshold")?
            .map(|t| e.positive("dissipation_threshold", t))
            .transpose()?,
    };
    let burn_in: f64 = e.parsed("burn_in")?.unwrap_or(0.2);
    if !(0.0..1.0).contains(&burn_in) {
        return Err(Entries::bad(
            "burn_in",
            e.line("burn_in"),
            format!("{burn_in} not in [0, 1)"),
        ));
    }
    Ok(ExperimentConfig {
        fixture,
        flow,
        output,
        sample_every,
        snapshot_every: e.parsed("snapshot_every")?.unwrap_or(0),
        svg,
        stop,
        track_mode: e
            .parsed("track_mode")?
            .unwrap_or(modes.first().map_or(0, |m| m.k)),
        burn_in,
    })
}

/// Reads and parses a configuration file.
pub fn parse_config(path: &Path) -> Result<ExperimentConfig, ConfigError> {
    let text = std::fs::read_to_string(path).map_err(|err| ConfigError::Io {
        path: path.display().to_string(),
        message: err.to_string(),
    })?;
    let base = path.parent().unwrap_or(Path::new("."));
    let stem = path.file_stem().and_then(|s| s.to_str()).unwrap_or("run");
    parse_config_str(&text, base, stem)
}

fn vec2(p: [f64; 2]) -> Vector {
    Vector::new(p[0], p[1])
}

/// Builds the initial boundary and the unperturbed reference.
pub fn build_fixture(spec: &FixtureSpec) -> flowlab_core::Result<(BoundarySet, BoundarySet)> {
    Ok(match spec {
        FixtureSpec::Circle {
            r,
            center,
            nodes,
            modes,
        } => {
            let b = BoundarySet::new_embedded(vec![fixtures::perturbed_circle(
                *r,
                vec2(*center),
                *nodes,
                modes,
            )?])?;
            let reference = fixtures::disk(*r, vec2(*center), *nodes)?;
            (b, reference)
        }
        FixtureSpec::Lamella {
            width,
            center,
            nodes,
        } => {
            let b = fixtures::lamella(*width, *center, *nodes)?;
            (b.clone(), b)
        }
        FixtureSpec::TwoCircles {
            r1,
            center1,
            r2,
            center2,
            nodes,
        } => {
            let b = fixtures::two_circles((*r1, vec2(*center1)), (*r2, vec2(*center2)), *nodes)?;
            (b.clone(), b)
        }
        FixtureSpec::FromFile { path } => {
            let file =
                std::fs::File::open(path).map_err(flowlab_core::geometry::GeometryError::from)?;
            let b = read_snapshot(std::io::BufReader::new(file))?;
            b.check_embedded()?;
            (b.clone(), b)
        }
    })
}

/// Centre of the reference circle when the fixture is a single disk.
pub fn reference_center(spec: &FixtureSpec) -> Option<Vector> {
    match spec {
        FixtureSpec::Circle { center, .. } => Some(vec2(*center)),
        _ => None,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn parse(text: &str) -> Result<ExperimentConfig, ConfigError> {
        parse_config_str(text, Path::new("/tmp"), "t")
    }

    #[test]
    fn minimal_config_gets_defaults() {
        let c = parse("fixture = circle\nr = 0.2\nflow = sdf\n").unwrap();
        assert_eq!(c.grid(), 512);
        assert_eq!(c.gamma(), 0.0);
        assert!(matches!(c.fixture, FixtureSpec::Circle { nodes: 256, .. }));
        assert_eq!(c.output, Path::new("/tmp/t.out"));
        assert_eq!(c.flow.dt, DtPolicy::Adaptive { c_dt: 0.1 });
    }

    #[test]
    fn unknown_key_is_named() {
        let err = parse("fixture = circle\nr = 0.2\nfoo = 1\n").unwrap_err();
        assert_eq!(
            err,
            ConfigError::BadValue {
                key: "foo".into(),
                line: 3,
                message: "unknown key".into()
            }
        );
    }

    #[test]
    fn negative_gamma_rejected() {
        let err = parse("fixture = circle\nr = 0.2\ngamma = -1\n").unwrap_err();
        assert!(
            matches!(err, ConfigError::BadValue { ref key, line: 3, .. } if key == "gamma"),
            "{err}"
        );
    }

    #[test]
    fn missing_radius_reports_fixture_line() {
        let err = parse("# header\nfixture = circle\n").unwrap_err();
        assert_eq!(
            err,
            ConfigError::MissingKey {
                key: "r".into(),
                line: 2
            }
        );
    }

    #[test]
    fn modes_and_stops() {
        let c = parse(
            "fixture = circle\nr = 0.35\nmodes = 3:0.02, 5:0.001:0.5\nflow = mmsf\nt_end = 1e-3\nalpha_threshold = 0.01\n",
        )
        .unwrap();
        let FixtureSpec::Circle { modes, .. } = &c.fixture else {
            panic!()
        };
        assert_eq!(modes.len(), 2);
        assert_eq!(modes[1].phase, 0.5);
        assert_eq!(c.track_mode, 3);
        assert_eq!(c.stop.t_end, Some(1e-3));
        assert_eq!(c.flow.dt, DtPolicy::Adaptive { c_dt: 0.05 });
        assert!(parse("fixture = circle\nr = 0.2\nmodes = 3\n").is_err());
        assert!(parse("fixture = circle\nr = 0.2\nr = 0.3\n").is_err());
        assert!(parse("fixture = blob\n").is_err());
    }
}
