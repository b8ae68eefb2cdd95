use std::path::PathBuf;

use crate::config::ConfigError;

#[derive(Debug, thiserror::Error)]
pub enum HarnessError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Core(#[from] flowlab_core::Error),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
    #[error("csv: {0}")]
    Csv(String),
    #[error("sweep directory {0} holds no .cfg files")]
    EmptySweep(PathBuf),
}

impl From<flowlab_core::geometry::GeometryError> for HarnessError {
    fn from(e: flowlab_core::geometry::GeometryError) -> Self {
        Self::Core(e.into())
    }
}

impl HarnessError {
    pub fn io(path: impl Into<PathBuf>) -> impl FnOnce(std::io::Error) -> Self {
        let path = path.into();
        move |source| Self::Io { path, source }
    }

    /// Short machine-readable name written to `status.json`.
    pub fn kind(&self) -> &'static str {
        use flowlab_core::Error as E;
        match self {
            Self::Config(_) => "config",
            Self::Core(E::TopologyBreak { .. }) => "topology-break",
            Self::Core(E::IllConditionedLayer(_)) => "ill-conditioned-layer",
            Self::Core(E::NumericalBreakdown(_)) => "numerical-breakdown",
            Self::Core(E::TubeTooWide(_)) => "tube-too-wide",
            Self::Core(E::Geometry(_)) => "geometry",
            Self::Core(_) => "analysis",
            Self::Io { .. } => "io",
            Self::Json(_) => "json",
            Self::Csv(_) => "csv",
            Self::EmptySweep(_) => "empty-sweep",
        }
    }

    /// Process exit code: 2 for a topology break, 1 otherwise.
    pub fn exit_code(&self) -> i32 {
        match self {
            Self::Core(flowlab_core::Error::TopologyBreak { .. }) => 2,
            _ => 1,
        }
    }
}

pub type Result<T, E = HarnessError> = std::result::Result<T, E>;
