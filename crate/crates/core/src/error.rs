use crate::geometry::{Crossing, GeometryError};
use crate::greens::GreensError;

/// Errors of the analysis layers built on top of geometry and potentials.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error(transparent)]
    Geometry(#[from] GeometryError),
    #[error(transparent)]
    Greens(#[from] GreensError),
    #[error(
        "finite-difference ladder did not settle after {levels} levels (last estimates {last:?})"
    )]
    NonConvergedDerivative { levels: usize, last: Vec<f64> },
    #[error("numerical breakdown: {0}")]
    NumericalBreakdown(String),
    #[error("point at distance {distance:e} lies outside the tube of width {width:e}")]
    OutsideTube { distance: f64, width: f64 },
    #[error("tube too wide: 1 + tκ = {0:e} is not positive")]
    TubeTooWide(f64),
    #[error("single-layer system is ill conditioned (estimate {0:e})")]
    IllConditionedLayer(f64),
    #[error("topology break at t = {t}: {crossing}")]
    TopologyBreak { t: f64, crossing: Crossing },
    #[error("decay fit: {0}")]
    FitDomainError(String),
    #[error("oracle failed: {0}")]
    OracleFailure(String),
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
