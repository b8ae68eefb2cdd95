//! Points, marker curves and multi-component boundaries on the unit flat torus.

mod boundary;
mod curve;
mod distance;
mod frame;
pub mod io;
mod point;
mod resample;
mod spline;

pub use boundary::{BoundarySet, Crossing};
pub use curve::{MarkerCurve, Orientation, MIN_NODES, MIN_SEGMENT};
pub use distance::{normal_graph, signed_distance, DistanceField, SignedDistance};
pub use frame::CurveFrame;
pub use point::{canon_coord, wrap_coord, wrap_diff, wrap_vec, TorusPoint, Vec2};
pub use resample::resample_equal_arclength;
pub use spline::{CurveSpline, PeriodicSpline};

#[derive(Debug, thiserror::Error)]
pub enum GeometryError {
    #[error("curve has {0} nodes, at least 8 are required")]
    TooFewNodes(usize),
    #[error("degenerate curve: segment {index} is shorter than 1e-10")]
    DegenerateCurve { index: usize },
    #[error("declared winding {declared:?} does not match the closure of the nodes {found:?}")]
    WindingMismatch { declared: [i32; 2], found: [i32; 2] },
    #[error("invalid region: {0}")]
    InvalidRegion(String),
    #[error("curves cross: {0}")]
    SelfIntersection(Crossing),
    #[error(
        "target is not a normal graph over the reference at node {node} of component {component}"
    )]
    NotAGraph { component: usize, node: usize },
    #[error("snapshot line {line}: {message}")]
    Format { line: usize, message: String },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}
