//! Numerical laboratory for volume-preserving curve flows on the flat torus.
//!
//! Geometry is generic over the scalar type; potentials, flows and the
//! stability analysis work in `f64`. The aliases below fix the scalar.

pub mod error;
pub mod fixtures;
pub mod flows;
pub mod functional;
pub mod geometry;
pub mod greens;
pub mod metrics;
pub mod oracles;
pub mod scalar;
pub mod stability;

pub use error::{Error, Result};
pub use scalar::Scalar;

pub type Point = geometry::TorusPoint<f64>;
pub type Vector = geometry::Vec2<f64>;
pub type Curve = geometry::MarkerCurve<f64>;
pub type Boundary = geometry::BoundarySet<f64>;
pub type Frame = geometry::CurveFrame<f64>;
pub type Distance = geometry::SignedDistance<f64>;
