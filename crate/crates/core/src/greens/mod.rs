//! Periodic Green's function, grid potentials and boundary layer quadrature.

mod ewald;
pub mod expint;
mod grid;
mod layer;
mod raster;
mod table;

pub use ewald::GreensEvaluator;
pub use grid::{dirichlet_energy, h_minus_one_energy, poisson_solve, wavenumber, GridField};
pub use layer::{log_weights, potential_normal_derivative, single_layer_matrix};
pub use raster::rasterize;
pub use table::GreensTable;

#[derive(Debug, thiserror::Error)]
pub enum GreensError {
    #[error("Green's function evaluated at coincident points")]
    SingularArgument,
    #[error("grid size {0} is not a power of two of at least 4, or does not match the data")]
    BadGrid(usize),
    #[error("field dump line {line}: {message}")]
    Format { line: usize, message: String },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}
