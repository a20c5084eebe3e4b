//! File outputs: VTK snapshots, CSV tables and the run manifest.

mod tables;
mod vtk;

pub use tables::{write_diagnostics, write_distances, write_errors, write_minima, ERRORS_HEADER, MINIMA_HEADER};
pub use vtk::{write_vtk, VtkFields};
