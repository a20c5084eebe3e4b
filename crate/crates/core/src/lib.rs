//! Finite-element simulation of cancer-cell invasion driven by haptotaxis.
//!
//! The model couples a cell density `u`, a non-diffusing extracellular matrix
//! `v` and a matrix-degrading enzyme `m`. Two linear, decoupled, first-order
//! time-stepping schemes on P1 triangles are provided:
//!
//! * [`scheme::UvmSigma`] carries the matrix gradient `σ ≈ ∇v` as its own
//!   unknown and keeps `v` and `m` nonnegative.
//! * [`scheme::Uvms`] works with `s = u/φ(v)`, which puts the cell equation in
//!   divergence form and keeps `s`, `v`, `m` and the recovered `u`
//!   nonnegative.
//!
//! Positivity relies on mass lumping and on nonobtuse meshes, which the
//! built-in generator produces.

pub mod config;
pub mod driver;
pub mod error;
pub mod fem;
pub mod io;
pub mod linalg;
pub mod mesh;
pub mod params;
pub mod problems;
pub mod scheme;
pub mod verification;

pub use error::{Error, Result};
pub use fem::{FeScalarField, FeSpace, FeVectorField};
pub use linalg::{CgOptions, CsrMatrix, DiagMatrix};
pub use mesh::TriMesh;
pub use params::{ModelParams, Sensitivity, TimeConfig};
pub use problems::{ProblemKind, ProblemSetup};
pub use scheme::{SchemeKind, Simulation};
