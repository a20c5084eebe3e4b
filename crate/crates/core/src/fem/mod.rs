//! P1 finite-element building blocks.

mod field;
mod quadrature;
mod space;

pub use field::{FeScalarField, FeVectorField};
pub use quadrature::QuadratureRule;
pub use space::{FeSpace, Factor, PointMap};
