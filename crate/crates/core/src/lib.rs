//! Numerical laboratory for Wente-type estimates on the unit disc.

pub mod error;
pub mod fem;
pub mod glue;
pub mod green;
pub mod grid;
pub mod mobius;
pub mod norms;
pub mod spectral;

pub use error::{LabError, Result};
pub use grid::{
    BoundaryTrace, ConcentrationGrid, Extent, GradField, PolarCell, PolarGrid, Quadrature,
    ScalarField,
};
pub use mobius::{BubbleSpec, Complex2, JacobianSplit};
pub use norms::NormReport;
