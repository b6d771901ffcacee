//! P1 finite elements for the mixed Robin/Dirichlet problem on the disc.

pub mod assemble;
pub mod mesh;
pub mod solve;

pub use assemble::{assemble, RobinCoeffs, RobinOperator, SparseMatrix};
pub use mesh::{mesh_disc, mesh_disc_sized, BoundaryArcs, BoundaryEdge, Marker, Sizing, TriMesh};
pub use solve::{
    coercivity_check, h1_seminorm_error, robin_flux_functional, solve_dirichlet_fem, solve_robin,
    CoercivityReport, FemSolution, FluxFunctional, RobinProblem,
};
