//! Arbitrary-order mixed virtual element discretization of the 3D elliptic
//! equation in first-order form on general polyhedral meshes.
//!
//! The discretization writes `ν u + ∇p = 0`, `div u = f` on a polyhedral
//! decomposition of Ω, with the normal flux `u·n` prescribed on the whole
//! boundary and the pressure normalized to zero mean. Velocities live in an
//! H(div)-conforming virtual space whose degrees of freedom are face-normal
//! moments plus internal gradient and cross moments, pressures in
//! discontinuous polynomials of one degree less. The resulting saddle-point
//! systems are solved either directly or by restarted GMRES with one of two
//! block-diagonal preconditioners (diagonal/Schur and regularized-velocity).
//!
//! Module layout mirrors the pipeline:
//!
//! * [`poly`] — scaled monomial bases, vector-monomial decompositions,
//!   quadrature on sub-tessellations;
//! * [`mesh`] — polyhedral mesh model, JSON ingestion, structured cube
//!   generation, geometric caches;
//! * [`vemspace`] — local spaces: dof layouts, face-normal reconstruction,
//!   divergence and L² projection operators, interpolation;
//! * [`assembly`] — local forms with stabilization and the global bordered
//!   saddle-point system;
//! * [`solver`] — sparse direct solve, restarted GMRES, block preconditioners;
//! * [`harness`] — manufactured cases, error computation, convergence and
//!   benchmark drivers, report emission.

pub mod assembly;
pub mod harness;
pub mod solver;
pub mod linalg;
pub mod mesh;
pub mod poly;
pub mod vemspace;

#[cfg(test)]
pub(crate) mod testutil;

pub use assembly::{assemble, CoefficientField, SaddleSystem, Solution};
pub use harness::{
    assemble_case, compute_errors, exact_norms, observed_rates, run_bench, run_convergence,
    BenchConfig, BenchReport, ConvergenceConfig, ErrorReport, Gamma, HarnessError,
    ManufacturedCase, MeshSource,
};
pub use solver::{
    direct_solve, gmres, solve_system, BlockReg, BlockSchur, GmresConfig, LinearOperator,
    Preconditioner, SolveReport, SolverChoice, SolverError,
};
pub use mesh::{compute_geometry, gen_cube_mesh, load_mesh, mesh_size, sub_tessellate};
pub use mesh::{GeometryCache, IngestMode, PolyMesh, SubTessellation};
pub use vemspace::{dof_counts, DofCounts, DofLayout, ElementOperators};
