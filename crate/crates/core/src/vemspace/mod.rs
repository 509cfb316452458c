//! Local spaces of the mixed discretization.
//!
//! Velocities live in the H(div)-conforming virtual space of order k: on
//! each face the normal trace is a polynomial of degree ≤ k, inside each
//! cell the divergence is a polynomial of degree ≤ k−1, and the dofs are
//! face normal moments, interior gradient moments, and interior cross
//! moments against the generators that complete gradients to all vector
//! polynomials. Pressures are discontinuous polynomials of degree ≤ k−1
//! carried by their cell moments.

mod dof;
mod element;
mod interp;

pub use dof::{dof_counts, DofCounts, DofLayout};
pub use element::ElementOperators;
pub use interp::{face_scalar_moments, interpolate_pressure, interpolate_velocity};

use crate::linalg::FactorError;
use crate::poly::QuadratureError;
use thiserror::Error;

/// Highest supported polynomial order.
pub const MAX_ORDER: u32 = 4;

#[derive(Debug, Error)]
pub enum VemError {
    #[error(transparent)]
    Quadrature(#[from] QuadratureError),
    #[error("local factorization failed: {0}")]
    Factor(#[from] FactorError),
}
