//! Scaled monomial bases and the polynomial machinery behind the virtual
//! element operators.
//!
//! Every cell `P` carries the basis `m_α = ((x − x_P)/h_P)^α` of `P_k(P)` and
//! every face the analogous two-variable basis in its in-plane frame. On top
//! of those this module provides the decomposition of vector monomials into a
//! gradient part plus `m_I ∧ ·` terms, the generator set whose cross products
//! span the complement of gradients inside `[P_k]³`, and quadrature-backed
//! integration over cells and faces.

mod basis;
mod decomp;
mod integrate;
mod multiindex;
mod quadrature;

pub use basis::{restrict_to_face, MonomialBasis2, MonomialBasis3, Poly2, Poly3};
pub use decomp::{
    cross_span_rank_on_unit_cube, decompose_vector_monomial, gperp_generators, kernel_field,
    kernel_member_check, mi_cross_component, mi_cross_vanishes, rewrite_first_component,
    Decomposition, GPerpGenerators, VectorMonomial,
};
pub use integrate::{
    integrate_cell, integrate_cell_fn, integrate_face, integrate_face_fn, CellMoments,
    FaceMoments,
};
pub use multiindex::{
    dim_gperp, dim_pk, indices_up_to_2d, indices_up_to_3d, MultiIndex2, MultiIndex3,
};
pub use quadrature::{
    gauss_legendre_01, tetrahedron_rule, triangle_rule, QuadratureError, TetRule, TriRule,
};

use thiserror::Error;

#[derive(Debug, Error)]
pub enum PolyError {
    #[error(transparent)]
    Quadrature(#[from] QuadratureError),
    #[error("rewrite requires a first multi-index component >= 1, got {0:?}")]
    RewriteNeedsFirstComponent(MultiIndex3),
}
