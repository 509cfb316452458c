//! Dense and sparse linear-algebra kernels shared across modules.

mod dense;
mod sparse;

pub use dense::{FactorError, SymmetricFactor};
pub use sparse::CsrMatrix;
