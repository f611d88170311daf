//! Dense symmetric-matrix numerics for small dimensions.
//!
//! Everything here is a pure function of its inputs. Eigenpairs come from a
//! cyclic Jacobi sweep, which is accurate to a few ulps for the `t <= 8`
//! matrices this crate deals with; log-determinants, inverses, PSD tests and
//! projections are all derived from that one decomposition.

mod dense;
pub(crate) mod jacobi;
mod sym;

pub use dense::Matrix;
pub use sym::{SymEigen, SymMatrix};
