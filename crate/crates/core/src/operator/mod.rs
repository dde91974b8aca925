//! Linear-operator algebra and exponential actions `exp(tau A) x`.
//!
//! Operators are finite-dimensional sparse matrices in compressed-row form,
//! assembled from coordinate triplets. Two exponential backends exist: a dense
//! scaling-and-squaring Padé method that serves as the reference, and an
//! Arnoldi/Krylov method with adaptive substepping for production use.

mod dense;
mod expm;
mod krylov;
mod sparse;
mod state;

pub use dense::DenseMatrix;
pub use expm::{expm_action, ExpmConfig, ExpmMethod};
pub use krylov::{krylov_expv, KrylovOutcome};
pub use sparse::{SparseBuilder, SparseOperator};
pub use state::{Block, StateVector};

/// Exact product `A x`.
pub fn apply(a: &SparseOperator, x: &StateVector) -> crate::Result<StateVector> {
    a.apply(x)
}

/// Signed column sums of `A`.
pub fn one_norm_columns(a: &SparseOperator) -> alloc::vec::Vec<f64> {
    a.column_sums()
}
