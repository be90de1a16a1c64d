//! Dense complex linear algebra: Hermitian eigendecomposition, tensor
//! products, partial traces, the trace / Hilbert–Schmidt / operator norms and
//! entropy.

mod eigen;
mod matrix;
mod ops;

pub use eigen::{EigenDecomposition, MAX_SWEEPS, OFF_DIAGONAL_TOL};
pub use matrix::{BipartiteDims, ComplexMatrix, DensityMatrix, HermitianOperator, Subsystem, C64};
pub use ops::{
    hs_norm, kron, operator_norm, partial_trace, shannon_entropy, trace_distance, trace_norm, von_neumann_entropy,
};

pub(crate) use matrix::ZERO;
pub(crate) use ops::{hermitian_difference_trace_norm, inner};

/// Eigendecomposition of a Hermitian operator: ascending eigenvalues and
/// orthonormal eigenvector columns. Cached on the operator.
pub fn hermitian_eig(h: &HermitianOperator) -> crate::Result<&EigenDecomposition> {
    h.eigen()
}
