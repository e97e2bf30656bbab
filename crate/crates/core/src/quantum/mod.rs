//! Finite-dimensional operator algebra.

pub mod channel;
pub mod io;
pub mod isometry;
pub mod matrix;
pub mod measurement;
pub mod random;
pub mod state;

pub use channel::KrausChannel;
pub use isometry::{uhlmann_isometry, uhlmann_residual, Isometry};
pub use matrix::{tensor, CMatrix, CVector};
pub use measurement::{BinaryPvm, Reflection};
pub use state::{fidelity, trace_distance, DensityOperator, PureState};

/// Partial trace of a density operator onto the `keep` subsystems.
pub fn partial_trace(rho: &DensityOperator, keep: &[usize]) -> crate::Result<DensityOperator> {
    rho.partial_trace(keep)
}

/// Purification with a full-dimension purifier appended as the last subsystem.
pub fn purify(rho: &DensityOperator) -> PureState {
    rho.purify()
}
