//! Numerical tolerances shared across the crate.
//!
//! Structural invariants (hermiticity, idempotency, isometry identities) are
//! checked at [`STRUCTURAL`]; reconstruction claims (Uhlmann rotations,
//! channel conversions) at [`RECONSTRUCTION`]. State validation is tighter
//! because states are usually produced by exact constructions.

/// Hermiticity, trace and positivity checks on density operators.
pub const STATE: f64 = 1e-10;

/// Hermiticity, idempotency and isometry checks on operators.
pub const STRUCTURAL: f64 = 1e-9;

/// Claims that follow from a decomposition (SVD, eigen) and a rebuild.
pub const RECONSTRUCTION: f64 = 1e-7;

/// Eigenvalues in `[-CLAMP, 0)` are treated as exact zeros before logs and roots.
pub const CLAMP: f64 = 1e-10;

/// Normalization of pure states.
pub const NORM: f64 = 1e-10;
