//! Numerical toolkit for routed Bell-test key distribution: operator algebra,
//! entropies, CHSH self-testing constants, effective-overlap bounds, key
//! rates, switch models, dilation lifting and a protocol simulator.

pub mod entropy;
pub mod error;
pub mod keyrate;
pub mod lift;
pub mod overlap;
pub mod protocol;
pub mod quantum;
pub mod selftest;
pub mod switch;
pub mod tolerance;

pub use error::{Error, Result};
pub use quantum::{
    BinaryPvm, CMatrix, CVector, DensityOperator, Isometry, KrausChannel, PureState, Reflection,
};
