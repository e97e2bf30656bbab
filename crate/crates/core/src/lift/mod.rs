//! Lifting from physical strategies to the ideal two-qubit model.

pub mod compression;
pub mod dilation;
pub mod lbfgs;
pub mod relaxed;

pub use compression::{
    compress_state, lifted_cq, verify_compression, verify_entropy_transfer, CompressionReport,
    EntropyTransferReport, MARGINAL_TOL,
};
pub use dilation::{
    build_flag_dilation, build_role_dilation, build_test_dilation, random_dilation_instance, DilationDefects,
    DilationInstance, DilationPair, Role,
};
pub use relaxed::{
    reduction_chain, solve_relaxed_opt, IdealSettings, LiftProblem, ReductionResult, RelaxedSolution, DEFAULT_RESTARTS,
};
