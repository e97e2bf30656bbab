//! Spot-checking protocol with four parties and two switches.

pub mod config;
pub mod finite;
pub mod rate;
pub mod sim;

pub use config::{Noise, ProtocolConfig};
pub use finite::{finite_size_bound, finite_size_penalty, single_round_objective};
pub use rate::{end_to_end_rate, RateMode, RateOptions, RateReport};
pub use sim::{
    key_round_indices, run_protocol, sift, Estimates, HonestModel, Link, MeasurementTable, PairCounts,
    ProtocolTranscript, SiftSummary, Statistic, Tally,
};
