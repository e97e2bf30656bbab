//! Seeded inputs shared by the benchmarks.

use rand::Rng;
use routedqkd_core::lift::{random_dilation_instance, DilationInstance};
use routedqkd_core::quantum::random::{random_density, seeded};
use routedqkd_core::quantum::CMatrix;
use routedqkd_core::switch::equivalence::{random_model_b, RandomModelB};
use routedqkd_core::DensityOperator;

pub struct ProjectionInstance {
    pub p: CMatrix,
    pub q: CMatrix,
    pub sigma: DensityOperator,
}

pub fn projection_instance(d: usize, seed: u64) -> ProjectionInstance {
    let mut rng = seeded(seed);
    let (p, q) = routedqkd_core::overlap::random_projection_pair(d, &mut rng);
    let sigma = random_density(vec![d], d, &mut rng);
    ProjectionInstance { p, q, sigma }
}

/// Full-rank state on `dims`.
pub fn state(dims: Vec<usize>, seed: u64) -> DensityOperator {
    let mut rng = seeded(seed);
    let n = dims.iter().product();
    random_density(dims, n, &mut rng)
}

pub fn dilation(eps: f64, seed: u64) -> DilationInstance {
    let mut rng = seeded(seed);
    let jitter = rng.random_range(0.0..1e-3);
    random_dilation_instance(eps + jitter, eps, &mut rng).expect("valid dilation targets")
}

pub fn model_b(d: usize, seed: u64) -> RandomModelB {
    random_model_b(2, d, &mut seeded(seed))
}
