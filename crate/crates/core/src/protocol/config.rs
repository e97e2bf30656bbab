//! Protocol parameters.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Link noise: depolarizing parameters of the long (A–B) and short
/// (A–F, B–G) links. A parameter `q` leaves visibility `1 − q`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Noise {
    pub depolarizing_q: f64,
    pub local_q: f64,
}

impl Default for Noise {
    fn default() -> Self {
        Self { depolarizing_q: 0.0, local_q: 0.0 }
    }
}

/// Input biases are `P(input = 0)`; switch biases are `P(T = 0)` with
/// `T = 0` routing the long path.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ProtocolConfig {
    pub rounds: u64,
    pub gamma: f64,
    pub p_a: f64,
    pub p_b: f64,
    pub p_f: f64,
    pub p_g: f64,
    pub t_a: f64,
    pub t_b: f64,
    pub noise: Noise,
    /// Half-width of the acceptance box around each honest-model statistic.
    pub accept_tolerance: f64,
    pub seed: u64,
    pub workers: usize,
    /// Rényi order for the finite-size penalty.
    pub alpha: f64,
    /// Acceptance probability entering the finite-size penalty.
    pub p_omega: f64,
}

impl Default for ProtocolConfig {
    fn default() -> Self {
        Self {
            rounds: 100_000,
            gamma: 0.1,
            p_a: 0.5,
            p_b: 0.5,
            p_f: 0.5,
            p_g: 0.5,
            t_a: 0.5,
            t_b: 0.5,
            noise: Noise::default(),
            accept_tolerance: 0.05,
            seed: 0,
            workers: 1,
            alpha: 1.05,
            p_omega: 1e-10,
        }
    }
}

fn prob(name: &str, v: f64) -> Result<()> {
    if !(0.0..=1.0).contains(&v) {
        return Err(Error::domain(format!("{name} = {v} outside [0, 1]")));
    }
    Ok(())
}

impl ProtocolConfig {
    pub fn validate(&self) -> Result<()> {
        if self.rounds == 0 {
            return Err(Error::domain("rounds must be at least 1"));
        }
        if self.workers == 0 {
            return Err(Error::domain("workers must be at least 1"));
        }
        for (n, v) in [
            ("gamma", self.gamma),
            ("p_a", self.p_a),
            ("p_b", self.p_b),
            ("p_f", self.p_f),
            ("p_g", self.p_g),
            ("t_a", self.t_a),
            ("t_b", self.t_b),
            ("noise.depolarizing_q", self.noise.depolarizing_q),
            ("noise.local_q", self.noise.local_q),
        ] {
            prob(n, v)?;
        }
        if !(self.accept_tolerance >= 0.0) {
            return Err(Error::domain("accept_tolerance must be nonnegative"));
        }
        if !(self.alpha > 1.0) || !self.alpha.is_finite() {
            return Err(Error::domain(format!("alpha {} must exceed 1", self.alpha)));
        }
        if !(self.p_omega > 0.0 && self.p_omega <= 1.0) {
            return Err(Error::domain(format!("p_omega {} outside (0, 1]", self.p_omega)));
        }
        Ok(())
    }

    pub fn long_visibility(&self) -> f64 {
        1.0 - self.noise.depolarizing_q
    }

    pub fn short_visibility(&self) -> f64 {
        1.0 - self.noise.local_q
    }
}
