//! Closed-form key rates (bits per round).

use std::f64::consts::{LN_2, SQRT_2};

use serde::{Deserialize, Serialize};

use crate::entropy::{binary_entropy, h2};
use crate::error::{Error, Result};
use crate::selftest::{dilation_budget, MEAS_CONSTANT, STATE_CONSTANT};

/// Default product constant: twice the single-operator constant.
pub const K2_DEFAULT: f64 = 2.0 * MEAS_CONSTANT as f64;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RateInputs {
    pub omega: f64,
    pub marginal_eps: f64,
    pub qber_x: f64,
    pub qber_z: f64,
}

impl RateInputs {
    pub fn new(omega: f64, marginal_eps: f64, qber_x: f64, qber_z: f64) -> Result<Self> {
        let r = Self { omega, marginal_eps, qber_x, qber_z };
        r.validate()?;
        Ok(r)
    }

    pub fn validate(&self) -> Result<()> {
        if !(0.0..=2.0 * SQRT_2 + 1e-12).contains(&self.omega) {
            return Err(Error::domain(format!("CHSH correlator {} outside [0, 2√2]", self.omega)));
        }
        if !(self.marginal_eps >= 0.0) || !self.marginal_eps.is_finite() {
            return Err(Error::domain("marginal slack must be finite and nonnegative"));
        }
        for q in [self.qber_x, self.qber_z] {
            if !(0.0..=0.5).contains(&q) {
                return Err(Error::domain(format!("QBER {q} outside [0, ½]")));
            }
        }
        Ok(())
    }
}

/// `1 − log₂(1 + (ω/4)√(8−ω²) + ε) − h₂(Q_Z) − h₂(Q_X)`.
pub fn routed_bb84_rate(inp: &RateInputs) -> Result<f64> {
    inp.validate()?;
    let w = inp.omega.min(2.0 * SQRT_2);
    let overlap_term = 1.0 + w / 4.0 * (8.0 - w * w).max(0.0).sqrt() + inp.marginal_eps;
    Ok(1.0 - overlap_term.log2() - h2(inp.qber_z) - h2(inp.qber_x))
}

/// Every stage of the self-test rate bound; all `*_coeff` fields multiply √ε.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SelftestChain {
    pub epsilon: f64,
    pub k2_constant: f64,
    /// `‖(X′ − X̃⊗1)φ‖ ≤ η`, η = 111√ε.
    pub eta: f64,
    /// Product bounds `κ = k2 √ε`.
    pub kappa: f64,
    /// `‖{X′, Z′}φ‖ ≤ 2κ`.
    pub anticommutator_on_state: f64,
    /// State dilation error `ζ = 95√ε`.
    pub zeta: f64,
    /// `√tr[σ′{X′,Z′}²] ≤ s = 2κ + 2ζ`.
    pub second_moment_sqrt: f64,
    /// `c* ≤ ½ + s/4`.
    pub cstar_bound: f64,
    /// `1 − log₂(1 + s/2)`.
    pub neg_log2_cstar: f64,
    /// Linearized constant `C = (k2 + 95)/ln 2`.
    pub rate_constant: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SelftestRate {
    pub rate: f64,
    pub secure: bool,
    pub chain: SelftestChain,
}

/// `1 − h₂(Q_Z) − h₂(Q_X) − C √ε`.
pub fn selftest_rate(epsilon: f64, qber_x: f64, qber_z: f64, k2_constant: f64) -> Result<SelftestRate> {
    if !(k2_constant > 0.0) || !k2_constant.is_finite() {
        return Err(Error::domain("k2 constant must be positive"));
    }
    let hz = fano_bound(qber_z)?;
    let hx = fano_bound(qber_x)?;
    let budget = dilation_budget(epsilon)?;
    let r = epsilon.sqrt();
    let kappa = k2_constant * r;
    let zeta = budget.delta_state;
    let s = 2.0 * kappa + 2.0 * zeta;
    let rate_constant = (k2_constant + STATE_CONSTANT as f64) / LN_2;
    let rate = 1.0 - hz - hx - rate_constant * r;
    Ok(SelftestRate {
        rate,
        secure: rate > 0.0,
        chain: SelftestChain {
            epsilon,
            k2_constant,
            eta: budget.delta_meas,
            kappa,
            anticommutator_on_state: 2.0 * kappa,
            zeta,
            second_moment_sqrt: s,
            cstar_bound: (0.5 + s / 4.0).min(1.0),
            neg_log2_cstar: 1.0 - (1.0 + s / 2.0).log2(),
            rate_constant,
        },
    })
}

/// `H(Z_A|E) − H(Z_A|Z_B)`.
pub fn devetak_winter(h_z_given_e: f64, h_z_given_zb: f64) -> f64 {
    h_z_given_e - h_z_given_zb
}

/// `h₂(Q)` for `Q ∈ [0, ½]`.
pub fn fano_bound(qber: f64) -> Result<f64> {
    if !(0.0..=0.5).contains(&qber) {
        return Err(Error::domain(format!("QBER {qber} outside [0, ½]")));
    }
    binary_entropy(qber)
}

/// `1 − 2h₂(Q)`.
pub fn shor_preskill_rate(qber: f64) -> Result<f64> {
    Ok(1.0 - 2.0 * fano_bound(qber)?)
}

/// Root of `1 − 2h₂(Q)` on `(0, ½)` by bisection.
pub fn shor_preskill_threshold() -> f64 {
    let (mut lo, mut hi) = (0.0f64, 0.5f64);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if 1.0 - 2.0 * h2(mid) > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo < 1e-15 {
            break;
        }
    }
    0.5 * (lo + hi)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RateGrid {
    pub omega: Vec<f64>,
    #[serde(default = "zero_vec")]
    pub eps: Vec<f64>,
    pub qx: Vec<f64>,
    pub qz: Vec<f64>,
}

fn zero_vec() -> Vec<f64> {
    vec![0.0]
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RateRow {
    pub omega: f64,
    pub eps: f64,
    pub qx: f64,
    pub qz: f64,
    pub rate: f64,
    pub secure: bool,
}

/// Cartesian sweep in (ω, ε, Q_X, Q_Z) order.
pub fn sweep(grid: &RateGrid) -> Result<Vec<RateRow>> {
    let mut rows = Vec::new();
    for &omega in &grid.omega {
        for &eps in &grid.eps {
            for &qx in &grid.qx {
                for &qz in &grid.qz {
                    let rate = routed_bb84_rate(&RateInputs::new(omega, eps, qx, qz)?)?;
                    rows.push(RateRow { omega, eps, qx, qz, rate, secure: rate > 0.0 });
                }
            }
        }
    }
    Ok(rows)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rate(w: f64, e: f64, qx: f64, qz: f64) -> f64 {
        routed_bb84_rate(&RateInputs::new(w, e, qx, qz).unwrap()).unwrap()
    }

    #[test]
    fn golden_values() {
        assert!((rate(2.0 * SQRT_2, 0.0, 0.0, 0.0) - 1.0).abs() < 1e-12);
        assert!(rate(2.0, 0.0, 0.0, 0.0).abs() < 1e-12);
        for i in 0..=11 {
            let q = i as f64 / 100.0;
            let sp = shor_preskill_rate(q).unwrap();
            assert!((rate(2.0 * SQRT_2, 0.0, q, q) - sp).abs() < 1e-12);
        }
    }

    #[test]
    fn threshold() {
        assert!((shor_preskill_threshold() - 0.1100).abs() < 1e-4);
    }

    #[test]
    fn input_validation() {
        assert!(RateInputs::new(3.0, 0.0, 0.0, 0.0).is_err());
        assert!(RateInputs::new(2.0, -1.0, 0.0, 0.0).is_err());
        assert!(RateInputs::new(2.0, 0.0, 0.6, 0.0).is_err());
        assert!(fano_bound(0.51).is_err());
    }

    #[test]
    fn selftest_rate_values() {
        let r = selftest_rate(0.0, 0.0, 0.0, K2_DEFAULT).unwrap();
        assert_eq!(r.rate, 1.0);
        assert!(r.secure);
        let q = 0.03;
        let r = selftest_rate(0.0, q, q, K2_DEFAULT).unwrap();
        assert!((r.rate - shor_preskill_rate(q).unwrap()).abs() < 1e-15);
        let r0 = selftest_rate(0.0, q, q, K2_DEFAULT).unwrap();
        let r1 = selftest_rate(1e-4, q, q, K2_DEFAULT).unwrap();
        let c = r1.chain.rate_constant;
        assert!(((r0.rate - r1.rate) - c * 0.01).abs() < 1e-12);
        assert!((c - (222.0 + 95.0) / LN_2).abs() < 1e-12);
        assert!((r1.chain.eta - 1.11).abs() < 1e-12);
        // the linearization never overstates the exact log form
        assert!(r1.chain.neg_log2_cstar >= 1.0 - r1.chain.second_moment_sqrt / (2.0 * LN_2));
    }

    #[test]
    fn devetak_winter_examples() {
        assert_eq!(devetak_winter(1.0, 0.0), 1.0);
        let h = h2(0.05);
        assert!((devetak_winter(1.0 - h, h) - (1.0 - 2.0 * h)).abs() < 1e-15);
        assert!((devetak_winter(0.3, 0.5) + 0.2).abs() < 1e-15);
        assert!((fano_bound(0.05).unwrap() - 0.2864).abs() < 1e-4);
    }

    #[test]
    fn sweep_covers_grid() {
        let grid = RateGrid { omega: vec![2.0, 2.8], eps: vec![0.0, 0.01], qx: vec![0.0], qz: vec![0.0, 0.05] };
        let rows = sweep(&grid).unwrap();
        assert_eq!(rows.len(), 8);
        assert!(!rows[0].secure);
    }
}
