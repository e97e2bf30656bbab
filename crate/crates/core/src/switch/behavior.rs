use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::quantum::matrix;
use crate::quantum::{BinaryPvm, DensityOperator};
use crate::selftest::{ideal_strategy, Strategy};

const NORMALIZATION_TOL: f64 = 1e-9;

/// Binary-outcome bipartite behavior `p(a,b|x,y)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "BehaviorRecord", into = "BehaviorRecord")]
pub struct Behavior {
    nx: usize,
    ny: usize,
    probs: Vec<f64>,
}

/// Table form `probs[x][y][a][b]`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BehaviorRecord {
    pub probs: Vec<Vec<[[f64; 2]; 2]>>,
}

impl TryFrom<BehaviorRecord> for Behavior {
    type Error = Error;
    fn try_from(r: BehaviorRecord) -> Result<Self> {
        let nx = r.probs.len();
        let ny = r.probs.first().map_or(0, |row| row.len());
        if nx == 0 || ny == 0 || r.probs.iter().any(|row| row.len() != ny) {
            return Err(Error::MalformedBehavior("table must be a nonempty nx × ny grid".into()));
        }
        let mut probs = Vec::with_capacity(4 * nx * ny);
        for row in &r.probs {
            for cell in row {
                for a in cell {
                    probs.extend_from_slice(a);
                }
            }
        }
        Behavior::new(nx, ny, probs)
    }
}

impl From<Behavior> for BehaviorRecord {
    fn from(b: Behavior) -> Self {
        let probs = (0..b.nx)
            .map(|x| {
                (0..b.ny)
                    .map(|y| [[b.p(0, 0, x, y), b.p(0, 1, x, y)], [b.p(1, 0, x, y), b.p(1, 1, x, y)]])
                    .collect()
            })
            .collect();
        BehaviorRecord { probs }
    }
}

#[inline]
fn index(ny: usize, a: usize, b: usize, x: usize, y: usize) -> usize {
    ((x * ny + y) * 2 + a) * 2 + b
}

impl Behavior {
    pub fn new(nx: usize, ny: usize, probs: Vec<f64>) -> Result<Self> {
        if probs.len() != 4 * nx * ny {
            return Err(Error::MalformedBehavior(format!(
                "expected {} entries, found {}",
                4 * nx * ny,
                probs.len()
            )));
        }
        if probs.iter().any(|p| !p.is_finite() || *p < -NORMALIZATION_TOL) {
            return Err(Error::MalformedBehavior("negative or non-finite probability".into()));
        }
        let b = Self { nx, ny, probs };
        for x in 0..nx {
            for y in 0..ny {
                let s: f64 = (0..4).map(|k| b.p(k / 2, k % 2, x, y)).sum();
                if (s - 1.0).abs() > NORMALIZATION_TOL {
                    return Err(Error::MalformedBehavior(format!("p(·,·|{x},{y}) sums to {s}")));
                }
            }
        }
        let ns = b.signaling_defect();
        if ns > NORMALIZATION_TOL {
            return Err(Error::MalformedBehavior(format!("signaling defect {ns:.3e}")));
        }
        Ok(b)
    }

    /// Normalized table without the no-signaling check, for finite-sample
    /// frequency estimates.
    pub fn from_frequencies(nx: usize, ny: usize, probs: Vec<f64>) -> Result<Self> {
        if probs.len() != 4 * nx * ny {
            return Err(Error::MalformedBehavior(format!("expected {} entries, found {}", 4 * nx * ny, probs.len())));
        }
        if probs.iter().any(|p| !p.is_finite() || *p < 0.0) {
            return Err(Error::MalformedBehavior("negative or non-finite frequency".into()));
        }
        let b = Self { nx, ny, probs };
        for x in 0..nx {
            for y in 0..ny {
                let s: f64 = (0..4).map(|k| b.p(k / 2, k % 2, x, y)).sum();
                if (s - 1.0).abs() > NORMALIZATION_TOL {
                    return Err(Error::MalformedBehavior(format!("p(·,·|{x},{y}) sums to {s}")));
                }
            }
        }
        Ok(b)
    }

    pub fn nx(&self) -> usize {
        self.nx
    }

    pub fn ny(&self) -> usize {
        self.ny
    }

    pub fn p(&self, a: usize, b: usize, x: usize, y: usize) -> f64 {
        self.probs[index(self.ny, a, b, x, y)]
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.probs
    }

    /// `E_xy = Σ (−1)^{a⊕b} p(a,b|x,y)`.
    pub fn correlator(&self, x: usize, y: usize) -> f64 {
        self.p(0, 0, x, y) + self.p(1, 1, x, y) - self.p(0, 1, x, y) - self.p(1, 0, x, y)
    }

    pub fn alice_marginal(&self, a: usize, x: usize) -> f64 {
        self.p(a, 0, x, 0) + self.p(a, 1, x, 0)
    }

    pub fn bob_marginal(&self, b: usize, y: usize) -> f64 {
        self.p(0, b, 0, y) + self.p(1, b, 0, y)
    }

    pub fn signaling_defect(&self) -> f64 {
        let mut worst: f64 = 0.0;
        for x in 0..self.nx {
            for a in 0..2 {
                let m0 = self.p(a, 0, x, 0) + self.p(a, 1, x, 0);
                for y in 1..self.ny {
                    worst = worst.max((self.p(a, 0, x, y) + self.p(a, 1, x, y) - m0).abs());
                }
            }
        }
        for y in 0..self.ny {
            for b in 0..2 {
                let m0 = self.p(0, b, 0, y) + self.p(1, b, 0, y);
                for x in 1..self.nx {
                    worst = worst.max((self.p(0, b, x, y) + self.p(1, b, x, y) - m0).abs());
                }
            }
        }
        worst
    }

    /// Born-rule behavior of `ρ_AB` (two declared subsystems).
    pub fn from_state(rho: &DensityOperator, alice: &[BinaryPvm], bob: &[BinaryPvm]) -> Result<Self> {
        let dims = rho.system_dims();
        if dims.len() != 2 {
            return Err(Error::DimensionMismatch { expected: 2, found: dims.len() });
        }
        let (nx, ny) = (alice.len(), bob.len());
        let mut probs = vec![0.0; 4 * nx * ny];
        for (x, ma) in alice.iter().enumerate() {
            for (y, nb) in bob.iter().enumerate() {
                for a in 0..2 {
                    for b in 0..2 {
                        let op = matrix::tensor(ma.effect(a), nb.effect(b));
                        probs[index(ny, a, b, x, y)] = rho.expectation(&op).max(0.0);
                    }
                }
            }
        }
        Self::new(nx, ny, probs)
    }

    pub fn from_strategy(s: &Strategy) -> Result<Self> {
        let alice: Vec<BinaryPvm> = s.alice_obs().iter().map(|r| r.pvm()).collect();
        let bob: Vec<BinaryPvm> = s.partner_obs().iter().map(|r| r.pvm()).collect();
        Self::from_state(&s.state().density(), &alice, &bob)
    }

    /// Behavior of the optimal CHSH strategy.
    pub fn ideal_chsh() -> Self {
        Self::from_strategy(&ideal_strategy()).expect("ideal strategy yields a valid behavior")
    }

    /// `v · ideal + (1 − v) · uniform`.
    pub fn isotropic(v: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&v) {
            return Err(Error::domain(format!("visibility {v} outside [0,1]")));
        }
        let ideal = Self::ideal_chsh();
        let probs = ideal.probs.iter().map(|p| v * p + (1.0 - v) * 0.25).collect();
        Self::new(2, 2, probs)
    }

    /// Local deterministic behavior `a = alpha[x]`, `b = beta[y]`.
    pub fn deterministic(alpha: &[usize], beta: &[usize]) -> Result<Self> {
        let (nx, ny) = (alpha.len(), beta.len());
        let mut probs = vec![0.0; 4 * nx * ny];
        for x in 0..nx {
            for y in 0..ny {
                probs[index(ny, alpha[x] & 1, beta[y] & 1, x, y)] = 1.0;
            }
        }
        Self::new(nx, ny, probs)
    }

    /// Convex combination of behaviors of equal shape.
    pub fn mixture(weights: &[f64], parts: &[Behavior]) -> Result<Self> {
        let first = parts.first().ok_or_else(|| Error::MalformedBehavior("empty mixture".into()))?;
        let mut probs = vec![0.0; first.probs.len()];
        for (w, b) in weights.iter().zip(parts) {
            if (b.nx, b.ny) != (first.nx, first.ny) {
                return Err(Error::MalformedBehavior("mixed shapes".into()));
            }
            for (acc, p) in probs.iter_mut().zip(&b.probs) {
                *acc += w * p;
            }
        }
        Self::new(first.nx, first.ny, probs)
    }

    /// Apply local relabelings: swap inputs, then flip outputs per input.
    pub fn relabel(&self, swap_x: bool, swap_y: bool, flip_a: [bool; 2], flip_b: [bool; 2]) -> Result<Self> {
        if self.nx != 2 || self.ny != 2 {
            return Err(Error::MalformedBehavior("relabeling is defined for 2×2 behaviors".into()));
        }
        let mut probs = vec![0.0; 16];
        for x in 0..2 {
            for y in 0..2 {
                for a in 0..2 {
                    for b in 0..2 {
                        let sx = if swap_x { 1 - x } else { x };
                        let sy = if swap_y { 1 - y } else { y };
                        let fa = a ^ flip_a[x] as usize;
                        let fb = b ^ flip_b[y] as usize;
                        probs[index(2, fa, fb, sx, sy)] = self.p(a, b, x, y);
                    }
                }
            }
        }
        Self::new(2, 2, probs)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ideal_correlators() {
        let b = Behavior::ideal_chsh();
        let s = b.correlator(0, 0) + b.correlator(0, 1) + b.correlator(1, 0) - b.correlator(1, 1);
        assert!((s - 2.0 * std::f64::consts::SQRT_2).abs() < 1e-12);
        assert!((b.alice_marginal(0, 1) - 0.5).abs() < 1e-12);
    }

    #[test]
    fn rejects_signaling() {
        let mut probs = vec![0.25; 16];
        // p(a|x=0,y=0) ≠ p(a|x=0,y=1)
        probs[0] = 0.5;
        probs[1] = 0.0;
        probs[2] = 0.0;
        probs[3] = 0.5;
        probs[4] = 0.5;
        probs[5] = 0.5;
        probs[6] = 0.0;
        probs[7] = 0.0;
        assert!(matches!(Behavior::new(2, 2, probs), Err(Error::MalformedBehavior(_))));
        assert!(Behavior::new(2, 2, vec![0.25; 15]).is_err());
        assert!(Behavior::new(2, 2, vec![0.3; 16]).is_err());
    }

    #[test]
    fn record_roundtrip() {
        let b = Behavior::isotropic(0.6).unwrap();
        let text = serde_json::to_string(&b).unwrap();
        let back: Behavior = serde_json::from_str(&text).unwrap();
        for (x, y) in b.as_slice().iter().zip(back.as_slice()) {
            assert!((x - y).abs() < 1e-15);
        }
    }
}
