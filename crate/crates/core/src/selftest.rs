//! CHSH game, sum-of-squares defects and robust self-test constants.

use std::f64::consts::SQRT_2;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::quantum::matrix::{self, CMatrix};
use crate::quantum::random::{random_pure, random_reflection, random_unitary};
use crate::quantum::{PureState, Reflection};

/// Optimal quantum game value `½ + 1/(2√2)`.
pub const TSIRELSON_GAME_VALUE: f64 = 0.5 + 1.0 / (2.0 * SQRT_2);
pub const TSIRELSON_CORRELATOR: f64 = 2.0 * SQRT_2;

/// Measurement dilation constant (multiplies √ε).
pub const MEAS_CONSTANT: u32 = 111;
/// State dilation constant (multiplies √ε).
pub const STATE_CONSTANT: u32 = 95;

/// Bipartite pure state with two ±1 observables per side.
#[derive(Debug, Clone)]
pub struct Strategy {
    state: PureState,
    alice_obs: [Reflection; 2],
    partner_obs: [Reflection; 2],
}

impl Strategy {
    /// `state` must declare exactly two subsystems `[d_A, d_P]`.
    pub fn new(state: PureState, alice_obs: [Reflection; 2], partner_obs: [Reflection; 2]) -> Result<Self> {
        let dims = state.system_dims();
        if dims.len() != 2 {
            return Err(Error::DimensionMismatch { expected: 2, found: dims.len() });
        }
        for r in &alice_obs {
            if r.dim() != dims[0] {
                return Err(Error::DimensionMismatch { expected: dims[0], found: r.dim() });
            }
        }
        for r in &partner_obs {
            if r.dim() != dims[1] {
                return Err(Error::DimensionMismatch { expected: dims[1], found: r.dim() });
            }
        }
        Ok(Self { state, alice_obs, partner_obs })
    }

    pub fn state(&self) -> &PureState {
        &self.state
    }

    pub fn alice_obs(&self) -> &[Reflection; 2] {
        &self.alice_obs
    }

    pub fn partner_obs(&self) -> &[Reflection; 2] {
        &self.partner_obs
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.state.system_dims()[0], self.state.system_dims()[1])
    }

    fn alice_op(&self, op: &CMatrix) -> CMatrix {
        op.kronecker(&matrix::identity(self.dims().1))
    }

    fn partner_op(&self, op: &CMatrix) -> CMatrix {
        matrix::identity(self.dims().0).kronecker(op)
    }

    /// `⟨A_x ⊗ B_y⟩`.
    pub fn correlator(&self, x: usize, y: usize) -> f64 {
        let op = self.alice_obs[x].matrix().kronecker(self.partner_obs[y].matrix());
        self.state.expectation(&op)
    }

    pub fn alice_marginal(&self, x: usize) -> f64 {
        self.state.expectation(&self.alice_op(self.alice_obs[x].matrix()))
    }

    pub fn partner_marginal(&self, y: usize) -> f64 {
        self.state.expectation(&self.partner_op(self.partner_obs[y].matrix()))
    }

    /// Conjugate each side by a local unitary.
    pub fn rotate(&self, ua: &CMatrix, ub: &CMatrix) -> Result<Strategy> {
        let state = self.state.apply_unitary(&ua.kronecker(ub))?;
        let a = [self.alice_obs[0].conjugate(ua)?, self.alice_obs[1].conjugate(ua)?];
        let b = [self.partner_obs[0].conjugate(ub)?, self.partner_obs[1].conjugate(ub)?];
        Strategy::new(state, a, b)
    }
}

/// `⟨A₀B₀⟩ + ⟨A₀B₁⟩ + ⟨A₁B₀⟩ − ⟨A₁B₁⟩`.
pub fn chsh_correlator(s: &Strategy) -> f64 {
    s.correlator(0, 0) + s.correlator(0, 1) + s.correlator(1, 0) - s.correlator(1, 1)
}

/// Winning probability `½ + correlator/8`.
pub fn chsh_game_value(s: &Strategy) -> f64 {
    0.5 + chsh_correlator(s) / 8.0
}

/// Game-value deficit `½ + 1/(2√2) − value`.
pub fn chsh_deficit(s: &Strategy) -> f64 {
    TSIRELSON_GAME_VALUE - chsh_game_value(s)
}

/// Maximally entangled qubits with `A = (X, Z)` and
/// `B = ((X+Z)/√2, (X−Z)/√2)`.
pub fn ideal_strategy() -> Strategy {
    let fr = std::f64::consts::FRAC_PI_4;
    Strategy {
        state: PureState::maximally_entangled(2),
        alice_obs: [Reflection::pauli_x(), Reflection::pauli_z()],
        partner_obs: [Reflection::xz_plane(fr), Reflection::xz_plane(3.0 * fr)],
    }
}

/// `‖(A₀⊗1 − 1⊗(B₀+B₁)/√2)ψ‖` and `‖(A₁⊗1 − 1⊗(B₀−B₁)/√2)ψ‖`.
pub fn sos_defects(s: &Strategy) -> [f64; 2] {
    let [b0, b1] = [s.partner_obs[0].matrix(), s.partner_obs[1].matrix()];
    let c = (b0 + b1).unscale(SQRT_2);
    let d = (b0 - b1).unscale(SQRT_2);
    let psi = s.state.amplitudes();
    let v0 = (s.alice_op(s.alice_obs[0].matrix()) - s.partner_op(&c)) * psi;
    let v1 = (s.alice_op(s.alice_obs[1].matrix()) - s.partner_op(&d)) * psi;
    [v0.norm(), v1.norm()]
}

/// `‖(1 ⊗ {B₀, B₁})ψ‖`.
pub fn anticommutator_defect(s: &Strategy) -> f64 {
    let [b0, b1] = [s.partner_obs[0].matrix(), s.partner_obs[1].matrix()];
    let anti = b0 * b1 + b1 * b0;
    (s.partner_op(&anti) * s.state.amplitudes()).norm()
}

/// `⁴√128`: each SOS defect is at most this times √ε.
pub fn sos_constant() -> f64 {
    128f64.powf(0.25)
}

/// `2(1+√2)⁴√128`: the anticommutator defect is at most this times √ε.
pub fn anticommutator_constant() -> f64 {
    2.0 * (1.0 + SQRT_2) * sos_constant()
}

/// Intermediate constants of the dilation bound, all multiplying √ε.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DerivationChain {
    pub fourth_root_128: f64,
    pub one_plus_sqrt2: f64,
    /// Single-operator dilation error `(1+√2)⁴√128`.
    pub single_operator: f64,
    /// Reflection dilation error `2(1+√2)⁴√128`.
    pub reflection: f64,
    /// `δ/√ε = 4(1+√2)⁴√128`.
    pub delta: f64,
    /// Spectral gap `Δ = 1/(2√2)`.
    pub gap: f64,
    /// `(δ + √ε)/(Δ√ε)`; its ceiling is the state constant.
    pub state_bound: f64,
    /// `reflection + state_bound`; its ceiling is the measurement constant.
    pub meas_bound: f64,
    /// Same two bounds keeping an extra √2 prefactor on the gap term.
    pub state_bound_sqrt2: f64,
    pub meas_bound_sqrt2: f64,
}

impl DerivationChain {
    pub fn compute() -> Self {
        let fourth_root_128 = sos_constant();
        let one_plus_sqrt2 = 1.0 + SQRT_2;
        let single_operator = one_plus_sqrt2 * fourth_root_128;
        let reflection = 2.0 * single_operator;
        let delta = 4.0 * single_operator;
        let gap = 1.0 / (2.0 * SQRT_2);
        let state_bound = (delta + 1.0) / gap;
        let state_bound_sqrt2 = SQRT_2 * state_bound;
        Self {
            fourth_root_128,
            one_plus_sqrt2,
            single_operator,
            reflection,
            delta,
            gap,
            state_bound,
            meas_bound: reflection + state_bound,
            state_bound_sqrt2,
            meas_bound_sqrt2: reflection + state_bound_sqrt2,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DilationBudget {
    pub epsilon: f64,
    /// `111 √ε`.
    pub delta_meas: f64,
    /// `95 √ε`.
    pub delta_state: f64,
    /// `δ = 4(1+√2)⁴√128 √ε`.
    pub delta: f64,
    pub gap: f64,
    pub chain: DerivationChain,
}

pub fn dilation_budget(epsilon: f64) -> Result<DilationBudget> {
    if !(epsilon >= 0.0) || !epsilon.is_finite() {
        return Err(Error::domain(format!("CHSH deficit {epsilon} must be finite and nonnegative")));
    }
    let chain = DerivationChain::compute();
    let r = epsilon.sqrt();
    Ok(DilationBudget {
        epsilon,
        delta_meas: MEAS_CONSTANT as f64 * r,
        delta_state: STATE_CONSTANT as f64 * r,
        delta: chain.delta * r,
        gap: chain.gap,
        chain,
    })
}

/// Inverse of the measurement budget: the deficit at which `111√ε = delta_meas`.
pub fn deficit_for_meas_error(delta_meas: f64) -> f64 {
    (delta_meas / MEAS_CONSTANT as f64).powi(2)
}

/// Distinct eigenvalues (descending) of the game operator in the ideal
/// representation `A = (X, Z)`, `B = ((X±Z)/√2)`.
pub fn spectral_check_game_operator() -> [f64; 3] {
    let s = ideal_strategy();
    let a = |x: usize| s.alice_obs[x].matrix().clone();
    let b = |y: usize| s.partner_obs[y].matrix().clone();
    let poly = matrix::tensor(&a(0), &b(0)) + matrix::tensor(&a(0), &b(1)) + matrix::tensor(&a(1), &b(0))
        - matrix::tensor(&a(1), &b(1));
    let op = matrix::identity(4).scale(0.5) + poly.scale(1.0 / 8.0);
    let mut vals = matrix::hermitian_eigenvalues(&op);
    vals.reverse();
    let mut distinct: Vec<f64> = Vec::with_capacity(3);
    for v in vals {
        if distinct.last().is_none_or(|&l| (l - v).abs() > 1e-9) {
            distinct.push(v);
        }
    }
    assert_eq!(distinct.len(), 3, "game operator should have three distinct eigenvalues");
    [distinct[0], distinct[1], distinct[2]]
}

/// Near-ideal strategy: ideal angles perturbed with strength `spread`,
/// embedded into local dimension up to 4 with leaked weight, then conjugated
/// by Haar-random local unitaries.
pub fn random_near_ideal_strategy<R: Rng + ?Sized>(spread: f64, rng: &mut R) -> Strategy {
    use rand_distr::StandardNormal;
    let mut g = || -> f64 { rng.sample::<f64, _>(StandardNormal) * spread };
    let fr = std::f64::consts::FRAC_PI_4;
    let angles = [fr * 2.0 + g(), g(), fr + g(), 3.0 * fr + g()];
    let t = fr + g();
    let leak = (g() * 0.5).powi(2).min(0.5);
    let da = rng.random_range(2..=4usize);
    let dp = rng.random_range(2..=4usize);

    let mut amp = matrix::CVector::zeros(da * dp);
    let core = (1.0 - leak).sqrt();
    amp[0] = matrix::c(core * t.cos(), 0.0);
    amp[dp + 1] = matrix::c(core * t.sin(), 0.0);
    if da > 2 && dp > 2 {
        amp[2 * dp + 2] = matrix::c(leak.sqrt(), 0.0);
    } else {
        amp[0] += matrix::c(0.0, leak.sqrt());
    }
    let state = PureState::normalized(amp, vec![da, dp]).unwrap();

    let extend = |r: Reflection, d: usize, rng: &mut R| -> Reflection {
        if d == 2 {
            r
        } else {
            let minus = rng.random_range(0..=d - 2);
            r.direct_sum(&random_reflection(d - 2, minus, rng))
        }
    };
    let a = [extend(Reflection::xz_plane(angles[0]), da, rng), extend(Reflection::xz_plane(angles[1]), da, rng)];
    let b = [extend(Reflection::xz_plane(angles[2]), dp, rng), extend(Reflection::xz_plane(angles[3]), dp, rng)];
    let s = Strategy::new(state, a, b).unwrap();
    let ua = random_unitary(da, rng);
    let ub = random_unitary(dp, rng);
    s.rotate(&ua, &ub).unwrap()
}

/// Fully random strategy (random pure state and random reflections).
pub fn random_strategy<R: Rng + ?Sized>(da: usize, dp: usize, rng: &mut R) -> Strategy {
    let state = random_pure(vec![da, dp], rng);
    let refl = |d: usize, rng: &mut R| {
        let minus = rng.random_range(0..=d);
        random_reflection(d, minus, rng)
    };
    let a = [refl(da, rng), refl(da, rng)];
    let b = [refl(dp, rng), refl(dp, rng)];
    Strategy::new(state, a, b).unwrap()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quantum::random::seeded;

    #[test]
    fn ideal_values() {
        let s = ideal_strategy();
        assert!((chsh_correlator(&s) - 2.0 * SQRT_2).abs() < 1e-12);
        assert!((chsh_game_value(&s) - TSIRELSON_GAME_VALUE).abs() < 1e-12);
        for x in 0..2 {
            assert!(s.alice_marginal(x).abs() < 1e-14);
            assert!(s.partner_marginal(x).abs() < 1e-14);
        }
        let [d0, d1] = sos_defects(&s);
        assert!(d0 < 1e-14 && d1 < 1e-14);
        assert!(anticommutator_defect(&s) < 1e-14);
        let (x, z) = (s.alice_obs[0].matrix(), s.alice_obs[1].matrix());
        assert!(matrix::max_abs(&(x * z + z * x)) <= 1e-12);
    }

    #[test]
    fn classical_deterministic_strategy() {
        let z = Reflection::pauli_z();
        let s = Strategy::new(
            PureState::basis(vec![2, 2], 0).unwrap(),
            [z.clone(), z.clone()],
            [z.clone(), z],
        )
        .unwrap();
        assert!((chsh_correlator(&s) - 2.0).abs() < 1e-14);
        assert!((chsh_game_value(&s) - 0.75).abs() < 1e-14);
    }

    #[test]
    fn uncorrelated_product_is_half() {
        let plus = PureState::normalized(matrix::CVector::from_element(2, matrix::ONE), vec![2]).unwrap();
        let state = plus.tensor(&plus);
        let z = Reflection::pauli_z();
        let s = Strategy::new(state, [z.clone(), z.clone()], [z.clone(), z]).unwrap();
        assert!((chsh_game_value(&s) - 0.5).abs() < 1e-14);
    }

    #[test]
    fn commuting_partner_observables() {
        let s = ideal_strategy();
        let b = Reflection::pauli_x();
        let s = Strategy::new(s.state().clone(), s.alice_obs().clone(), [b.clone(), b]).unwrap();
        assert!((anticommutator_defect(&s) - 2.0).abs() < 1e-14);
    }

    #[test]
    fn rotated_alice_defects_grow() {
        let base = ideal_strategy();
        let mut prev = 0.0;
        for phi in [0.01, 0.05, 0.1] {
            let a = [Reflection::xz_plane(std::f64::consts::FRAC_PI_2 + phi), Reflection::xz_plane(phi)];
            let s = Strategy::new(base.state().clone(), a, base.partner_obs().clone()).unwrap();
            let eps = chsh_deficit(&s);
            let [d0, d1] = sos_defects(&s);
            assert!(d0 > prev);
            prev = d0;
            // Alice rotated by φ: each defect is 2 sin(φ/2)
            assert!((d0 - 2.0 * (phi / 2.0).sin()).abs() < 1e-12);
            assert!(d0.max(d1) <= sos_constant() * eps.sqrt() + 1e-9);
        }
    }

    #[test]
    fn sos_identity_is_exact() {
        let mut rng = seeded(11);
        for _ in 0..200 {
            let s = random_strategy(3, 2, &mut rng);
            let [d0, d1] = sos_defects(&s);
            let eps = chsh_deficit(&s);
            assert!(((d0 * d0 + d1 * d1) / (8.0 * SQRT_2) - eps).abs() < 1e-9);
        }
    }

    #[test]
    fn budget_values() {
        let b = dilation_budget(0.0).unwrap();
        assert_eq!((b.delta_meas, b.delta_state), (0.0, 0.0));
        let b = dilation_budget(1e-4).unwrap();
        assert!((b.delta_meas - 1.11).abs() < 1e-12);
        assert!((b.delta_state - 0.95).abs() < 1e-12);
        assert!((b.gap - 1.0 / (2.0 * SQRT_2)).abs() < 1e-15);
        assert!(dilation_budget(-1.0).is_err());
        assert!((deficit_for_meas_error(1.11) - 1e-4).abs() < 1e-16);
    }

    #[test]
    fn chain_reproduces_integer_constants() {
        let c = DerivationChain::compute();
        assert_eq!(c.state_bound.ceil() as u32, STATE_CONSTANT);
        assert_eq!(c.meas_bound.ceil() as u32, MEAS_CONSTANT);
        assert!(c.state_bound_sqrt2 > STATE_CONSTANT as f64);
    }

    #[test]
    fn spectrum() {
        let ev = spectral_check_game_operator();
        let r = 1.0 / (2.0 * SQRT_2);
        assert!((ev[0] - (0.5 + r)).abs() < 1e-12);
        assert!((ev[1] - 0.5).abs() < 1e-12);
        assert!((ev[2] - (0.5 - r)).abs() < 1e-12);
        assert!((ev[0] - chsh_game_value(&ideal_strategy())).abs() < 1e-12);
        // closed form ½ + (√2/8)(XX + ZZ)
        let op = matrix::identity(4).scale(0.5)
            + (matrix::tensor(&matrix::pauli_x(), &matrix::pauli_x())
                + matrix::tensor(&matrix::pauli_z(), &matrix::pauli_z()))
            .scale(SQRT_2 / 8.0);
        let mut vals = matrix::hermitian_eigenvalues(&op);
        vals.dedup_by(|a, b| (*a - *b).abs() < 1e-9);
        assert_eq!(vals.len(), 3);
        assert!((vals[2] - ev[0]).abs() < 1e-12 && (vals[0] - ev[2]).abs() < 1e-12);
    }
}
