//! Local ε-dilations between a physical strategy and the ideal CHSH strategy.

use std::f64::consts::FRAC_PI_4;

use rand::Rng;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::quantum::matrix::{self, CMatrix, CVector};
use crate::quantum::random;
use crate::quantum::{DensityOperator, Isometry, PureState, Reflection};
use crate::selftest::{ideal_strategy, Strategy};

/// Which side of the ideal strategy the dilated party plays.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Role {
    /// Observables `(X, Z)`, partner `((X+Z)/√2, (X−Z)/√2)`.
    Alice,
    /// Observables `((X+Z)/√2, (X−Z)/√2)`, partner `(X, Z)`.
    Bob,
}

impl Role {
    fn ideal(self) -> Strategy {
        match self {
            Role::Alice => ideal_strategy(),
            Role::Bob => {
                let s = ideal_strategy();
                Strategy::new(s.state().clone(), s.partner_obs().clone(), s.alice_obs().clone())
                    .expect("ideal dims")
            }
        }
    }

    /// X–Z plane angle of observable 1.
    fn rotated_angle(self) -> f64 {
        match self {
            Role::Alice => 0.0,
            Role::Bob => 3.0 * FRAC_PI_4,
        }
    }
}

/// Physical strategy, ideal strategy, local isometries and auxiliary state.
/// The isometries map each physical space to `ideal ⊗ aux`; the auxiliary
/// state lives on `aux_self ⊗ aux_partner`.
#[derive(Debug, Clone)]
pub struct DilationPair {
    pub physical: Strategy,
    pub ideal: Strategy,
    pub iso_a: Isometry,
    pub iso_partner: Isometry,
    pub aux_state: PureState,
    pub epsilon: f64,
}

/// The three defect norms of a candidate dilation.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct DilationDefects {
    pub self_effects: f64,
    pub partner_effects: f64,
    pub state: f64,
}

impl DilationDefects {
    pub fn max(&self) -> f64 {
        self.self_effects.max(self.partner_effects).max(self.state)
    }
}

fn split_dims(iso: &Isometry) -> (usize, usize) {
    let d = iso.codomain_dims();
    match d.len() {
        1 => (d[0], 1),
        _ => (d[0], d[1..].iter().product()),
    }
}

impl DilationPair {
    /// Assemble a pair and measure its ε directly.
    pub fn new(
        physical: Strategy,
        ideal: Strategy,
        iso_a: Isometry,
        iso_partner: Isometry,
        aux_state: PureState,
    ) -> Result<Self> {
        let (pa, pp) = physical.dims();
        if iso_a.domain_dim() != pa {
            return Err(Error::DimensionMismatch { expected: pa, found: iso_a.domain_dim() });
        }
        if iso_partner.domain_dim() != pp {
            return Err(Error::DimensionMismatch { expected: pp, found: iso_partner.domain_dim() });
        }
        let (ia, aa) = split_dims(&iso_a);
        let (ip, ap) = split_dims(&iso_partner);
        if (ia, ip) != ideal.dims() {
            return Err(Error::DimensionMismatch { expected: ideal.dims().0 * ideal.dims().1, found: ia * ip });
        }
        if aux_state.dim() != aa * ap {
            return Err(Error::DimensionMismatch { expected: aa * ap, found: aux_state.dim() });
        }
        let mut dp = Self { physical, ideal, iso_a, iso_partner, aux_state, epsilon: 0.0 };
        dp.epsilon = dp.defects()?.max();
        Ok(dp)
    }

    pub fn ideal_dims(&self) -> (usize, usize) {
        self.ideal.dims()
    }

    pub fn aux_dims(&self) -> (usize, usize) {
        (split_dims(&self.iso_a).1, split_dims(&self.iso_partner).1)
    }

    /// `(I_A ⊗ I_P) v`, reordered to `ideal_self ⊗ ideal_partner ⊗ aux_self ⊗ aux_partner`.
    fn lift(&self, v: &CVector) -> Result<CVector> {
        let w = self.iso_a.matrix().kronecker(self.iso_partner.matrix()) * v;
        let (ia, aa) = split_dims(&self.iso_a);
        let (ip, ap) = split_dims(&self.iso_partner);
        matrix::permute_vector(&w, &[ia, aa, ip, ap], &[0, 2, 1, 3])
    }

    fn ideal_with_aux(&self, v: &CVector) -> CVector {
        matrix::tensor_vec(v, self.aux_state.amplitudes())
    }

    /// Evaluate the three defining norms.
    pub fn defects(&self) -> Result<DilationDefects> {
        let psi = self.physical.state().amplitudes();
        let ideal = self.ideal.state().amplitudes();
        let (pa, pp) = self.physical.dims();
        let (ia, ip) = self.ideal.dims();

        let state = (self.lift(psi)? - self.ideal_with_aux(ideal)).norm();

        let mut self_effects: f64 = 0.0;
        let mut partner_effects: f64 = 0.0;
        for x in 0..2 {
            let phys = self.physical.alice_obs()[x].pvm();
            let id = self.ideal.alice_obs()[x].pvm();
            let physp = self.physical.partner_obs()[x].pvm();
            let idp = self.ideal.partner_obs()[x].pvm();
            for a in 0..2 {
                let lhs = self.lift(&(phys.effect(a).kronecker(&matrix::identity(pp)) * psi))?;
                let rhs = self.ideal_with_aux(&(id.effect(a).kronecker(&matrix::identity(ip)) * ideal));
                self_effects = self_effects.max((lhs - rhs).norm());

                let lhs = self.lift(&(matrix::identity(pa).kronecker(physp.effect(a)) * psi))?;
                let rhs = self.ideal_with_aux(&(matrix::identity(ia).kronecker(idp.effect(a)) * ideal));
                partner_effects = partner_effects.max((lhs - rhs).norm());
            }
        }
        Ok(DilationDefects { self_effects, partner_effects, state })
    }

    /// Reduced physical state of the dilated party.
    pub fn self_marginal(&self) -> Result<DensityOperator> {
        self.physical.state().reduced(&[0])
    }
}

fn embed_obs(r: &Reflection, aux: usize) -> Reflection {
    Reflection::new(r.matrix().kronecker(&matrix::identity(aux))).expect("embedding keeps reflections")
}

/// Physical vector ordered `(ideal_self, aux_self, ideal_partner, aux_partner)`,
/// given in `(ideal_self, ideal_partner, aux_self, aux_partner)` order.
fn to_physical_order(v: &CVector) -> CVector {
    matrix::permute_vector(v, &[2, 2, 2, 2], &[0, 2, 1, 3]).expect("qubit dims")
}

/// `√(1−l)|Ω⟩|00⟩ + √l|00⟩|11⟩` in physical order.
fn leaked_state(leak: f64) -> PureState {
    let omega = PureState::maximally_entangled(2);
    let good = matrix::tensor_vec(omega.amplitudes(), &matrix::ket(4, 0));
    let bad = matrix::tensor_vec(&matrix::ket(4, 0), &matrix::ket(4, 3));
    let v = good.scale((1.0 - leak).sqrt()) + bad.scale(leak.sqrt());
    PureState::new(to_physical_order(&v), vec![4, 4]).expect("unit vector")
}

/// Dilation for the given role: ideal strategy on qubits embedded into
/// `C² ⊗ C²` per party, observable 1 rotated by `angle` in the X–Z plane and
/// a `leak`-weighted block orthogonal to the ideal state. Isometries are the
/// identity onto `ideal ⊗ aux` with `aux = |00⟩`.
pub fn build_role_dilation(role: Role, angle: f64, leak: f64) -> Result<DilationPair> {
    if !angle.is_finite() {
        return Err(Error::domain("angle must be finite"));
    }
    if !(0.0..1.0).contains(&leak) {
        return Err(Error::domain(format!("leak {leak} outside [0, 1)")));
    }
    let ideal = role.ideal();
    let phi1 = role.rotated_angle();
    let rotated = if angle == 0.0 { ideal.alice_obs()[1].clone() } else { Reflection::xz_plane(phi1 + angle) };
    let own = [ideal.alice_obs()[0].clone(), rotated];
    let partner = ideal.partner_obs();
    let physical = Strategy::new(
        leaked_state(leak),
        [embed_obs(&own[0], 2), embed_obs(&own[1], 2)],
        [embed_obs(&partner[0], 2), embed_obs(&partner[1], 2)],
    )?;
    let iso = Isometry::new(matrix::identity(4), vec![2, 2])?;
    let aux = PureState::basis(vec![2, 2], 0)?;
    DilationPair::new(physical, ideal, iso.clone(), iso, aux)
}

/// Alice-role dilation with rotation `angle` and `leak`.
pub fn build_test_dilation(angle: f64, leak: f64) -> Result<DilationPair> {
    build_role_dilation(Role::Alice, angle, leak)
}

/// Alice-role dilation whose auxiliary register keeps a partial copy of the
/// Z outcome: `(|00⟩|0⟩ + |11⟩|c⟩)/√2` with `|c⟩ = cos β|0⟩ + sin β|1⟩`.
pub fn build_flag_dilation(beta: f64) -> Result<DilationPair> {
    if !beta.is_finite() {
        return Err(Error::domain("beta must be finite"));
    }
    let ideal = ideal_strategy();
    let s = std::f64::consts::FRAC_1_SQRT_2;
    let flag = matrix::ket(2, 0).scale(beta.cos()) + matrix::ket(2, 1).scale(beta.sin());
    let zero = matrix::ket(2, 0);
    let b00 = matrix::ket(4, 0);
    let b11 = matrix::ket(4, 3);
    let v = matrix::tensor_vec(&matrix::tensor_vec(&b00, &zero), &zero).scale(s)
        + matrix::tensor_vec(&matrix::tensor_vec(&b11, &flag), &zero).scale(s);
    let state = PureState::new(to_physical_order(&v), vec![4, 4])?;
    let a = ideal.alice_obs();
    let p = ideal.partner_obs();
    let physical = Strategy::new(
        state,
        [embed_obs(&a[0], 2), embed_obs(&a[1], 2)],
        [embed_obs(&p[0], 2), embed_obs(&p[1], 2)],
    )?;
    let iso = Isometry::new(matrix::identity(4), vec![2, 2])?;
    let aux = PureState::basis(vec![2, 2], 0)?;
    DilationPair::new(physical, ideal, iso.clone(), iso, aux)
}

/// Matched Alice and Bob dilations with a shared state `ρ_AB` obeying the
/// marginal constraint.
#[derive(Debug, Clone)]
pub struct DilationInstance {
    pub alice: DilationPair,
    pub bob: DilationPair,
    pub rho_ab: DensityOperator,
    pub leak: f64,
}

/// Leak whose state defect equals `t`.
fn leak_for_state_defect(t: f64) -> f64 {
    let s = 1.0 - t * t / 2.0;
    (1.0 - s * s).clamp(0.0, 1.0)
}

/// Unitary on `C² ⊗ C²(aux)` commuting with the partner marginal of
/// [`leaked_state`]: a random U(2) on the `aux = 0` block plus phases.
fn marginal_preserving_unitary<R: Rng + ?Sized>(rng: &mut R) -> CMatrix {
    let u2 = random::random_unitary(2, rng);
    let mut u = matrix::zeros(4, 4);
    // basis index = 2·ideal + aux; the aux = 0 block is {0, 2}
    let blk = [0usize, 2];
    for (i, &r) in blk.iter().enumerate() {
        for (j, &c) in blk.iter().enumerate() {
            u[(r, c)] = u2[(i, j)];
        }
    }
    for idx in [1usize, 3] {
        let t: f64 = rng.random_range(0.0..std::f64::consts::TAU);
        u[(idx, idx)] = matrix::c(t.cos(), t.sin());
    }
    u
}

/// Random instance with target errors `(eps_a, eps_b)`. The rotation angles
/// realize the targets; a common leak (kept below half the smaller nonzero
/// target, zero if either target is zero) perturbs the state. `ρ_AB` mixes
/// the Alice-pair state under up to three unitaries on Bob's side that fix
/// his marginal.
pub fn random_dilation_instance<R: Rng + ?Sized>(eps_a: f64, eps_b: f64, rng: &mut R) -> Result<DilationInstance> {
    if !(0.0..=1.0).contains(&eps_a) || !(0.0..=1.0).contains(&eps_b) {
        return Err(Error::domain("target errors must lie in [0, 1]"));
    }
    let floor = eps_a.min(eps_b);
    let leak = if floor > 0.0 {
        let cap = leak_for_state_defect(floor / 2.0).min(0.05);
        rng.random_range(0.0..=cap)
    } else {
        0.0
    };
    let sign = |rng: &mut R| if rng.random_bool(0.5) { 1.0 } else { -1.0 };
    let angle_a = sign(rng) * 2.0 * eps_a.asin();
    let angle_b = sign(rng) * 2.0 * eps_b.asin();
    let alice = build_role_dilation(Role::Alice, angle_a, leak)?;
    let bob = build_role_dilation(Role::Bob, angle_b, leak)?;

    let k = rng.random_range(1..=3usize);
    let raw: Vec<f64> = (0..k).map(|_| rng.random_range(0.1..1.0)).collect();
    let total: f64 = raw.iter().sum();
    let psi = alice.physical.state().density();
    let mut parts = Vec::with_capacity(k);
    for _ in 0..k {
        let u = matrix::identity(4).kronecker(&marginal_preserving_unitary(rng));
        parts.push(psi.conjugate(&u)?);
    }
    let weights: Vec<f64> = raw.iter().map(|w| w / total).collect();
    let rho_ab = DensityOperator::mixture(&weights, &parts)?;
    Ok(DilationInstance { alice, bob, rho_ab, leak })
}
