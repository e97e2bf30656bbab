//! Heuristic minimization of `H(A_x̃|E′)` over two-qubit states whose ideal
//! statistics lie within `eps_prob` of a target behavior.
//!
//! The state is `LL†/tr(LL†)` with `L` lower triangular (16 real
//! parameters). Constraints are handled by an augmented Lagrangian whose
//! inner problems are solved by L-BFGS. The value returned is the best
//! feasible local minimum over all restarts, which estimates the infimum
//! from above.

use std::f64::consts::FRAC_PI_4;

use rand::Rng;
use rayon::prelude::*;
use serde::Serialize;

use super::lbfgs::{self, LbfgsOptions};
use crate::entropy::continuity_f;
use crate::error::{Error, Result};
use crate::quantum::matrix::{self, CMatrix};
use crate::quantum::random;
use crate::quantum::{BinaryPvm, DensityOperator, Reflection};
use crate::switch::Behavior;

/// Restarts meeting this constraint residual count as feasible.
pub const FEASIBILITY_TOL: f64 = 1e-6;
/// Initial penalty weight of the augmented Lagrangian.
pub const PENALTY_WEIGHT: f64 = 1e4;
pub const DEFAULT_RESTARTS: usize = 64;

const N_PARAMS: usize = 16;
const LOG_FLOOR: f64 = 1e-300;

/// Fixed qubit measurements on the ideal spaces.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum IdealSettings {
    /// Alice `(X, Z)`, Bob `(X, Z)`.
    Bb84,
    /// Alice `(X, Z)`, Bob `((X+Z)/√2, (X−Z)/√2)`.
    Chsh,
}

impl IdealSettings {
    pub fn alice(self) -> Vec<BinaryPvm> {
        vec![Reflection::pauli_x().pvm(), Reflection::pauli_z().pvm()]
    }

    pub fn bob(self) -> Vec<BinaryPvm> {
        match self {
            IdealSettings::Bb84 => vec![Reflection::pauli_x().pvm(), Reflection::pauli_z().pvm()],
            IdealSettings::Chsh => {
                vec![Reflection::xz_plane(FRAC_PI_4).pvm(), Reflection::xz_plane(3.0 * FRAC_PI_4).pvm()]
            }
        }
    }
}

#[derive(Debug, Clone)]
pub struct LiftProblem {
    pub target: Behavior,
    pub eps_prob: f64,
    pub key_setting: usize,
    pub alice: Vec<BinaryPvm>,
    pub bob: Vec<BinaryPvm>,
}

impl LiftProblem {
    pub fn new(
        target: Behavior,
        eps_prob: f64,
        key_setting: usize,
        alice: Vec<BinaryPvm>,
        bob: Vec<BinaryPvm>,
    ) -> Result<Self> {
        if !(eps_prob >= 0.0) || !eps_prob.is_finite() {
            return Err(Error::domain(format!("eps_prob {eps_prob} must be finite and nonnegative")));
        }
        if target.nx() != alice.len() {
            return Err(Error::DimensionMismatch { expected: alice.len(), found: target.nx() });
        }
        if target.ny() != bob.len() {
            return Err(Error::DimensionMismatch { expected: bob.len(), found: target.ny() });
        }
        if key_setting >= alice.len() {
            return Err(Error::domain(format!("key setting {key_setting} out of range")));
        }
        if let Some(m) = alice.iter().chain(&bob).find(|m| m.dim() != 2) {
            return Err(Error::DimensionMismatch { expected: 2, found: m.dim() });
        }
        Ok(Self { target, eps_prob, key_setting, alice, bob })
    }

    pub fn with_settings(settings: IdealSettings, target: Behavior, eps_prob: f64, key_setting: usize) -> Result<Self> {
        Self::new(target, eps_prob, key_setting, settings.alice(), settings.bob())
    }

    /// BB84 statistics of the Bell-diagonal state with
    /// `λ = (1 − 3Q/2, Q/2, Q/2, Q/2)`, key from Z.
    pub fn bb84_symmetric(q: f64, eps_prob: f64) -> Result<Self> {
        if !(0.0..=2.0 / 3.0).contains(&q) {
            return Err(Error::domain(format!("Q {q} outside [0, 2/3]")));
        }
        let rho = DensityOperator::bell_diagonal([1.0 - 1.5 * q, 0.5 * q, 0.5 * q, 0.5 * q])?;
        let s = IdealSettings::Bb84;
        let target = Behavior::from_state(&rho, &s.alice(), &s.bob())?;
        Self::with_settings(s, target, eps_prob, 1)
    }

    /// `ρ ↦ (M_{a|x} ⊗ N_{b|y}, p_{abxy})` for every table entry.
    fn constraints(&self) -> Vec<(CMatrix, f64)> {
        let mut out = Vec::with_capacity(4 * self.alice.len() * self.bob.len());
        for (x, m) in self.alice.iter().enumerate() {
            for (y, n) in self.bob.iter().enumerate() {
                for a in 0..2 {
                    for b in 0..2 {
                        out.push((m.effect(a).kronecker(n.effect(b)), self.target.p(a, b, x, y)));
                    }
                }
            }
        }
        out
    }

    fn key_effects(&self) -> [CMatrix; 2] {
        let m = &self.alice[self.key_setting];
        [m.effect(0).kronecker(&matrix::identity(2)), m.effect(1).kronecker(&matrix::identity(2))]
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct RelaxedSolution {
    /// Best feasible objective, in bits.
    pub entropy: f64,
    pub state: DensityOperator,
    pub residual: f64,
    pub feasible_restarts: usize,
    pub restarts: usize,
}

struct Objective {
    constraints: Vec<(CMatrix, f64)>,
    key: [CMatrix; 2],
    eps: f64,
}

fn params_to_l(x: &[f64]) -> CMatrix {
    let mut l = matrix::zeros(4, 4);
    let mut k = 0;
    for i in 0..4 {
        for j in 0..=i {
            if i == j {
                l[(i, j)] = matrix::c(x[k], 0.0);
                k += 1;
            } else {
                l[(i, j)] = matrix::c(x[k], x[k + 1]);
                k += 2;
            }
        }
    }
    l
}

fn grad_from_matrix(gl: &CMatrix, scale: f64) -> Vec<f64> {
    let mut g = Vec::with_capacity(N_PARAMS);
    for i in 0..4 {
        for j in 0..=i {
            g.push(scale * gl[(i, j)].re);
            if i != j {
                g.push(scale * gl[(i, j)].im);
            }
        }
    }
    g
}

fn real_trace_product(a: &CMatrix, b: &CMatrix) -> f64 {
    let mut s = 0.0;
    for i in 0..a.nrows() {
        for j in 0..a.ncols() {
            s += (a[(i, j)] * b[(j, i)]).re;
        }
    }
    s
}

/// `(−Σ λ log₂ λ, log₂ M)` for Hermitian PSD `M`.
fn entropy_and_log(m: &CMatrix) -> (f64, CMatrix) {
    let (vals, vecs) = matrix::hermitian_eigen(m);
    let s = -vals.iter().map(|&l| if l > 0.0 { l * l.log2() } else { 0.0 }).sum::<f64>();
    let log = matrix::spectral_map(&vals, &vecs, |l| l.max(LOG_FLOOR).log2());
    (s, log)
}

impl Objective {
    fn state(&self, x: &[f64]) -> (CMatrix, CMatrix, f64) {
        let l = params_to_l(x);
        let a = &l * l.adjoint();
        let t = matrix::trace(&a).re;
        (a.unscale(t), l, t)
    }

    fn pinch(&self, rho: &CMatrix) -> CMatrix {
        &self.key[0] * rho * &self.key[0] + &self.key[1] * rho * &self.key[1]
    }

    fn entropy(&self, rho: &CMatrix) -> (f64, CMatrix) {
        let pr = self.pinch(rho);
        let (s_rho, log_rho) = entropy_and_log(rho);
        let (s_pr, log_pr) = entropy_and_log(&pr);
        (s_pr - s_rho, log_rho - self.pinch(&log_pr))
    }

    fn residuals(&self, rho: &CMatrix) -> Vec<f64> {
        self.constraints.iter().map(|(o, p)| real_trace_product(rho, o) - p).collect()
    }

    fn residual(&self, rho: &CMatrix) -> f64 {
        self.residuals(rho).into_iter().map(|g| (g.abs() - self.eps).max(0.0)).fold(0.0, f64::max)
    }

    /// Augmented Lagrangian value and parameter gradient.
    fn lagrangian(&self, x: &[f64], lam: &[(f64, f64)], mu: f64) -> (f64, Vec<f64>) {
        let (rho, l, t) = self.state(x);
        let (h, mut grad) = self.entropy(&rho);
        let mut value = h;
        for ((o, p), &(lp, lm)) in self.constraints.iter().zip(lam) {
            let g = real_trace_product(&rho, o) - p;
            let up = (lp + mu * (g - self.eps)).max(0.0);
            let dn = (lm + mu * (-g - self.eps)).max(0.0);
            value += (up * up - lp * lp + dn * dn - lm * lm) / (2.0 * mu);
            let w = up - dn;
            if w != 0.0 {
                grad += o.scale(w);
            }
        }
        let shift = real_trace_product(&grad, &rho);
        let g_prime = grad - matrix::identity(4).scale(shift);
        let gl = g_prime * l;
        (value, grad_from_matrix(&gl, 2.0 / t))
    }
}

struct RestartResult {
    entropy: f64,
    residual: f64,
    state: CMatrix,
}

fn run_restart(obj: &Objective, seed: u64, index: u64) -> RestartResult {
    let mut rng = random::stream(seed, index);
    let mut x: Vec<f64> = (0..N_PARAMS).map(|_| rng.random_range(-1.0..1.0)).collect();
    let m = obj.constraints.len();
    let mut lam = vec![(0.0, 0.0); m];
    let mut mu = PENALTY_WEIGHT;
    let opts = LbfgsOptions { max_iter: 300, ..Default::default() };
    let mut last_res = f64::INFINITY;
    for _ in 0..30 {
        let r = lbfgs::minimize(|p| obj.lagrangian(p, &lam, mu), x, &opts);
        x = r.x;
        let (rho, _, _) = obj.state(&x);
        let gs = obj.residuals(&rho);
        for (l, g) in lam.iter_mut().zip(&gs) {
            l.0 = (l.0 + mu * (g - obj.eps)).max(0.0);
            l.1 = (l.1 + mu * (-g - obj.eps)).max(0.0);
        }
        let res = obj.residual(&rho);
        if res < 1e-10 && (last_res - res).abs() < 1e-12 {
            break;
        }
        if res > 0.25 * last_res {
            mu = (mu * 10.0).min(1e10);
        }
        last_res = res;
    }
    let (rho, _, _) = obj.state(&x);
    let (entropy, _) = obj.entropy(&rho);
    RestartResult { entropy, residual: obj.residual(&rho), state: rho }
}

/// Multi-start local search. Restart `k` draws its starting point from
/// stream `k` of `seed`, so the result does not depend on the thread count.
pub fn solve_relaxed_opt(p: &LiftProblem, restarts: usize, seed: u64) -> Result<RelaxedSolution> {
    if restarts == 0 {
        return Err(Error::domain("restarts must be at least 1"));
    }
    let obj = Objective { constraints: p.constraints(), key: p.key_effects(), eps: p.eps_prob };
    let results: Vec<RestartResult> =
        (0..restarts as u64).into_par_iter().map(|k| run_restart(&obj, seed, k)).collect();
    let feasible_restarts = results.iter().filter(|r| r.residual <= FEASIBILITY_TOL).count();
    let best = results
        .iter()
        .filter(|r| r.residual <= FEASIBILITY_TOL)
        .min_by(|a, b| a.entropy.total_cmp(&b.entropy));
    match best {
        Some(r) => Ok(RelaxedSolution {
            entropy: r.entropy,
            state: DensityOperator::new(matrix::hermitian_part(&r.state), vec![2, 2])?,
            residual: r.residual,
            feasible_restarts,
            restarts,
        }),
        None => Err(Error::NoFeasiblePoint {
            best_residual: results.iter().map(|r| r.residual).fold(f64::INFINITY, f64::min),
        }),
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct ReductionResult {
    pub relaxed: RelaxedSolution,
    /// `3(ε_A + ε_B)`.
    pub eps_prob: f64,
    /// `f(|A|·ε_A, |A|)`.
    pub f_term: f64,
    /// Lifted entropy bound `relaxed − f_term`.
    pub value: f64,
}

/// Relaxed optimum at `eps_prob = 3(ε_A + ε_B)` minus the entropy-transfer
/// continuity term.
pub fn reduction_chain(
    p: &Behavior,
    settings: IdealSettings,
    eps_a: f64,
    eps_b: f64,
    x_tilde: usize,
    restarts: usize,
    seed: u64,
) -> Result<ReductionResult> {
    if !(eps_a >= 0.0 && eps_b >= 0.0) {
        return Err(Error::domain("dilation errors must be nonnegative"));
    }
    let eps_prob = 3.0 * (eps_a + eps_b);
    let problem = LiftProblem::with_settings(settings, p.clone(), eps_prob, x_tilde)?;
    let relaxed = solve_relaxed_opt(&problem, restarts, seed)?;
    let f_term = continuity_f(2.0 * eps_a, 2)?;
    let value = relaxed.entropy - f_term;
    Ok(ReductionResult { relaxed, eps_prob, f_term, value })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::entropy::binary_entropy;

    #[test]
    fn gradient_matches_finite_differences() {
        let p = LiftProblem::bb84_symmetric(0.05, 0.01).unwrap();
        let obj = Objective { constraints: p.constraints(), key: p.key_effects(), eps: p.eps_prob };
        let mut rng = random::seeded(3);
        let x: Vec<f64> = (0..N_PARAMS).map(|_| rng.random_range(-1.0..1.0)).collect();
        let lam: Vec<(f64, f64)> = (0..obj.constraints.len()).map(|i| (0.1 * (i % 3) as f64, 0.05)).collect();
        let (_, g) = obj.lagrangian(&x, &lam, 10.0);
        let h = 1e-6;
        for k in 0..N_PARAMS {
            let mut xp = x.clone();
            let mut xm = x.clone();
            xp[k] += h;
            xm[k] -= h;
            let fd = (obj.lagrangian(&xp, &lam, 10.0).0 - obj.lagrangian(&xm, &lam, 10.0).0) / (2.0 * h);
            assert!((fd - g[k]).abs() < 1e-5 * (1.0 + fd.abs()), "param {k}: {fd} vs {}", g[k]);
        }
    }

    #[test]
    fn symmetric_qber_oracle() {
        let p = LiftProblem::bb84_symmetric(0.05, 0.0).unwrap();
        let s = solve_relaxed_opt(&p, 16, 7).unwrap();
        let oracle = 1.0 - binary_entropy(0.05).unwrap();
        assert!((s.entropy - oracle).abs() < 5e-3, "{} vs {oracle}", s.entropy);
        assert!(s.residual <= FEASIBILITY_TOL);
    }

    #[test]
    fn infeasible_target_is_reported() {
        // PR box statistics have no quantum realization.
        let mut probs = vec![0.0; 16];
        for x in 0..2 {
            for y in 0..2 {
                for a in 0..2 {
                    let b = a ^ (x & y);
                    probs[((x * 2 + y) * 2 + a) * 2 + b] = 0.5;
                }
            }
        }
        let target = Behavior::new(2, 2, probs).unwrap();
        let p = LiftProblem::with_settings(IdealSettings::Bb84, target, 0.0, 1).unwrap();
        assert!(matches!(solve_relaxed_opt(&p, 2, 1), Err(Error::NoFeasiblePoint { .. })));
    }
}
