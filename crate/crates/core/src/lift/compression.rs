//! Compressed states and the two lifting inequalities.

use serde::Serialize;

use super::dilation::DilationPair;
use crate::entropy::{continuity_f, measure_to_cq, CqState};
use crate::error::{Error, Result};
use crate::quantum::matrix;
use crate::quantum::{DensityOperator, Isometry};

/// Default tolerance for the marginal precondition.
pub const MARGINAL_TOL: f64 = 1e-8;

fn aux_split(iso: &Isometry) -> (usize, usize) {
    let d = iso.codomain_dims();
    (d[0], d[1..].iter().product::<usize>().max(1))
}

/// `tr_aux[(I_A ⊗ I_B) ρ (I_A ⊗ I_B)†]` on `ideal_A ⊗ ideal_B`.
pub fn compress_state(rho_ab: &DensityOperator, iso_a: &Isometry, iso_b: &Isometry) -> Result<DensityOperator> {
    let dims = rho_ab.system_dims();
    if dims.len() != 2 {
        return Err(Error::DimensionMismatch { expected: 2, found: dims.len() });
    }
    if dims[0] != iso_a.domain_dim() {
        return Err(Error::DimensionMismatch { expected: dims[0], found: iso_a.domain_dim() });
    }
    if dims[1] != iso_b.domain_dim() {
        return Err(Error::DimensionMismatch { expected: dims[1], found: iso_b.domain_dim() });
    }
    let v = iso_a.matrix().kronecker(iso_b.matrix());
    let lifted = &v * rho_ab.matrix() * v.adjoint();
    let (ia, aa) = aux_split(iso_a);
    let (ib, ab) = aux_split(iso_b);
    let out = matrix::partial_trace(&lifted, &[ia, aa, ib, ab], &[0, 2])?;
    DensityOperator::new(matrix::hermitian_part(&out), vec![ia, ib])
}

fn marginal_defect(rho_ab: &DensityOperator, side: usize, dp: &DilationPair) -> Result<f64> {
    let r = rho_ab.partial_trace(&[side])?;
    let m = dp.self_marginal()?;
    if r.dim() != m.dim() {
        return Err(Error::DimensionMismatch { expected: m.dim(), found: r.dim() });
    }
    Ok(matrix::max_abs_diff(r.matrix(), m.matrix()))
}

fn check_marginal(defect: f64, tol: f64) -> Result<()> {
    if defect > tol {
        return Err(Error::MarginalMismatch { defect, tolerance: tol });
    }
    Ok(())
}

#[derive(Debug, Clone, Serialize)]
pub struct CompressionReport {
    /// `max |tr[ρ M⊗N] − tr[ρ̃ M̃⊗Ñ]|` over outcomes and settings.
    pub deviation: f64,
    /// `3(ε_A + ε_B)`.
    pub bound: f64,
    pub marginal_defect_a: f64,
    pub marginal_defect_b: f64,
    pub holds: bool,
}

/// Compare physical and compressed correlations for the dilated parties
/// `dp_a` and `dp_b`. `ρ_AB` must reproduce both physical marginals within
/// `marginal_tol`.
pub fn verify_compression(
    dp_a: &DilationPair,
    dp_b: &DilationPair,
    rho_ab: &DensityOperator,
    marginal_tol: f64,
) -> Result<CompressionReport> {
    let marginal_defect_a = marginal_defect(rho_ab, 0, dp_a)?;
    let marginal_defect_b = marginal_defect(rho_ab, 1, dp_b)?;
    check_marginal(marginal_defect_a, marginal_tol)?;
    check_marginal(marginal_defect_b, marginal_tol)?;
    let tilde = compress_state(rho_ab, &dp_a.iso_a, &dp_b.iso_a)?;
    let mut deviation: f64 = 0.0;
    for x in 0..2 {
        let ma = dp_a.physical.alice_obs()[x].pvm();
        let mt = dp_a.ideal.alice_obs()[x].pvm();
        for y in 0..2 {
            let nb = dp_b.physical.alice_obs()[y].pvm();
            let nt = dp_b.ideal.alice_obs()[y].pvm();
            for a in 0..2 {
                for b in 0..2 {
                    let phys = rho_ab.expectation(&ma.effect(a).kronecker(nb.effect(b)));
                    let ideal = tilde.expectation(&mt.effect(a).kronecker(nt.effect(b)));
                    deviation = deviation.max((phys - ideal).abs());
                }
            }
        }
    }
    let bound = 3.0 * (dp_a.epsilon + dp_b.epsilon);
    Ok(CompressionReport {
        deviation,
        bound,
        marginal_defect_a,
        marginal_defect_b,
        holds: deviation <= bound + 1e-9,
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct EntropyTransferReport {
    /// `H(A|E)` of the physical measurement, `E` purifying `ρ_AB`.
    pub lhs: f64,
    /// `H(A|E′)` of the ideal measurement on the lifted state.
    pub rhs: f64,
    /// `|A|·ε_A`.
    pub delta: f64,
    /// `f(δ, |A|)`.
    pub f: f64,
    /// `lhs − (rhs − f)`.
    pub slack: f64,
    pub marginal_defect: f64,
    pub holds: bool,
}

/// Lifted cq state: apply `I_A` to a purification of `ρ_AB`, measure the
/// ideal effect on `Ã`, keep `aux_A ⊗ E` (Bob's side is discarded).
pub fn lifted_cq(dp_a: &DilationPair, rho_ab: &DensityOperator, x_tilde: usize) -> Result<CqState> {
    let psi = rho_ab.purify_minimal(1e-13);
    let pd = psi.system_dims().to_vec();
    let (ia, aa) = aux_split(&dp_a.iso_a);
    let rest = pd[1] * pd[2];
    let lifted = dp_a.iso_a.matrix().kronecker(&matrix::identity(rest)) * psi.amplitudes();
    let dims = [ia, aa, pd[1], pd[2]];
    let pvm = dp_a.ideal.alice_obs()[x_tilde].pvm();
    let mut probs = Vec::with_capacity(2);
    let mut conds = Vec::with_capacity(2);
    for a in 0..2 {
        let op = matrix::embed_operator(pvm.effect(a), &dims, 0)?;
        let v = &op * &lifted;
        let p = v.norm_squared();
        probs.push(p);
        if p > 1e-14 {
            let red = matrix::reduced_from_vector(&v, &dims, &[1, 3])?;
            conds.push(Some(DensityOperator::from_unnormalized(red, vec![aa, pd[2]])?));
        } else {
            conds.push(None);
        }
    }
    let s: f64 = probs.iter().sum();
    CqState::new(probs.into_iter().map(|p| p / s).collect(), conds)
}

/// Check `H(A|E)_phys ≥ H(A|E′)_lifted − f(|A|ε_A, |A|)`.
pub fn verify_entropy_transfer(
    dp_a: &DilationPair,
    rho_ab: &DensityOperator,
    x_tilde: usize,
    marginal_tol: f64,
) -> Result<EntropyTransferReport> {
    if x_tilde > 1 {
        return Err(Error::domain(format!("key setting {x_tilde} outside {{0, 1}}")));
    }
    let marginal = marginal_defect(rho_ab, 0, dp_a)?;
    check_marginal(marginal, marginal_tol)?;
    let pvm = dp_a.physical.alice_obs()[x_tilde].pvm();
    let lhs = measure_to_cq(rho_ab, &pvm, true)?.conditional_entropy();
    let rhs = lifted_cq(dp_a, rho_ab, x_tilde)?.conditional_entropy();
    let delta = 2.0 * dp_a.epsilon;
    let f = continuity_f(delta, 2)?;
    let slack = lhs - (rhs - f);
    Ok(EntropyTransferReport { lhs, rhs, delta, f, slack, marginal_defect: marginal, holds: slack >= -1e-8 })
}
