use serde::Serialize;

use crate::entropy::measure_to_cq;
use crate::error::{Error, Result};
use crate::quantum::matrix;
use crate::quantum::{trace_distance, BinaryPvm, DensityOperator, PureState, Reflection};

/// Switch-indexed family of source states `{p_t, ρ^t}`.
#[derive(Debug, Clone)]
pub struct SwitchSource {
    branch_probs: Vec<f64>,
    branch_states: Vec<DensityOperator>,
}

impl SwitchSource {
    pub fn new(branch_probs: Vec<f64>, branch_states: Vec<DensityOperator>) -> Result<Self> {
        if branch_probs.is_empty() || branch_probs.len() != branch_states.len() {
            return Err(Error::DimensionMismatch { expected: branch_probs.len(), found: branch_states.len() });
        }
        if branch_probs.iter().any(|&p| !(p >= 0.0)) || (branch_probs.iter().sum::<f64>() - 1.0).abs() > 1e-10 {
            return Err(Error::domain("branch probabilities must form a distribution"));
        }
        let dims = branch_states[0].system_dims();
        if branch_states.iter().any(|s| s.system_dims() != dims) {
            return Err(Error::InvalidState("branch states must share system_dims".into()));
        }
        Ok(Self { branch_probs, branch_states })
    }

    pub fn branch_probs(&self) -> &[f64] {
        &self.branch_probs
    }

    pub fn branch_states(&self) -> &[DensityOperator] {
        &self.branch_states
    }

    pub fn system_dims(&self) -> &[usize] {
        self.branch_states[0].system_dims()
    }

    /// `Σ_t p_t ρ^t`.
    pub fn average(&self) -> Result<DensityOperator> {
        DensityOperator::mixture(&self.branch_probs, &self.branch_states)
    }
}

/// Largest trace distance between branch marginals on `subsystems`.
pub fn marginal_constraint_defect(src: &SwitchSource, subsystems: &[usize]) -> Result<f64> {
    let marginals = src
        .branch_states
        .iter()
        .map(|s| s.partial_trace(subsystems))
        .collect::<Result<Vec<_>>>()?;
    let mut worst: f64 = 0.0;
    for i in 0..marginals.len() {
        for j in i + 1..marginals.len() {
            worst = worst.max(trace_distance(&marginals[i], &marginals[j])?);
        }
    }
    Ok(worst)
}

/// Subsystem order of the attack source.
pub const A0: usize = 0;
pub const A1: usize = 1;
pub const B: usize = 2;
pub const F: usize = 3;

#[derive(Debug, Clone, Serialize)]
pub struct AttackDiagnostics {
    /// CHSH correlator of Alice's flag-conditioned settings with Fred, `T = 1` branch.
    pub chsh_t1: f64,
    /// `H(Z_{A₀}|E)` of the `T = 0` branch with `E` purifying `τ_{A₀B}`.
    pub key_entropy_t0: f64,
    /// Trace distance between Alice's marginals `A₀A₁` across branches.
    pub marginal_defect: f64,
}

#[derive(Debug, Clone)]
pub struct AttackDemo {
    pub source: SwitchSource,
    pub diagnostics: AttackDiagnostics,
}

/// Two-branch source on `A₀ A₁ B F` where Alice's flag `A₁` reveals the
/// switch setting:
/// `T = 1`: `|Ω⟩_{A₀F} ⊗ |1⟩⟨1|_{A₁} ⊗ I/2_B`;
/// `T = 0`: `τ_{A₀B} ⊗ |0⟩⟨0|_{A₁} ⊗ I/2_F` with `τ = ½(|00⟩⟨00| + |11⟩⟨11|)`.
pub fn attack_example() -> Result<AttackDemo> {
    let half = DensityOperator::maximally_mixed(vec![2]);
    let flag = |k: usize| PureState::basis(vec![2], k).map(|p| p.density());

    // |Ω⟩_{A₀F} ⊗ |1⟩_{A₁} ⊗ σ_B, assembled as A₀ F A₁ B then reordered
    let omega = PureState::maximally_entangled(2).density();
    let t1 = omega.tensor(&flag(1)?).tensor(&half).permute(&[0, 2, 3, 1])?;

    let mut tau_m = matrix::zeros(4, 4);
    tau_m[(0, 0)] = matrix::c(0.5, 0.0);
    tau_m[(3, 3)] = matrix::c(0.5, 0.0);
    let tau = DensityOperator::new(tau_m, vec![2, 2])?;
    // τ_{A₀B} ⊗ |0⟩_{A₁} ⊗ μ_F, assembled as A₀ B A₁ F
    let t0 = tau.tensor(&flag(0)?).tensor(&half).permute(&[0, 2, 1, 3])?;

    let source = SwitchSource::new(vec![0.5, 0.5], vec![t0, t1.clone()])?;

    // Alice measures the ideal test observable when the flag says T = 1 and Z otherwise
    let p1 = matrix::projector(&matrix::ket(2, 1));
    let p0 = matrix::projector(&matrix::ket(2, 0));
    let alice = [Reflection::pauli_x(), Reflection::pauli_z()]
        .map(|ideal| matrix::tensor(ideal.matrix(), &p1) + matrix::tensor(&matrix::pauli_z(), &p0));
    let fr = std::f64::consts::FRAC_PI_4;
    let fred = [Reflection::xz_plane(fr), Reflection::xz_plane(3.0 * fr)];
    let rho_af = t1.partial_trace(&[A0, A1, F])?;
    let corr = |x: usize, y: usize| rho_af.expectation(&matrix::tensor(&alice[x], fred[y].matrix()));
    let chsh_t1 = corr(0, 0) + corr(0, 1) + corr(1, 0) - corr(1, 1);

    let cq = measure_to_cq(&tau, &BinaryPvm::z_basis(), true)?;
    let key_entropy_t0 = cq.conditional_entropy();
    let marginal_defect = marginal_constraint_defect(&source, &[A0, A1])?;

    Ok(AttackDemo { source, diagnostics: AttackDiagnostics { chsh_t1, key_entropy_t0, marginal_defect } })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn attack_diagnostics() {
        let demo = attack_example().unwrap();
        let d = &demo.diagnostics;
        assert!((d.chsh_t1 - 2.0 * std::f64::consts::SQRT_2).abs() < 1e-10);
        assert!(d.key_entropy_t0.abs() < 1e-9);
        assert!((d.marginal_defect - 1.0).abs() < 1e-10);
        // the A₀ marginal alone is I/2 in both branches; only the flag leaks T
        let a0 = marginal_constraint_defect(&demo.source, &[A0]).unwrap();
        assert!(a0 < 1e-12);
    }

    #[test]
    fn identical_marginals_give_zero() {
        let s = PureState::maximally_entangled(2).density();
        let src = SwitchSource::new(vec![0.3, 0.7], vec![s.clone(), s]).unwrap();
        assert!(marginal_constraint_defect(&src, &[0]).unwrap() < 1e-15);
    }

    #[test]
    fn dephased_pair_defect() {
        let dephased = |v: f64| {
            let mut m = matrix::zeros(4, 4);
            m[(0, 0)] = matrix::c(0.5, 0.0);
            m[(3, 3)] = matrix::c(0.5, 0.0);
            m[(0, 3)] = matrix::c(v / 2.0, 0.0);
            m[(3, 0)] = matrix::c(v / 2.0, 0.0);
            DensityOperator::new(m, vec![2, 2]).unwrap()
        };
        let (v, w) = (0.9, 0.4);
        let src = SwitchSource::new(vec![0.5, 0.5], vec![dephased(v), dephased(w)]).unwrap();
        let d = marginal_constraint_defect(&src, &[0, 1]).unwrap();
        assert!((d - 0.5 * (v - w).abs()).abs() < 1e-12);
    }
}
