//! Finite-size bound and the single-round objective.

use crate::entropy::{relative_entropy, ClassicalDistribution};
use crate::error::{Error, Result};

/// `α/(α−1) · log₂(1/p_Ω)`.
pub fn finite_size_penalty(alpha: f64, p_omega: f64) -> Result<f64> {
    if !(alpha > 1.0) || !alpha.is_finite() {
        return Err(Error::domain(format!("alpha {alpha} must exceed 1")));
    }
    if !(p_omega > 0.0 && p_omega <= 1.0) {
        return Err(Error::domain(format!("p_omega {p_omega} outside (0, 1]")));
    }
    Ok(alpha / (alpha - 1.0) * (1.0 / p_omega).log2())
}

/// `N·h_α − α/(α−1) · log₂(1/p_Ω)`, in bits.
pub fn finite_size_bound(n: u64, h_alpha: f64, alpha: f64, p_omega: f64) -> Result<f64> {
    if !h_alpha.is_finite() {
        return Err(Error::domain("h_alpha must be finite"));
    }
    let pen = finite_size_penalty(alpha, p_omega)?;
    Ok(n as f64 * h_alpha - pen)
}

/// `D(q‖p)/(α−1) + q(⊥)·h_down`, where `⊥` is the last symbol of both
/// distributions.
pub fn single_round_objective(
    q: &ClassicalDistribution,
    p: &ClassicalDistribution,
    alpha: f64,
    h_down: f64,
) -> Result<f64> {
    if !(alpha > 1.0) || !alpha.is_finite() {
        return Err(Error::domain(format!("alpha {alpha} must exceed 1")));
    }
    if q.is_empty() {
        return Err(Error::domain("empty distribution"));
    }
    let d = relative_entropy(q, p)?;
    let bot = q.probs()[q.len() - 1];
    Ok(d / (alpha - 1.0) + bot * h_down)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn unit_acceptance_has_no_penalty() {
        assert_eq!(finite_size_bound(1000, 0.25, 1.5, 1.0).unwrap(), 250.0);
    }

    #[test]
    fn direct_evaluation() {
        let v = finite_size_bound(1_000_000, 0.5, 2.0, 0.5).unwrap();
        assert!((v - 499_998.0).abs() < 1e-9);
    }

    #[test]
    fn objective_limits() {
        let p = ClassicalDistribution::new(vec![0.2, 0.3, 0.5]).unwrap();
        assert!((single_round_objective(&p, &p, 1.2, 0.7).unwrap() - 0.35).abs() < 1e-15);
        let only_bot = ClassicalDistribution::new(vec![0.0, 0.0, 1.0]).unwrap();
        let v = single_round_objective(&only_bot, &only_bot, 1.1, 0.4).unwrap();
        assert!((v - 0.4).abs() < 1e-15);
        let q = ClassicalDistribution::new(vec![0.5, 0.5, 0.0]).unwrap();
        let d = relative_entropy(&q, &p).unwrap();
        assert!((single_round_objective(&q, &p, 1.5, 9.0).unwrap() - d / 0.5).abs() < 1e-15);
    }

    #[test]
    fn support_violation() {
        let p = ClassicalDistribution::new(vec![0.0, 1.0]).unwrap();
        let q = ClassicalDistribution::new(vec![0.5, 0.5]).unwrap();
        assert!(matches!(single_round_objective(&q, &p, 2.0, 1.0), Err(Error::SupportViolation { .. })));
    }
}
