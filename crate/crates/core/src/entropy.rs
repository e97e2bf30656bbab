//! Entropies in bits.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::quantum::matrix::{self, CMatrix};
use crate::quantum::{BinaryPvm, DensityOperator};

/// Probability vector over a finite alphabet.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassicalDistribution {
    probs: Vec<f64>,
}

impl ClassicalDistribution {
    pub fn new(probs: Vec<f64>) -> Result<Self> {
        if probs.is_empty() {
            return Err(Error::domain("empty distribution"));
        }
        if probs.iter().any(|&p| !(p >= 0.0) || !p.is_finite()) {
            return Err(Error::domain("probabilities must be finite and nonnegative"));
        }
        let s: f64 = probs.iter().sum();
        if (s - 1.0).abs() > 1e-10 {
            return Err(Error::domain(format!("probabilities sum to {s}")));
        }
        Ok(Self { probs })
    }

    pub fn uniform(n: usize) -> Self {
        Self { probs: vec![1.0 / n as f64; n] }
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn len(&self) -> usize {
        self.probs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.probs.is_empty()
    }

    pub fn shannon(&self) -> f64 {
        shannon(&self.probs)
    }
}

#[inline]
fn xlog2x(x: f64) -> f64 {
    if x <= 0.0 {
        0.0
    } else {
        x * x.log2()
    }
}

pub fn shannon(p: &[f64]) -> f64 {
    -p.iter().map(|&x| xlog2x(x)).sum::<f64>()
}

/// `h₂(q)`.
pub fn binary_entropy(q: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&q) {
        return Err(Error::domain(format!("binary entropy argument {q} outside [0,1]")));
    }
    Ok(-xlog2x(q) - xlog2x(1.0 - q))
}

/// `h₂` for arguments already known to be in range; values are clamped.
pub(crate) fn h2(q: f64) -> f64 {
    let q = q.clamp(0.0, 1.0);
    -xlog2x(q) - xlog2x(1.0 - q)
}

pub fn von_neumann(rho: &DensityOperator) -> f64 {
    von_neumann_matrix(rho.matrix())
}

pub(crate) fn von_neumann_matrix(m: &CMatrix) -> f64 {
    let vals = matrix::hermitian_eigenvalues(m);
    -vals
        .into_iter()
        .map(|l| xlog2x(matrix::clamp_eigenvalue(l).max(0.0)))
        .sum::<f64>()
}

/// `H(A|E) = H(AE) − H(E)` where `a_subsystems` lists the subsystems of `A`
/// and every other subsystem belongs to `E`.
pub fn conditional_entropy(rho: &DensityOperator, a_subsystems: &[usize]) -> Result<f64> {
    let n = rho.system_dims().len();
    for &k in a_subsystems {
        if k >= n {
            return Err(Error::SubsystemOutOfRange { index: k, count: n });
        }
    }
    let e: Vec<usize> = (0..n).filter(|k| !a_subsystems.contains(k)).collect();
    let h_ae = von_neumann(rho);
    if e.is_empty() {
        return Ok(h_ae);
    }
    Ok(h_ae - von_neumann(&rho.partial_trace(&e)?))
}

/// Classical register with a quantum state on `E` for each symbol.
/// Symbols of probability zero carry no conditional state.
#[derive(Debug, Clone)]
pub struct CqState {
    probs: Vec<f64>,
    conditionals: Vec<Option<DensityOperator>>,
}

/// Outcomes below this probability are treated as absent.
const ZERO_PROB: f64 = 1e-14;

impl CqState {
    pub fn new(probs: Vec<f64>, conditionals: Vec<Option<DensityOperator>>) -> Result<Self> {
        ClassicalDistribution::new(probs.clone())?;
        if probs.len() != conditionals.len() {
            return Err(Error::DimensionMismatch { expected: probs.len(), found: conditionals.len() });
        }
        let mut dim = None;
        for (p, c) in probs.iter().zip(&conditionals) {
            match c {
                Some(s) => match dim {
                    None => dim = Some(s.dim()),
                    Some(d) if d != s.dim() => {
                        return Err(Error::DimensionMismatch { expected: d, found: s.dim() })
                    }
                    _ => {}
                },
                None if *p > ZERO_PROB => {
                    return Err(Error::InvalidState("missing conditional state for a likely outcome".into()))
                }
                None => {}
            }
        }
        if dim.is_none() {
            return Err(Error::InvalidState("no conditional states".into()));
        }
        Ok(Self { probs, conditionals })
    }

    /// Classical distribution with a trivial one-dimensional `E`.
    pub fn classical(probs: Vec<f64>) -> Result<Self> {
        let trivial = DensityOperator::maximally_mixed(vec![1]);
        let conds = probs.iter().map(|_| Some(trivial.clone())).collect();
        Self::new(probs, conds)
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn conditional(&self, a: usize) -> Option<&DensityOperator> {
        self.conditionals[a].as_ref()
    }

    pub fn e_dim(&self) -> usize {
        self.conditionals.iter().flatten().next().map(|s| s.dim()).unwrap()
    }

    /// `ρ_E = Σ_a p_a ρ_a`.
    pub fn e_marginal(&self) -> CMatrix {
        let d = self.e_dim();
        let mut m = matrix::zeros(d, d);
        for (p, c) in self.probs.iter().zip(&self.conditionals) {
            if let Some(s) = c {
                m += s.matrix().scale(*p);
            }
        }
        m
    }

    /// `H(A|E) = H(A) + Σ_a p_a S(ρ_a) − S(ρ_E)`.
    pub fn conditional_entropy(&self) -> f64 {
        let mut h = shannon(&self.probs);
        for (p, c) in self.probs.iter().zip(&self.conditionals) {
            if let Some(s) = c {
                h += p * von_neumann(s);
            }
        }
        h - von_neumann_matrix(&self.e_marginal())
    }

    /// Guessing-free Holevo quantity `S(ρ_E) − Σ p_a S(ρ_a)`.
    pub fn holevo(&self) -> f64 {
        shannon(&self.probs) - self.conditional_entropy()
    }
}

/// Measure subsystem 0 of `rho` with `pvm`.
///
/// Without a purifier the conditional states live on the remaining
/// subsystems of `rho`. With `purifier = true` they live on a purifying
/// system of `rho` alone (everything else is discarded), which is the
/// adversary's view when `E` holds the purification of `ρ_AB`.
pub fn measure_to_cq(rho: &DensityOperator, pvm: &BinaryPvm, purifier: bool) -> Result<CqState> {
    let dims = rho.system_dims().to_vec();
    if dims[0] != pvm.dim() {
        return Err(Error::DimensionMismatch { expected: dims[0], found: pvm.dim() });
    }
    let mut probs = Vec::with_capacity(2);
    let mut conds = Vec::with_capacity(2);
    if purifier {
        let psi = rho.purify_minimal(1e-13);
        let pdims = psi.system_dims().to_vec();
        let e_idx = pdims.len() - 1;
        for a in 0..2 {
            let op = matrix::embed_operator(pvm.effect(a), &pdims, 0)?;
            let v = &op * psi.amplitudes();
            let p = v.norm_squared();
            probs.push(p);
            if p > ZERO_PROB {
                let red = matrix::reduced_from_vector(&v, &pdims, &[e_idx])?;
                conds.push(Some(DensityOperator::from_unnormalized(red, vec![pdims[e_idx]])?));
            } else {
                conds.push(None);
            }
        }
    } else {
        let rest: Vec<usize> = (1..dims.len()).collect();
        for a in 0..2 {
            let op = matrix::embed_operator(pvm.effect(a), &dims, 0)?;
            let post = &op * rho.matrix() * &op;
            let p = matrix::trace(&post).re.max(0.0);
            probs.push(p);
            if p > ZERO_PROB {
                let red = if rest.is_empty() {
                    matrix::identity(1).scale(p)
                } else {
                    matrix::partial_trace(&post, &dims, &rest)?
                };
                let edims = if rest.is_empty() { vec![1] } else { dims[1..].to_vec() };
                conds.push(Some(DensityOperator::from_unnormalized(red, edims)?));
            } else {
                conds.push(None);
            }
        }
    }
    let s: f64 = probs.iter().sum();
    let probs = probs.into_iter().map(|p| p / s).collect();
    CqState::new(probs, conds)
}

/// `D(q‖p) = Σ q log₂(q/p)`.
pub fn relative_entropy(q: &ClassicalDistribution, p: &ClassicalDistribution) -> Result<f64> {
    if q.len() != p.len() {
        return Err(Error::DimensionMismatch { expected: p.len(), found: q.len() });
    }
    let mut d = 0.0;
    for (i, (&qi, &pi)) in q.probs().iter().zip(p.probs()).enumerate() {
        if qi > 0.0 {
            if pi <= 0.0 {
                return Err(Error::SupportViolation { index: i });
            }
            d += qi * (qi / pi).log2();
        }
    }
    Ok(d.max(0.0))
}

/// Sandwiched conditional Rényi entropy `H̃_α^↓(A|E)` of a cq state,
/// conditioning on the state's own `E` marginal.
pub fn renyi_down(cq: &CqState, alpha: f64) -> Result<f64> {
    if !(alpha > 1.0 && alpha <= 10.0) {
        return Err(Error::domain(format!("alpha {alpha} outside (1, 10]")));
    }
    let rho_e = cq.e_marginal();
    let gamma = (1.0 - alpha) / (2.0 * alpha);
    let sand = matrix::psd_power(&rho_e, gamma, 1e-13);
    let mut total = 0.0;
    for (p, c) in cq.probs.iter().zip(&cq.conditionals) {
        if let Some(s) = c {
            if *p <= ZERO_PROB {
                continue;
            }
            let inner = &sand * s.matrix().scale(*p) * &sand;
            let vals = matrix::hermitian_eigenvalues(&inner);
            total += vals.iter().map(|&l| l.max(0.0).powf(alpha)).sum::<f64>();
        }
    }
    Ok(-total.log2() / (alpha - 1.0))
}

/// Continuity bound `δ log₂ d + (1 + δ) h₂(δ / (1 + δ))`.
pub fn continuity_f(delta: f64, alphabet_size: usize) -> Result<f64> {
    if !(delta >= 0.0) || !delta.is_finite() {
        return Err(Error::domain(format!("delta {delta} must be a finite nonnegative number")));
    }
    if alphabet_size == 0 {
        return Err(Error::domain("alphabet size must be positive"));
    }
    Ok(delta * (alphabet_size as f64).log2() + (1.0 + delta) * h2(delta / (1.0 + delta)))
}
