//! Effective-overlap upper bounds from the two-projection block structure,
//! the anticommutator second moment, and the CHSH value.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::quantum::matrix::{self, CMatrix};
use crate::quantum::random::{ginibre, random_unitary};
use crate::quantum::{trace_distance, BinaryPvm, DensityOperator, Isometry, Reflection};

/// Eigenvalues of `pqp|_p` within this distance of 0 or 1 are commuting directions.
pub const CLASSIFY_TOL: f64 = 1e-9;
const PROJECTOR_TOL: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum BlockKind {
    /// Common eigenvector with `p = p_value`, `q = q_value`.
    OneDim { p_value: bool, q_value: bool },
    /// Canonical angle block with `x = cos²(θ/2)` and `θ ∈ (0, π)`.
    TwoDim { x: f64, theta: f64 },
}

impl BlockKind {
    /// `cos θ` of the block; one-dimensional blocks count as `±1`.
    pub fn cos_theta(&self) -> f64 {
        match *self {
            BlockKind::OneDim { p_value, q_value } => {
                if p_value == q_value {
                    1.0
                } else {
                    -1.0
                }
            }
            BlockKind::TwoDim { x, .. } => 2.0 * x - 1.0,
        }
    }
}

#[derive(Debug, Clone)]
pub struct Block {
    pub projector: CMatrix,
    pub kind: BlockKind,
    pub weight: f64,
}

#[derive(Debug, Clone)]
pub struct BlockDecomposition {
    blocks: Vec<Block>,
    dim: usize,
}

fn check_projector(p: &CMatrix) -> Result<()> {
    if !p.is_square() {
        return Err(Error::InvalidOperator("projector must be square".into()));
    }
    let defect = matrix::max_abs_diff(&(p * p), p).max(matrix::hermiticity_defect(p));
    if defect > PROJECTOR_TOL {
        return Err(Error::NotAProjector { defect });
    }
    Ok(())
}

/// Orthonormal basis of the range of a projector.
fn range_basis(p: &CMatrix) -> CMatrix {
    let (vals, vecs) = matrix::hermitian_eigen(p);
    let cols: Vec<usize> = (0..vals.len()).filter(|&k| vals[k] > 0.5).collect();
    CMatrix::from_fn(p.nrows(), cols.len(), |r, j| vecs[(r, cols[j])])
}

/// Decompose the space into subspaces of dimension ≤ 2 reducing both `p`
/// and `q`, with block weights `tr[σ P_k]`.
pub fn two_projection_blocks(p: &CMatrix, q: &CMatrix, sigma: &DensityOperator) -> Result<BlockDecomposition> {
    check_projector(p)?;
    check_projector(q)?;
    let d = p.nrows();
    if q.nrows() != d || sigma.dim() != d {
        return Err(Error::DimensionMismatch { expected: d, found: q.nrows().max(sigma.dim()) });
    }
    let p = matrix::hermitian_part(p);
    let q = matrix::hermitian_part(q);
    let id = matrix::identity(d);
    let not_p = &id - &p;

    let bp = range_basis(&p);
    let mut blocks = Vec::new();
    let mut partners: Vec<matrix::CVector> = Vec::new();
    if bp.ncols() > 0 {
        let restricted = bp.adjoint() * &q * &bp;
        let (xs, us) = matrix::hermitian_eigen(&restricted);
        for (k, &x) in xs.iter().enumerate() {
            let v = &bp * us.column(k);
            let x = x.clamp(0.0, 1.0);
            if x <= CLASSIFY_TOL || x >= 1.0 - CLASSIFY_TOL {
                blocks.push(Block {
                    projector: matrix::projector(&v),
                    kind: BlockKind::OneDim { p_value: true, q_value: x > 0.5 },
                    weight: 0.0,
                });
            } else {
                let w = (&not_p * &q * &v).normalize();
                let proj = matrix::projector(&v) + matrix::projector(&w);
                let theta = (2.0 * x - 1.0).clamp(-1.0, 1.0).acos();
                blocks.push(Block { projector: proj, kind: BlockKind::TwoDim { x, theta }, weight: 0.0 });
                partners.push(w);
            }
        }
    }

    // what is left of range(1−p) commutes with q
    let bc = range_basis(&not_p);
    if bc.ncols() > 0 {
        let rest = if partners.is_empty() {
            bc
        } else {
            let used = CMatrix::from_columns(&partners);
            let left = &bc - &used * (used.adjoint() * &bc);
            range_basis(&matrix::hermitian_part(&(&left * left.adjoint())))
        };
        if rest.ncols() > 0 {
            let restricted = rest.adjoint() * &q * &rest;
            let (ys, us) = matrix::hermitian_eigen(&restricted);
            for (k, &y) in ys.iter().enumerate() {
                let v = &rest * us.column(k);
                blocks.push(Block {
                    projector: matrix::projector(&v),
                    kind: BlockKind::OneDim { p_value: false, q_value: y > 0.5 },
                    weight: 0.0,
                });
            }
        }
    }

    for b in &mut blocks {
        b.weight = sigma.expectation(&b.projector).max(0.0);
    }
    Ok(BlockDecomposition { blocks, dim: d })
}

impl BlockDecomposition {
    pub fn blocks(&self) -> &[Block] {
        &self.blocks
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn weights(&self) -> Vec<f64> {
        self.blocks.iter().map(|b| b.weight).collect()
    }

    pub fn two_dim_count(&self) -> usize {
        self.blocks.iter().filter(|b| matches!(b.kind, BlockKind::TwoDim { .. })).count()
    }

    /// `‖Σ P_k − 1‖_max`.
    pub fn resolution_defect(&self) -> f64 {
        let mut sum = matrix::zeros(self.dim, self.dim);
        for b in &self.blocks {
            sum += &b.projector;
        }
        matrix::max_abs_diff(&sum, &matrix::identity(self.dim))
    }

    /// `max_{j≠k} ‖P_j P_k‖_max`.
    pub fn orthogonality_defect(&self) -> f64 {
        let mut worst: f64 = 0.0;
        for (j, a) in self.blocks.iter().enumerate() {
            for b in &self.blocks[j + 1..] {
                worst = worst.max(matrix::max_abs(&(&a.projector * &b.projector)));
            }
        }
        worst
    }

    /// `‖Σ_k P_k A P_k − A‖_max`.
    pub fn reduction_defect(&self, a: &CMatrix) -> f64 {
        let mut sum = matrix::zeros(self.dim, self.dim);
        for b in &self.blocks {
            sum += &b.projector * a * &b.projector;
        }
        matrix::max_abs_diff(&sum, a)
    }

    /// `4 Σ_k w_k cos²θ_k`, one-dimensional blocks contributing `cos² = 1`.
    pub fn second_moment(&self) -> f64 {
        4.0 * self.blocks.iter().map(|b| b.weight * b.kind.cos_theta().powi(2)).sum::<f64>()
    }

    /// Block weights aggregated by `x` (basis-independent summary).
    pub fn angle_weights(&self) -> Vec<(f64, f64)> {
        let mut out: Vec<(f64, f64)> = Vec::new();
        for b in &self.blocks {
            if let BlockKind::TwoDim { x, .. } = b.kind {
                match out.iter_mut().find(|(y, _)| (y - x).abs() < 1e-8) {
                    Some(e) => e.1 += b.weight,
                    None => out.push((x, b.weight)),
                }
            }
        }
        out.sort_by(|a, b| a.0.total_cmp(&b.0));
        out
    }
}

/// `Σ_k w_k (½ + ½|cos θ_k|)`.
pub fn cstar_block_bound(d: &BlockDecomposition) -> f64 {
    let v: f64 = d.blocks.iter().map(|b| b.weight * (0.5 + 0.5 * b.kind.cos_theta().abs())).sum();
    v.clamp(0.5, 1.0)
}

/// `tr[σ {X, Z}²]`.
pub fn anticommutator_second_moment(sigma: &DensityOperator, x: &Reflection, z: &Reflection) -> Result<f64> {
    let d = sigma.dim();
    if x.dim() != d || z.dim() != d {
        return Err(Error::DimensionMismatch { expected: d, found: x.dim().max(z.dim()) });
    }
    let anti = x.matrix() * z.matrix() + z.matrix() * x.matrix();
    Ok(sigma.expectation(&(&anti * &anti)).max(0.0))
}

/// `½ + ¼ √tr[σ {X, Z}²]`, clamped to `[½, 1]`.
pub fn cstar_anticommutator_bound(sigma: &DensityOperator, x: &Reflection, z: &Reflection) -> Result<f64> {
    let m = anticommutator_second_moment(sigma, x, z)?;
    Ok((0.5 + 0.25 * m.sqrt()).clamp(0.5, 1.0))
}

/// `½ + (ω/8)√(8 − ω²) + ε/2`, clamped to `[½, 1]`.
pub fn cstar_chsh_bound(omega: f64, marginal_eps: f64) -> Result<f64> {
    let max = 2.0 * std::f64::consts::SQRT_2;
    if !(0.0..=max + 1e-12).contains(&omega) {
        return Err(Error::domain(format!("CHSH correlator {omega} outside [0, 2√2]")));
    }
    if !(marginal_eps >= 0.0) {
        return Err(Error::domain(format!("marginal slack {marginal_eps} must be nonnegative")));
    }
    let omega = omega.min(max);
    let v = 0.5 + omega / 8.0 * (8.0 - omega * omega).max(0.0).sqrt() + marginal_eps / 2.0;
    Ok(v.clamp(0.5, 1.0))
}

/// Shift a bound valid for `τ` to one valid for `τ′`.
pub fn cstar_continuity_shift(bound: f64, tau_a: &DensityOperator, tau_a_prime: &DensityOperator) -> Result<f64> {
    Ok((bound + trace_distance(tau_a, tau_a_prime)?).clamp(0.5, 1.0))
}

/// `Π₀ = I M₀ I† + (1 − I I†)`, `Π₁ = I M₁ I†`.
pub fn feasible_dilation_povms(pvm: &BinaryPvm, iso: &Isometry) -> Result<BinaryPvm> {
    if iso.domain_dim() != pvm.dim() {
        return Err(Error::DimensionMismatch { expected: pvm.dim(), found: iso.domain_dim() });
    }
    let n = iso.codomain_dim();
    let v = iso.matrix();
    let pad = matrix::identity(n) - v * v.adjoint();
    let p0 = matrix::hermitian_part(&(iso.push_forward(pvm.effect(0)) + pad));
    let p1 = matrix::hermitian_part(&iso.push_forward(pvm.effect(1)));
    BinaryPvm::new(p0, p1)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OverlapReport {
    pub block_bound: f64,
    pub anticommutator_bound: f64,
    pub chsh_bound: Option<f64>,
}

/// All bounds for `σ` with `Z = 2p − 1`, `X = 2q − 1`; the CHSH bound is
/// added when `(ω, ε)` is given.
pub fn overlap_report(
    p: &CMatrix,
    q: &CMatrix,
    sigma: &DensityOperator,
    chsh: Option<(f64, f64)>,
) -> Result<OverlapReport> {
    let d = two_projection_blocks(p, q, sigma)?;
    let z = BinaryPvm::from_projector(p.clone())?.observable();
    let x = BinaryPvm::from_projector(q.clone())?.observable();
    Ok(OverlapReport {
        block_bound: cstar_block_bound(&d),
        anticommutator_bound: cstar_anticommutator_bound(sigma, &x, &z)?,
        chsh_bound: chsh.map(|(w, e)| cstar_chsh_bound(w, e)).transpose()?,
    })
}

/// Random projector pair with a mix of generic angles and shared
/// (commuting) directions.
pub fn random_projection_pair<R: Rng + ?Sized>(d: usize, rng: &mut R) -> (CMatrix, CMatrix) {
    let u = random_unitary(d, rng);
    let rp = rng.random_range(0..=d);
    let bp = u.columns(0, rp).into_owned();
    let p = matrix::hermitian_part(&(&bp * bp.adjoint()));

    let shared: Vec<usize> = (0..d).filter(|_| rng.random_bool(0.25)).collect();
    let mut cols: Vec<matrix::CVector> = shared.iter().map(|&k| u.column(k).into_owned()).collect();
    let generic = rng.random_range(0..=(d - cols.len()));
    for _ in 0..generic {
        let mut v = ginibre(d, 1, rng).column(0).into_owned();
        for c in &cols {
            let proj = c.dotc(&v);
            v -= c * proj;
        }
        let n = v.norm();
        if n > 1e-6 {
            cols.push(v.unscale(n));
        }
    }
    let q = if cols.is_empty() {
        matrix::zeros(d, d)
    } else {
        let b = CMatrix::from_columns(&cols);
        matrix::hermitian_part(&(&b * b.adjoint()))
    };
    (p, q)
}
