use super::matrix::{self, CMatrix, CVector};
use super::state::{trace_distance, DensityOperator, PureState};
use crate::error::{Error, Result};
use crate::tolerance;

/// Linear map `V` with `V†V = 1` on the domain. The codomain carries its own
/// subsystem structure.
#[derive(Debug, Clone, PartialEq)]
pub struct Isometry {
    matrix: CMatrix,
    codomain_dims: Vec<usize>,
}

impl Isometry {
    pub fn new(matrix: CMatrix, codomain_dims: Vec<usize>) -> Result<Self> {
        let cd = matrix::total_dim(&codomain_dims);
        if cd != matrix.nrows() {
            return Err(Error::DimensionMismatch { expected: matrix.nrows(), found: cd });
        }
        if matrix.ncols() > matrix.nrows() {
            return Err(Error::CodomainTooSmall { domain: matrix.ncols(), codomain: matrix.nrows() });
        }
        let defect = matrix::max_abs_diff(&(matrix.adjoint() * &matrix), &matrix::identity(matrix.ncols()));
        if defect > tolerance::STRUCTURAL {
            return Err(Error::InvalidOperator(format!("not an isometry (defect {defect:.3e})")));
        }
        Ok(Self { matrix, codomain_dims })
    }

    pub fn identity(d: usize) -> Self {
        Self { matrix: matrix::identity(d), codomain_dims: vec![d] }
    }

    /// `|v⟩ ↦ |v⟩ ⊗ |anc⟩`.
    pub fn append_ancilla(d: usize, anc: &PureState) -> Self {
        let m = matrix::identity(d).kronecker(&CMatrix::from_columns(&[anc.amplitudes().clone()]));
        let mut dims = vec![d];
        dims.extend_from_slice(anc.system_dims());
        Self { matrix: m, codomain_dims: dims }
    }

    pub fn domain_dim(&self) -> usize {
        self.matrix.ncols()
    }

    pub fn codomain_dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn codomain_dims(&self) -> &[usize] {
        &self.codomain_dims
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.matrix
    }

    pub fn then(&self, next: &Isometry) -> Result<Isometry> {
        if next.domain_dim() != self.codomain_dim() {
            return Err(Error::DimensionMismatch { expected: self.codomain_dim(), found: next.domain_dim() });
        }
        Ok(Isometry { matrix: &next.matrix * &self.matrix, codomain_dims: next.codomain_dims.clone() })
    }

    pub fn tensor(&self, other: &Isometry) -> Isometry {
        let mut dims = self.codomain_dims.clone();
        dims.extend_from_slice(&other.codomain_dims);
        Isometry { matrix: self.matrix.kronecker(&other.matrix), codomain_dims: dims }
    }

    pub fn apply_vector(&self, v: &CVector) -> Result<CVector> {
        if v.len() != self.domain_dim() {
            return Err(Error::DimensionMismatch { expected: self.domain_dim(), found: v.len() });
        }
        Ok(&self.matrix * v)
    }

    pub fn apply_pure(&self, psi: &PureState) -> Result<PureState> {
        PureState::normalized(self.apply_vector(psi.amplitudes())?, self.codomain_dims.clone())
    }

    pub fn apply_state(&self, rho: &DensityOperator) -> Result<DensityOperator> {
        if rho.dim() != self.domain_dim() {
            return Err(Error::DimensionMismatch { expected: self.domain_dim(), found: rho.dim() });
        }
        DensityOperator::from_unnormalized(
            &self.matrix * rho.matrix() * self.matrix.adjoint(),
            self.codomain_dims.clone(),
        )
    }

    /// `V† O V`.
    pub fn pull_back(&self, op: &CMatrix) -> CMatrix {
        self.matrix.adjoint() * op * &self.matrix
    }

    /// `V O V†`.
    pub fn push_forward(&self, op: &CMatrix) -> CMatrix {
        &self.matrix * op * self.matrix.adjoint()
    }
}

/// Isometry `W: F → G` with `(1_A ⊗ W)|ψ⟩ = |φ⟩`, where the first declared
/// subsystem of each state is `A` and the remaining subsystems form `F` and
/// `G`.
pub fn uhlmann_isometry(psi: &PureState, phi: &PureState) -> Result<Isometry> {
    const MARGINAL_TOL: f64 = 1e-8;
    let da = psi.system_dims()[0];
    if phi.system_dims()[0] != da || psi.system_dims().len() < 2 || phi.system_dims().len() < 2 {
        return Err(Error::DimensionMismatch { expected: da, found: phi.system_dims()[0] });
    }
    let defect = trace_distance(&psi.reduced(&[0])?, &phi.reduced(&[0])?)?;
    if defect > MARGINAL_TOL {
        return Err(Error::MarginalMismatch { defect, tolerance: MARGINAL_TOL });
    }
    let g_dims = phi.system_dims()[1..].to_vec();
    let df = psi.dim() / da;
    let dg = phi.dim() / da;
    if dg < df {
        return Err(Error::CodomainTooSmall { domain: df, codomain: dg });
    }

    let cpsi = matrix::coefficient_matrix(psi.amplitudes(), da);
    let cphi = matrix::coefficient_matrix(phi.amplitudes(), da);
    let s1 = cpsi.svd(true, true);
    let s2 = cphi.svd(true, true);
    let (u1, v1t) = (s1.u.unwrap(), s1.v_t.unwrap());
    let (u2, v2t) = (s2.u.unwrap(), s2.v_t.unwrap());

    // nalgebra does not sort singular values, so select the support explicitly
    const SUPPORT: f64 = 1e-10;
    let pick = |sv: &nalgebra::DVector<f64>| -> Vec<usize> {
        let mut idx: Vec<usize> = (0..sv.len()).filter(|&i| sv[i] > SUPPORT).collect();
        idx.sort_by(|&i, &j| sv[j].total_cmp(&sv[i]));
        idx
    };
    let i1 = pick(&s1.singular_values);
    let i2 = pick(&s2.singular_values);
    let r = i1.len().min(i2.len());
    let cols = |m: &CMatrix, idx: &[usize]| CMatrix::from_fn(m.nrows(), r, |i, k| m[(i, idx[k])]);
    let rows_adj = |m: &CMatrix, idx: &[usize]| CMatrix::from_fn(m.ncols(), r, |i, k| m[(idx[k], i)].conj());
    let u1r = cols(&u1, &i1);
    let u2r = cols(&u2, &i2);
    let v1r = rows_adj(&v1t, &i1);
    let v2r = rows_adj(&v2t, &i2);

    // coefficients transform as C ↦ C Wᵀ, so work with the conjugated right
    // singular vectors
    let m = matrix::unitary_polar(&(u1r.adjoint() * &u2r)).transpose();
    let f_in = v1r.map(|z| z.conj());
    let g_out = v2r.map(|z| z.conj());
    let mut w = &g_out * m * f_in.adjoint();
    let f_comp = matrix::orthonormal_complement(&f_in);
    let g_comp = matrix::orthonormal_complement(&g_out);
    let k = f_comp.ncols();
    if k > 0 {
        w += g_comp.columns(0, k) * f_comp.adjoint();
    }
    Isometry::new(w, g_dims)
}

/// `‖(1_A ⊗ W)|ψ⟩ − |φ⟩‖`.
pub fn uhlmann_residual(w: &Isometry, psi: &PureState, phi: &PureState) -> Result<f64> {
    let da = psi.system_dims()[0];
    let full = matrix::identity(da).kronecker(w.matrix());
    let out = full * psi.amplitudes();
    if out.len() != phi.dim() {
        return Err(Error::DimensionMismatch { expected: phi.dim(), found: out.len() });
    }
    Ok((out - phi.amplitudes()).norm())
}
