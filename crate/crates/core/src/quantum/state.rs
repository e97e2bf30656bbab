use serde::{Deserialize, Serialize};

use super::matrix::{self, CMatrix, CVector};
use crate::error::{Error, Result};
use crate::tolerance;

fn check_dims(dims: &[usize], n: usize) -> Result<()> {
    if dims.is_empty() || dims.iter().any(|&d| d == 0) {
        return Err(Error::InvalidState("system_dims must be nonempty and positive".into()));
    }
    let prod = matrix::total_dim(dims);
    if prod != n {
        return Err(Error::DimensionMismatch { expected: n, found: prod });
    }
    Ok(())
}

/// Unit vector with a declared subsystem structure.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "super::io::PureStateRecord", into = "super::io::PureStateRecord")]
pub struct PureState {
    amplitudes: CVector,
    system_dims: Vec<usize>,
}

impl PureState {
    pub fn new(amplitudes: CVector, system_dims: Vec<usize>) -> Result<Self> {
        check_dims(&system_dims, amplitudes.len())?;
        if amplitudes.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(Error::InvalidState("non-finite amplitude".into()));
        }
        let norm = amplitudes.norm();
        if (norm - 1.0).abs() > tolerance::NORM {
            return Err(Error::InvalidState(format!("norm {norm} is not 1")));
        }
        Ok(Self { amplitudes, system_dims })
    }

    /// Normalizes first; fails only on a zero vector or bad dims.
    pub fn normalized(amplitudes: CVector, system_dims: Vec<usize>) -> Result<Self> {
        let norm = amplitudes.norm();
        if norm == 0.0 || !norm.is_finite() {
            return Err(Error::InvalidState("cannot normalize zero vector".into()));
        }
        Self::new(amplitudes.unscale(norm), system_dims)
    }

    pub fn basis(dims: Vec<usize>, index: usize) -> Result<Self> {
        let n = matrix::total_dim(&dims);
        if index >= n {
            return Err(Error::DimensionMismatch { expected: n, found: index });
        }
        Self::new(matrix::ket(n, index), dims)
    }

    /// `Σ_i |ii⟩ / √d` on `C^d ⊗ C^d`.
    pub fn maximally_entangled(d: usize) -> Self {
        let mut v = CVector::zeros(d * d);
        let a = 1.0 / (d as f64).sqrt();
        for i in 0..d {
            v[i * d + i] = matrix::c(a, 0.0);
        }
        Self { amplitudes: v, system_dims: vec![d, d] }
    }

    pub fn dim(&self) -> usize {
        self.amplitudes.len()
    }

    pub fn amplitudes(&self) -> &CVector {
        &self.amplitudes
    }

    pub fn system_dims(&self) -> &[usize] {
        &self.system_dims
    }

    pub fn with_dims(&self, dims: Vec<usize>) -> Result<Self> {
        check_dims(&dims, self.dim())?;
        Ok(Self { amplitudes: self.amplitudes.clone(), system_dims: dims })
    }

    pub fn density(&self) -> DensityOperator {
        DensityOperator {
            matrix: matrix::projector(&self.amplitudes),
            system_dims: self.system_dims.clone(),
        }
    }

    pub fn reduced(&self, keep: &[usize]) -> Result<DensityOperator> {
        let m = matrix::reduced_from_vector(&self.amplitudes, &self.system_dims, keep)?;
        let mut k = keep.to_vec();
        k.sort_unstable();
        let dims = k.iter().map(|&i| self.system_dims[i]).collect();
        Ok(DensityOperator { matrix: matrix::hermitian_part(&m), system_dims: dims })
    }

    pub fn tensor(&self, other: &PureState) -> PureState {
        let mut dims = self.system_dims.clone();
        dims.extend_from_slice(&other.system_dims);
        PureState { amplitudes: self.amplitudes.kronecker(&other.amplitudes), system_dims: dims }
    }

    pub fn permute(&self, perm: &[usize]) -> Result<PureState> {
        let v = matrix::permute_vector(&self.amplitudes, &self.system_dims, perm)?;
        Ok(PureState { amplitudes: v, system_dims: matrix::permuted_dims(&self.system_dims, perm) })
    }

    /// Apply an operator expected to be unitary; the result is renormalized.
    pub fn apply_unitary(&self, u: &CMatrix) -> Result<PureState> {
        if u.ncols() != self.dim() || u.nrows() != self.dim() {
            return Err(Error::DimensionMismatch { expected: self.dim(), found: u.ncols() });
        }
        PureState::normalized(u * &self.amplitudes, self.system_dims.clone())
    }

    pub fn expectation(&self, op: &CMatrix) -> f64 {
        self.amplitudes.dotc(&(op * &self.amplitudes)).re
    }

    pub fn overlap(&self, other: &PureState) -> num_complex::Complex64 {
        self.amplitudes.dotc(&other.amplitudes)
    }
}

/// Unit-trace positive semidefinite operator with a declared subsystem structure.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "super::io::DensityRecord", into = "super::io::DensityRecord")]
pub struct DensityOperator {
    matrix: CMatrix,
    system_dims: Vec<usize>,
}

impl DensityOperator {
    pub fn new(matrix: CMatrix, system_dims: Vec<usize>) -> Result<Self> {
        if !matrix.is_square() {
            return Err(Error::InvalidState("matrix is not square".into()));
        }
        check_dims(&system_dims, matrix.nrows())?;
        if matrix.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(Error::InvalidState("non-finite entry".into()));
        }
        let herm = matrix::hermiticity_defect(&matrix);
        if herm > tolerance::STATE {
            return Err(Error::InvalidState(format!("not Hermitian (defect {herm:.3e})")));
        }
        let tr = matrix::trace(&matrix).re;
        if (tr - 1.0).abs() > tolerance::STATE {
            return Err(Error::InvalidState(format!("trace {tr} is not 1")));
        }
        let min = matrix::hermitian_eigenvalues(&matrix)[0];
        if min < -tolerance::STATE {
            return Err(Error::InvalidState(format!("negative eigenvalue {min:.3e}")));
        }
        Ok(Self { matrix: matrix::hermitian_part(&matrix), system_dims })
    }

    /// Normalize trace and symmetrize before validating. Useful for matrices
    /// assembled from sums where rounding drifts.
    pub fn from_unnormalized(matrix: CMatrix, system_dims: Vec<usize>) -> Result<Self> {
        let tr = matrix::trace(&matrix).re;
        if !(tr > 0.0) {
            return Err(Error::InvalidState(format!("trace {tr} is not positive")));
        }
        Self::new(matrix::hermitian_part(&matrix).unscale(tr), system_dims)
    }

    pub fn maximally_mixed(dims: Vec<usize>) -> Self {
        let d = matrix::total_dim(&dims);
        Self { matrix: matrix::identity(d).unscale(d as f64), system_dims: dims }
    }

    pub fn from_pure(psi: &PureState) -> Self {
        psi.density()
    }

    /// Two-qubit mixture of `Φ⁺, Φ⁻, Ψ⁺, Ψ⁻` with weights `lambda`.
    pub fn bell_diagonal(lambda: [f64; 4]) -> Result<Self> {
        if lambda.iter().any(|&l| !(l >= -tolerance::CLAMP)) {
            return Err(Error::InvalidState(format!("negative Bell weight in {lambda:?}")));
        }
        let s = std::f64::consts::FRAC_1_SQRT_2;
        let bells = [[s, 0.0, 0.0, s], [s, 0.0, 0.0, -s], [0.0, s, s, 0.0], [0.0, s, -s, 0.0]];
        let mut m = matrix::zeros(4, 4);
        for (w, b) in lambda.iter().zip(bells) {
            let v = CVector::from_iterator(4, b.iter().map(|&x| matrix::c(x, 0.0)));
            m += matrix::projector(&v).scale(w.max(0.0));
        }
        Self::new(m, vec![2, 2])
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.matrix
    }

    pub fn system_dims(&self) -> &[usize] {
        &self.system_dims
    }

    pub fn with_dims(&self, dims: Vec<usize>) -> Result<Self> {
        check_dims(&dims, self.dim())?;
        Ok(Self { matrix: self.matrix.clone(), system_dims: dims })
    }

    /// Eigenvalues ascending, with tiny negative values clamped to zero.
    pub fn eigenvalues(&self) -> Vec<f64> {
        matrix::hermitian_eigenvalues(&self.matrix)
            .into_iter()
            .map(matrix::clamp_eigenvalue)
            .collect()
    }

    pub fn rank(&self, tol: f64) -> usize {
        self.eigenvalues().iter().filter(|&&l| l > tol).count()
    }

    pub fn expectation(&self, op: &CMatrix) -> f64 {
        matrix::trace(&(&self.matrix * op)).re
    }

    pub fn partial_trace(&self, keep: &[usize]) -> Result<DensityOperator> {
        if keep.is_empty() {
            return Err(Error::InvalidState("keep set must be nonempty".into()));
        }
        let m = matrix::partial_trace(&self.matrix, &self.system_dims, keep)?;
        let mut k = keep.to_vec();
        k.sort_unstable();
        let dims = k.iter().map(|&i| self.system_dims[i]).collect();
        Ok(DensityOperator { matrix: matrix::hermitian_part(&m), system_dims: dims })
    }

    pub fn permute(&self, perm: &[usize]) -> Result<DensityOperator> {
        let m = matrix::permute_subsystems(&self.matrix, &self.system_dims, perm)?;
        Ok(DensityOperator { matrix: m, system_dims: matrix::permuted_dims(&self.system_dims, perm) })
    }

    pub fn tensor(&self, other: &DensityOperator) -> DensityOperator {
        let mut dims = self.system_dims.clone();
        dims.extend_from_slice(&other.system_dims);
        DensityOperator { matrix: self.matrix.kronecker(&other.matrix), system_dims: dims }
    }

    /// Convex mixture `Σ w_i ρ_i`; all inputs must share dims.
    pub fn mixture(weights: &[f64], states: &[DensityOperator]) -> Result<DensityOperator> {
        let first = states.first().ok_or_else(|| Error::InvalidState("empty mixture".into()))?;
        let mut m = matrix::zeros(first.dim(), first.dim());
        for (w, s) in weights.iter().zip(states) {
            if s.system_dims != first.system_dims {
                return Err(Error::DimensionMismatch { expected: first.dim(), found: s.dim() });
            }
            m += s.matrix.scale(*w);
        }
        DensityOperator::new(m, first.system_dims.clone())
    }

    /// `U ρ U†` for unitary `U`; the output keeps the same dims.
    pub fn conjugate(&self, u: &CMatrix) -> Result<DensityOperator> {
        if u.ncols() != self.dim() || u.nrows() != self.dim() {
            return Err(Error::DimensionMismatch { expected: self.dim(), found: u.ncols() });
        }
        DensityOperator::from_unnormalized(u * &self.matrix * u.adjoint(), self.system_dims.clone())
    }

    /// Purification on `H ⊗ H`: the purifier is appended as one extra
    /// subsystem of dimension `dim`.
    pub fn purify(&self) -> PureState {
        let d = self.dim();
        let (vals, vecs) = matrix::hermitian_eigen(&self.matrix);
        let mut v = CVector::zeros(d * d);
        for k in 0..d {
            let lam = matrix::clamp_eigenvalue(vals[k]).max(0.0);
            if lam == 0.0 {
                continue;
            }
            let s = lam.sqrt();
            for i in 0..d {
                v[i * d + k] += vecs[(i, k)] * s;
            }
        }
        let mut dims = self.system_dims.clone();
        dims.push(d);
        PureState::normalized(v, dims).expect("valid state has nonzero purification")
    }

    /// Purification with a purifier of dimension `rank(ρ)` (eigenvalues above
    /// `tol`), appended as the last subsystem.
    pub fn purify_minimal(&self, tol: f64) -> PureState {
        let d = self.dim();
        let (vals, vecs) = matrix::hermitian_eigen(&self.matrix);
        let support: Vec<usize> = (0..d).filter(|&k| vals[k] > tol).collect();
        let r = support.len().max(1);
        let mut v = CVector::zeros(d * r);
        for (j, &k) in support.iter().enumerate() {
            let s = vals[k].sqrt();
            for i in 0..d {
                v[i * r + j] = vecs[(i, k)] * s;
            }
        }
        let mut dims = self.system_dims.clone();
        dims.push(r);
        PureState::normalized(v, dims).expect("valid state has nonzero purification")
    }

    pub fn trace_distance(&self, other: &DensityOperator) -> Result<f64> {
        trace_distance(self, other)
    }
}

/// `½ ‖a − b‖₁`.
pub fn trace_distance(a: &DensityOperator, b: &DensityOperator) -> Result<f64> {
    if a.dim() != b.dim() {
        return Err(Error::DimensionMismatch { expected: a.dim(), found: b.dim() });
    }
    let diff = a.matrix() - b.matrix();
    Ok((0.5 * matrix::trace_norm(&diff)).clamp(0.0, 1.0))
}

/// Uhlmann fidelity `‖√a √b‖₁²`.
pub fn fidelity(a: &DensityOperator, b: &DensityOperator) -> Result<f64> {
    if a.dim() != b.dim() {
        return Err(Error::DimensionMismatch { expected: a.dim(), found: b.dim() });
    }
    let s = matrix::psd_sqrt(a.matrix()) * matrix::psd_sqrt(b.matrix());
    Ok(matrix::singular_values(&s).iter().sum::<f64>().powi(2).min(1.0))
}
