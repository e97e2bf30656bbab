//! Dense complex matrices and subsystem bookkeeping.
//!
//! Multipartite spaces are ordered left to right with the row-major
//! Kronecker convention: for `dims = [d0, d1, ..]` the basis index is
//! `i0 * (d1 * d2 ..) + i1 * (d2 ..) + ..`. Every function that takes a
//! `dims` slice follows this ordering.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::tolerance;

pub type CMatrix = DMatrix<Complex64>;
pub type CVector = DVector<Complex64>;

pub const ZERO: Complex64 = Complex64::new(0.0, 0.0);
pub const ONE: Complex64 = Complex64::new(1.0, 0.0);
pub const I: Complex64 = Complex64::new(0.0, 1.0);

#[inline]
pub fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

pub fn identity(d: usize) -> CMatrix {
    CMatrix::identity(d, d)
}

pub fn zeros(r: usize, c: usize) -> CMatrix {
    CMatrix::zeros(r, c)
}

pub fn from_real(rows: usize, cols: usize, data: &[f64]) -> CMatrix {
    assert_eq!(rows * cols, data.len());
    CMatrix::from_fn(rows, cols, |i, j| c(data[i * cols + j], 0.0))
}

pub fn pauli_x() -> CMatrix {
    from_real(2, 2, &[0.0, 1.0, 1.0, 0.0])
}

pub fn pauli_y() -> CMatrix {
    CMatrix::from_row_slice(2, 2, &[ZERO, -I, I, ZERO])
}

pub fn pauli_z() -> CMatrix {
    from_real(2, 2, &[1.0, 0.0, 0.0, -1.0])
}

/// Computational basis vector `|i⟩` in dimension `d`.
pub fn ket(d: usize, i: usize) -> CVector {
    let mut v = CVector::zeros(d);
    v[i] = ONE;
    v
}

/// `|v⟩⟨w|`.
pub fn outer(v: &CVector, w: &CVector) -> CMatrix {
    v * w.adjoint()
}

pub fn projector(v: &CVector) -> CMatrix {
    outer(v, v)
}

/// Kronecker product `a ⊗ b`.
pub fn tensor(a: &CMatrix, b: &CMatrix) -> CMatrix {
    a.kronecker(b)
}

pub fn tensor_all(ops: &[CMatrix]) -> CMatrix {
    ops.iter()
        .fold(identity(1), |acc, op| acc.kronecker(op))
}

pub fn tensor_vec(a: &CVector, b: &CVector) -> CVector {
    a.kronecker(b)
}

pub fn trace(m: &CMatrix) -> Complex64 {
    m.diagonal().sum()
}

pub fn max_abs(m: &CMatrix) -> f64 {
    m.iter().map(|z| z.norm()).fold(0.0, f64::max)
}

pub fn max_abs_diff(a: &CMatrix, b: &CMatrix) -> f64 {
    max_abs(&(a - b))
}

pub fn hermiticity_defect(m: &CMatrix) -> f64 {
    max_abs_diff(m, &m.adjoint())
}

pub fn is_hermitian(m: &CMatrix, tol: f64) -> bool {
    m.is_square() && hermiticity_defect(m) <= tol
}

pub fn hermitian_part(m: &CMatrix) -> CMatrix {
    (m + m.adjoint()).scale(0.5)
}

/// Eigen-decomposition of the Hermitian part of `m`, eigenvalues ascending.
pub fn hermitian_eigen(m: &CMatrix) -> (Vec<f64>, CMatrix) {
    let d = m.nrows();
    let eig = SymmetricEigen::new(hermitian_part(m));
    let mut order: Vec<usize> = (0..d).collect();
    order.sort_by(|&i, &j| eig.eigenvalues[i].total_cmp(&eig.eigenvalues[j]));
    let values = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let vectors = CMatrix::from_fn(d, d, |r, k| eig.eigenvectors[(r, order[k])]);
    (values, vectors)
}

pub fn hermitian_eigenvalues(m: &CMatrix) -> Vec<f64> {
    hermitian_eigen(m).0
}

/// Rebuild `V diag(f(λ)) V†`.
pub fn spectral_map(values: &[f64], vectors: &CMatrix, f: impl Fn(f64) -> f64) -> CMatrix {
    let d = vectors.nrows();
    let mut out = zeros(d, d);
    for (k, &lam) in values.iter().enumerate() {
        let fl = f(lam);
        if fl == 0.0 {
            continue;
        }
        let v = vectors.column(k);
        out += (&v * v.adjoint()).scale(fl);
    }
    out
}

/// Clamp eigenvalues in `[-CLAMP, 0)` to zero; larger negative values are left
/// alone so callers can still detect them.
#[inline]
pub fn clamp_eigenvalue(lam: f64) -> f64 {
    if lam < 0.0 && lam >= -tolerance::CLAMP {
        0.0
    } else {
        lam
    }
}

/// `m^p` on the support of a PSD matrix (pseudo-inverse convention for
/// negative powers). Eigenvalues at or below `support_tol` count as zero.
pub fn psd_power(m: &CMatrix, p: f64, support_tol: f64) -> CMatrix {
    let (vals, vecs) = hermitian_eigen(m);
    spectral_map(&vals, &vecs, |lam| {
        if lam > support_tol {
            lam.powf(p)
        } else {
            0.0
        }
    })
}

pub fn psd_sqrt(m: &CMatrix) -> CMatrix {
    let (vals, vecs) = hermitian_eigen(m);
    spectral_map(&vals, &vecs, |lam| clamp_eigenvalue(lam).max(0.0).sqrt())
}

/// `log2(m)` on the support of a PSD matrix; zero on the kernel.
pub fn psd_log2(m: &CMatrix, support_tol: f64) -> CMatrix {
    let (vals, vecs) = hermitian_eigen(m);
    spectral_map(&vals, &vecs, |lam| if lam > support_tol { lam.log2() } else { 0.0 })
}

pub fn singular_values(m: &CMatrix) -> Vec<f64> {
    m.clone().svd(false, false).singular_values.iter().copied().collect()
}

/// Sum of singular values.
pub fn trace_norm(m: &CMatrix) -> f64 {
    if m.is_square() && is_hermitian(m, 1e-12) {
        hermitian_eigenvalues(m).iter().map(|x| x.abs()).sum()
    } else {
        singular_values(m).iter().sum()
    }
}

pub fn operator_norm(m: &CMatrix) -> f64 {
    singular_values(m).into_iter().fold(0.0, f64::max)
}

/// Orthonormal basis (as columns) of the orthogonal complement of the column
/// span of `b`. Columns of `b` are assumed orthonormal.
pub fn orthonormal_complement(b: &CMatrix) -> CMatrix {
    let d = b.nrows();
    let k = b.ncols();
    if k == d {
        return zeros(d, 0);
    }
    let comp = identity(d) - b * b.adjoint();
    let (vals, vecs) = hermitian_eigen(&comp);
    let cols: Vec<usize> = (0..d).filter(|&i| vals[i] > 0.5).collect();
    CMatrix::from_fn(d, cols.len(), |r, j| vecs[(r, cols[j])])
}

/// Closest unitary to a square matrix (polar factor).
pub fn unitary_polar(m: &CMatrix) -> CMatrix {
    let svd = m.clone().svd(true, true);
    svd.u.unwrap() * svd.v_t.unwrap()
}

pub fn total_dim(dims: &[usize]) -> usize {
    dims.iter().product()
}

fn strides(dims: &[usize]) -> Vec<usize> {
    let mut s = vec![1; dims.len()];
    for k in (0..dims.len().saturating_sub(1)).rev() {
        s[k] = s[k + 1] * dims[k + 1];
    }
    s
}

fn check_subsystems(dims: &[usize], idx: &[usize]) -> Result<()> {
    for &i in idx {
        if i >= dims.len() {
            return Err(Error::SubsystemOutOfRange { index: i, count: dims.len() });
        }
    }
    let mut seen = idx.to_vec();
    seen.sort_unstable();
    seen.dedup();
    if seen.len() != idx.len() {
        return Err(Error::InvalidOperator("repeated subsystem index".into()));
    }
    Ok(())
}

/// Index of each basis state restricted to the listed subsystems (in the
/// listed order).
fn sub_index(dims: &[usize], which: &[usize]) -> Vec<usize> {
    let st = strides(dims);
    let n = total_dim(dims);
    (0..n)
        .map(|i| {
            which.iter().fold(0, |acc, &k| acc * dims[k] + (i / st[k]) % dims[k])
        })
        .collect()
}

/// Partial trace keeping `keep` (output subsystems in ascending order).
pub fn partial_trace(m: &CMatrix, dims: &[usize], keep: &[usize]) -> Result<CMatrix> {
    let n = total_dim(dims);
    if m.nrows() != n || m.ncols() != n {
        return Err(Error::DimensionMismatch { expected: n, found: m.nrows() });
    }
    check_subsystems(dims, keep)?;
    let mut keep = keep.to_vec();
    keep.sort_unstable();
    let traced: Vec<usize> = (0..dims.len()).filter(|k| !keep.contains(k)).collect();
    let kd: usize = keep.iter().map(|&k| dims[k]).product();
    let ki = sub_index(dims, &keep);
    let ti = sub_index(dims, &traced);
    let mut out = zeros(kd, kd);
    for i in 0..n {
        for j in 0..n {
            if ti[i] == ti[j] {
                out[(ki[i], ki[j])] += m[(i, j)];
            }
        }
    }
    Ok(out)
}

/// Reorder subsystems: output subsystem `s` is input subsystem `perm[s]`.
pub fn permute_subsystems(m: &CMatrix, dims: &[usize], perm: &[usize]) -> Result<CMatrix> {
    let n = total_dim(dims);
    if m.nrows() != n || m.ncols() != n {
        return Err(Error::DimensionMismatch { expected: n, found: m.nrows() });
    }
    if perm.len() != dims.len() {
        return Err(Error::DimensionMismatch { expected: dims.len(), found: perm.len() });
    }
    check_subsystems(dims, perm)?;
    let idx = sub_index(dims, perm);
    let mut out = zeros(n, n);
    for i in 0..n {
        for j in 0..n {
            out[(idx[i], idx[j])] = m[(i, j)];
        }
    }
    Ok(out)
}

pub fn permute_vector(v: &CVector, dims: &[usize], perm: &[usize]) -> Result<CVector> {
    let n = total_dim(dims);
    if v.len() != n {
        return Err(Error::DimensionMismatch { expected: n, found: v.len() });
    }
    if perm.len() != dims.len() {
        return Err(Error::DimensionMismatch { expected: dims.len(), found: perm.len() });
    }
    check_subsystems(dims, perm)?;
    let idx = sub_index(dims, perm);
    let mut out = CVector::zeros(n);
    for i in 0..n {
        out[idx[i]] = v[i];
    }
    Ok(out)
}

pub fn permuted_dims(dims: &[usize], perm: &[usize]) -> Vec<usize> {
    perm.iter().map(|&k| dims[k]).collect()
}

/// `1 ⊗ .. ⊗ op ⊗ .. ⊗ 1` with `op` on subsystem `target`.
pub fn embed_operator(op: &CMatrix, dims: &[usize], target: usize) -> Result<CMatrix> {
    if target >= dims.len() {
        return Err(Error::SubsystemOutOfRange { index: target, count: dims.len() });
    }
    if op.nrows() != dims[target] || op.ncols() != dims[target] {
        return Err(Error::DimensionMismatch { expected: dims[target], found: op.nrows() });
    }
    let left: usize = dims[..target].iter().product();
    let right: usize = dims[target + 1..].iter().product();
    Ok(identity(left).kronecker(op).kronecker(&identity(right)))
}

/// Reduced density matrix of a pure vector on the kept subsystems.
pub fn reduced_from_vector(v: &CVector, dims: &[usize], keep: &[usize]) -> Result<CMatrix> {
    let n = total_dim(dims);
    if v.len() != n {
        return Err(Error::DimensionMismatch { expected: n, found: v.len() });
    }
    check_subsystems(dims, keep)?;
    let mut keep = keep.to_vec();
    keep.sort_unstable();
    let traced: Vec<usize> = (0..dims.len()).filter(|k| !keep.contains(k)).collect();
    let kd: usize = keep.iter().map(|&k| dims[k]).product();
    let td: usize = traced.iter().map(|&k| dims[k]).product();
    let ki = sub_index(dims, &keep);
    let ti = sub_index(dims, &traced);
    // coefficient matrix C[k, t], then C C†
    let mut coeff = zeros(kd, td);
    for i in 0..n {
        coeff[(ki[i], ti[i])] = v[i];
    }
    Ok(&coeff * coeff.adjoint())
}

/// Coefficient matrix `C[a, f]` of a vector on `A ⊗ F` with `dim(A) = da`.
pub fn coefficient_matrix(v: &CVector, da: usize) -> CMatrix {
    let df = v.len() / da;
    CMatrix::from_fn(da, df, |a, f| v[a * df + f])
}

pub fn vector_from_coefficients(cm: &CMatrix) -> CVector {
    let (da, df) = cm.shape();
    CVector::from_fn(da * df, |i, _| cm[(i / df, i % df)])
}

/// Real-plane qubit observable `cos φ Z + sin φ X`.
pub fn xz_observable(phi: f64) -> CMatrix {
    pauli_z().scale(phi.cos()) + pauli_x().scale(phi.sin())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn kronecker_conventions() {
        assert_eq!(tensor(&identity(2), &identity(2)), identity(4));
        let xx = tensor(&pauli_x(), &pauli_x());
        let v = xx * ket(4, 0);
        assert_eq!(v, ket(4, 3));
        let p = tensor(&projector(&ket(2, 0)), &projector(&ket(2, 1)));
        assert_eq!(p, projector(&ket(4, 1)));
    }

    #[test]
    fn partial_trace_of_product() {
        let a = from_real(2, 2, &[0.7, 0.1, 0.1, 0.3]);
        let b = from_real(3, 3, &[0.5, 0.0, 0.0, 0.0, 0.25, 0.0, 0.0, 0.0, 0.25]);
        let ab = tensor(&a, &b);
        let ra = partial_trace(&ab, &[2, 3], &[0]).unwrap();
        let rb = partial_trace(&ab, &[2, 3], &[1]).unwrap();
        assert!(max_abs_diff(&ra, &a) < 1e-15);
        assert!(max_abs_diff(&rb, &b) < 1e-15);
    }

    #[test]
    fn switch_tau_marginal() {
        let mut tau = zeros(4, 4);
        tau[(0, 0)] = c(0.5, 0.0);
        tau[(3, 3)] = c(0.5, 0.0);
        let r = partial_trace(&tau, &[2, 2], &[0]).unwrap();
        assert!(max_abs_diff(&r, &identity(2).scale(0.5)) < 1e-15);
    }

    #[test]
    fn permutation_swaps_factors() {
        let a = pauli_x();
        let b = pauli_z();
        let ab = tensor(&a, &b);
        let ba = permute_subsystems(&ab, &[2, 2], &[1, 0]).unwrap();
        assert_eq!(ba, tensor(&b, &a));
        let v = tensor_vec(&ket(2, 0), &ket(3, 2));
        let w = permute_vector(&v, &[2, 3], &[1, 0]).unwrap();
        assert_eq!(w, tensor_vec(&ket(3, 2), &ket(2, 0)));
    }

    #[test]
    fn reduced_from_vector_matches_partial_trace() {
        let v = CVector::from_fn(12, |i, _| c((i as f64 + 1.0).sin(), (i as f64).cos()));
        let v = v.normalize();
        let full = projector(&v);
        for keep in [&[0usize][..], &[1], &[2], &[0, 2], &[1, 2]] {
            let r1 = reduced_from_vector(&v, &[2, 3, 2], keep).unwrap();
            let r2 = partial_trace(&full, &[2, 3, 2], keep).unwrap();
            assert!(max_abs_diff(&r1, &r2) < 1e-14);
        }
    }

    #[test]
    fn out_of_range_subsystem() {
        let m = identity(4);
        assert!(matches!(
            partial_trace(&m, &[2, 2], &[2]),
            Err(Error::SubsystemOutOfRange { index: 2, count: 2 })
        ));
    }

    #[test]
    fn complement_is_orthonormal() {
        let b = CMatrix::from_columns(&[ket(3, 0)]);
        let comp = orthonormal_complement(&b);
        assert_eq!(comp.ncols(), 2);
        assert!(max_abs_diff(&(comp.adjoint() * &comp), &identity(2)) < 1e-14);
        assert!(max_abs(&(b.adjoint() * comp)) < 1e-14);
    }
}
