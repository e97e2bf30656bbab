use serde::{Deserialize, Serialize};

use super::matrix::{self, CMatrix};
use crate::error::{Error, Result};
use crate::tolerance;

/// Two-outcome projective measurement `{M₀, M₁}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "super::io::PvmRecord", into = "super::io::PvmRecord")]
pub struct BinaryPvm {
    effects: [CMatrix; 2],
}

fn idempotency_defect(p: &CMatrix) -> f64 {
    matrix::max_abs_diff(&(p * p), p)
}

impl BinaryPvm {
    pub fn new(m0: CMatrix, m1: CMatrix) -> Result<Self> {
        if !m0.is_square() || m0.shape() != m1.shape() {
            return Err(Error::DimensionMismatch { expected: m0.nrows(), found: m1.nrows() });
        }
        for m in [&m0, &m1] {
            if !matrix::is_hermitian(m, tolerance::STRUCTURAL) {
                return Err(Error::InvalidOperator("effect is not Hermitian".into()));
            }
            let defect = idempotency_defect(m);
            if defect > tolerance::STRUCTURAL {
                return Err(Error::NotAProjector { defect });
            }
        }
        let d = m0.nrows();
        if matrix::max_abs_diff(&(&m0 + &m1), &matrix::identity(d)) > tolerance::STRUCTURAL {
            return Err(Error::InvalidOperator("effects do not sum to identity".into()));
        }
        if matrix::operator_norm(&(&m0 * &m1)) > tolerance::STRUCTURAL {
            return Err(Error::InvalidOperator("effects are not orthogonal".into()));
        }
        Ok(Self { effects: [m0, m1] })
    }

    /// `{P, 1 − P}`.
    pub fn from_projector(p: CMatrix) -> Result<Self> {
        let q = matrix::identity(p.nrows()) - &p;
        Self::new(p, q)
    }

    /// Computational basis measurement on a qubit.
    pub fn z_basis() -> Self {
        Reflection::pauli_z().pvm()
    }

    pub fn dim(&self) -> usize {
        self.effects[0].nrows()
    }

    pub fn effect(&self, a: usize) -> &CMatrix {
        &self.effects[a]
    }

    pub fn effects(&self) -> &[CMatrix; 2] {
        &self.effects
    }

    /// `M₀ − M₁`.
    pub fn observable(&self) -> Reflection {
        Reflection { matrix: &self.effects[0] - &self.effects[1] }
    }
}

/// Hermitian unitary (±1-valued observable).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "super::io::MatrixRecord", into = "super::io::MatrixRecord")]
pub struct Reflection {
    matrix: CMatrix,
}

impl Reflection {
    pub fn new(matrix: CMatrix) -> Result<Self> {
        if !matrix::is_hermitian(&matrix, tolerance::STRUCTURAL) {
            return Err(Error::InvalidOperator("reflection is not Hermitian".into()));
        }
        let d = matrix.nrows();
        let defect = matrix::max_abs_diff(&(&matrix * &matrix), &matrix::identity(d));
        if defect > tolerance::STRUCTURAL {
            return Err(Error::InvalidOperator(format!("reflection squares to identity only up to {defect:.3e}")));
        }
        Ok(Self { matrix: matrix::hermitian_part(&matrix) })
    }

    pub fn pauli_x() -> Self {
        Self { matrix: matrix::pauli_x() }
    }

    pub fn pauli_z() -> Self {
        Self { matrix: matrix::pauli_z() }
    }

    /// `cos φ Z + sin φ X`.
    pub fn xz_plane(phi: f64) -> Self {
        Self { matrix: matrix::xz_observable(phi) }
    }

    pub fn identity(d: usize) -> Self {
        Self { matrix: matrix::identity(d) }
    }

    /// `U R U†` for unitary `U`.
    pub fn conjugate(&self, u: &CMatrix) -> Result<Self> {
        Self::new(u * &self.matrix * u.adjoint())
    }

    /// `R ⊕ S` on the direct sum of the two spaces.
    pub fn direct_sum(&self, other: &Reflection) -> Reflection {
        let (a, b) = (self.dim(), other.dim());
        let mut m = matrix::zeros(a + b, a + b);
        m.view_mut((0, 0), (a, a)).copy_from(&self.matrix);
        m.view_mut((a, a), (b, b)).copy_from(&other.matrix);
        Reflection { matrix: m }
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.matrix
    }

    /// Projectors `(1 ± R)/2`.
    pub fn pvm(&self) -> BinaryPvm {
        let id = matrix::identity(self.dim());
        BinaryPvm {
            effects: [(&id + &self.matrix).scale(0.5), (&id - &self.matrix).scale(0.5)],
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reflection_roundtrip() {
        let r = Reflection::xz_plane(0.3);
        let back = r.pvm().observable();
        assert!(matrix::max_abs_diff(r.matrix(), back.matrix()) < 1e-15);
        assert!(BinaryPvm::new(r.pvm().effect(0).clone(), r.pvm().effect(1).clone()).is_ok());
    }

    #[test]
    fn rejects_non_projective_effects() {
        let half = matrix::identity(2).scale(0.5);
        assert!(matches!(
            BinaryPvm::new(half.clone(), half),
            Err(Error::NotAProjector { .. })
        ));
        assert!(Reflection::new(matrix::identity(2).scale(2.0)).is_err());
    }
}
