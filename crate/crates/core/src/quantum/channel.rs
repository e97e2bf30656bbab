use super::matrix::{self, CMatrix};
use super::state::DensityOperator;
use crate::error::{Error, Result};

/// Completely positive trace-preserving map in Kraus form.
#[derive(Debug, Clone)]
pub struct KrausChannel {
    kraus: Vec<CMatrix>,
    output_dims: Vec<usize>,
}

const TP_TOL: f64 = 1e-10;

impl KrausChannel {
    pub fn new(kraus: Vec<CMatrix>, output_dims: Vec<usize>) -> Result<Self> {
        let first = kraus.first().ok_or_else(|| Error::InvalidOperator("empty Kraus list".into()))?;
        let (dout, din) = first.shape();
        if matrix::total_dim(&output_dims) != dout {
            return Err(Error::DimensionMismatch { expected: dout, found: matrix::total_dim(&output_dims) });
        }
        let mut sum = matrix::zeros(din, din);
        for k in &kraus {
            if k.shape() != (dout, din) {
                return Err(Error::DimensionMismatch { expected: din, found: k.ncols() });
            }
            sum += k.adjoint() * k;
        }
        let deviation = matrix::max_abs_diff(&sum, &matrix::identity(din));
        if deviation > TP_TOL {
            return Err(Error::NotTracePreserving { deviation });
        }
        Ok(Self { kraus, output_dims })
    }

    pub fn identity(d: usize) -> Self {
        Self { kraus: vec![matrix::identity(d)], output_dims: vec![d] }
    }

    /// Stinespring form: `V: in → out ⊗ env`, Kraus ops `(1 ⊗ ⟨e|) V`.
    pub fn from_stinespring(v: &CMatrix, output_dims: Vec<usize>, env_dim: usize) -> Result<Self> {
        let dout = matrix::total_dim(&output_dims);
        if v.nrows() != dout * env_dim {
            return Err(Error::DimensionMismatch { expected: dout * env_dim, found: v.nrows() });
        }
        let kraus = (0..env_dim)
            .map(|e| CMatrix::from_fn(dout, v.ncols(), |i, j| v[(i * env_dim + e, j)]))
            .collect();
        Self::new(kraus, output_dims)
    }

    pub fn input_dim(&self) -> usize {
        self.kraus[0].ncols()
    }

    pub fn output_dim(&self) -> usize {
        self.kraus[0].nrows()
    }

    pub fn output_dims(&self) -> &[usize] {
        &self.output_dims
    }

    pub fn kraus(&self) -> &[CMatrix] {
        &self.kraus
    }

    pub fn apply_matrix(&self, rho: &CMatrix) -> CMatrix {
        let mut out = matrix::zeros(self.output_dim(), self.output_dim());
        for k in &self.kraus {
            out += k * rho * k.adjoint();
        }
        out
    }

    pub fn apply(&self, rho: &DensityOperator) -> Result<DensityOperator> {
        if rho.dim() != self.input_dim() {
            return Err(Error::DimensionMismatch { expected: self.input_dim(), found: rho.dim() });
        }
        DensityOperator::from_unnormalized(self.apply_matrix(rho.matrix()), self.output_dims.clone())
    }

    /// `id_d ⊗ Φ`.
    pub fn extend_left(&self, d: usize) -> KrausChannel {
        let id = matrix::identity(d);
        let mut dims = vec![d];
        dims.extend_from_slice(&self.output_dims);
        KrausChannel { kraus: self.kraus.iter().map(|k| id.kronecker(k)).collect(), output_dims: dims }
    }

    /// Unnormalized Choi matrix `Σ_ij |i⟩⟨j| ⊗ Φ(|i⟩⟨j|)`.
    pub fn choi(&self) -> CMatrix {
        let din = self.input_dim();
        let dout = self.output_dim();
        let mut out = matrix::zeros(din * dout, din * dout);
        for i in 0..din {
            for j in 0..din {
                let mut e = matrix::zeros(din, din);
                e[(i, j)] = matrix::ONE;
                let block = self.apply_matrix(&e);
                out.view_mut((i * dout, j * dout), (dout, dout)).copy_from(&block);
            }
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quantum::random::{random_isometry, seeded};

    #[test]
    fn rejects_non_trace_preserving() {
        let k = matrix::identity(2).scale(0.9);
        assert!(matches!(KrausChannel::new(vec![k], vec![2]), Err(Error::NotTracePreserving { .. })));
    }

    #[test]
    fn stinespring_channel_preserves_trace() {
        let mut rng = seeded(3);
        let v = random_isometry(2, 6, &mut rng);
        let ch = KrausChannel::from_stinespring(&v, vec![3], 2).unwrap();
        let rho = DensityOperator::maximally_mixed(vec![2]);
        let out = ch.apply(&rho).unwrap();
        assert_eq!(out.dim(), 3);
        let choi = ch.choi();
        let tr_out = matrix::partial_trace(&choi, &[2, 3], &[0]).unwrap();
        assert!(matrix::max_abs_diff(&tr_out, &matrix::identity(2)) < 1e-12);
    }
}
