//! Seeded random operators for tests, benches and demo sources.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use super::matrix::{self, c, CMatrix, CVector};
use super::measurement::Reflection;
use super::state::{DensityOperator, PureState};

pub fn seeded(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Independent stream `stream` of a seed, for counter-based parallel work.
pub fn stream(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

pub fn ginibre<R: Rng + ?Sized>(rows: usize, cols: usize, rng: &mut R) -> CMatrix {
    CMatrix::from_fn(rows, cols, |_, _| {
        let re: f64 = rng.sample(StandardNormal);
        let im: f64 = rng.sample(StandardNormal);
        c(re, im)
    })
}

/// Haar-distributed unitary (QR of a Ginibre matrix with phase fix).
pub fn random_unitary<R: Rng + ?Sized>(d: usize, rng: &mut R) -> CMatrix {
    let qr = ginibre(d, d, rng).qr();
    let (mut q, r) = qr.unpack();
    for j in 0..d {
        let rjj = r[(j, j)];
        let ph = if rjj.norm() > 0.0 { rjj / rjj.norm() } else { c(1.0, 0.0) };
        for i in 0..d {
            q[(i, j)] *= ph;
        }
    }
    q
}

/// Haar-random isometry `C^din → C^dout`.
pub fn random_isometry<R: Rng + ?Sized>(din: usize, dout: usize, rng: &mut R) -> CMatrix {
    assert!(din <= dout);
    random_unitary(dout, rng).columns(0, din).into_owned()
}

pub fn random_pure<R: Rng + ?Sized>(dims: Vec<usize>, rng: &mut R) -> PureState {
    let n = matrix::total_dim(&dims);
    let v = CVector::from_fn(n, |_, _| {
        let re: f64 = rng.sample(StandardNormal);
        let im: f64 = rng.sample(StandardNormal);
        c(re, im)
    });
    PureState::normalized(v, dims).expect("Gaussian vector is nonzero")
}

/// Random density operator of the given rank (induced measure).
pub fn random_density<R: Rng + ?Sized>(dims: Vec<usize>, rank: usize, rng: &mut R) -> DensityOperator {
    let n = matrix::total_dim(&dims);
    let g = ginibre(n, rank.max(1), rng);
    DensityOperator::from_unnormalized(&g * g.adjoint(), dims).expect("Wishart matrix is a state")
}

pub fn random_projector<R: Rng + ?Sized>(d: usize, rank: usize, rng: &mut R) -> CMatrix {
    let v = random_isometry(rank, d, rng);
    matrix::hermitian_part(&(&v * v.adjoint()))
}

/// `U diag(±1) U†` with `minus` eigenvalues equal to −1.
pub fn random_reflection<R: Rng + ?Sized>(d: usize, minus: usize, rng: &mut R) -> Reflection {
    let u = random_unitary(d, rng);
    let mut diag = matrix::identity(d);
    for k in 0..minus.min(d) {
        diag[(k, k)] = c(-1.0, 0.0);
    }
    Reflection::new(&u * diag * u.adjoint()).expect("conjugated signature matrix is a reflection")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn unitary_is_unitary() {
        let mut rng = seeded(1);
        for d in 1..6 {
            let u = random_unitary(d, &mut rng);
            assert!(matrix::max_abs_diff(&(u.adjoint() * &u), &matrix::identity(d)) < 1e-12);
        }
    }

    #[test]
    fn streams_are_reproducible() {
        let a: u64 = stream(5, 3).random();
        let b: u64 = stream(5, 3).random();
        let c: u64 = stream(5, 4).random();
        assert_eq!(a, b);
        assert_ne!(a, c);
    }
}
