//! Conversions between the two channel models of a switched source: a
//! channel acting only on the transmitted system and switch value, and a
//! family of joint channels constrained to leave Alice's marginal unchanged.

use rand::Rng;

use crate::error::{Error, Result};
use crate::quantum::matrix::{self, CMatrix};
use crate::quantum::random::{random_density, random_isometry, random_unitary};
use crate::quantum::{trace_distance, uhlmann_isometry, DensityOperator, KrausChannel, PureState};

/// `Γ^t = id_A ⊗ Φ′_t`.
pub fn embed_model_a_in_b(phi_prime: &[KrausChannel], d_a: usize) -> Vec<KrausChannel> {
    phi_prime.iter().map(|ch| ch.extend_left(d_a)).collect()
}

/// Largest difference between the Choi matrices of `tr_{rest} ∘ Γ^t` across
/// branches, where `A` is the first output subsystem of dimension `d_a`.
pub fn channel_marginal_defect(gammas: &[KrausChannel], d_a: usize) -> Result<f64> {
    let reduced = gammas
        .iter()
        .map(|g| {
            let dims = g.output_dims().to_vec();
            if dims[0] != d_a {
                return Err(Error::DimensionMismatch { expected: d_a, found: dims[0] });
            }
            let choi = g.choi();
            let mut cdims = vec![g.input_dim()];
            cdims.extend_from_slice(&dims);
            matrix::partial_trace(&choi, &cdims, &[0, 1])
        })
        .collect::<Result<Vec<CMatrix>>>()?;
    let mut worst: f64 = 0.0;
    for i in 0..reduced.len() {
        for j in i + 1..reduced.len() {
            worst = worst.max(matrix::max_abs_diff(&reduced[i], &reduced[j]));
        }
    }
    Ok(worst)
}

/// A model-(a) realization of a branch family.
#[derive(Debug, Clone)]
pub struct Conversion {
    /// `Φ′: A′ ⊗ T → B ⊗ F` with `A′ = B F E`.
    pub channel: KrausChannel,
    /// `τ′ = Σ_t p_t |ψ⟩⟨ψ|_{A A′} ⊗ |t⟩⟨t|_T`, dims `[d_A, d_{A′}, |T|]`.
    pub input: DensityOperator,
    /// Trace distance of `id_A ⊗ Φ′(τ′)` to `Σ_t p_t Γ^t(τ)`.
    pub error: f64,
    /// Trace distance conditioned on each `T = t`.
    pub branch_errors: Vec<f64>,
    /// Marginal defect of the branch outputs on `A`.
    pub marginal_defect: f64,
}

const MARGINAL_TOL: f64 = 1e-8;

/// Purification of `rho` with the purifier padded to dimension `de`,
/// returned with dims `[d_A, rest]`.
fn padded_purification(rho: &DensityOperator, de: usize) -> Result<PureState> {
    let psi = rho.purify_minimal(1e-12);
    let r = *psi.system_dims().last().unwrap();
    let n = rho.dim();
    let mut v = matrix::CVector::zeros(n * de);
    for i in 0..n {
        for k in 0..r {
            v[i * de + k] = psi.amplitudes()[i * r + k];
        }
    }
    let da = rho.system_dims()[0];
    PureState::normalized(v, vec![da, n / da * de])
}

/// Realize `Σ_t p_t Γ^t(τ)` with a channel that acts only on the
/// transmitted register and the switch value.
pub fn convert_model_b_to_a(gammas: &[KrausChannel], tau: &DensityOperator, probs: &[f64]) -> Result<Conversion> {
    if gammas.is_empty() || gammas.len() != probs.len() {
        return Err(Error::DimensionMismatch { expected: gammas.len(), found: probs.len() });
    }
    let outputs = gammas.iter().map(|g| g.apply(tau)).collect::<Result<Vec<_>>>()?;
    let out_dims = outputs[0].system_dims().to_vec();
    let da = out_dims[0];

    let marginals = outputs.iter().map(|o| o.partial_trace(&[0])).collect::<Result<Vec<_>>>()?;
    let mut marginal_defect: f64 = 0.0;
    for m in &marginals[1..] {
        marginal_defect = marginal_defect.max(trace_distance(&marginals[0], m)?);
    }
    if marginal_defect > MARGINAL_TOL {
        return Err(Error::MarginalMismatch { defect: marginal_defect, tolerance: MARGINAL_TOL });
    }

    let de = outputs.iter().map(|o| o.rank(1e-12)).max().unwrap().max(1);
    let purifs = outputs.iter().map(|o| padded_purification(o, de)).collect::<Result<Vec<_>>>()?;
    let reference = &purifs[0];
    let d_bf: usize = out_dims[1..].iter().product();
    let d_prime = d_bf * de;
    let nt = gammas.len();

    // Kraus operators (1_{BF} ⊗ ⟨e|) U^t (1 ⊗ ⟨t|) on A′ ⊗ T
    let mut kraus = Vec::with_capacity(nt * de);
    for (t, target) in purifs.iter().enumerate() {
        let u = uhlmann_isometry(reference, target)?;
        for e in 0..de {
            let mut k = matrix::zeros(d_bf, d_prime * nt);
            for row in 0..d_bf {
                for col in 0..d_prime {
                    k[(row, col * nt + t)] = u.matrix()[(row * de + e, col)];
                }
            }
            kraus.push(k);
        }
    }
    let channel = KrausChannel::new(kraus, out_dims[1..].to_vec())?;

    let ref_rho = reference.density();
    let branch_inputs: Vec<DensityOperator> = (0..nt)
        .map(|t| ref_rho.tensor(&PureState::basis(vec![nt], t).unwrap().density()).with_dims(vec![da, d_prime, nt]))
        .collect::<Result<_>>()?;
    let input = DensityOperator::mixture(probs, &branch_inputs)?;

    let lifted = channel.extend_left(da);
    let mut branch_errors = Vec::with_capacity(nt);
    for t in 0..nt {
        let out = lifted.apply(&branch_inputs[t])?.with_dims(out_dims.clone())?;
        branch_errors.push(trace_distance(&out, &outputs[t])?);
    }
    let total_out = lifted.apply(&input)?.with_dims(out_dims.clone())?;
    let target = DensityOperator::mixture(probs, &outputs)?;
    let error = trace_distance(&total_out, &target)?;

    Ok(Conversion { channel, input, error, branch_errors, marginal_defect })
}

/// A branch family satisfying the marginal constraint:
/// `Γ^t = (id_A ⊗ Φ′_t) ∘ U_{AA′}` with one fixed unitary `U`, random
/// Stinespring channels `Φ′_t: A′ → B F`, and a random input `τ_{AA′}`.
pub struct RandomModelB {
    pub gammas: Vec<KrausChannel>,
    pub tau: DensityOperator,
    pub probs: Vec<f64>,
}

pub fn random_model_b<R: Rng + ?Sized>(branches: usize, d: usize, rng: &mut R) -> RandomModelB {
    let u = random_unitary(d * d, rng);
    let gammas = (0..branches)
        .map(|_| {
            let env = rng.random_range(1..=2usize);
            let v = random_isometry(d, d * d * env, rng);
            let phi = KrausChannel::from_stinespring(&v, vec![d, d], env).unwrap();
            let kraus = phi.extend_left(d).kraus().iter().map(|k| k * &u).collect();
            KrausChannel::new(kraus, vec![d, d, d]).unwrap()
        })
        .collect();
    let rank = rng.random_range(1..=d * d);
    let tau = random_density(vec![d, d], rank, rng);
    let mut probs: Vec<f64> = (0..branches).map(|_| rng.random_range(0.1..1.0)).collect();
    let s: f64 = probs.iter().sum();
    probs.iter_mut().for_each(|p| *p /= s);
    RandomModelB { gammas, tau, probs }
}
