use proptest::prelude::*;
use routedqkd_core::quantum::matrix;
use routedqkd_core::quantum::random::{random_density, random_pure, random_unitary, seeded};
use routedqkd_core::quantum::{trace_distance, uhlmann_isometry, uhlmann_residual, PureState};

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn partial_trace_of_product(seed in any::<u64>(), da in 1usize..4, db in 1usize..4) {
        let mut rng = seeded(seed);
        let a = random_density(vec![da], rng_rank(da, seed), &mut rng);
        let b = random_density(vec![db], rng_rank(db, seed / 3), &mut rng);
        let r = a.tensor(&b).partial_trace(&[0]).unwrap();
        prop_assert!(matrix::max_abs_diff(r.matrix(), a.matrix()) <= 1e-12);
    }

    #[test]
    fn purification_reduces_back(seed in any::<u64>(), d in 1usize..6) {
        let mut rng = seeded(seed);
        let rho = random_density(vec![d], rng_rank(d, seed), &mut rng);
        for psi in [rho.purify(), rho.purify_minimal(1e-12)] {
            let back = psi.reduced(&[0]).unwrap();
            prop_assert!(matrix::max_abs_diff(back.matrix(), rho.matrix()) <= 1e-9);
        }
    }

    #[test]
    fn trace_distance_metric_properties(seed in any::<u64>(), d in 2usize..5) {
        let mut rng = seeded(seed);
        let r: Vec<_> = (0..3).map(|k| random_density(vec![d], 1 + k % d, &mut rng)).collect();
        let ab = trace_distance(&r[0], &r[1]).unwrap();
        let bc = trace_distance(&r[1], &r[2]).unwrap();
        let ac = trace_distance(&r[0], &r[2]).unwrap();
        prop_assert!(ac <= ab + bc + 1e-10);
        let u = random_unitary(d, &mut rng);
        let moved = trace_distance(&r[0].conjugate(&u).unwrap(), &r[1].conjugate(&u).unwrap()).unwrap();
        prop_assert!((moved - ab).abs() <= 1e-10);
    }
}

fn rng_rank(d: usize, seed: u64) -> usize {
    1 + (seed as usize % d)
}

/// Two purifications of one marginal: `(1 ⊗ U)` applied to a random state.
fn purification_pair(d: usize, seed: u64) -> (PureState, PureState) {
    let mut rng = seeded(seed);
    let psi = random_pure(vec![d, d], &mut rng);
    let u = random_unitary(d, &mut rng);
    let phi = psi.apply_unitary(&matrix::tensor(&matrix::identity(d), &u)).unwrap();
    (psi, phi)
}

#[test]
fn uhlmann_isometry_solves_its_equation() {
    for d in 2..=4 {
        for k in 0..100u64 {
            let (psi, phi) = purification_pair(d, 1000 * d as u64 + k);
            let w = uhlmann_isometry(&psi, &phi).unwrap();
            let res = uhlmann_residual(&w, &psi, &phi).unwrap();
            assert!(res <= 1e-7, "d = {d}, instance {k}: residual {res}");
        }
    }
}
