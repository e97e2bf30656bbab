use proptest::prelude::*;
use rand::Rng;
use routedqkd_core::quantum::random::{random_density, random_isometry, random_projector, seeded};
use routedqkd_core::switch::equivalence::{channel_marginal_defect, random_model_b};
use routedqkd_core::switch::{convert_model_b_to_a, embed_model_a_in_b, lhv_membership, Behavior};
use routedqkd_core::{BinaryPvm, DensityOperator, KrausChannel};

fn random_pvms(rng: &mut impl Rng) -> Vec<BinaryPvm> {
    (0..2)
        .map(|_| {
            let rank = rng.random_range(0..=2);
            BinaryPvm::from_projector(random_projector(2, rank, rng)).unwrap()
        })
        .collect()
}

fn separable_behavior(seed: u64, terms: usize) -> Behavior {
    let mut rng = seeded(seed);
    let a = random_pvms(&mut rng);
    let b = random_pvms(&mut rng);
    let mut weights: Vec<f64> = (0..terms).map(|_| rng.random_range(0.05..1.0)).collect();
    let s: f64 = weights.iter().sum();
    weights.iter_mut().for_each(|w| *w /= s);
    let parts: Vec<DensityOperator> = (0..terms)
        .map(|_| {
            let ra = random_density(vec![2], rng.random_range(1..=2), &mut rng);
            let rb = random_density(vec![2], rng.random_range(1..=2), &mut rng);
            ra.tensor(&rb)
        })
        .collect();
    let rho = DensityOperator::mixture(&weights, &parts).unwrap();
    Behavior::from_state(&rho, &a, &b).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn embedded_model_a_has_no_marginal_defect(seed in any::<u64>(), branches in 1usize..4, d in 2usize..4) {
        let mut rng = seeded(seed);
        let phis: Vec<KrausChannel> = (0..branches)
            .map(|_| {
                let env = rng.random_range(1..=2usize);
                let v = random_isometry(d, d * d * env, &mut rng);
                KrausChannel::from_stinespring(&v, vec![d, d], env).unwrap()
            })
            .collect();
        let gammas = embed_model_a_in_b(&phis, d);
        prop_assert!(channel_marginal_defect(&gammas, d).unwrap() <= 1e-10);
    }

    #[test]
    fn separable_behaviors_are_local(seed in any::<u64>(), terms in 1usize..5) {
        prop_assert!(lhv_membership(&separable_behavior(seed, terms)).unwrap().feasible);
    }

    #[test]
    fn membership_invariant_under_relabeling(
        v in 0.0f64..1.0,
        swap_x in any::<bool>(),
        swap_y in any::<bool>(),
        fa in any::<[bool; 2]>(),
        fb in any::<[bool; 2]>(),
    ) {
        let b = Behavior::isotropic(v).unwrap();
        let r = b.relabel(swap_x, swap_y, fa, fb).unwrap();
        let (m0, m1) = (lhv_membership(&b).unwrap(), lhv_membership(&r).unwrap());
        prop_assert_eq!(m0.feasible, m1.feasible);
        prop_assert!((m0.facet_value - m1.facet_value).abs() <= 1e-9);
    }
}

#[test]
fn model_b_to_a_reconstructs_qutrit_factors() {
    for seed in 0..12 {
        let mut rng = seeded(300 + seed);
        let d = if seed % 2 == 0 { 2 } else { 3 };
        let m = random_model_b(2, d, &mut rng);
        let c = convert_model_b_to_a(&m.gammas, &m.tau, &m.probs).unwrap();
        assert!(c.marginal_defect <= 1e-9);
        assert!(c.error <= 1e-7, "d = {d}: {}", c.error);
        assert!(c.branch_errors.iter().all(|&e| e <= 1e-7));
    }
}
