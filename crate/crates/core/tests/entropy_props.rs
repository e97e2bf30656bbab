use proptest::prelude::*;
use routedqkd_core::entropy::{
    conditional_entropy, relative_entropy, renyi_down, ClassicalDistribution, CqState,
};
use routedqkd_core::quantum::random::{random_density, random_isometry, seeded};
use routedqkd_core::quantum::{DensityOperator, KrausChannel};
use rand::Rng;

fn simplex_point(n: usize, rng: &mut impl Rng) -> ClassicalDistribution {
    let mut p: Vec<f64> = (0..n).map(|_| rng.random_range(0.01..1.0)).collect();
    let s: f64 = p.iter().sum();
    p.iter_mut().for_each(|v| *v /= s);
    ClassicalDistribution::new(p).unwrap()
}

fn random_cq(seed: u64, na: usize, de: usize) -> CqState {
    let mut rng = seeded(seed);
    let mut p: Vec<f64> = (0..na).map(|_| rng.random_range(0.05..1.0)).collect();
    let s: f64 = p.iter().sum();
    p.iter_mut().for_each(|v| *v /= s);
    let conds = (0..na).map(|k| Some(random_density(vec![de], 1 + k % de, &mut rng))).collect();
    CqState::new(p, conds).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn uniform_register_is_independent_of_e(seed in any::<u64>(), d in 2usize..5, de in 1usize..4) {
        let mut rng = seeded(seed);
        let ua = DensityOperator::maximally_mixed(vec![d]);
        let e = random_density(vec![de], de, &mut rng);
        let h = conditional_entropy(&ua.tensor(&e), &[0]).unwrap();
        prop_assert!((h - (d as f64).log2()).abs() <= 1e-9);
    }

    #[test]
    fn channels_on_e_do_not_lower_entropy(seed in any::<u64>(), de in 2usize..4) {
        let cq = random_cq(seed, 2, de);
        let mut rng = seeded(seed ^ 0x5a5a);
        let env = rng.random_range(1..=3usize);
        let v = random_isometry(de, de * env, &mut rng);
        let ch = KrausChannel::from_stinespring(&v, vec![de], env).unwrap();
        let mapped: Vec<Option<DensityOperator>> =
            (0..2).map(|a| Some(ch.apply(cq.conditional(a).unwrap()).unwrap())).collect();
        let after = CqState::new(cq.probs().to_vec(), mapped).unwrap();
        prop_assert!(after.conditional_entropy() >= cq.conditional_entropy() - 1e-8);
    }

    #[test]
    fn renyi_nonincreasing_in_alpha(seed in any::<u64>(), de in 1usize..4) {
        let cq = random_cq(seed, 3, de);
        let alphas = [1.001, 1.1, 1.5, 2.0, 3.0, 5.0, 10.0];
        let vals: Vec<f64> = alphas.iter().map(|&a| renyi_down(&cq, a).unwrap()).collect();
        for w in vals.windows(2) {
            prop_assert!(w[1] <= w[0] + 1e-9, "{vals:?}");
        }
    }

    #[test]
    fn relative_entropy_nonnegative(seed in any::<u64>(), n in 2usize..6) {
        let mut rng = seeded(seed);
        let q = simplex_point(n, &mut rng);
        let p = simplex_point(n, &mut rng);
        prop_assert!(relative_entropy(&q, &p).unwrap() >= 0.0);
        prop_assert!(relative_entropy(&q, &q).unwrap().abs() <= 1e-10);
    }
}
