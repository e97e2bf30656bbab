use proptest::prelude::*;
use rand::Rng;
use routedqkd_core::overlap::{
    cstar_anticommutator_bound, cstar_block_bound, random_projection_pair, two_projection_blocks,
};
use routedqkd_core::quantum::random::{random_density, seeded};
use routedqkd_core::BinaryPvm;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn blocks_reduce_both_projections(seed in any::<u64>(), d in 2usize..=8) {
        let mut rng = seeded(seed);
        let (p, q) = random_projection_pair(d, &mut rng);
        let rank = rng.random_range(1..=d);
        let sigma = random_density(vec![d], rank, &mut rng);
        let blocks = two_projection_blocks(&p, &q, &sigma).unwrap();
        prop_assert!(blocks.resolution_defect() <= 1e-9);
        prop_assert!(blocks.orthogonality_defect() <= 1e-9);
        prop_assert!(blocks.reduction_defect(&p) <= 1e-9);
        prop_assert!(blocks.reduction_defect(&q) <= 1e-9);
        let w = blocks.weights();
        prop_assert!(w.iter().all(|&x| x >= -1e-12));
        prop_assert!((w.iter().sum::<f64>() - 1.0).abs() <= 1e-9);
    }

    #[test]
    fn bounds_are_ordered_and_in_range(seed in any::<u64>(), d in 2usize..=8) {
        let mut rng = seeded(seed);
        let (p, q) = random_projection_pair(d, &mut rng);
        let sigma = random_density(vec![d], d, &mut rng);
        let blocks = two_projection_blocks(&p, &q, &sigma).unwrap();
        let z = BinaryPvm::from_projector(p).unwrap().observable();
        let x = BinaryPvm::from_projector(q).unwrap().observable();
        let lo = cstar_block_bound(&blocks);
        let hi = cstar_anticommutator_bound(&sigma, &x, &z).unwrap();
        prop_assert!(lo <= hi + 1e-10);
        for v in [lo, hi] {
            prop_assert!((0.5..=1.0).contains(&v));
        }
    }
}
