use proptest::prelude::*;
use routedqkd_core::protocol::{finite_size_bound, run_protocol, Noise, ProtocolConfig};

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn transcript_independent_of_workers(seed in any::<u64>(), workers in 2usize..9, q in 0.0f64..0.2) {
        let cfg = ProtocolConfig {
            rounds: 40_000,
            gamma: 0.3,
            seed,
            noise: Noise { depolarizing_q: q, local_q: q / 2.0 },
            ..Default::default()
        };
        let one = run_protocol(&ProtocolConfig { workers: 1, ..cfg.clone() }).unwrap();
        let many = run_protocol(&ProtocolConfig { workers, ..cfg }).unwrap();
        prop_assert_eq!(one, many);
    }

    #[test]
    fn counts_add_up(seed in any::<u64>(), rounds in 1u64..5000, gamma in 0.0f64..=1.0) {
        let cfg = ProtocolConfig { rounds, gamma, seed, ..Default::default() };
        let t = run_protocol(&cfg).unwrap();
        prop_assert_eq!(t.tally.key_rounds + t.tally.test_rounds, rounds);
        let routed: u64 = t.tally.switch_counts.iter().flatten().sum();
        prop_assert_eq!(routed, t.tally.test_rounds);
        if let Some(q) = t.estimates.qber_x {
            prop_assert!((0.0..=1.0).contains(&q));
        }
    }
}

// 50 runs × 49 statistics at 5σ: expected number of misses is about 1e-3
#[test]
fn frequencies_within_five_sigma() {
    for seed in 0..50 {
        let cfg = ProtocolConfig {
            rounds: 20_000,
            gamma: 0.5,
            seed,
            noise: Noise { depolarizing_q: 0.04, local_q: 0.02 },
            ..Default::default()
        };
        let t = run_protocol(&cfg).unwrap();
        for s in &t.statistics {
            let e = s.estimate.expect("every statistic sampled");
            assert!((e - s.ideal).abs() <= 5.0 * s.sigma, "seed {seed}: {} = {e} vs {}", s.name, s.ideal);
        }
        let d = t.estimates.marginal_defect.unwrap();
        let sd = t.estimates.marginal_defect_sigma.unwrap();
        assert!(d <= 5.0 * sd, "seed {seed}: marginal defect {d} (σ {sd})");
    }
}

#[test]
fn finite_bound_per_round_tends_to_rate() {
    let h = 0.42;
    let mut last = f64::INFINITY;
    for k in 3..=12 {
        let n = 10u64.pow(k);
        let gap = (h - finite_size_bound(n, h, 1.1, 1e-6).unwrap() / n as f64).abs();
        assert!(gap < last);
        last = gap;
    }
    assert!(last < 1e-9);
}
