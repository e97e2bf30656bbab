//! Acceptance suite. Each criterion is its own test and writes one
//! `[PASS]`/`[FAIL]` line straight to stderr, so the verdicts show up even
//! when libtest captures output.

use std::f64::consts::{FRAC_1_SQRT_2, SQRT_2};
use std::io::Write;

use rand::Rng;
use routedqkd_core::keyrate::{routed_bb84_rate, RateInputs};
use routedqkd_core::lift::{
    random_dilation_instance, solve_relaxed_opt, verify_compression, verify_entropy_transfer, LiftProblem,
    MARGINAL_TOL,
};
use routedqkd_core::overlap::{
    anticommutator_second_moment, cstar_anticommutator_bound, cstar_block_bound, random_projection_pair,
    two_projection_blocks,
};
use routedqkd_core::protocol::{finite_size_bound, finite_size_penalty, run_protocol, Noise, ProtocolConfig};
use routedqkd_core::quantum::random::{random_density, random_projector, seeded};
use routedqkd_core::selftest::{
    anticommutator_defect, chsh_deficit, dilation_budget, random_near_ideal_strategy, sos_defects,
    spectral_check_game_operator,
};
use routedqkd_core::switch::equivalence::random_model_b;
use routedqkd_core::switch::{attack_example, convert_model_b_to_a, lhv_membership, Behavior};
use routedqkd_core::{BinaryPvm, DensityOperator};

fn verdict(n: u32, title: &str, ok: bool, detail: String) {
    let tag = if ok { "PASS" } else { "FAIL" };
    let _ = writeln!(std::io::stderr(), "[{tag}] criterion {n:>2}: {title} ({detail})");
    assert!(ok, "criterion {n} failed: {detail}");
}

/// Binary entropy computed from scratch, independent of the library.
fn h2(q: f64) -> f64 {
    if q <= 0.0 || q >= 1.0 {
        return 0.0;
    }
    -q * q.log2() - (1.0 - q) * (1.0 - q).log2()
}

#[test]
fn criterion_01_keyrate_golden_values() {
    let rate = |w: f64, e: f64, qx: f64, qz: f64| routed_bb84_rate(&RateInputs::new(w, e, qx, qz).unwrap()).unwrap();
    let tsirelson = 2.0 * SQRT_2;
    let top = rate(tsirelson, 0.0, 0.0, 0.0);
    let local = rate(2.0, 0.0, 0.0, 0.0);
    let mut worst: f64 = 0.0;
    for k in 0..=11 {
        let q = k as f64 / 100.0;
        worst = worst.max((rate(tsirelson, 0.0, q, q) - (1.0 - 2.0 * h2(q))).abs());
    }
    let (mut lo, mut hi) = (0.05, 0.2);
    for _ in 0..100 {
        let mid = 0.5 * (lo + hi);
        if rate(tsirelson, 0.0, mid, mid) > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let threshold = 0.5 * (lo + hi);
    let ok = (top - 1.0).abs() <= 1e-12
        && local.abs() <= 1e-12
        && worst <= 1e-12
        && (threshold - 0.1100).abs() <= 1e-4;
    verdict(
        1,
        "key-rate golden values",
        ok,
        format!("r(2√2)={top:.3e}, r(2)={local:.3e}, max |Δ|={worst:.2e}, threshold={threshold:.6}"),
    );
}

#[test]
fn criterion_02_selftest_constants() {
    let b = dilation_budget(1e-4).unwrap();
    // chain rebuilt here: ⁴√128, 4(1+√2)⁴√128, Δ = 1/(2√2)
    let r = 128f64.powf(0.25);
    let delta = 4.0 * (1.0 + SQRT_2) * r;
    let gap = 1.0 / (2.0 * SQRT_2);
    let state = ((delta + 1.0) / gap).ceil();
    let meas = (2.0 * (1.0 + SQRT_2) * r + (delta + 1.0) / gap).ceil();
    let chain_ok = state == 95.0 && meas == 111.0;
    let budget_ok = (b.delta_meas - 1.11).abs() <= 1e-12 && (b.delta_state - 0.95).abs() <= 1e-12;
    let spectrum = spectral_check_game_operator();
    let want = [0.5 + 1.0 / (2.0 * SQRT_2), 0.5, 0.5 - 1.0 / (2.0 * SQRT_2)];
    let spectrum_err = spectrum.iter().zip(want).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
    verdict(
        2,
        "self-test constants",
        chain_ok && budget_ok && spectrum_err <= 1e-12,
        format!(
            "budget=({:.12}, {:.12}), chain ceilings=({meas}, {state}), spectrum err={spectrum_err:.2e}",
            b.delta_meas, b.delta_state
        ),
    );
}

#[test]
fn criterion_03_two_projection_engine() {
    let mut rng = seeded(3);
    let (mut res, mut trace, mut order) = (0.0f64, 0.0f64, f64::NEG_INFINITY);
    for i in 0..1000 {
        let d = 2 + i % 7;
        let (p, q) = random_projection_pair(d, &mut rng);
        let rank = rng.random_range(1..=d);
        let sigma = random_density(vec![d], rank, &mut rng);
        let blocks = two_projection_blocks(&p, &q, &sigma).unwrap();
        let z = BinaryPvm::from_projector(p).unwrap().observable();
        let x = BinaryPvm::from_projector(q).unwrap().observable();
        res = res.max(blocks.resolution_defect());
        let m2 = anticommutator_second_moment(&sigma, &x, &z).unwrap();
        trace = trace.max((m2 - blocks.second_moment()).abs());
        let gap = cstar_block_bound(&blocks) - cstar_anticommutator_bound(&sigma, &x, &z).unwrap();
        order = order.max(gap);
    }
    verdict(
        3,
        "two-projection engine",
        res <= 1e-9 && trace <= 1e-8 && order <= 1e-10,
        format!("resolution {res:.2e}, trace identity {trace:.2e}, max(block − anticommutator) {order:.2e}"),
    );
}

#[test]
fn criterion_04_sos_defects() {
    let r = 128f64.powf(0.25);
    let mut rng = seeded(4);
    let (mut n, mut draws) = (0, 0);
    let (mut sos_slack, mut anti_slack) = (f64::INFINITY, f64::INFINITY);
    while n < 200 {
        draws += 1;
        assert!(draws < 100_000, "could not draw enough near-ideal strategies");
        let spread = rng.random_range(0.0..0.15);
        let s = random_near_ideal_strategy(spread, &mut rng);
        let eps = chsh_deficit(&s);
        if !(0.0..=0.05).contains(&eps) {
            continue;
        }
        n += 1;
        let bound = r * eps.sqrt();
        for d in sos_defects(&s) {
            sos_slack = sos_slack.min(bound + 1e-9 - d);
        }
        anti_slack = anti_slack.min(2.0 * (1.0 + SQRT_2) * bound + 1e-9 - anticommutator_defect(&s));
    }
    verdict(
        4,
        "SOS defect bounds",
        sos_slack >= 0.0 && anti_slack >= 0.0,
        format!("{n} strategies, min slack sos {sos_slack:.3e}, anticommutator {anti_slack:.3e}"),
    );
}

#[test]
fn criterion_05_model_equivalence() {
    let mut worst: f64 = 0.0;
    for seed in 0..100 {
        let mut rng = seeded(5000 + seed);
        let m = random_model_b(2, 2, &mut rng);
        let c = convert_model_b_to_a(&m.gammas, &m.tau, &m.probs).unwrap();
        worst = worst.max(c.error);
        for e in &c.branch_errors {
            worst = worst.max(*e);
        }
    }
    verdict(5, "model equivalence", worst <= 1e-7, format!("max reconstruction error {worst:.2e}"));
}

#[test]
fn criterion_06_attack_demo() {
    let d = attack_example().unwrap().diagnostics;
    let ok = (d.chsh_t1 - 2.0 * SQRT_2).abs() <= 1e-10
        && d.key_entropy_t0.abs() <= 1e-9
        && (d.marginal_defect - 1.0).abs() <= 1e-10;
    verdict(
        6,
        "switch attack",
        ok,
        format!("CHSH {:.12}, H(Z|E) {:.2e}, marginal defect {:.12}", d.chsh_t1, d.key_entropy_t0, d.marginal_defect),
    );
}

const EPS_GRID: [f64; 4] = [0.0, 0.01, 0.02, 0.05];

fn dilation_family() -> impl Iterator<Item = routedqkd_core::lift::DilationInstance> {
    (0..500u64).map(|k| {
        let ea = EPS_GRID[(k % 4) as usize];
        let eb = EPS_GRID[((k / 4) % 4) as usize];
        let mut rng = seeded(7000 + k);
        random_dilation_instance(ea, eb, &mut rng).unwrap()
    })
}

#[test]
fn criterion_07_compression() {
    let mut worst_slack = f64::INFINITY;
    let mut worst_ratio: f64 = 0.0;
    for inst in dilation_family() {
        let r = verify_compression(&inst.alice, &inst.bob, &inst.rho_ab, MARGINAL_TOL).unwrap();
        worst_slack = worst_slack.min(r.bound + 1e-9 - r.deviation);
        if r.bound > 0.0 {
            worst_ratio = worst_ratio.max(r.deviation / r.bound);
        }
    }
    verdict(
        7,
        "compression bound",
        worst_slack >= 0.0,
        format!("500 cases, min slack {worst_slack:.3e}, max deviation/bound {worst_ratio:.3}"),
    );
}

#[test]
fn criterion_08_entropy_transfer() {
    let mut min_slack = f64::INFINITY;
    let mut all = true;
    for inst in dilation_family() {
        for xt in 0..2 {
            let r = verify_entropy_transfer(&inst.alice, &inst.rho_ab, xt, MARGINAL_TOL).unwrap();
            min_slack = min_slack.min(r.slack);
            all &= r.holds;
        }
    }
    verdict(8, "entropy transfer", all, format!("1000 checks, min slack {min_slack:.3e}"));
}

#[test]
fn criterion_09_relaxed_optimization() {
    let mut worst: f64 = 0.0;
    for q in [0.0, 0.02, 0.05, 0.08] {
        let p = LiftProblem::bb84_symmetric(q, 0.0).unwrap();
        let s = solve_relaxed_opt(&p, 64, 2024).unwrap();
        worst = worst.max((s.entropy - (1.0 - h2(q))).abs());
    }
    let grid = [0.0, 0.025, 0.05, 0.075, 0.1];
    let values: Vec<f64> = grid
        .iter()
        .map(|&e| solve_relaxed_opt(&LiftProblem::bb84_symmetric(0.05, e).unwrap(), 64, 2024).unwrap().entropy)
        .collect();
    let monotone = values.windows(2).all(|w| w[1] <= w[0]);
    verdict(
        9,
        "relaxed optimization",
        worst <= 5e-3 && monotone,
        format!("max |H − (1−h₂(Q))| {worst:.2e}, eps grid values {values:.4?}"),
    );
}

#[test]
fn criterion_10_protocol_simulation() {
    let target = 0.5 + 0.5 * FRAC_1_SQRT_2;
    let base = ProtocolConfig { rounds: 1_000_000, gamma: 0.5, seed: 10, ..Default::default() };
    let t = run_protocol(&base).unwrap();
    let e = &t.estimates;
    let z_af = (e.win_af.unwrap() - target).abs() / e.win_af_sigma.unwrap();
    let z_bg = (e.win_bg.unwrap() - target).abs() / e.win_bg_sigma.unwrap();
    let noiseless_qber = t.tally.key_errors;

    let noisy_cfg = ProtocolConfig { noise: Noise { depolarizing_q: 0.05, local_q: 0.0 }, ..base.clone() };
    let noisy = run_protocol(&noisy_cfg).unwrap();
    let closed = 0.05 / 2.0;
    let n_key = noisy.tally.key_rounds as f64;
    let qx = noisy.estimates.qber_x.unwrap();
    let z_x = (qx - closed).abs() / (closed * (1.0 - closed) / n_key).sqrt();
    let qz = noisy.estimates.qber_z.unwrap();
    let z_z = (qz - closed).abs() / noisy.estimates.qber_z_sigma.unwrap();

    let one = run_protocol(&ProtocolConfig { workers: 1, ..noisy_cfg.clone() }).unwrap();
    let eight = run_protocol(&ProtocolConfig { workers: 8, ..noisy_cfg.clone() }).unwrap();
    let identical = one == eight && serde_json::to_vec(&one).unwrap() == serde_json::to_vec(&eight).unwrap();

    verdict(
        10,
        "protocol simulation",
        z_af <= 3.0 && z_bg <= 3.0 && noiseless_qber == 0 && z_x <= 3.0 && z_z <= 3.0 && identical,
        format!(
            "win z-scores AF {z_af:.2} BG {z_bg:.2}, noiseless key errors {noiseless_qber}, \
             Q_X {qx:.5} (z {z_x:.2}), Q_Z {qz:.5} (z {z_z:.2}), 1 vs 8 workers identical {identical}"
        ),
    );
}

#[test]
fn criterion_11_lhv_membership() {
    let ideal = lhv_membership(&Behavior::ideal_chsh()).unwrap();
    let edge = lhv_membership(&Behavior::isotropic(FRAC_1_SQRT_2).unwrap()).unwrap();
    let mut rng = seeded(11);
    let mut products_ok = true;
    for _ in 0..200 {
        let pvms = |rng: &mut rand_chacha::ChaCha8Rng| -> Vec<BinaryPvm> {
            (0..2)
                .map(|_| {
                    let rank = rng.random_range(0..=2);
                    BinaryPvm::from_projector(random_projector(2, rank, rng)).unwrap()
                })
                .collect()
        };
        let ra = random_density(vec![2], rng.random_range(1..=2), &mut rng);
        let rb = random_density(vec![2], rng.random_range(1..=2), &mut rng);
        let rho: DensityOperator = ra.tensor(&rb);
        let a = pvms(&mut rng);
        let b = pvms(&mut rng);
        let beh = Behavior::from_state(&rho, &a, &b).unwrap();
        products_ok &= lhv_membership(&beh).unwrap().feasible;
    }
    let ok = !ideal.feasible
        && (ideal.facet_value - 2.0 * SQRT_2).abs() <= 1e-9
        && edge.feasible
        && (edge.facet_value - 2.0).abs() <= 1e-8
        && products_ok;
    verdict(
        11,
        "local-model membership",
        ok,
        format!(
            "ideal facet {:.12} (feasible {}), v=1/√2 facet {:.12} (feasible {}), 200 products accepted {products_ok}",
            ideal.facet_value, ideal.feasible, edge.facet_value, edge.feasible
        ),
    );
}

#[test]
fn criterion_12_finite_size_formula() {
    let mut exact = true;
    let mut worst: f64 = 0.0;
    for &n in &[1u64, 1_000, 1_000_000, 1_000_000_000] {
        for &h in &[0.0, 0.1, 0.5, 0.987] {
            for &alpha in &[1.01, 1.05, 1.5, 2.0, 5.0] {
                exact &= finite_size_bound(n, h, alpha, 1.0).unwrap() == n as f64 * h;
                for &p in &[1.0f64, 0.5, 1e-3, 1e-10, 1e-30] {
                    let want = alpha / (alpha - 1.0) * (1.0 / p).log2();
                    let got = finite_size_penalty(alpha, p).unwrap();
                    worst = worst.max((got - want).abs());
                }
            }
        }
    }
    verdict(
        12,
        "finite-size formula",
        exact && worst <= 1e-12,
        format!("unit acceptance exact {exact}, max penalty error {worst:.2e}"),
    );
}
