use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use serde::{Deserialize, Serialize};

use routedqkd_core::entropy::{binary_entropy, conditional_entropy};
use routedqkd_core::keyrate::{routed_bb84_rate, selftest_rate, sweep, RateGrid, RateInputs, RateRow};
use routedqkd_core::lift::{reduction_chain, IdealSettings, LiftProblem};
use routedqkd_core::overlap::{overlap_report, two_projection_blocks};
use routedqkd_core::protocol::{end_to_end_rate, run_protocol, sift, ProtocolConfig, RateMode, RateOptions};
use routedqkd_core::quantum::random::seeded;
use routedqkd_core::selftest::{dilation_budget, spectral_check_game_operator, MEAS_CONSTANT, STATE_CONSTANT};
use routedqkd_core::switch::equivalence::random_model_b;
use routedqkd_core::switch::{attack_example, convert_model_b_to_a, lhv_membership, Behavior};
use routedqkd_core::{tolerance, DensityOperator, Error, Reflection};

use crate::output::{num, Run};
use crate::{
    DdOptArgs, EntropyCommand, KeyrateArgs, ModelEquivArgs, OverlapArgs, RateModeArg, SelftestArgs, SimulateArgs,
    SrqArgs,
};

pub const EXIT_OK: u8 = 0;
pub const EXIT_IO: u8 = 1;
pub const EXIT_DOMAIN: u8 = 2;
pub const EXIT_REJECTED: u8 = 3;

pub fn exit_code(e: &anyhow::Error) -> u8 {
    for cause in e.chain() {
        if let Some(err) = cause.downcast_ref::<Error>() {
            return match err {
                Error::RejectedTranscript | Error::NoFeasiblePoint { .. } => EXIT_REJECTED,
                _ => EXIT_DOMAIN,
            };
        }
        if cause.is::<toml::de::Error>() || cause.is::<serde_json::Error>() {
            return EXIT_DOMAIN;
        }
        if cause.is::<std::io::Error>() {
            return EXIT_IO;
        }
    }
    EXIT_DOMAIN
}

fn read(path: &Path) -> Result<String> {
    fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))
}

fn read_json<T: serde::de::DeserializeOwned>(path: &Path) -> Result<T> {
    let text = read(path)?;
    serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))
}

fn read_toml<T: serde::de::DeserializeOwned>(path: &Path) -> Result<T> {
    let text = read(path)?;
    toml::from_str(&text).with_context(|| format!("parsing {}", path.display()))
}

fn rows_csv(rows: &[RateRow]) -> String {
    let mut s = String::from("omega,eps,qx,qz,rate,secure\n");
    for r in rows {
        s.push_str(&format!("{},{},{},{},{},{}\n", num(r.omega), num(r.eps), num(r.qx), num(r.qz), num(r.rate), r.secure));
    }
    s
}

#[derive(Serialize)]
struct KeyrateConfig<'a> {
    grid: &'a RateGrid,
    selftest_eps: Option<f64>,
    k2: f64,
}

pub fn keyrate(a: &KeyrateArgs, out: PathBuf) -> Result<u8> {
    let grid = match (&a.grid, a.omega) {
        (Some(p), _) => read_toml::<RateGrid>(p)?,
        (None, Some(w)) => RateGrid { omega: vec![w], eps: vec![a.eps], qx: vec![a.qx], qz: vec![a.qz] },
        (None, None) => bail!(Error::Domain("either --omega or --grid is required".into())),
    };
    let rows = sweep(&grid)?;
    let mut run = Run::new(out, "keyrate")?;
    run.write_text("keyrate.csv", &rows_csv(&rows))?;
    if let [r] = rows.as_slice() {
        let inputs = RateInputs::new(r.omega, r.eps, r.qx, r.qz)?;
        println!("rate {}", num(routed_bb84_rate(&inputs)?));
        println!("secure {}", r.secure);
    } else {
        let secure = rows.iter().filter(|r| r.secure).count();
        println!("{} grid points, {secure} with positive rate", rows.len());
    }
    if let Some(eps) = a.selftest_eps {
        let st = selftest_rate(eps, a.qx, a.qz, a.k2)?;
        println!("selftest_rate {}", num(st.rate));
        println!("selftest_constant {}", num(st.chain.rate_constant));
        run.write_json("keyrate.selftest.json", &st)?;
    }
    run.finish(&KeyrateConfig { grid: &grid, selftest_eps: a.selftest_eps, k2: a.k2 }, None)?;
    Ok(EXIT_OK)
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ChshPoint {
    omega: f64,
    #[serde(default)]
    eps: f64,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct OverlapInput {
    sigma: DensityOperator,
    x: Reflection,
    z: Reflection,
    #[serde(default)]
    chsh: Option<ChshPoint>,
}

#[derive(Serialize)]
struct OverlapOutput {
    block_bound: f64,
    anticommutator_bound: f64,
    chsh_bound: Option<f64>,
    second_moment: f64,
    two_dim_blocks: usize,
    /// `(x, weight)` per distinct block angle.
    angle_weights: Vec<(f64, f64)>,
}

pub fn overlap(a: &OverlapArgs, out: PathBuf) -> Result<u8> {
    let input: OverlapInput = read_json(&a.input)?;
    let p = input.z.pvm().effect(0).clone();
    let q = input.x.pvm().effect(0).clone();
    let blocks = two_projection_blocks(&p, &q, &input.sigma)?;
    let report = overlap_report(&p, &q, &input.sigma, input.chsh.as_ref().map(|c| (c.omega, c.eps)))?;
    let o = OverlapOutput {
        block_bound: report.block_bound,
        anticommutator_bound: report.anticommutator_bound,
        chsh_bound: report.chsh_bound,
        second_moment: blocks.second_moment(),
        two_dim_blocks: blocks.two_dim_count(),
        angle_weights: blocks.angle_weights(),
    };
    println!("block_bound {}", num(o.block_bound));
    println!("anticommutator_bound {}", num(o.anticommutator_bound));
    if let Some(c) = o.chsh_bound {
        println!("chsh_bound {}", num(c));
    }
    let mut run = Run::new(out, "overlap")?;
    run.write_json("overlap.json", &o)?;
    run.finish(&input, None)?;
    Ok(EXIT_OK)
}

#[derive(Serialize)]
struct SelftestOutput {
    epsilon: f64,
    delta_meas: f64,
    delta_state: f64,
    meas_constant: u32,
    state_constant: u32,
    chain: routedqkd_core::selftest::DerivationChain,
    game_operator_spectrum: [f64; 3],
}

pub fn selftest_constants(a: &SelftestArgs, out: PathBuf) -> Result<u8> {
    let b = dilation_budget(a.epsilon)?;
    let c = b.chain;
    let table: [(&str, f64); 14] = [
        ("epsilon", b.epsilon),
        ("fourth_root_128", c.fourth_root_128),
        ("one_plus_sqrt2", c.one_plus_sqrt2),
        ("single_operator", c.single_operator),
        ("reflection", c.reflection),
        ("delta_coefficient", c.delta),
        ("gap", c.gap),
        ("state_bound", c.state_bound),
        ("meas_bound", c.meas_bound),
        ("state_bound_sqrt2", c.state_bound_sqrt2),
        ("meas_bound_sqrt2", c.meas_bound_sqrt2),
        ("delta", b.delta),
        ("delta_meas", b.delta_meas),
        ("delta_state", b.delta_state),
    ];
    for (k, v) in table {
        println!("{k:<20} {}", num(v));
    }
    println!("{:<20} {MEAS_CONSTANT}", "meas_constant");
    println!("{:<20} {STATE_CONSTANT}", "state_constant");
    let o = SelftestOutput {
        epsilon: b.epsilon,
        delta_meas: b.delta_meas,
        delta_state: b.delta_state,
        meas_constant: MEAS_CONSTANT,
        state_constant: STATE_CONSTANT,
        chain: c,
        game_operator_spectrum: spectral_check_game_operator(),
    };
    let mut run = Run::new(out, "selftest-constants")?;
    run.write_json("selftest-constants.json", &o)?;
    run.finish(&serde_json::json!({ "epsilon": a.epsilon }), None)?;
    Ok(EXIT_OK)
}

pub fn attack_demo(out: PathBuf) -> Result<u8> {
    let demo = attack_example()?;
    let d = &demo.diagnostics;
    println!("chsh_t1 {}", num(d.chsh_t1));
    println!("key_entropy_t0 {}", num(d.key_entropy_t0));
    println!("marginal_defect {}", num(d.marginal_defect));
    let mut run = Run::new(out, "attack-demo")?;
    run.write_json("attack-demo.json", d)?;
    run.finish(&serde_json::json!({}), None)?;
    Ok(EXIT_OK)
}

#[derive(Serialize)]
struct ModelEquivConfig {
    instances: usize,
    dim: usize,
    branches: usize,
    seed: u64,
}

pub fn model_equiv(a: &ModelEquivArgs, out: PathBuf) -> Result<u8> {
    if a.dim < 1 || a.branches < 1 || a.instances < 1 {
        bail!(Error::Domain("instances, dim and branches must be positive".into()));
    }
    let mut csv = String::from("instance,error,max_branch_error,marginal_defect\n");
    let mut worst: f64 = 0.0;
    for k in 0..a.instances {
        let mut rng = seeded(a.seed.wrapping_add(k as u64));
        let m = random_model_b(a.branches, a.dim, &mut rng);
        let c = convert_model_b_to_a(&m.gammas, &m.tau, &m.probs)?;
        let branch = c.branch_errors.iter().copied().fold(0.0, f64::max);
        worst = worst.max(c.error).max(branch);
        csv.push_str(&format!("{k},{},{},{}\n", num(c.error), num(branch), num(c.marginal_defect)));
    }
    println!("instances {}", a.instances);
    println!("max_reconstruction_error {}", num(worst));
    let mut run = Run::new(out, "model-equiv")?;
    run.write_text("model-equiv.csv", &csv)?;
    let cfg = ModelEquivConfig { instances: a.instances, dim: a.dim, branches: a.branches, seed: a.seed };
    run.finish(&cfg, Some(a.seed))?;
    Ok(if worst <= tolerance::RECONSTRUCTION { EXIT_OK } else { EXIT_REJECTED })
}

pub fn srq_check(a: &SrqArgs, out: PathBuf) -> Result<u8> {
    let behavior: Behavior = match (&a.behavior, a.isotropic) {
        (Some(p), _) => read_json(p)?,
        (None, Some(v)) => Behavior::isotropic(v)?,
        (None, None) => bail!(Error::Domain("either --behavior or --isotropic is required".into())),
    };
    let r = lhv_membership(&behavior)?;
    println!("local {}", r.feasible);
    println!("facet_value {}", num(r.facet_value));
    println!("residual {}", num(r.residual));
    let mut run = Run::new(out, "srq-check")?;
    run.write_json("srq-check.json", &r)?;
    run.finish(&behavior, None)?;
    Ok(EXIT_OK)
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
enum SettingsName {
    Chsh,
    Bb84,
}

fn default_restarts() -> usize {
    routedqkd_core::lift::DEFAULT_RESTARTS
}

fn default_settings() -> SettingsName {
    SettingsName::Chsh
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct DdOptConfig {
    #[serde(default = "default_settings")]
    settings: SettingsName,
    #[serde(default)]
    eps_a: f64,
    #[serde(default)]
    eps_b: f64,
    #[serde(default)]
    key_setting: usize,
    #[serde(default = "default_restarts")]
    restarts: usize,
    #[serde(default)]
    seed: u64,
    /// Explicit table, `[behavior] probs = [...]` indexed `[x][y][a][b]`.
    #[serde(default)]
    behavior: Option<Behavior>,
    /// Shorthand for the BB84 statistics of a Bell-diagonal state at this QBER.
    #[serde(default)]
    bb84_qber: Option<f64>,
}

#[derive(Serialize)]
struct DdOptOutput {
    entropy: f64,
    relaxed_entropy: f64,
    continuity_term: f64,
    eps_prob: f64,
    residual: f64,
    feasible_restarts: usize,
    restarts: usize,
    state: DensityOperator,
}

pub fn dd_opt(a: &DdOptArgs, out: PathBuf) -> Result<u8> {
    let mut cfg: DdOptConfig = read_toml(&a.config)?;
    if let Some(s) = a.seed {
        cfg.seed = s;
    }
    if let Some(r) = a.restarts {
        cfg.restarts = r;
    }
    let (target, settings) = match (&cfg.behavior, cfg.bb84_qber) {
        (Some(b), None) => {
            let s = match cfg.settings {
                SettingsName::Chsh => IdealSettings::Chsh,
                SettingsName::Bb84 => IdealSettings::Bb84,
            };
            (b.clone(), s)
        }
        (None, Some(q)) => (LiftProblem::bb84_symmetric(q, 0.0)?.target, IdealSettings::Bb84),
        _ => bail!(Error::Domain("give exactly one of `behavior` and `bb84_qber`".into())),
    };
    let r = reduction_chain(&target, settings, cfg.eps_a, cfg.eps_b, cfg.key_setting, cfg.restarts, cfg.seed)?;
    println!("lifted_entropy {}", num(r.value));
    println!("relaxed_entropy {}", num(r.relaxed.entropy));
    println!("continuity_term {}", num(r.f_term));
    println!("residual {}", num(r.relaxed.residual));
    let o = DdOptOutput {
        entropy: r.value,
        relaxed_entropy: r.relaxed.entropy,
        continuity_term: r.f_term,
        eps_prob: r.eps_prob,
        residual: r.relaxed.residual,
        feasible_restarts: r.relaxed.feasible_restarts,
        restarts: r.relaxed.restarts,
        state: r.relaxed.state,
    };
    let mut run = Run::new(out, "dd-opt")?;
    run.write_json("dd-opt.json", &o)?;
    run.finish(&cfg, Some(cfg.seed))?;
    Ok(EXIT_OK)
}

#[derive(Serialize)]
struct SimulateReport<'a> {
    config: &'a ProtocolConfig,
    accepted: bool,
    rounds: u64,
    tally: &'a routedqkd_core::protocol::Tally,
    estimates: &'a routedqkd_core::protocol::Estimates,
    sift: routedqkd_core::protocol::SiftSummary,
    rate: Option<routedqkd_core::protocol::RateReport>,
}

pub fn simulate(a: &SimulateArgs, out: PathBuf) -> Result<u8> {
    let mut cfg: ProtocolConfig = match &a.config {
        Some(p) => read_toml(p)?,
        None => ProtocolConfig::default(),
    };
    if let Some(s) = a.seed {
        cfg.seed = s;
    }
    if let Some(w) = a.workers {
        cfg.workers = w;
    }
    let t = run_protocol(&cfg)?;
    let s = sift(&t, &cfg)?;
    let rate = if a.rate && t.accepted {
        let mode = match a.rate_mode {
            RateModeArg::Asymptotic => RateMode::Asymptotic,
            RateModeArg::Empirical => RateMode::Empirical,
        };
        let opts = RateOptions { mode, restarts: a.restarts, seed: cfg.seed, ..Default::default() };
        Some(end_to_end_rate(&t, &cfg, &opts)?)
    } else {
        None
    };

    println!("rounds {}", t.rounds);
    println!("accepted {}", t.accepted);
    println!("key_rounds {}", t.tally.key_rounds);
    let e = &t.estimates;
    for (k, v) in [("qber_x", e.qber_x), ("qber_z", e.qber_z), ("chsh_af", e.chsh_af), ("chsh_bg", e.chsh_bg)] {
        println!("{k} {}", v.map_or_else(|| "n/a".into(), num));
    }
    if let Some(r) = &rate {
        println!("rate {}", num(r.rate));
        println!("rate_per_round {}", num(r.rate_per_round));
    }

    let mut run = Run::new(out, "simulate")?;
    run.write_text("simulate.csv", &t.statistics_csv())?;
    let report = SimulateReport {
        config: &cfg,
        accepted: t.accepted,
        rounds: t.rounds,
        tally: &t.tally,
        estimates: &t.estimates,
        sift: s,
        rate,
    };
    run.write_json("simulate.json", &report)?;
    run.finish(&cfg, Some(cfg.seed))?;
    if t.accepted {
        Ok(EXIT_OK)
    } else {
        eprintln!("transcript rejected by parameter estimation");
        Ok(EXIT_REJECTED)
    }
}

pub fn entropy(c: &EntropyCommand, out: PathBuf) -> Result<u8> {
    let mut run = Run::new(out, "entropy")?;
    match c {
        EntropyCommand::Binary { q } => {
            let h = binary_entropy(*q)?;
            println!("binary_entropy {}", num(h));
            run.write_json("entropy.json", &serde_json::json!({ "q": q, "binary_entropy": h }))?;
            run.finish(&serde_json::json!({ "kind": "binary", "q": q }), None)?;
        }
        EntropyCommand::Conditional { state, a } => {
            let rho: DensityOperator = read_json(state)?;
            let h = conditional_entropy(&rho, a)?;
            println!("conditional_entropy {}", num(h));
            run.write_json("entropy.json", &serde_json::json!({ "a": a, "conditional_entropy": h }))?;
            run.finish(&serde_json::json!({ "kind": "conditional", "a": a, "state": rho }), None)?;
        }
    }
    Ok(EXIT_OK)
}
