//! Monte-Carlo simulation of the four-party spot-checking protocol.

use std::f64::consts::{FRAC_PI_2, FRAC_PI_4};

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::config::ProtocolConfig;
use crate::error::{Error, Result};
use crate::quantum::{random, Reflection};

const CHUNK: u64 = 1 << 14;

/// Measurement angles in the X–Z plane, `O(φ) = cos φ Z + sin φ X`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MeasurementTable {
    pub alice: Vec<f64>,
    pub bob: Vec<f64>,
    pub fred: Vec<f64>,
    pub george: Vec<f64>,
}

impl MeasurementTable {
    /// Alice `(X, Z)`, Bob `((X+Z)/√2, (X−Z)/√2, X)` with the last entry as
    /// the generation setting, Fred like Bob's test settings, George `(X, Z)`.
    pub fn standard() -> Self {
        Self {
            alice: vec![FRAC_PI_2, 0.0],
            bob: vec![FRAC_PI_4, 3.0 * FRAC_PI_4, FRAC_PI_2],
            fred: vec![FRAC_PI_4, 3.0 * FRAC_PI_4],
            george: vec![FRAC_PI_2, 0.0],
        }
    }

    pub fn observables(angles: &[f64]) -> Vec<Reflection> {
        angles.iter().map(|&p| Reflection::xz_plane(p)).collect()
    }
}

/// Which pair a test statistic belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Link {
    /// Alice with Fred (short).
    Af,
    /// Bob with George (short); Bob's input plays the first role.
    Bg,
    /// Alice with Bob (long).
    Ab,
}

impl Link {
    pub const ALL: [Link; 3] = [Link::Af, Link::Bg, Link::Ab];

    pub fn name(self) -> &'static str {
        match self {
            Link::Af => "af",
            Link::Bg => "bg",
            Link::Ab => "ab",
        }
    }
}

/// Expected statistics of the honest source.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct HonestModel {
    pub long_visibility: f64,
    pub short_visibility: f64,
}

impl HonestModel {
    pub fn from_config(cfg: &ProtocolConfig) -> Self {
        Self { long_visibility: cfg.long_visibility(), short_visibility: cfg.short_visibility() }
    }

    /// `⟨O_x ⊗ O_y⟩` on the given link.
    pub fn correlator(&self, link: Link, x: usize, y: usize) -> f64 {
        let t = MeasurementTable::standard();
        let (v, p1, p2) = match link {
            Link::Af => (self.short_visibility, t.alice[x], t.fred[y]),
            Link::Bg => (self.short_visibility, t.bob[x], t.george[y]),
            Link::Ab => (self.long_visibility, t.alice[x], t.bob[y]),
        };
        v * (p1 - p2).cos()
    }

    pub fn p(&self, link: Link, a: usize, b: usize, x: usize, y: usize) -> f64 {
        let s = if a == b { 1.0 } else { -1.0 };
        (1.0 + s * self.correlator(link, x, y)) / 4.0
    }

    pub fn chsh(&self, link: Link) -> f64 {
        self.correlator(link, 0, 0) + self.correlator(link, 0, 1) + self.correlator(link, 1, 0)
            - self.correlator(link, 1, 1)
    }

    /// Uniform-input CHSH winning probability `½ + ω/8`.
    pub fn win(&self, link: Link) -> f64 {
        0.5 + self.chsh(link) / 8.0
    }

    /// Raw-key error rate of the generation rounds.
    pub fn qber_x(&self) -> f64 {
        (1.0 - self.long_visibility) / 2.0
    }

    /// Z-basis error rate of the long-link state.
    pub fn qber_z(&self) -> f64 {
        (1.0 - self.long_visibility) / 2.0
    }
}

/// Joint outcome counts indexed `[x][y][2a + b]`.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct PairCounts {
    pub counts: [[[u64; 4]; 2]; 2],
}

impl PairCounts {
    fn add(&mut self, x: usize, y: usize, a: usize, b: usize) {
        self.counts[x][y][2 * a + b] += 1;
    }

    fn merge(&mut self, o: &PairCounts) {
        for x in 0..2 {
            for y in 0..2 {
                for k in 0..4 {
                    self.counts[x][y][k] += o.counts[x][y][k];
                }
            }
        }
    }

    pub fn setting_total(&self, x: usize, y: usize) -> u64 {
        self.counts[x][y].iter().sum()
    }

    pub fn total(&self) -> u64 {
        (0..2).flat_map(|x| (0..2).map(move |y| (x, y))).map(|(x, y)| self.setting_total(x, y)).sum()
    }

    pub fn frequency(&self, a: usize, b: usize, x: usize, y: usize) -> Option<f64> {
        let n = self.setting_total(x, y);
        (n > 0).then(|| self.counts[x][y][2 * a + b] as f64 / n as f64)
    }

    pub fn correlator(&self, x: usize, y: usize) -> Option<f64> {
        let n = self.setting_total(x, y);
        (n > 0).then(|| {
            let c = &self.counts[x][y];
            (c[0] + c[3]) as f64 / n as f64 - (c[1] + c[2]) as f64 / n as f64
        })
    }

    pub fn chsh(&self) -> Option<f64> {
        Some(self.correlator(0, 0)? + self.correlator(0, 1)? + self.correlator(1, 0)? - self.correlator(1, 1)?)
    }

    /// Per-setting averaged winning frequency and its binomial σ.
    pub fn win(&self) -> Option<(f64, f64)> {
        let mut w = 0.0;
        let mut var = 0.0;
        for x in 0..2 {
            for y in 0..2 {
                let n = self.setting_total(x, y);
                if n == 0 {
                    return None;
                }
                let c = &self.counts[x][y];
                let wins = if x & y == 1 { c[1] + c[2] } else { c[0] + c[3] };
                let p = wins as f64 / n as f64;
                w += p / 4.0;
                var += p * (1.0 - p) / (16.0 * n as f64);
            }
        }
        Some((w, var.sqrt()))
    }
}

/// Aggregated round data.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Tally {
    pub key_rounds: u64,
    pub test_rounds: u64,
    pub key_errors: u64,
    pub af: PairCounts,
    pub bg: PairCounts,
    pub ab: PairCounts,
    /// Test-round switch settings `[t_a][t_b]`.
    pub switch_counts: [[u64; 2]; 2],
    /// Alice's outcome counts in test rounds, `[x][t_a][a]`.
    pub alice_marginal: [[[u64; 2]; 2]; 2],
    /// Fred and George in generation rounds, `[party][input][outcome]`.
    /// Recorded but not used by any estimate.
    pub generation_partners: [[[u64; 2]; 2]; 2],
}

impl Tally {
    fn merge(mut self, o: Tally) -> Tally {
        self.key_rounds += o.key_rounds;
        self.test_rounds += o.test_rounds;
        self.key_errors += o.key_errors;
        self.af.merge(&o.af);
        self.bg.merge(&o.bg);
        self.ab.merge(&o.ab);
        for i in 0..2 {
            for j in 0..2 {
                self.switch_counts[i][j] += o.switch_counts[i][j];
                for k in 0..2 {
                    self.alice_marginal[i][j][k] += o.alice_marginal[i][j][k];
                    self.generation_partners[i][j][k] += o.generation_partners[i][j][k];
                }
            }
        }
        self
    }

    pub fn pair(&self, link: Link) -> &PairCounts {
        match link {
            Link::Af => &self.af,
            Link::Bg => &self.bg,
            Link::Ab => &self.ab,
        }
    }
}

fn bit(rng: &mut ChaCha8Rng, p_zero: f64) -> usize {
    usize::from(!rng.random_bool(p_zero))
}

/// Outcomes of a maximally entangled pair with correlator `e`.
fn correlated_pair(rng: &mut ChaCha8Rng, e: f64) -> (usize, usize) {
    let a = bit(rng, 0.5);
    let same = rng.random_bool(((1.0 + e) / 2.0).clamp(0.0, 1.0));
    (a, if same { a } else { 1 - a })
}

/// Randomness of round `i`: stream `i` of the configured seed. The first
/// draw decides between generation (`T = 0`) and test (`T = 1`).
fn round_rng(cfg: &ProtocolConfig, i: u64) -> (ChaCha8Rng, bool) {
    let mut rng = random::stream(cfg.seed, i);
    let test = rng.random_bool(cfg.gamma);
    (rng, test)
}

fn simulate_round(cfg: &ProtocolConfig, model: &HonestModel, i: u64, t: &mut Tally) {
    let (mut rng, test) = round_rng(cfg, i);
    if !test {
        // generation: Alice X, Bob y = 2, both switches on the long path
        let (a, b) = correlated_pair(&mut rng, model.correlator(Link::Ab, 0, 2));
        t.key_rounds += 1;
        t.key_errors += u64::from(a != b);
        let xf = bit(&mut rng, cfg.p_f);
        let of = bit(&mut rng, 0.5);
        let yg = bit(&mut rng, cfg.p_g);
        let og = bit(&mut rng, 0.5);
        t.generation_partners[0][xf][of] += 1;
        t.generation_partners[1][yg][og] += 1;
        return;
    }
    t.test_rounds += 1;
    let x = bit(&mut rng, cfg.p_a);
    let xf = bit(&mut rng, cfg.p_f);
    let y = bit(&mut rng, cfg.p_b);
    let yg = bit(&mut rng, cfg.p_g);
    let ta = bit(&mut rng, cfg.t_a);
    let tb = bit(&mut rng, cfg.t_b);
    t.switch_counts[ta][tb] += 1;
    let a = match (ta, tb) {
        (0, 0) => {
            let (a, b) = correlated_pair(&mut rng, model.correlator(Link::Ab, x, y));
            t.ab.add(x, y, a, b);
            a
        }
        _ => {
            let a = if ta == 1 {
                let (a, f) = correlated_pair(&mut rng, model.correlator(Link::Af, x, xf));
                t.af.add(x, xf, a, f);
                a
            } else {
                bit(&mut rng, 0.5)
            };
            if tb == 1 {
                let (b, g) = correlated_pair(&mut rng, model.correlator(Link::Bg, y, yg));
                t.bg.add(y, yg, b, g);
            }
            a
        }
    };
    t.alice_marginal[x][ta][a] += 1;
}

fn tally_range(cfg: &ProtocolConfig, model: &HonestModel, start: u64, end: u64) -> Tally {
    let mut t = Tally::default();
    for i in start..end {
        simulate_round(cfg, model, i, &mut t);
    }
    t
}

/// One tracked statistic of the acceptance test.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Statistic {
    pub name: String,
    pub count: u64,
    pub estimate: Option<f64>,
    pub ideal: f64,
    pub sigma: f64,
}

impl Statistic {
    pub fn within(&self, tol: f64) -> bool {
        self.estimate.is_some_and(|e| (e - self.ideal).abs() <= tol)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Estimates {
    pub qber_x: Option<f64>,
    pub qber_z: Option<f64>,
    pub qber_z_sigma: Option<f64>,
    pub chsh_af: Option<f64>,
    pub chsh_bg: Option<f64>,
    pub chsh_ab: Option<f64>,
    pub win_af: Option<f64>,
    pub win_af_sigma: Option<f64>,
    pub win_bg: Option<f64>,
    pub win_bg_sigma: Option<f64>,
    /// `max_x |P(a=0|x, T_A=0) − P(a=0|x, T_A=1)|` over test rounds.
    pub marginal_defect: Option<f64>,
    pub marginal_defect_sigma: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProtocolTranscript {
    pub rounds: u64,
    pub tally: Tally,
    pub estimates: Estimates,
    pub statistics: Vec<Statistic>,
    pub accepted: bool,
}

impl ProtocolTranscript {
    pub fn sifted_key_length(&self) -> u64 {
        self.tally.key_rounds
    }

    /// CSV with one row per tracked statistic.
    pub fn statistics_csv(&self) -> String {
        let mut s = String::from("name,count,estimate,ideal,sigma\n");
        for st in &self.statistics {
            let est = st.estimate.map(|e| format!("{e:.11e}")).unwrap_or_default();
            s.push_str(&format!("{},{},{},{:.11e},{:.11e}\n", st.name, st.count, est, st.ideal, st.sigma));
        }
        s
    }
}

/// `Z`-basis error rate from the Alice–Bob test correlators:
/// `⟨ZZ⟩ = (E₁₀ − E₁₁)/√2`.
fn inferred_qber_z(ab: &PairCounts) -> Option<(f64, f64)> {
    let e10 = ab.correlator(1, 0)?;
    let e11 = ab.correlator(1, 1)?;
    let zz = (e10 - e11) / std::f64::consts::SQRT_2;
    let var = |e: f64, n: u64| (1.0 - e * e).max(0.0) / n as f64;
    let v = var(e10, ab.setting_total(1, 0)) + var(e11, ab.setting_total(1, 1));
    // sampling noise can push the inferred rate slightly outside [0, 1]
    Some((((1.0 - zz) / 2.0).clamp(0.0, 1.0), 0.5 * (v / 2.0).sqrt()))
}

fn marginal_defect(t: &Tally) -> Option<(f64, f64)> {
    let mut worst: Option<(f64, f64)> = None;
    for x in 0..2 {
        let m = &t.alice_marginal[x];
        let n0 = m[0][0] + m[0][1];
        let n1 = m[1][0] + m[1][1];
        if n0 == 0 || n1 == 0 {
            return None;
        }
        let p0 = m[0][0] as f64 / n0 as f64;
        let p1 = m[1][0] as f64 / n1 as f64;
        let d = (p0 - p1).abs();
        let s = (0.25 / n0 as f64 + 0.25 / n1 as f64).sqrt();
        if worst.is_none_or(|(w, _)| d > w) {
            worst = Some((d, s));
        }
    }
    worst
}

fn build_statistics(t: &Tally, model: &HonestModel) -> Vec<Statistic> {
    let mut out = Vec::with_capacity(49);
    for link in Link::ALL {
        let pc = t.pair(link);
        for x in 0..2 {
            for y in 0..2 {
                let n = pc.setting_total(x, y);
                for a in 0..2 {
                    for b in 0..2 {
                        let ideal = model.p(link, a, b, x, y);
                        let sigma = if n > 0 { (ideal * (1.0 - ideal) / n as f64).sqrt() } else { f64::INFINITY };
                        out.push(Statistic {
                            name: format!("{}_p_a{a}b{b}_x{x}y{y}", link.name()),
                            count: n,
                            estimate: pc.frequency(a, b, x, y),
                            ideal,
                            sigma,
                        });
                    }
                }
            }
        }
    }
    let n = t.key_rounds;
    let q = model.qber_x();
    out.push(Statistic {
        name: "qber_x".into(),
        count: n,
        estimate: (n > 0).then(|| t.key_errors as f64 / n as f64),
        ideal: q,
        sigma: if n > 0 { (q * (1.0 - q) / n as f64).sqrt() } else { f64::INFINITY },
    });
    out
}

/// Simulate all rounds on a pool of `cfg.workers` threads. Each round draws
/// from its own counter-derived stream and tallies are integer sums, so the
/// transcript does not depend on the worker count.
pub fn run_protocol(cfg: &ProtocolConfig) -> Result<ProtocolTranscript> {
    cfg.validate()?;
    let model = HonestModel::from_config(cfg);
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(cfg.workers)
        .build()
        .map_err(|e| Error::domain(format!("thread pool: {e}")))?;
    let chunks = cfg.rounds.div_ceil(CHUNK);
    let tally = pool.install(|| {
        (0..chunks)
            .into_par_iter()
            .map(|c| tally_range(cfg, &model, c * CHUNK, ((c + 1) * CHUNK).min(cfg.rounds)))
            .reduce(Tally::default, Tally::merge)
    });

    let statistics = build_statistics(&tally, &model);
    let win_af = tally.af.win();
    let win_bg = tally.bg.win();
    let qz = inferred_qber_z(&tally.ab);
    let md = marginal_defect(&tally);
    let estimates = Estimates {
        qber_x: (tally.key_rounds > 0).then(|| tally.key_errors as f64 / tally.key_rounds as f64),
        qber_z: qz.map(|v| v.0),
        qber_z_sigma: qz.map(|v| v.1),
        chsh_af: tally.af.chsh(),
        chsh_bg: tally.bg.chsh(),
        chsh_ab: tally.ab.chsh(),
        win_af: win_af.map(|v| v.0),
        win_af_sigma: win_af.map(|v| v.1),
        win_bg: win_bg.map(|v| v.0),
        win_bg_sigma: win_bg.map(|v| v.1),
        marginal_defect: md.map(|v| v.0),
        marginal_defect_sigma: md.map(|v| v.1),
    };
    let accepted = statistics.iter().all(|s| s.within(cfg.accept_tolerance));
    Ok(ProtocolTranscript { rounds: cfg.rounds, tally, estimates, statistics, accepted })
}

/// Generation-round bookkeeping.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SiftSummary {
    pub key_rounds: u64,
    pub fraction: f64,
    /// `(1 − γ)·N`, the implemented convention.
    pub expected: f64,
    pub sigma: f64,
    /// `γ·t_A·t_B·p_A·p_B·N` as stated in the protocol description.
    pub stated_expression: f64,
    /// First generation-round indices, replayed from the round streams.
    pub first_indices: Vec<u64>,
}

/// Indices of all generation rounds, replayed from the per-round streams.
pub fn key_round_indices(cfg: &ProtocolConfig) -> Vec<u64> {
    (0..cfg.rounds).filter(|&i| !round_rng(cfg, i).1).collect()
}

pub fn sift(t: &ProtocolTranscript, cfg: &ProtocolConfig) -> Result<SiftSummary> {
    cfg.validate()?;
    if t.rounds != cfg.rounds {
        return Err(Error::DimensionMismatch { expected: cfg.rounds as usize, found: t.rounds as usize });
    }
    let n = cfg.rounds as f64;
    let first_indices: Vec<u64> = (0..cfg.rounds).filter(|&i| !round_rng(cfg, i).1).take(16).collect();
    Ok(SiftSummary {
        key_rounds: t.tally.key_rounds,
        fraction: t.tally.key_rounds as f64 / n,
        expected: (1.0 - cfg.gamma) * n,
        sigma: (n * cfg.gamma * (1.0 - cfg.gamma)).sqrt(),
        stated_expression: cfg.gamma * cfg.t_a * cfg.t_b * cfg.p_a * cfg.p_b * n,
        first_indices,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cfg(rounds: u64) -> ProtocolConfig {
        ProtocolConfig { rounds, gamma: 0.5, seed: 9, ..Default::default() }
    }

    #[test]
    fn honest_model_values() {
        let m = HonestModel { long_visibility: 1.0, short_visibility: 1.0 };
        for l in Link::ALL {
            assert!((m.chsh(l) - 2.0 * std::f64::consts::SQRT_2).abs() < 1e-12);
        }
        assert!((m.win(Link::Af) - 0.853_553_390_593_273_8).abs() < 1e-12);
    }

    #[test]
    fn counts_sum_to_rounds() {
        let t = run_protocol(&cfg(100_000)).unwrap();
        assert_eq!(t.tally.key_rounds + t.tally.test_rounds, 100_000);
        let s: u64 = t.tally.switch_counts.iter().flatten().sum();
        assert_eq!(s, t.tally.test_rounds);
        assert_eq!(t.tally.key_errors, 0);
        assert!(t.accepted);
    }

    #[test]
    fn worker_count_does_not_matter() {
        let mut c = cfg(50_000);
        let t1 = run_protocol(&c).unwrap();
        c.workers = 4;
        assert_eq!(t1, run_protocol(&c).unwrap());
    }

    #[test]
    fn degenerate_gammas() {
        let mut c = cfg(1000);
        c.gamma = 1.0;
        let t = run_protocol(&c).unwrap();
        assert_eq!(t.tally.key_rounds, 0);
        c.gamma = 0.0;
        let t = run_protocol(&c).unwrap();
        assert_eq!(t.tally.key_rounds, 1000);
        assert!(!t.accepted);
    }

    #[test]
    fn sift_replays_rounds() {
        let c = cfg(5000);
        let t = run_protocol(&c).unwrap();
        let s = sift(&t, &c).unwrap();
        assert_eq!(key_round_indices(&c).len() as u64, s.key_rounds);
        assert!((s.key_rounds as f64 - s.expected).abs() <= 5.0 * s.sigma);
    }
}
