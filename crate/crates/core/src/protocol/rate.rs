//! End-to-end key rate from a transcript.

use serde::{Deserialize, Serialize};

use super::config::ProtocolConfig;
use super::finite::finite_size_penalty;
use super::sim::{HonestModel, Link, ProtocolTranscript};
use crate::entropy::binary_entropy;
use crate::error::{Error, Result};
use crate::keyrate::devetak_winter;
use crate::lift::{reduction_chain, IdealSettings, DEFAULT_RESTARTS};
use crate::selftest::{dilation_budget, TSIRELSON_GAME_VALUE};
use crate::switch::Behavior;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RateMode {
    /// Estimated frequencies, a statistical allowance on the constraints
    /// and the finite-size penalty.
    Empirical,
    /// Honest-model expectations of the configuration and no finite-size
    /// penalty: the `N → ∞` limit of an accepted run.
    Asymptotic,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RateOptions {
    pub mode: RateMode,
    pub restarts: usize,
    pub seed: u64,
    /// Multiple of the largest Alice–Bob binomial σ added to the constraint
    /// tolerance in empirical mode.
    pub sigma_allowance: f64,
}

impl Default for RateOptions {
    fn default() -> Self {
        Self { mode: RateMode::Asymptotic, restarts: DEFAULT_RESTARTS, seed: 0, sigma_allowance: 3.0 }
    }
}

/// Every stage of the rate pipeline.
#[derive(Debug, Clone, Serialize)]
pub struct RateReport {
    pub mode: RateMode,
    pub win_af: f64,
    pub win_bg: f64,
    pub chsh_af: f64,
    pub chsh_bg: f64,
    pub qber_x: f64,
    pub qber_z: f64,
    /// Game-value deficits, clamped at zero.
    pub deficit_af: f64,
    pub deficit_bg: f64,
    pub eps_a: f64,
    pub eps_b: f64,
    pub stat_allowance: f64,
    pub eps_prob: f64,
    pub relaxed_entropy: f64,
    pub relaxed_residual: f64,
    pub continuity_term: f64,
    /// Lifted bound on `H(X_A|E)`.
    pub entropy: f64,
    /// `h₂(Q_X)` spent on error correction.
    pub error_correction: f64,
    pub asymptotic_rate: f64,
    /// `α/(α−1)·log₂(1/p_Ω)/N`.
    pub finite_penalty: f64,
    /// Bits per generation round.
    pub rate: f64,
    pub key_fraction: f64,
    /// `rate · key_fraction`.
    pub rate_per_round: f64,
}

fn require(v: Option<f64>, what: &str) -> Result<f64> {
    v.ok_or_else(|| Error::domain(format!("transcript has no data for {what}")))
}

fn ab_behavior_empirical(t: &ProtocolTranscript) -> Result<(Behavior, f64)> {
    let ab = &t.tally.ab;
    let mut probs = vec![0.0; 16];
    let mut worst_sigma: f64 = 0.0;
    for x in 0..2 {
        for y in 0..2 {
            let n = ab.setting_total(x, y);
            if n == 0 {
                return Err(Error::domain(format!("no Alice–Bob test rounds at ({x}, {y})")));
            }
            for a in 0..2 {
                for b in 0..2 {
                    let p = ab.frequency(a, b, x, y).unwrap_or(0.0);
                    probs[((x * 2 + y) * 2 + a) * 2 + b] = p;
                    worst_sigma = worst_sigma.max((p * (1.0 - p) / n as f64).sqrt());
                }
            }
        }
    }
    Ok((Behavior::from_frequencies(2, 2, probs)?, worst_sigma))
}

fn ab_behavior_model(m: &HonestModel) -> Result<Behavior> {
    let mut probs = vec![0.0; 16];
    for x in 0..2 {
        for y in 0..2 {
            for a in 0..2 {
                for b in 0..2 {
                    probs[((x * 2 + y) * 2 + a) * 2 + b] = m.p(Link::Ab, a, b, x, y);
                }
            }
        }
    }
    Behavior::new(2, 2, probs)
}

/// Estimated CHSH deficits → dilation errors → lifted entropy of Alice's X
/// outcome → Devetak–Winter rate minus the finite-size penalty.
pub fn end_to_end_rate(t: &ProtocolTranscript, cfg: &ProtocolConfig, opts: &RateOptions) -> Result<RateReport> {
    if !t.accepted {
        return Err(Error::RejectedTranscript);
    }
    cfg.validate()?;
    let model = HonestModel::from_config(cfg);
    let (win_af, win_bg, chsh_af, chsh_bg, qber_x, qber_z, behavior, stat_allowance) = match opts.mode {
        RateMode::Asymptotic => (
            model.win(Link::Af),
            model.win(Link::Bg),
            model.chsh(Link::Af),
            model.chsh(Link::Bg),
            model.qber_x(),
            model.qber_z(),
            ab_behavior_model(&model)?,
            0.0,
        ),
        RateMode::Empirical => {
            let e = &t.estimates;
            let (b, sigma) = ab_behavior_empirical(t)?;
            (
                require(e.win_af, "the Alice–Fred test")?,
                require(e.win_bg, "the Bob–George test")?,
                require(e.chsh_af, "the Alice–Fred test")?,
                require(e.chsh_bg, "the Bob–George test")?,
                require(e.qber_x, "generation rounds")?,
                require(e.qber_z, "the Alice–Bob test")?,
                b,
                opts.sigma_allowance * sigma,
            )
        }
    };
    let deficit_af = (TSIRELSON_GAME_VALUE - win_af).max(0.0);
    let deficit_bg = (TSIRELSON_GAME_VALUE - win_bg).max(0.0);
    let budget = |d: f64| -> Result<f64> {
        let b = dilation_budget(d)?;
        Ok(b.delta_meas.max(b.delta_state))
    };
    let eps_a = budget(deficit_af)?;
    let eps_b = budget(deficit_bg)?;

    // the allowance is folded into Bob's share so that 3(ε_A + ε_B') = eps_prob
    let eps_b_eff = eps_b + stat_allowance / 3.0;
    let chain = reduction_chain(&behavior, IdealSettings::Chsh, eps_a, eps_b_eff, 0, opts.restarts, opts.seed)?;
    let error_correction = binary_entropy(qber_x.clamp(0.0, 1.0))?;
    let asymptotic_rate = devetak_winter(chain.value, error_correction);
    let finite_penalty = match opts.mode {
        RateMode::Asymptotic => 0.0,
        RateMode::Empirical => finite_size_penalty(cfg.alpha, cfg.p_omega)? / cfg.rounds as f64,
    };
    let rate = asymptotic_rate - finite_penalty;
    let key_fraction = match opts.mode {
        RateMode::Asymptotic => 1.0 - cfg.gamma,
        RateMode::Empirical => t.tally.key_rounds as f64 / t.rounds as f64,
    };
    Ok(RateReport {
        mode: opts.mode,
        win_af,
        win_bg,
        chsh_af,
        chsh_bg,
        qber_x,
        qber_z,
        deficit_af,
        deficit_bg,
        eps_a,
        eps_b,
        stat_allowance,
        eps_prob: chain.eps_prob,
        relaxed_entropy: chain.relaxed.entropy,
        relaxed_residual: chain.relaxed.residual,
        continuity_term: chain.f_term,
        entropy: chain.value,
        error_correction,
        asymptotic_rate,
        finite_penalty,
        rate,
        key_fraction,
        rate_per_round: rate * key_fraction,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::protocol::{run_protocol, Noise};

    #[test]
    fn rejected_transcript() {
        let cfg = ProtocolConfig { rounds: 200, gamma: 0.0, ..Default::default() };
        let t = run_protocol(&cfg).unwrap();
        assert!(matches!(end_to_end_rate(&t, &cfg, &RateOptions::default()), Err(Error::RejectedTranscript)));
    }

    #[test]
    fn noiseless_asymptotic_rate() {
        let cfg = ProtocolConfig { rounds: 100_000, gamma: 0.5, ..Default::default() };
        let t = run_protocol(&cfg).unwrap();
        let opts = RateOptions { restarts: 16, ..Default::default() };
        let r = end_to_end_rate(&t, &cfg, &opts).unwrap();
        assert!((r.rate - 1.0).abs() < 1e-2, "{r:?}");
    }

    #[test]
    fn depolarized_long_link_matches_shor_preskill() {
        let cfg = ProtocolConfig {
            rounds: 100_000,
            gamma: 0.5,
            noise: Noise { depolarizing_q: 0.1, local_q: 0.0 },
            ..Default::default()
        };
        let t = run_protocol(&cfg).unwrap();
        let opts = RateOptions { restarts: 16, ..Default::default() };
        let r = end_to_end_rate(&t, &cfg, &opts).unwrap();
        let oracle = 1.0 - 2.0 * binary_entropy(0.05).unwrap();
        assert!((r.rate - oracle).abs() < 1e-2, "{} vs {oracle}", r.rate);
    }
}
