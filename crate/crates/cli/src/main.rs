//! `routedqkd`: command-line front end.
//!
//! Exit codes: 0 success, 2 domain or input errors, 3 rejected or
//! infeasible results, 64 usage errors, 1 I/O failures.

mod commands;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Debug, Parser)]
#[command(name = "routedqkd", version, about = "Routed Bell-test QKD laboratory")]
struct Cli {
    /// Output directory (default: $ROUTEDQKD_OUT_DIR, then ./routedqkd-out).
    #[arg(long, global = true)]
    out_dir: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Routed BB84 rate at a point or over a TOML grid.
    Keyrate(KeyrateArgs),
    /// Effective-overlap bounds for a serialized (σ, X, Z).
    Overlap(OverlapArgs),
    /// Dilation error budget and its derivation chain.
    SelftestConstants(SelftestArgs),
    /// The switch attack and its diagnostics.
    AttackDemo,
    /// Convert random joint-channel sources into transmitted-system channels.
    ModelEquiv(ModelEquivArgs),
    /// Local-model membership of a 2×2 behavior.
    SrqCheck(SrqArgs),
    /// Lifted entropy from a behavior table and dilation errors.
    DdOpt(DdOptArgs),
    /// Monte-Carlo run of the spot-checking protocol.
    Simulate(SimulateArgs),
    /// Entropy utilities.
    #[command(subcommand)]
    Entropy(EntropyCommand),
}

#[derive(Debug, Args)]
pub struct KeyrateArgs {
    /// CHSH correlator ω.
    #[arg(long, required_unless_present = "grid", allow_negative_numbers = true)]
    pub omega: Option<f64>,
    /// Marginal-constraint slack ε.
    #[arg(long, default_value_t = 0.0)]
    pub eps: f64,
    #[arg(long, default_value_t = 0.0)]
    pub qx: f64,
    #[arg(long, default_value_t = 0.0)]
    pub qz: f64,
    /// TOML file with `omega`, `eps`, `qx`, `qz` arrays.
    #[arg(long, conflicts_with = "omega")]
    pub grid: Option<PathBuf>,
    /// Also evaluate the self-test rate at this CHSH game deficit.
    #[arg(long)]
    pub selftest_eps: Option<f64>,
    /// Product-bound constant of the self-test rate.
    #[arg(long, default_value_t = routedqkd_core::keyrate::K2_DEFAULT)]
    pub k2: f64,
}

#[derive(Debug, Args)]
pub struct OverlapArgs {
    /// JSON with `sigma`, `x`, `z` and optional `chsh = {omega, eps}`.
    #[arg(long)]
    pub input: PathBuf,
}

#[derive(Debug, Args)]
pub struct SelftestArgs {
    #[arg(long)]
    pub epsilon: f64,
}

#[derive(Debug, Args)]
pub struct ModelEquivArgs {
    #[arg(long, default_value_t = 100)]
    pub instances: usize,
    /// Local dimension of each factor.
    #[arg(long, default_value_t = 2)]
    pub dim: usize,
    #[arg(long, default_value_t = 2)]
    pub branches: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

#[derive(Debug, Args)]
pub struct SrqArgs {
    /// JSON behavior table `{"probs": [[[[p00, p01], [p10, p11]], ...]]]}` indexed [x][y][a][b].
    #[arg(long, required_unless_present = "isotropic")]
    pub behavior: Option<PathBuf>,
    /// Ideal CHSH behavior mixed with white noise at this visibility.
    #[arg(long, conflicts_with = "behavior")]
    pub isotropic: Option<f64>,
}

#[derive(Debug, Args)]
pub struct DdOptArgs {
    /// TOML problem file.
    #[arg(long)]
    pub config: PathBuf,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub restarts: Option<usize>,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum RateModeArg {
    Asymptotic,
    Empirical,
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    /// TOML protocol configuration; defaults apply to missing keys.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub workers: Option<usize>,
    /// Also compute the end-to-end key rate.
    #[arg(long)]
    pub rate: bool,
    #[arg(long, value_enum, default_value_t = RateModeArg::Asymptotic)]
    pub rate_mode: RateModeArg,
    #[arg(long, default_value_t = routedqkd_core::lift::DEFAULT_RESTARTS)]
    pub restarts: usize,
}

#[derive(Debug, Subcommand)]
pub enum EntropyCommand {
    /// h₂(q).
    Binary {
        #[arg(long)]
        q: f64,
    },
    /// H(A|B) of a serialized density operator.
    Conditional {
        /// JSON `{"system_dims": [...], "entries": [[[re, im], ...], ...]}`.
        #[arg(long)]
        state: PathBuf,
        /// Subsystems forming A, comma separated.
        #[arg(long, value_delimiter = ',', required = true)]
        a: Vec<usize>,
    },
}

const EXIT_USAGE: u8 = 64;

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(EXIT_USAGE) } else { ExitCode::SUCCESS };
        }
    };
    let out = output::resolve_out_dir(cli.out_dir.as_deref());
    let result = match cli.command {
        Command::Keyrate(a) => commands::keyrate(&a, out),
        Command::Overlap(a) => commands::overlap(&a, out),
        Command::SelftestConstants(a) => commands::selftest_constants(&a, out),
        Command::AttackDemo => commands::attack_demo(out),
        Command::ModelEquiv(a) => commands::model_equiv(&a, out),
        Command::SrqCheck(a) => commands::srq_check(&a, out),
        Command::DdOpt(a) => commands::dd_opt(&a, out),
        Command::Simulate(a) => commands::simulate(&a, out),
        Command::Entropy(c) => commands::entropy(&c, out),
    };
    match result {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(commands::exit_code(&e))
        }
    }
}
