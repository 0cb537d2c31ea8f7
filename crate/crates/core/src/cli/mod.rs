//! Command-line front end.
//!
//! Exit codes: 0 success, 1 a verification check failed (outputs are still
//! written), 2 usage or input error. The resolved seed is printed first so
//! every run can be replayed with `--seed`.

mod commands;
mod config;

use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};

pub use config::{ConfigError, HarnessConfig, LimConfig, ToolConfig};

#[derive(Debug, Parser)]
#[command(
    name = "rramkit",
    version,
    about = "RRAM crossbar simulator and logic-in-memory compiler"
)]
pub struct Cli {
    /// TOML configuration file.
    #[arg(long, global = true, value_name = "PATH")]
    pub config: Option<PathBuf>,
    /// Global seed in `0..=2^63-1`; overrides the config file.
    #[arg(long, global = true, value_parser = clap::value_parser!(u64).range(..=i64::MAX as u64))]
    pub seed: Option<u64>,
    /// Output directory.
    #[arg(long, global = true, value_name = "DIR", default_value = "out")]
    pub out: PathBuf,
    /// Override cycle-to-cycle variation.
    #[arg(long, global = true, value_enum)]
    pub c2c: Option<OnOff>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum OnOff {
    On,
    Off,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Compile and run a BLIF netlist on the crossbar.
    Lim(LimArgs),
    /// Add two numbers with the ternary in-memory adder.
    MvlAdd(MvlAddArgs),
    /// Run the Krinsky automaton on a multi-level cell.
    Fsa(FsaArgs),
    /// Generate TRNG bits and test them.
    Trng(TrngArgs),
    /// Evaluate PUF metrics over a chip population.
    Puf(PufArgs),
    /// Lock or unlock NN weights with a PUF keystream.
    Lock(LockArgs),
    /// Recalibrate level ladder, gate templates and TRNG amplitude.
    Calibrate(CalibrateArgs),
}

#[derive(Debug, Args)]
#[command(group = clap::ArgGroup::new("vectors").required(true).args(["inputs", "exhaustive"]))]
pub struct LimArgs {
    pub blif: PathBuf,
    /// Input bits in netlist order, e.g. `101`.
    #[arg(long)]
    pub inputs: Option<String>,
    /// Sweep every input vector (at most 10 inputs).
    #[arg(long)]
    pub exhaustive: bool,
}

#[derive(Debug, Args)]
pub struct MvlAddArgs {
    /// Decimal, or base 3 with a `0t` prefix.
    pub a: String,
    pub b: String,
    /// Operand width; defaults to the width of the larger operand.
    #[arg(long)]
    pub trits: Option<usize>,
}

#[derive(Debug, Args)]
pub struct FsaArgs {
    #[arg(long, default_value_t = 3)]
    pub depth: usize,
    #[arg(long, default_value_t = 0.2)]
    pub c1: f64,
    #[arg(long, default_value_t = 0.6)]
    pub c2: f64,
    #[arg(long, default_value_t = 10_000)]
    pub steps: usize,
    /// Independent runs, each on its own substream.
    #[arg(long, default_value_t = 1)]
    pub runs: usize,
}

#[derive(Debug, Args)]
pub struct TrngArgs {
    /// Raw trials.
    #[arg(long, default_value_t = 100_000)]
    pub bits: usize,
    #[arg(long)]
    pub debias: bool,
    /// Calibrate the pulse amplitude to `target_p` first.
    #[arg(long)]
    pub calibrate: bool,
}

#[derive(Debug, Args)]
pub struct PufArgs {
    #[arg(long, default_value_t = 50)]
    pub chips: usize,
    #[arg(long, default_value_t = 1)]
    pub challenges: usize,
    /// Re-reads with cycle-to-cycle variation for reliability.
    #[arg(long, short = 'm', default_value_t = 10)]
    pub reads: usize,
}

#[derive(Debug, Args)]
pub struct LockArgs {
    /// Weight levels as JSON: an array of 0..=3, or an object with
    /// `levels` (and optionally `shape`). The demo network if omitted.
    #[arg(long, conflicts_with = "unlock")]
    pub weights: Option<PathBuf>,
    /// Unlock a locked-weights file instead of locking.
    #[arg(long, value_name = "PATH")]
    pub unlock: Option<PathBuf>,
    #[arg(long)]
    pub chip_seed: u64,
    #[arg(long, default_value_t = 0)]
    pub schedule_id: u64,
}

#[derive(Debug, Args)]
pub struct CalibrateArgs {
    /// Levels in the calibrated ladder.
    #[arg(long, default_value_t = 6)]
    pub levels: usize,
}

/// Outcome of a command that ran to completion.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Outcome {
    Pass,
    Fail,
}

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("{path}: {reason}")]
    Io { path: String, reason: String },
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Lim(#[from] crate::limc::LimError),
    #[error(transparent)]
    Mvl(#[from] crate::mvl::MvlError),
    #[error(transparent)]
    Sec(#[from] crate::sec::SecError),
    #[error(transparent)]
    Device(#[from] crate::device::DeviceError),
    #[error(transparent)]
    Xbar(#[from] crate::xbar::XbarError),
}

pub(crate) fn io_err(path: &Path, e: std::io::Error) -> CliError {
    CliError::Io {
        path: path.display().to_string(),
        reason: e.to_string(),
    }
}

/// Resolved run context shared by every command.
pub struct Context {
    pub cfg: ToolConfig,
    pub seed: u64,
    pub out: PathBuf,
}

impl Context {
    pub fn resolve(cli: &Cli) -> Result<Self, CliError> {
        let mut cfg = match &cli.config {
            Some(p) => ToolConfig::load(p)?,
            None => ToolConfig::default(),
        };
        if let Some(c) = cli.c2c {
            cfg.variation.c2c = c == OnOff::On;
        }
        // Seeds stay within TOML's signed integer range so the resolved
        // config can be written back out.
        let seed = cli.seed.or(cfg.seed).unwrap_or_else(|| rand::random::<u64>() >> 1);
        cfg.seed = Some(seed);
        Ok(Self {
            cfg,
            seed,
            out: cli.out.clone(),
        })
    }

    pub fn write(&self, name: &str, bytes: impl AsRef<[u8]>) -> Result<(), CliError> {
        std::fs::create_dir_all(&self.out).map_err(|e| io_err(&self.out, e))?;
        let path = self.out.join(name);
        std::fs::write(&path, bytes).map_err(|e| io_err(&path, e))?;
        println!("wrote {}", path.display());
        Ok(())
    }
}

pub fn run(cli: &Cli) -> Result<Outcome, CliError> {
    let ctx = Context::resolve(cli)?;
    println!("seed: {}", ctx.seed);
    ctx.write("config.toml", ctx.cfg.to_toml())?;
    match &cli.command {
        Command::Lim(a) => commands::lim(&ctx, a),
        Command::MvlAdd(a) => commands::mvl_add(&ctx, a),
        Command::Fsa(a) => commands::fsa(&ctx, a),
        Command::Trng(a) => commands::trng(&ctx, a),
        Command::Puf(a) => commands::puf(&ctx, a),
        Command::Lock(a) => commands::lock(&ctx, a),
        Command::Calibrate(a) => commands::calibrate(&ctx, a),
    }
}

/// Parse `std::env::args`, run, and map the result to an exit code.
pub fn main() -> i32 {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    match run(&cli) {
        Ok(Outcome::Pass) => 0,
        Ok(Outcome::Fail) => {
            eprintln!("error: verification failed");
            1
        }
        Err(e) => {
            eprintln!("error: {e}");
            2
        }
    }
}
