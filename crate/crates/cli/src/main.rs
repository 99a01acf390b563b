//! Batch front end for the half-line laboratory: each run reads one JSON
//! config, writes one artifact directory sealed by a checksummed manifest,
//! and exits with a code that distinguishes a bad config (2), an honest
//! numerical failure (3), and a tool fault (4).

mod commands;
mod config;
mod manifest;

use std::fmt::Display;
use std::panic::AssertUnwindSafe;
use std::path::PathBuf;
use std::str::FromStr;

use clap::Parser;

use crate::config::RunConfig;

pub const EXIT_OK: i32 = 0;
pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_NUMERICAL: i32 = 3;
pub const EXIT_INTERNAL: i32 = 4;

/// A run outcome other than success, mapped onto the exit codes.
#[derive(Debug)]
pub enum Failure {
    /// The request itself is unusable: malformed config, bad parameter,
    /// missing input, occupied output directory.
    Config(String),
    /// The computation ran but a numerical criterion was not met:
    /// non-convergence, divergence, a violated pin or order floor.
    Criterion(String),
    /// The tool itself misbehaved: i/o, format, or consistency faults.
    Internal(String),
}

impl Failure {
    /// Folds core errors onto the exit classes: parameter rejections are
    /// config errors, convergence failures are numerical, the rest are
    /// tool faults.
    pub fn from_core(e: gkdv_core::Error) -> Self {
        use gkdv_core::Error as E;
        match &e {
            E::InvalidParameter(_) => Failure::Config(e.to_string()),
            E::QuadratureNotConverged { .. } | E::NonConvergence { .. } | E::Divergence { .. } => {
                Failure::Criterion(e.to_string())
            }
            E::GridMismatch(_) | E::NonFiniteMultiplier { .. } | E::Io(_) | E::Format(_) => {
                Failure::Internal(e.to_string())
            }
        }
    }

    fn exit_code(&self) -> i32 {
        match self {
            Failure::Config(_) => EXIT_CONFIG,
            Failure::Criterion(_) => EXIT_NUMERICAL,
            Failure::Internal(_) => EXIT_INTERNAL,
        }
    }

    fn message(&self) -> &str {
        match self {
            Failure::Config(m) | Failure::Criterion(m) | Failure::Internal(m) => m,
        }
    }
}

/// Laboratory driver for the quartic KdV equation on the right half line.
///
/// Flags override environment variables (GKDV_OUT, GKDV_SEED, GKDV_THREADS),
/// which override the corresponding config fields.
#[derive(Parser)]
#[command(name = "gkdv-lab", version, about)]
struct Cli {
    /// JSON run configuration (required unless --list-presets).
    #[arg(long, value_name = "PATH")]
    config: Option<PathBuf>,

    /// Artifact directory; refused if it already contains files.
    #[arg(long, value_name = "DIR")]
    out: Option<PathBuf>,

    /// Base seed for commands that derive randomness.
    #[arg(long)]
    seed: Option<u64>,

    /// Worker thread cap for the estimate studies; 0 keeps the default.
    #[arg(long)]
    threads: Option<usize>,

    /// Print the analytic preset catalog as JSON and exit.
    #[arg(long)]
    list_presets: bool,
}

/// Reads and parses an environment override; unset is `None`, unparseable
/// is a config error.
fn env_override<T: FromStr>(name: &str) -> Result<Option<T>, Failure>
where
    T::Err: Display,
{
    match std::env::var(name) {
        Ok(text) => text
            .trim()
            .parse()
            .map(Some)
            .map_err(|e| Failure::Config(format!("{name}={text}: {e}"))),
        Err(std::env::VarError::NotPresent) => Ok(None),
        Err(e) => Err(Failure::Config(format!("{name}: {e}"))),
    }
}

fn run(cli: Cli) -> Result<(), Failure> {
    if cli.list_presets {
        return commands::list_presets();
    }
    let path = cli.config.ok_or_else(|| {
        Failure::Config("--config is required unless --list-presets is given".into())
    })?;
    let bytes = std::fs::read(&path)
        .map_err(|e| Failure::Config(format!("{}: {e}", path.display())))?;
    let config_sha256 = manifest::sha256_hex(&bytes);
    let cfg = RunConfig::from_slice(&bytes, &path.display().to_string())?;

    let seed = match cli.seed.or(env_override("GKDV_SEED")?) {
        Some(s) => s,
        None => cfg.seed.unwrap_or(0),
    };
    let threads = match cli.threads.or(env_override("GKDV_THREADS")?) {
        Some(t) => t,
        None => cfg.threads.unwrap_or(0),
    };
    if threads > 0 {
        // The estimate studies fan out through a global worker pool that
        // reads this variable at first use, which is still ahead of us.
        std::env::set_var("RAYON_NUM_THREADS", threads.to_string());
    }
    let out = match cli.out.or(env_override("GKDV_OUT")?) {
        Some(o) => o,
        None => cfg.out.clone().ok_or_else(|| {
            Failure::Config(
                "no output directory: pass --out, set GKDV_OUT, or set `out` in the config".into(),
            )
        })?,
    };
    log::info!(
        "command {} -> {} (seed {seed}, threads {})",
        cfg.command.name(),
        out.display(),
        if threads > 0 { threads.to_string() } else { "default".into() }
    );

    let ctx = commands::RunContext {
        cfg: &cfg,
        config_sha256,
        seed,
        threads,
        out,
    };
    commands::dispatch(&ctx)
}

fn main() {
    env_logger::init();
    let cli = Cli::parse();
    let code = match std::panic::catch_unwind(AssertUnwindSafe(|| run(cli))) {
        Ok(Ok(())) => EXIT_OK,
        Ok(Err(failure)) => {
            eprintln!("gkdv-lab: {}", failure.message());
            failure.exit_code()
        }
        Err(payload) => {
            let what = payload
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| payload.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "unknown panic".into());
            eprintln!("gkdv-lab: internal fault: {what}");
            EXIT_INTERNAL
        }
    };
    std::process::exit(code);
}
