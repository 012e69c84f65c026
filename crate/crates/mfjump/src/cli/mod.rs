//! Command-line driver: `mfjump <kind> --config <path> [--seed N] [--threads K] [--out DIR]`.

pub mod config;
pub mod run;

use std::path::PathBuf;

use clap::Parser;

pub use config::{parse_config, Config, Kind, SCHEMA_VERSION};
pub use run::{execute, run, write_table, Failure, Invocation, Table};

use crate::error::Error;

#[derive(Debug, Parser)]
#[command(name = "mfjump", version, about = "Simulate and couple mean-field jump processes")]
pub struct Args {
    #[arg(value_enum)]
    pub kind: Kind,
    #[arg(long)]
    pub config: PathBuf,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub threads: Option<usize>,
    #[arg(long, default_value = ".")]
    pub out: PathBuf,
}

impl From<Args> for Invocation {
    fn from(a: Args) -> Self {
        Invocation {
            kind: a.kind,
            config: a.config,
            seed: a.seed,
            threads: a.threads,
            out: a.out,
        }
    }
}

/// Reads `MFJUMP_LOG` (`off`, `info` or `trace`; unset means `off`).
pub fn log_level(value: Option<&str>) -> Result<log::LevelFilter, Error> {
    match value.map(str::trim) {
        None | Some("") | Some("off") => Ok(log::LevelFilter::Off),
        Some("info") => Ok(log::LevelFilter::Info),
        Some("trace") => Ok(log::LevelFilter::Trace),
        Some(other) => Err(Error::Config(format!("MFJUMP_LOG must be off, info or trace, got `{other}`"))),
    }
}

/// Full command-line entry point; returns the process exit code.
pub fn main_with(args: Args) -> i32 {
    let level = match log_level(std::env::var("MFJUMP_LOG").ok().as_deref()) {
        Ok(l) => l,
        Err(e) => {
            eprintln!("{}", Failure { code: 2, error: e }.report());
            return 2;
        }
    };
    let _ = env_logger::Builder::new()
        .filter_level(level)
        .format_timestamp(None)
        .target(env_logger::Target::Stderr)
        .try_init();
    match run(&args.into()) {
        Ok(path) => {
            log::info!("wrote {}", path.display());
            0
        }
        Err(f) => {
            eprintln!("{}", f.report());
            f.code
        }
    }
}
