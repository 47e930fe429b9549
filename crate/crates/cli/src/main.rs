mod commands;
mod config;
mod error;
mod output;

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, ValueEnum};

use crate::config::RunConfig;
use crate::error::CliError;
use crate::output::OutDir;

#[derive(Debug, Clone, Copy, ValueEnum)]
enum Command {
    Forward,
    Inverse,
    Verify,
    Selftest,
}

/// Forward and inverse solvers for the time-fractional subdiffusion equation.
#[derive(Debug, Parser)]
#[command(name = "subdiff", version)]
struct Cli {
    command: Command,
    /// JSON run configuration; optional for `selftest`.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Output directory; overrides the configuration's `output`.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, env = "SUBDIFF_THREADS")]
    threads: Option<usize>,
}

fn run(cli: Cli) -> Result<String, CliError> {
    if let Some(n) = cli.threads {
        rayon::ThreadPoolBuilder::new().num_threads(n).build_global().map_err(|e| CliError::Config(format!("thread pool: {e}")))?;
    }
    if let (Command::Selftest, None) = (cli.command, &cli.config) {
        let out = cli.out.as_deref().map(OutDir::create).transpose()?;
        return commands::selftest(out.as_ref());
    }
    let path = cli.config.ok_or_else(|| CliError::Config("--config is required".into()))?;
    let mut cfg = RunConfig::load(&path)?;
    let base = path.parent().unwrap_or(Path::new(".")).to_path_buf();
    if let Some(out) = cli.out {
        cfg.output = Some(out);
    }
    let out_path = cfg.output.get_or_insert_with(|| PathBuf::from("out")).clone();
    let out = OutDir::create(&out_path)?;
    match cli.command {
        Command::Forward => commands::forward(&cfg, &base, &out),
        Command::Inverse => commands::inverse(&cfg, &base, &out),
        Command::Verify => commands::verify(&cfg, &base, &out),
        Command::Selftest => commands::selftest(Some(&out)),
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(msg) => {
            println!("{msg}");
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
