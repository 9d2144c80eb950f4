//! `solvdiff`: exact path sampling, pricing and the reproducibility reports.
//!
//! Exit codes: 0 success, 1 configuration or I/O error, 2 numeric failure,
//! 3 self-test failure. Output schemas are listed in `config-schema.md`.

mod commands;
mod config;
mod error;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use crate::commands::Settings;
use crate::config::{Format, RunConfig};
use crate::error::CliError;

#[derive(Debug, Parser)]
#[command(name = "solvdiff", version, about = "Exact simulation and pricing for solvable diffusions")]
struct Cli {
    #[command(subcommand)]
    command: Command,

    /// TOML run configuration.
    #[arg(long, global = true, value_name = "PATH")]
    config: Option<PathBuf>,

    /// Master seed; overrides method.seed.
    #[arg(long, global = true)]
    seed: Option<u64>,

    /// Worker threads (default: all cores). Results do not depend on it.
    #[arg(long, global = true)]
    threads: Option<usize>,

    /// Paths, draws or sample size, depending on the command.
    #[arg(long, global = true)]
    paths: Option<usize>,

    /// Output file; stdout when omitted.
    #[arg(long, global = true, value_name = "PATH")]
    out: Option<String>,

    #[arg(long, global = true, value_enum)]
    format: Option<Format>,

    /// Use the full reference sample sizes instead of the desk-scale defaults.
    #[arg(long, global = true)]
    full_scale: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Subcommand)]
enum Command {
    /// Write sampled paths.
    Sample,
    /// Price options; without a [model] block, the three reference calibrations.
    Price,
    /// Sample mean against the exact mean for each SQB scheme.
    CompareSchemes,
    /// Timing and iteration counts of rejection against chop-down search.
    BenchRandomizers,
    /// Run the statistical and identity suites twice and compare.
    Selftest,
}

impl Command {
    fn name(self) -> &'static str {
        match self {
            Command::Sample => "sample",
            Command::Price => "price",
            Command::CompareSchemes => "compare-schemes",
            Command::BenchRandomizers => "bench-randomizers",
            Command::Selftest => "selftest",
        }
    }
}

fn run(cli: Cli) -> Result<(), CliError> {
    let mut config = match &cli.config {
        Some(p) => RunConfig::load(p)?,
        None => RunConfig::default(),
    };
    if let Some(c) = &config.command {
        if c != cli.command.name() {
            return Err(CliError::Config(format!(
                "config is for `{c}` but `{}` was requested",
                cli.command.name()
            )));
        }
    }
    if let Some(seed) = cli.seed {
        config.method.seed = Some(seed);
    }
    config.validate()?;
    if cli.paths == Some(0) {
        return Err(CliError::Config("--paths must be positive".into()));
    }

    let format = cli.format.or(config.output.format).unwrap_or_default();
    if format == Format::Binary && cli.command != Command::Sample {
        return Err(CliError::Config("binary output is only available for `sample`".into()));
    }
    if cli.command == Command::Selftest && format != Format::Csv {
        return Err(CliError::Config("selftest writes a text report; --format does not apply".into()));
    }

    if let Some(n) = cli.threads {
        if n == 0 {
            return Err(CliError::Config("--threads must be positive".into()));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| CliError::Config(e.to_string()))?;
    }

    let settings = Settings {
        out: cli.out.or(config.output.path.clone()),
        config,
        paths: cli.paths,
        full_scale: cli.full_scale,
        format,
    };
    match cli.command {
        Command::Sample => commands::sample(&settings),
        Command::Price => commands::price(&settings),
        Command::CompareSchemes => commands::compare(&settings),
        Command::BenchRandomizers => commands::bench(&settings),
        Command::Selftest => commands::selftest(&settings),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        // A closed downstream pipe (`| head`) is not a failure.
        Err(CliError::Io(e)) if e.kind() == std::io::ErrorKind::BrokenPipe => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("solvdiff: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
