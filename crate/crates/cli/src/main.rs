//! `semiflow`: batch experiments on suspension semiflows.
//!
//! Exit codes: 0 success, 2 configuration error, 3 numerical error, 1 I/O error.

mod commands;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use semiflow::ExperimentConfig;

#[derive(Parser)]
#[command(name = "semiflow", version, about = "Transfer operators and correlation decay for suspension semiflows")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Leading eigenvalue and SRB density.
    Srb(Common),
    /// Correlation curve, decay fits and envelope check.
    Correlate(Common),
    /// Lasota-Yorke fit, Dolgopyat sweep and Laplace route comparison.
    Spectral(Common),
    /// UNI witness, cohomology verdict, partition points and cancellation set.
    Uni(Common),
}

#[derive(Args)]
struct Common {
    /// JSON experiment configuration.
    #[arg(long, conflicts_with = "preset")]
    config: Option<PathBuf>,
    /// Catalogue preset `<map>-<roof>` with default settings.
    #[arg(long)]
    preset: Option<String>,
    /// Output directory (overrides the configuration).
    #[arg(long)]
    out: Option<PathBuf>,
    /// Worker threads (default: all cores).
    #[arg(long)]
    threads: Option<usize>,
    /// Seed (overrides the configuration).
    #[arg(long)]
    seed: Option<u64>,
}

pub enum Failure {
    Config(String),
    Numerical(String),
    Io(String),
}

impl From<semiflow::Error> for Failure {
    fn from(e: semiflow::Error) -> Self {
        match e {
            semiflow::Error::Io(m) => Failure::Io(m),
            semiflow::Error::Config(m) => Failure::Config(m),
            e if e.is_config() => Failure::Config(e.to_string()),
            e => Failure::Numerical(e.to_string()),
        }
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Failure::Io(e.to_string())
    }
}

fn load(common: &Common) -> Result<ExperimentConfig, Failure> {
    let mut cfg = match (&common.config, &common.preset) {
        (Some(path), _) => ExperimentConfig::load(path)?,
        (None, Some(name)) => ExperimentConfig::for_preset(name),
        (None, None) => return Err(Failure::Config("one of --config or --preset is required".into())),
    };
    if let Some(seed) = common.seed {
        cfg.seed = seed;
    }
    if let Some(out) = &common.out {
        cfg.output_dir = out.clone();
    }
    cfg.validate()?;
    Ok(cfg)
}

fn run(cli: Cli) -> Result<(), Failure> {
    let (name, common): (&'static str, &Common) = match &cli.command {
        Command::Srb(c) => ("srb", c),
        Command::Correlate(c) => ("correlate", c),
        Command::Spectral(c) => ("spectral", c),
        Command::Uni(c) => ("uni", c),
    };
    let cfg = load(common)?;
    if let Some(n) = common.threads {
        if n == 0 {
            return Err(Failure::Config("--threads must be positive".into()));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| Failure::Io(e.to_string()))?;
    }
    let system = cfg.system()?;
    let mut sink = output::Sink::new(&cfg.output_dir, output::Meta::new(name, &cfg))?;
    match name {
        "srb" => commands::srb(&cfg, &system, &mut sink)?,
        "correlate" => commands::correlate(&cfg, &system, &mut sink)?,
        "spectral" => commands::spectral(&cfg, &system, &mut sink)?,
        _ => commands::uni(&cfg, &system, &mut sink)?,
    }
    for path in sink.written() {
        say(&path.display().to_string());
    }
    Ok(())
}

/// Prints a line; a closed stdout is not an error.
pub fn say(line: &str) {
    use std::io::Write;
    let _ = writeln!(std::io::stdout(), "{line}");
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Config(m)) => {
            eprintln!("configuration error: {m}");
            ExitCode::from(2)
        }
        Err(Failure::Numerical(m)) => {
            eprintln!("numerical error: {m}");
            ExitCode::from(3)
        }
        Err(Failure::Io(m)) => {
            eprintln!("io error: {m}");
            ExitCode::from(1)
        }
    }
}
