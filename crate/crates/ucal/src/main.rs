use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use log::error;
use ucal::config::RunConfig;
use ucal::error::{Error, EXIT_OK};
use ucal::pipeline::{execute, Command, RunContext};

/// Calibration, dictionary learning and sparse imaging for ultrasonic
/// MIMO arrays.
#[derive(Debug, Parser)]
#[command(name = "ucal", version)]
struct Cli {
    /// TOML run configuration.
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// Master random seed; overrides the config.
    #[arg(long, global = true)]
    seed: Option<u64>,

    /// Request reproducible output.
    #[arg(long, global = true)]
    deterministic: bool,

    /// Worker threads for parallel stages.
    #[arg(long, global = true)]
    threads: Option<usize>,

    #[command(subcommand)]
    command: Cmd,
}

#[derive(Debug, Subcommand)]
enum Cmd {
    /// Write a synthetic calibration set.
    Simulate {
        #[arg(long)]
        output: PathBuf,
    },
    /// Learn the array model from a calibration set.
    Calibrate {
        input: PathBuf,
        #[arg(long)]
        output: PathBuf,
    },
    /// Build a range-scanned dictionary from a calibration estimate.
    Dictionary {
        input: PathBuf,
        #[arg(long)]
        output: PathBuf,
    },
    /// Localize targets in a measurement.
    Image {
        input: PathBuf,
        #[arg(long)]
        dictionary: PathBuf,
        #[arg(long)]
        output: PathBuf,
    },
    /// Run the Monte Carlo comparison sweep.
    Eval {
        #[arg(long)]
        output: PathBuf,
    },
}

impl From<Cmd> for Command {
    fn from(cmd: Cmd) -> Self {
        match cmd {
            Cmd::Simulate { output } => Command::Simulate { output },
            Cmd::Calibrate { input, output } => Command::Calibrate { input, output },
            Cmd::Dictionary { input, output } => Command::Dictionary { input, output },
            Cmd::Image {
                input,
                dictionary,
                output,
            } => Command::Image {
                input,
                dictionary,
                output,
            },
            Cmd::Eval { output } => Command::Eval { output },
        }
    }
}

fn run(cli: Cli) -> Result<(), Error> {
    let mut config = match &cli.config {
        Some(path) => RunConfig::load(path)?,
        None => RunConfig::default(),
    };
    if let Some(seed) = cli.seed {
        config.seed = seed;
    }
    config.deterministic |= cli.deterministic;
    if let Some(threads) = cli.threads {
        if threads == 0 {
            return Err(Error::Config("--threads must be at least 1".into()));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build_global()
            .map_err(|e| Error::Config(e.to_string()))?;
    }
    let ctx = RunContext {
        config,
        threads: cli.threads,
    };
    execute(&ctx, &cli.command.into())?;
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    match run(Cli::parse()) {
        Ok(()) => ExitCode::from(EXIT_OK),
        Err(e) => {
            error!("{e}");
            ExitCode::from(e.exit_code())
        }
    }
}
