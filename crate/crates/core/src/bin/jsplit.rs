use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use jsplit::run::{execute, Command, RunConfig};
use jsplit::{Error, FamilyConfig};

/// Random iterations of J-monotone maps: splitting checks, synchronization,
/// stationary sampling and CLT diagnostics.
#[derive(Debug, Parser)]
#[command(name = "jsplit", version)]
struct Cli {
    #[command(subcommand)]
    command: CliCommand,

    /// Built-in family name (cantor1d, cantor2d, exp1d, fig1-2d, lip-pair,
    /// affine-general, constant).
    #[arg(long, global = true, conflicts_with = "config")]
    family: Option<String>,

    /// Family configuration as a JSON file.
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// Override the symbol probabilities, comma separated.
    #[arg(long, global = true, value_delimiter = ',')]
    probs: Option<Vec<f64>>,

    /// Override the index set J (1-based, comma separated).
    #[arg(long = "j", global = true, value_delimiter = ',')]
    j: Option<Vec<usize>>,

    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,

    /// Worker thread cap (results do not depend on it).
    #[arg(long, global = true)]
    threads: Option<usize>,

    /// Output directory.
    #[arg(long, global = true, default_value = ".")]
    out: PathBuf,
}

#[derive(Debug, Subcommand)]
enum CliCommand {
    #[command(flatten)]
    Run(Command),
    /// Re-run a manifest written by an earlier run.
    Replay { manifest: PathBuf },
}

fn family_config(cli: &Cli) -> Result<FamilyConfig, Error> {
    let mut cfg = match (&cli.family, &cli.config) {
        (Some(name), None) => FamilyConfig::named(name),
        (None, Some(path)) => serde_json::from_str(&std::fs::read_to_string(path)?)?,
        _ => return Err(Error::usage("exactly one of --family or --config is required")),
    };
    if let Some(p) = &cli.probs {
        cfg.probs = Some(p.clone());
        cfg.noise = None;
    }
    if let Some(j) = &cli.j {
        cfg.j = Some(j.clone());
    }
    Ok(cfg)
}

fn run(cli: Cli) -> Result<ExitCode, Error> {
    if let Some(n) = cli.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n.max(1))
            .build_global()
            .map_err(|e| Error::usage(e.to_string()))?;
    }
    let cfg = match &cli.command {
        CliCommand::Replay { manifest } => RunConfig::load(manifest)?,
        CliCommand::Run(command) => RunConfig {
            seed: cli.seed,
            family: family_config(&cli)?,
            command: command.clone(),
        },
    };
    let outcome = execute(&cfg, &cli.out)?;
    for line in &outcome.summary {
        println!("{line}");
    }
    match outcome.soft {
        None => Ok(ExitCode::SUCCESS),
        Some(e) => {
            eprintln!("jsplit: {e}");
            Ok(ExitCode::from(2))
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.exit_code() == 0 {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(1)
            };
        }
    };
    match run(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("jsplit: {e}");
            ExitCode::from(1)
        }
    }
}
