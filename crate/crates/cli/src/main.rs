use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use proxybound::experiment::{run, ExperimentConfig};
use proxybound::Error;

/// Bound the energy distribution of a state from the statistics of other
/// measurements.
#[derive(Debug, Parser)]
#[command(name = "proxybound", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Run an experiment and write `summary.json` and `bounds.csv`.
    Run {
        config: PathBuf,
        #[command(flatten)]
        common: Common,
        /// Directory receiving `<name>/`; overrides the config's `output_dir`.
        #[arg(long)]
        output_dir: Option<PathBuf>,
        /// Worker threads (0 lets the pool decide).
        #[arg(long, env = "PROXYBOUND_THREADS", default_value_t = 0)]
        threads: usize,
    },
    /// Check a config without computing anything.
    Validate {
        config: PathBuf,
        #[command(flatten)]
        common: Common,
    },
}

#[derive(Debug, Args)]
struct Common {
    /// Replace a seed, e.g. `disorder=3`. Repeatable.
    #[arg(long = "seed-override", value_name = "NAME=INT", value_parser = parse_seed)]
    seed_overrides: Vec<(String, u64)>,
}

fn parse_seed(s: &str) -> Result<(String, u64), String> {
    let (name, value) = s
        .split_once('=')
        .ok_or_else(|| format!("`{s}` is not NAME=INT"))?;
    let value = value
        .trim()
        .parse()
        .map_err(|e| format!("seed `{value}`: {e}"))?;
    Ok((name.trim().to_string(), value))
}

const CONFIG_ERROR: u8 = 1;
const RUNTIME_ERROR: u8 = 2;

fn load(path: &Path, common: &Common) -> Result<ExperimentConfig, ExitCode> {
    let mut config = ExperimentConfig::from_path(path).map_err(|e| {
        eprintln!("error: {e}");
        ExitCode::from(CONFIG_ERROR)
    })?;
    for (name, value) in &common.seed_overrides {
        if let Err(e) = config.override_seed(name, *value) {
            eprintln!("error: {e}");
            return Err(ExitCode::from(CONFIG_ERROR));
        }
    }
    let issues = config.validate();
    if !issues.is_empty() {
        eprintln!("error: {} has {} problem(s):", path.display(), issues.len());
        for issue in &issues {
            eprintln!("  {issue}");
        }
        return Err(ExitCode::from(CONFIG_ERROR));
    }
    Ok(config)
}

fn execute(cli: Cli) -> Result<(), ExitCode> {
    match cli.command {
        Command::Validate { config, common } => {
            load(&config, &common)?;
            println!("{}: ok", config.display());
            Ok(())
        }
        Command::Run {
            config: path,
            common,
            output_dir,
            threads,
        } => {
            let mut config = load(&path, &common)?;
            if let Some(dir) = output_dir {
                config.output_dir = dir;
            }
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(threads)
                .build()
                .map_err(|e| {
                    eprintln!("error: thread pool: {e}");
                    ExitCode::from(RUNTIME_ERROR)
                })?;
            let summary = pool.install(|| run(&config)).map_err(|e| {
                eprintln!("error: {e}");
                ExitCode::from(match e {
                    Error::Config(_) => CONFIG_ERROR,
                    _ => RUNTIME_ERROR,
                })
            })?;
            let dir = summary.write(&config.output_dir).map_err(|e| {
                eprintln!("error: writing results: {e}");
                ExitCode::from(RUNTIME_ERROR)
            })?;
            println!("{}", dir.display());
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    match execute(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(code) => code,
    }
}
