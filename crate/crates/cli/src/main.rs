//! `spdelab` command line: certify hypotheses, run ensembles and bound checks,
//! and write CSV/JSON artifacts.

mod commands;
mod config;
mod error;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use crate::commands::{Options, Status};
use crate::config::ExperimentConfig;
use crate::error::CliError;

#[derive(Debug, Parser)]
#[command(name = "spdelab", version, about = "Stochastic reaction-diffusion laboratory")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// Experiment config (TOML).
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Overrides `ensemble.master_seed`.
    #[arg(long, global = true, env = "SPDELAB_SEED")]
    seed: Option<u64>,
    /// Overrides `ensemble.paths`.
    #[arg(long, global = true)]
    paths: Option<usize>,
    /// Overrides `output_dir`.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Accept grid-verified-only certificates.
    #[arg(long, global = true)]
    allow_grid: bool,
    /// Worker threads for ensembles.
    #[arg(long, global = true, env = "SPDELAB_THREADS")]
    threads: Option<usize>,
}

#[derive(Debug, Clone, Copy, Subcommand)]
enum Command {
    /// Certify coercivity and growth (and optionally H3); writes certificate.json.
    Certify,
    /// Run an ensemble, estimate moments and check bounds; writes moments.csv and reports.json.
    Simulate,
    /// Picard iteration on frozen noise against the contraction budget; writes picard.json.
    Picard,
    /// Kolmogorov continuity bound; writes kolmogorov.json.
    Kolmogorov,
    /// Summarize the artifacts in the output directory; writes summary.json.
    Report,
}

fn load(cli: &Cli) -> Result<ExperimentConfig, CliError> {
    let path = cli
        .config
        .as_ref()
        .ok_or_else(|| CliError::Config("--config is required".into()))?;
    let mut cfg = ExperimentConfig::load(path)?;
    if let Some(seed) = cli.seed {
        cfg.ensemble.master_seed = seed;
    }
    if let Some(paths) = cli.paths {
        cfg.ensemble.paths = paths;
        cfg.kolmogorov.paths = paths;
    }
    cfg.validate()?;
    Ok(cfg)
}

fn run(cli: &Cli) -> Result<Status, CliError> {
    if let Some(n) = cli.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| CliError::Config(format!("threads: {e}")))?;
    }
    if let Command::Report = cli.command {
        let out = match (&cli.out, &cli.config) {
            (Some(out), _) => out.clone(),
            (None, Some(_)) => load(cli)?.output_dir,
            (None, None) => return Err(CliError::Config("report needs --out or --config".into())),
        };
        return commands::report(&Options {
            out,
            allow_grid: cli.allow_grid,
        });
    }
    let cfg = load(cli)?;
    let opts = Options {
        out: cli.out.clone().unwrap_or_else(|| cfg.output_dir.clone()),
        allow_grid: cli.allow_grid,
    };
    // Resolved config next to the artifacts, so runs replay from the output dir alone.
    std::fs::create_dir_all(&opts.out)?;
    std::fs::write(opts.out.join(commands::CONFIG_FILE), cfg.to_toml()?)?;
    match cli.command {
        Command::Certify => commands::certify(&cfg, &opts),
        Command::Simulate => commands::simulate(&cfg, &opts),
        Command::Picard => commands::picard(&cfg, &opts),
        Command::Kolmogorov => commands::kolmogorov(&cfg, &opts),
        Command::Report => unreachable!(),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(&cli) {
        Ok(status) => ExitCode::from(status.code() as u8),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
    }
}
