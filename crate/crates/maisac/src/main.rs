use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use log::{error, warn, LevelFilter};
use maisac::config_file::{parse_config, parse_profile};
use maisac::{execute, parse_seeds, Command, Options};
use maisac_core::config::ExperimentConfig;

#[derive(Debug, Clone, Copy, ValueEnum)]
enum LogLevel {
    Quiet,
    Normal,
    Debug,
}

#[derive(Debug, Parser)]
#[command(name = "maisac", version, about = "Movable-antenna ISAC placement and beamforming experiments")]
struct Cli {
    #[command(subcommand)]
    command: Cmd,
    /// TOML config file; defaults apply when omitted
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory
    #[arg(long, global = true, default_value = "out")]
    out: PathBuf,
    /// Seed list, e.g. `0-19,25`
    #[arg(long, global = true)]
    seeds: Option<String>,
    /// Parameter profile: desk or paper
    #[arg(long, global = true)]
    profile: Option<String>,
    /// Worker threads (default: available cores)
    #[arg(long, global = true)]
    workers: Option<usize>,
    /// Monte Carlo samples for the empirical outage
    #[arg(long, global = true)]
    samples: Option<usize>,
    #[arg(long, global = true, value_enum, default_value = "normal")]
    log: LogLevel,
    /// Record wall-clock runtimes in results.csv
    #[arg(long, global = true)]
    timing: bool,
    /// Write channel_<seed>.txt for every seed
    #[arg(long, global = true)]
    dump_channels: bool,
}

#[derive(Debug, Subcommand)]
enum Cmd {
    /// All configured schemes at the base parameters
    Run,
    /// All configured schemes across the [sweep] values
    Sweep,
    /// Fixed array and antenna selection only
    Baseline,
    /// Exhaustive placement search against the alternating optimization
    Oracle,
    /// Monte Carlo check of the sensing outage of each design
    VerifyChance,
}

fn load(cli: &Cli) -> anyhow::Result<ExperimentConfig> {
    let profile = cli.profile.as_deref().map(parse_profile).transpose()?;
    let mut cfg = match &cli.config {
        Some(p) => parse_config(p, profile)?,
        None => maisac::parse_str("", profile)?,
    };
    if let Some(s) = &cli.seeds {
        cfg.seeds = parse_seeds(s).map_err(anyhow::Error::msg)?;
    }
    if let Some(n) = cli.samples {
        cfg.samples = n;
    }
    cfg.validate()?;
    Ok(cfg)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let level = match cli.log {
        LogLevel::Quiet => LevelFilter::Error,
        LogLevel::Normal => LevelFilter::Info,
        LogLevel::Debug => LevelFilter::Debug,
    };
    env_logger::Builder::new().filter_level(level).format_timestamp(None).init();

    let cfg = match load(&cli) {
        Ok(c) => c,
        Err(e) => {
            error!("config: {e:#}");
            return ExitCode::from(2);
        }
    };
    let cmd = match cli.command {
        Cmd::Run => Command::Run,
        Cmd::Sweep => Command::Sweep,
        Cmd::Baseline => Command::Baseline,
        Cmd::Oracle => Command::Oracle,
        Cmd::VerifyChance => Command::VerifyChance,
    };
    let mut opts = Options::new(&cli.out);
    if let Some(w) = cli.workers {
        opts.workers = w;
    }
    opts.timing = cli.timing;
    opts.dump_channels = cli.dump_channels;
    opts.dump_programs = matches!(cli.log, LogLevel::Debug);

    match execute(cmd, &cfg, &opts) {
        Ok(s) if s.ok() => ExitCode::SUCCESS,
        Ok(s) => {
            warn!("{} flagged failure(s):", s.failures.len());
            for f in &s.failures {
                warn!("  {f}");
            }
            ExitCode::from(1)
        }
        Err(e) => {
            error!("{e:#}");
            ExitCode::from(1)
        }
    }
}
