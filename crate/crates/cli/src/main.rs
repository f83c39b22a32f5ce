//! `spectropt`: torsion, spectra, γ-distances, optimizers, the check suite
//! and parameter sweeps from JSON configs.

mod commands;
mod config;
mod error;
mod output;
mod svg;
mod sweep;

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use config::RunConfig;
use error::CliError;

#[derive(Parser)]
#[command(name = "spectropt", version, about = "Spectral optimization of Schrödinger operators on grids")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(clap::Args, Clone)]
struct Common {
    /// JSON run configuration.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Output directory; overrides `output.dir`.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Seed for optimizers and random families; overrides the config.
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Subcommand)]
enum Command {
    /// Torsion function and torsion of one measure.
    Torsion(Common),
    /// Lowest `problem.k` eigenpairs.
    Eigs(Common),
    /// γ-distance between `potential` and `other`.
    Gamma(Common),
    /// Penalized optimization of `λ_k`.
    Optimize(Common),
    /// The numerical check suite.
    Verify {
        #[command(flatten)]
        common: Common,
        /// Comma-separated check names or tags.
        #[arg(long, value_delimiter = ',')]
        filter: Vec<String>,
    },
    /// Cartesian sweep over config fields.
    Sweep {
        #[command(flatten)]
        common: Common,
        /// Concurrent points.
        #[arg(long)]
        jobs: Option<usize>,
    },
}

fn init_logging() {
    let level = match std::env::var("SPECTROPT_LOG").as_deref() {
        Ok("quiet") => log::LevelFilter::Off,
        Ok("info") => log::LevelFilter::Info,
        Ok("debug") => log::LevelFilter::Debug,
        _ => log::LevelFilter::Warn,
    };
    env_logger::Builder::new().filter_level(level).format_timestamp(None).init();
}

fn load(common: &Common, required: bool) -> Result<RunConfig, CliError> {
    let mut cfg = match &common.config {
        Some(path) => RunConfig::load(path)?,
        None if required => return Err(CliError::Config("--config is required".into())),
        None => RunConfig::default(),
    };
    if let Some(seed) = common.seed {
        cfg.solver.seed = seed;
    }
    if let Some(out) = &common.out {
        cfg.output.dir = Some(out.clone());
    }
    Ok(cfg)
}

fn out_dir(cfg: &RunConfig) -> Result<PathBuf, CliError> {
    cfg.output
        .dir
        .clone()
        .ok_or_else(|| CliError::Config("no output directory: pass --out or set `output.dir`".into()))
}

fn single(common: &Common, name: &str, run: impl Fn(&RunConfig) -> Result<output::Artifacts, CliError>) -> Result<u8, CliError> {
    let cfg = load(common, true)?;
    let dir = out_dir(&cfg)?;
    log::info!("{name}: writing to {}", dir.display());
    run(&cfg)?.write(&dir, name, &cfg)?;
    Ok(0)
}

fn verify(common: &Common, filter: &[String]) -> Result<u8, CliError> {
    let mut cfg = load(common, false)?;
    let dir = out_dir(&cfg)?;
    let mut vc = cfg.verify.clone().unwrap_or_default();
    if !filter.is_empty() {
        vc.filter = filter.to_vec();
    }
    if common.seed.is_some() || cfg.verify.is_none() {
        vc.seed = cfg.solver.seed;
    }
    cfg.verify = Some(vc.clone());
    let (artifacts, reports) = commands::verify(&vc)?;
    artifacts.write(&dir, "verify", &cfg)?;
    let failed: Vec<&str> = reports.iter().filter(|r| !r.passed).map(|r| r.name.as_str()).collect();
    for r in &reports {
        log::info!("{}: {}", r.name, if r.passed { "pass" } else { "FAIL" });
    }
    if failed.is_empty() {
        Ok(0)
    } else {
        eprintln!("{}", serde_json::json!({ "error": "verify", "code": 1, "failed": failed }));
        Ok(1)
    }
}

fn sweep(common: &Common, jobs: Option<usize>) -> Result<u8, CliError> {
    let cfg = load(common, true)?;
    let dir = out_dir(&cfg)?;
    let failures = sweep::run(&cfg, Path::new(&dir), jobs)?;
    if failures == 0 {
        Ok(0)
    } else {
        eprintln!("{}", serde_json::json!({ "error": "sweep", "code": 1, "failed_points": failures }));
        Ok(1)
    }
}

fn main() -> ExitCode {
    init_logging();
    let cli = Cli::parse();
    let res = match &cli.command {
        Command::Torsion(c) => single(c, "torsion", commands::torsion),
        Command::Eigs(c) => single(c, "eigs", commands::eigs),
        Command::Gamma(c) => single(c, "gamma", commands::gamma),
        Command::Optimize(c) => single(c, "optimize", |cfg| commands::optimize(cfg, cfg.solver.seed)),
        Command::Verify { common, filter } => verify(common, filter),
        Command::Sweep { common, jobs } => sweep(common, *jobs),
    };
    match res {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("{}", e.record());
            ExitCode::from(e.code() as u8)
        }
    }
}
