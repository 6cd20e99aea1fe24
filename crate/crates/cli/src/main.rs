// `!(x > 0.0)` is used on purpose so that NaN fails validation.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

mod args;
mod cmd;
mod config;
mod error;
mod formats;
mod output;
mod sweep;

use args::{Cli, Command, DiagCommand, Overlay};
use clap::Parser;
use config::ConfigFile;
use error::{CliError, CliResult};
use output::{Format, RunOutput};
use std::path::PathBuf;
use std::time::Instant;

pub const THREADS_ENV: &str = "OSCILLOTEX_THREADS";

fn thread_count(flag: Option<usize>) -> CliResult<usize> {
    match std::env::var(THREADS_ENV) {
        Ok(v) if !v.trim().is_empty() => v
            .trim()
            .parse()
            .map_err(|_| CliError::Validation(format!("{THREADS_ENV} must be a nonnegative integer, got {v:?}"))),
        _ => Ok(flag.unwrap_or(0)),
    }
}

fn execute(cli: Cli) -> CliResult<()> {
    let cfg = match &cli.config {
        Some(p) => ConfigFile::load(p)?,
        None => ConfigFile {
            schema_version: config::SCHEMA_VERSION,
            ..Default::default()
        },
    };
    let format = cli.format.or(cfg.format).unwrap_or(Format::Csv);
    let out_dir = cli.out_dir.clone().or(cfg.out_dir.clone()).unwrap_or_else(|| PathBuf::from("out"));
    let threads = thread_count(cli.threads.or(cfg.threads))?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| CliError::Numeric(format!("thread pool: {e}")))?;
    let start = Instant::now();

    // resolve and validate everything before any computation
    enum Planned {
        Stokes2(cmd::stokes2::Stokes2Params),
        Couette(cmd::couette::CouetteParams),
        Toeplitz(cmd::toeplitz::ToeplitzParams),
        Pseudo(cmd::diag::PseudoParams),
        Numrange(cmd::diag::NumrangeParams),
        Corner(cmd::diag::CornerParams),
    }
    let planned = match cli.command {
        Command::Verify(a) => return pool.install(|| cmd::verify::run(&a, format)),
        Command::Stokes2(a) => Planned::Stokes2(cmd::stokes2::Stokes2Params::resolve(&a.overlay(cfg.stokes2))?),
        Command::Couette(a) => Planned::Couette(cmd::couette::CouetteParams::resolve(&a.overlay(cfg.couette))?),
        Command::Toeplitz(a) => Planned::Toeplitz(cmd::toeplitz::ToeplitzParams::resolve(&a.overlay(cfg.toeplitz))?),
        Command::Diag { which } => match which {
            DiagCommand::Pseudo(a) => Planned::Pseudo(cmd::diag::PseudoParams::resolve(&a.overlay(cfg.diag.pseudo))?),
            DiagCommand::Numrange(a) => {
                Planned::Numrange(cmd::diag::NumrangeParams::resolve(&a.overlay(cfg.diag.numrange))?)
            }
            DiagCommand::Corner(a) => Planned::Corner(cmd::diag::CornerParams::resolve(&a.overlay(cfg.diag.corner))?),
        },
    };
    let run: RunOutput = pool.install(|| match &planned {
        Planned::Stokes2(p) => cmd::stokes2::run(p, format),
        Planned::Couette(p) => cmd::couette::run(p, format),
        Planned::Toeplitz(p) => cmd::toeplitz::run(p, format),
        Planned::Pseudo(p) => cmd::diag::run_pseudo(p, format),
        Planned::Numrange(p) => cmd::diag::run_numrange(p, format),
        Planned::Corner(p) => cmd::diag::run_corner(p, format),
    })?;
    for w in &run.warnings {
        eprintln!("warning: {w}");
    }
    let manifest = output::commit(&out_dir, run, pool.current_num_threads(), start.elapsed().as_secs_f64())?;
    for o in &manifest.outputs {
        println!("{}  {}", o.sha256, out_dir.join(&o.path).display());
    }
    println!("scenario {}", manifest.scenario_hash);
    Ok(())
}

fn main() {
    let cli = Cli::parse();
    if let Err(e) = execute(cli) {
        eprintln!("oscillotex: {e}");
        std::process::exit(e.exit_code());
    }
}
