//! Command-line front end for the qcomb noise model.

pub mod commands;
pub mod config;
pub mod mcsuite;
pub mod output;

use std::fmt;
use std::io::Write;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};

use crate::config::{Effective, Layers};
use crate::output::{render_csv, write_text, DataTable, Metadata};

#[derive(Debug, Parser)]
#[command(name = "qcomb", version, about = "Quantum noise model of entanglement-enhanced dual-comb spectroscopy")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Noise budget and SNR at a single operating point.
    Snr(CommonArgs),
    /// One- or two-axis parameter sweep of the noise budget.
    Sweep(CommonArgs),
    /// Monte-Carlo verification of the analytic model; exits 1 on failure.
    McVerify(CommonArgs),
    /// Absorption-limited quantum advantage through a water layer.
    Water(CommonArgs),
}

#[derive(Debug, Clone, Args)]
pub struct CommonArgs {
    /// TOML run configuration.
    #[arg(long, value_name = "FILE")]
    pub config: Option<PathBuf>,
    /// Built-in base configuration (fig1c, fig3, fig4, fig4-diagonal, fig5).
    #[arg(long, value_name = "NAME")]
    pub preset: Option<String>,
    /// Override a config key, e.g. --set comb.gain_db=20 (repeatable).
    #[arg(long = "set", value_name = "KEY=VALUE")]
    pub overrides: Vec<String>,
    /// Write the CSV here instead of standard output.
    #[arg(long, value_name = "CSV")]
    pub out: Option<PathBuf>,
    /// Also render an SVG next to the CSV (requires --out).
    #[arg(long)]
    pub plot: bool,
    /// Monte-Carlo seed (overrides mc.seed).
    #[arg(long, value_name = "N")]
    pub seed: Option<u64>,
    /// Absorption table CSV for `water` (overrides water.absorption).
    #[arg(long, value_name = "PATH")]
    pub absorption: Option<PathBuf>,
}

/// A verification check failed; maps to exit code 1.
#[derive(Debug)]
pub struct CheckFailure(pub String);

impl fmt::Display for CheckFailure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for CheckFailure {}

pub const EXIT_CHECK_FAILURE: i32 = 1;
pub const EXIT_USAGE: i32 = 2;

/// Exit code for an error returned by [`run`].
pub fn exit_code(err: &anyhow::Error) -> i32 {
    if err.downcast_ref::<CheckFailure>().is_some() {
        EXIT_CHECK_FAILURE
    } else {
        EXIT_USAGE
    }
}

fn load(args: &CommonArgs) -> Result<Effective> {
    if args.config.is_none() && args.preset.is_none() && args.overrides.is_empty() {
        log::info!("no --config or --preset given; using defaults");
    }
    if args.plot && args.out.is_none() {
        bail!("--plot requires --out");
    }
    let mut overrides = args.overrides.clone();
    if let Some(seed) = args.seed {
        overrides.push(format!("mc.seed={seed}"));
    }
    config::load(&Layers {
        preset: args.preset.as_deref(),
        file: args.config.as_deref(),
        overrides: &overrides,
    })
}

fn emit(args: &CommonArgs, effective: &Effective, command: &str, table: &DataTable, rng: bool, stdout: &mut dyn Write) -> Result<()> {
    let meta = Metadata {
        command: command.into(),
        config_hash: effective.hash(),
        seed: rng.then_some(effective.config.mc.seed),
        rng: rng.then(|| qcomb_core::mc::RNG_ALGORITHM.to_string()),
        effective_config: effective.canonical(),
    };
    let text = render_csv(&meta, table, effective.config.output.precision)?;
    match &args.out {
        Some(path) => write_text(path, &text)?,
        None => stdout.write_all(text.as_bytes())?,
    }
    Ok(())
}

fn write_plot(out: &Path, svg: &str) -> Result<PathBuf> {
    let path = out.with_extension("svg");
    write_text(&path, svg)?;
    Ok(path)
}

/// Runs one command, writing results to `stdout` or the `--out` file and
/// diagnostics to `stderr`.
pub fn run(cli: &Cli, stdout: &mut dyn Write, stderr: &mut dyn Write) -> Result<()> {
    match &cli.command {
        Command::Snr(args) => {
            let e = load(args)?;
            if args.plot {
                bail!("snr evaluates a single point; --plot applies to sweep and water");
            }
            stdout.write_all(commands::snr_report(&e)?.as_bytes())?;
            let table = commands::snr_table(&e)?;
            emit(args, &e, "snr", &table, false, stdout)
        }
        Command::Sweep(args) => {
            let e = load(args)?;
            let table = commands::sweep_table(&e)?;
            emit(args, &e, "sweep", &table, false, stdout)?;
            if let (true, Some(out)) = (args.plot, &args.out) {
                let path = write_plot(out, &commands::plot(&e, &table, "snr_db_amp")?)?;
                writeln!(stderr, "plot written to {}", path.display())?;
            }
            writeln!(stderr, "{} rows", table.rows.len())?;
            Ok(())
        }
        Command::Water(args) => {
            let e = load(args)?;
            let absorption = e.config.absorption_table(args.absorption.as_deref())?;
            let table = commands::water_table(&e, &absorption)?;
            emit(args, &e, "water", &table, false, stdout)?;
            if let (true, Some(out)) = (args.plot, &args.out) {
                let path = write_plot(out, &commands::plot(&e, &table, "advantage_db_amp")?)?;
                writeln!(stderr, "plot written to {}", path.display())?;
            }
            Ok(())
        }
        Command::McVerify(args) => {
            let e = load(args)?;
            if args.plot {
                bail!("mc-verify has no plot");
            }
            let table = mcsuite::run_suite(&e.config, e.config.mc.seed).context("mc-verify")?;
            emit(args, &e, "mc-verify", &table, true, stdout)?;
            let (passed, total) = mcsuite::tally(&table);
            writeln!(stderr, "mc-verify: {passed}/{total} checks passed")?;
            if passed != total {
                return Err(CheckFailure(format!("{} of {total} checks failed", total - passed)).into());
            }
            Ok(())
        }
    }
}
