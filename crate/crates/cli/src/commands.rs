//! `snr`, `sweep` and `water`.

use anyhow::{bail, Context, Result};
use rayon::prelude::*;

use qcomb_core::budget::{classical_counterpart, quantum_advantage, snr_full, NoiseBreakdown};
use qcomb_core::gaussian::SqueezeGain;
use qcomb_core::model::Environment;
use qcomb_core::spectra::{water_limited_advantage, AbsorptionTable};

use crate::config::{Effective, RunConfig, Scale};
use crate::output::{Cell, DataTable};

pub const BUDGET_COLUMNS: &[&str] = &[
    "signal_power_w",
    "lo_power_w",
    "gamma",
    "sigma2_nep",
    "sigma2_quad",
    "sigma2_rin",
    "snr",
    "snr_db_amp",
    "advantage_db_amp",
    "dominant",
];

pub const WATER_COLUMNS: &[&str] = &["kappa", "occupation", "advantage_db_amp", "flagged"];

/// Noise budget and advantage over coherent combs at one point.
pub fn evaluate_budget(cfg: &RunConfig) -> Result<(NoiseBreakdown<f64>, f64)> {
    let p = cfg.point()?;
    let s = &p.scenario;
    let budget = snr_full(&s.config, &s.sample, &s.lo, &s.env, &p.detector, p.line)?;
    let advantage = quantum_advantage(
        &s.config,
        &classical_counterpart(&s.config),
        &s.sample,
        &s.lo,
        &s.env,
        &p.detector,
        p.line,
    )?;
    Ok((budget, advantage))
}

fn budget_cells(cfg: &RunConfig) -> Result<Vec<Cell>> {
    let (b, advantage) = evaluate_budget(cfg)?;
    let (ps, plo) = cfg.comb.powers()?;
    Ok(vec![
        Cell::Num(ps),
        Cell::Num(plo),
        Cell::Num(b.gamma),
        Cell::Num(b.sigma2_nep),
        Cell::Num(b.sigma2_quad),
        Cell::Num(b.sigma2_rin),
        Cell::Num(b.snr),
        Cell::Num(b.snr_db()),
        Cell::Num(advantage),
        Cell::Text(b.dominant().to_string()),
    ])
}

fn water_cells(cfg: &RunConfig, table: &AbsorptionTable<f64>) -> Result<Vec<Cell>> {
    let gain = SqueezeGain::from_db(cfg.comb.gain_db).context("comb.gain_db")?;
    let env = Environment::new(cfg.water.temperature_k).context("water.temperature_k")?;
    let a = water_limited_advantage(
        table,
        cfg.water.wavelength_um,
        cfg.water.path_length_um,
        gain,
        cfg.comb.gamma_value()?,
        &env,
    )?;
    Ok(vec![
        Cell::Num(a.kappa),
        Cell::Num(a.occupation),
        Cell::Num(a.db),
        Cell::Bool(a.flagged),
    ])
}

/// Grid points in row-major order over the sweep axes.
pub fn grid(effective: &Effective) -> Result<(Vec<String>, Vec<Vec<f64>>)> {
    let axes = &effective.config.sweeps;
    if axes.len() > 2 {
        bail!("at most 2 sweep axes are supported, got {}", axes.len());
    }
    let names: Vec<String> = axes.iter().map(|a| a.var.clone()).collect();
    let mut points: Vec<Vec<f64>> = vec![Vec::new()];
    for axis in axes {
        let values = axis.grid()?;
        points = points
            .into_iter()
            .flat_map(|p| {
                values.iter().map(move |v| {
                    let mut q = p.clone();
                    q.push(*v);
                    q
                })
            })
            .collect();
    }
    Ok((names, points))
}

fn run_grid<F>(effective: &Effective, result_columns: &[&str], eval: F) -> Result<DataTable>
where
    F: Fn(&RunConfig) -> Result<Vec<Cell>> + Sync,
{
    let (names, points) = grid(effective)?;
    let rows: Vec<Result<Vec<Cell>>> = points
        .par_iter()
        .map(|values| {
            let assignments: Vec<(&str, f64)> = names.iter().map(String::as_str).zip(values.iter().copied()).collect();
            let cfg = effective.with_values(&assignments)?;
            let mut row: Vec<Cell> = values.iter().map(|v| Cell::Num(*v)).collect();
            row.extend(eval(&cfg).with_context(|| describe(&assignments))?);
            Ok(row)
        })
        .collect();
    let mut table = DataTable::new(names.iter().cloned().chain(result_columns.iter().map(|c| c.to_string())).collect());
    for row in rows {
        table.rows.push(row?);
    }
    Ok(table)
}

fn describe(assignments: &[(&str, f64)]) -> String {
    if assignments.is_empty() {
        return "at the configured point".into();
    }
    let parts: Vec<String> = assignments.iter().map(|(k, v)| format!("{k}={v}")).collect();
    format!("at {}", parts.join(", "))
}

pub fn snr_table(effective: &Effective) -> Result<DataTable> {
    let cfg = &effective.config;
    let mut table = DataTable::new(
        ["gain_db", "squeeze"]
            .iter()
            .chain(BUDGET_COLUMNS)
            .map(|s| s.to_string())
            .collect(),
    );
    let mut row = vec![
        Cell::Num(cfg.comb.gain_db),
        Cell::Text(format!("{:?}", cfg.comb.squeeze).to_lowercase()),
    ];
    row.extend(budget_cells(cfg)?);
    table.rows.push(row);
    Ok(table)
}

/// Human-readable summary of a single-point budget.
pub fn snr_report(effective: &Effective) -> Result<String> {
    let cfg = &effective.config;
    let (b, advantage) = evaluate_budget(cfg)?;
    let (ps, plo) = cfg.comb.powers()?;
    let lines = [
        ("P_S [W]", format!("{ps:.4e}")),
        ("P_LO [W]", format!("{plo:.4e}")),
        ("gamma", format!("{:.4}", b.gamma)),
        ("gain [dB, 10log10 G]", format!("{} ({:?})", cfg.comb.gain_db, cfg.comb.squeeze).to_lowercase()),
        ("sigma2_NEP", format!("{:.4e}", b.sigma2_nep)),
        ("sigma2_quad", format!("{:.4e}", b.sigma2_quad)),
        ("sigma2_RIN", format!("{:.4e}", b.sigma2_rin)),
        ("SNR", format!("{:.4}", b.snr)),
        ("SNR [dB, amplitude]", format!("{:.3}", b.snr_db())),
        ("advantage [dB, amplitude]", format!("{advantage:.3}")),
        ("dominant noise", b.dominant().to_string()),
    ];
    let width = lines.iter().map(|(k, _)| k.len()).max().unwrap_or(0);
    Ok(lines
        .iter()
        .map(|(k, v)| format!("{k:<width$}  {v}\n"))
        .collect())
}

pub fn sweep_table(effective: &Effective) -> Result<DataTable> {
    if effective.config.sweeps.is_empty() {
        bail!("sweep needs at least one [[sweep]] axis");
    }
    run_grid(effective, BUDGET_COLUMNS, budget_cells)
}

pub fn water_table(effective: &Effective, table: &AbsorptionTable<f64>) -> Result<DataTable> {
    run_grid(effective, WATER_COLUMNS, |cfg| water_cells(cfg, table))
}

/// Chooses a plot for a sweep result: lines for one axis or a short second
/// axis, otherwise a heat map.
pub fn plot(effective: &Effective, table: &DataTable, default_column: &str) -> Result<String> {
    let axes = &effective.config.sweeps;
    let column = effective.config.output.plot_column.as_deref().unwrap_or(default_column);
    match axes.len() {
        0 => bail!("--plot needs at least one sweep axis"),
        1 => crate::output::line_plot(table, &axes[0].var, column, None, axes[0].scale() == Scale::Log),
        _ => {
            let (x, y) = (&axes[0], &axes[1]);
            if y.grid()?.len() <= 8 {
                crate::output::line_plot(table, &x.var, column, Some(&y.var), x.scale() == Scale::Log)
            } else {
                crate::output::heat_map(table, &x.var, &y.var, column, x.scale() == Scale::Log, y.scale() == Scale::Log)
            }
        }
    }
}
