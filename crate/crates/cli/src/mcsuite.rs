//! Default Monte-Carlo verification suite behind `qcomb mc-verify`.

use anyhow::{Context, Result};

use qcomb_core::gaussian::SqueezeGain;
use qcomb_core::mc::{
    compare_synthesis_paths, verify_crb, verify_dft, verify_quadrature_independence, verify_variance_against,
    CheckRecord, McRun, SynthesisMode, CRB_TOLERANCE,
};
use qcomb_core::model::{snr_fundamental, DualCombConfig, Environment, LineChannel, Scenario};
use qcomb_core::num::consts::PLANCK;

use crate::config::{McSection, RunConfig};
use crate::output::{Cell, DataTable};

pub const COLUMNS: &[&str] = &["check", "line", "analytic", "empirical", "standard_error", "z_score", "pass"];

struct Suite<'a> {
    mc: &'a McSection,
    seed: u64,
    wavelength_m: f64,
    records: Vec<CheckRecord>,
}

impl Suite<'_> {
    fn config(&self, lines: usize) -> Result<DualCombConfig<f64>> {
        let carrier = qcomb_core::num::consts::SPEED_OF_LIGHT / self.wavelength_m;
        let ps = self.mc.signal_photons * lines as f64 * PLANCK * carrier;
        DualCombConfig::new(lines, self.wavelength_m, 1.0, ps, self.mc.gamma * ps).context("mc config")
    }

    fn gain(&self) -> Result<SqueezeGain<f64>> {
        SqueezeGain::from_db(self.mc.gain_db).context("mc.gain_db")
    }

    fn run(&self, scenario: Scenario<f64>, samples: usize, mode: SynthesisMode) -> Result<McRun> {
        Ok(McRun::new(scenario, self.seed, samples, mode)?)
    }

    fn variance(&mut self, name: &str, run: &McRun, m: usize) -> Result<()> {
        let analytic = run.analytic_variance(m)? * self.mc.corrupt_analytic.unwrap_or(1.0);
        let report = verify_variance_against(run, m, analytic, self.mc.tolerance_sigmas)?;
        self.records.push(report.record(name));
        Ok(())
    }
}

pub fn run_suite(cfg: &RunConfig, seed: u64) -> Result<DataTable> {
    let mc = &cfg.mc;
    let mut suite = Suite {
        mc,
        seed,
        wavelength_m: cfg.comb.wavelength_um * 1e-6,
        records: Vec::new(),
    };
    let n = mc.samples;
    let lines = mc.lines;
    let g = suite.gain()?;
    let tol = mc.tolerance_sigmas;

    let classical = Scenario::ideal(suite.config(lines)?);
    let squeezed = Scenario::ideal(suite.config(lines)?.with_gains(g, g));
    let thermal = {
        let config = suite.config(lines)?.with_gains(g, g);
        let env = Environment::with_occupation_at(config.line_frequency(1), 0.01)?;
        Scenario {
            config,
            sample: LineChannel::uniform(0.5, 0.0)?,
            lo: LineChannel::ideal(),
            env,
        }
    };

    let m = 1;
    suite.variance("variance_classical", &suite.run(classical.clone(), n, SynthesisMode::FrequencyDomain)?, m)?;
    suite.variance("variance_squeezed", &suite.run(squeezed.clone(), n, SynthesisMode::FrequencyDomain)?, m)?;
    suite.variance("variance_thermal_lossy", &suite.run(thermal.clone(), n, SynthesisMode::FrequencyDomain)?, m)?;
    suite.variance("variance_time_domain", &suite.run(thermal.clone(), n, SynthesisMode::TimeDomain)?, lines)?;

    let paths = compare_synthesis_paths(&suite.run(thermal.clone(), n, SynthesisMode::FrequencyDomain)?, lines, tol)?;
    suite.records.push(paths.record("time_vs_frequency"));

    let quad = verify_quadrature_independence(&suite.run(squeezed.clone(), n, SynthesisMode::FrequencyDomain)?, m, tol)?;
    suite.records.push(CheckRecord {
        check: "quadrature_covariance".into(),
        line: m,
        analytic: 0.0,
        empirical: quad.cov_re_im,
        standard_error: quad.cov_re_im / quad.z_cov,
        z_score: quad.z_cov,
        pass: quad.z_cov.abs() <= tol,
    });
    suite.records.push(CheckRecord {
        check: "quadrature_variance_difference".into(),
        line: m,
        analytic: 0.0,
        empirical: quad.var_re - quad.var_im,
        standard_error: (quad.var_re - quad.var_im) / quad.z_var_diff,
        z_score: quad.z_var_diff,
        pass: quad.z_var_diff.abs() <= tol,
    });

    let crb_cl = verify_crb(&suite.run(classical.clone(), mc.crb_samples, SynthesisMode::FrequencyDomain)?, m, 1.0, 0.0)?;
    let crb_sq = verify_crb(&suite.run(squeezed.clone(), mc.crb_samples, SynthesisMode::FrequencyDomain)?, m, 1.0, 0.0)?;
    for r in crb_cl.records() {
        suite.records.push(CheckRecord { check: format!("{}_classical", r.check), ..r });
    }
    for r in crb_sq.records() {
        suite.records.push(CheckRecord { check: format!("{}_squeezed", r.check), ..r });
    }
    let reduction = crb_cl.mse_sqrt_kappa / crb_sq.mse_sqrt_kappa;
    let rse = crb_cl.relative_standard_error * 2f64.sqrt();
    suite.records.push(CheckRecord {
        check: "crb_squeezing_reduction".into(),
        line: m,
        analytic: g.linear(),
        empirical: reduction,
        standard_error: reduction * rse,
        z_score: (reduction - g.linear()) / (reduction * rse),
        pass: (reduction / g.linear() - 1.0).abs() <= CRB_TOLERANCE,
    });
    suite.records.push(CheckRecord {
        check: "theta_unbiased".into(),
        line: m,
        analytic: 0.0,
        empirical: crb_cl.mean_theta,
        standard_error: crb_cl.mean_theta_standard_error,
        z_score: crb_cl.mean_theta / crb_cl.mean_theta_standard_error,
        pass: crb_cl.mean_theta.abs() <= 3.0 * crb_cl.mean_theta_standard_error,
    });

    for count in [1usize, 4, 8, 16] {
        let report = verify_dft(&Scenario::ideal(suite.config(count)?), 1e-6)?;
        let mut record = report.record();
        record.check = format!("dft_identity_n{count}");
        suite.records.push(record);
    }

    // RIN sized so that its normalized variance equals the fundamental one
    let base = &classical;
    let snr = snr_fundamental(&base.config, &base.sample, &base.lo, &base.env, m)?;
    let rin = 2.0 * base.config.acquisition() / ((lines * lines) as f64 * snr * snr);
    for gamma in [0.1, 1.0, 10.0] {
        let cfg = base.config.clone().with_powers(base.config.signal_power(), gamma * base.config.signal_power())?;
        let run = suite.run(Scenario::ideal(cfg), n, SynthesisMode::FrequencyDomain)?.with_rin(rin)?;
        suite.variance(&format!("rin_injection_gamma_{gamma}"), &run, m)?;
    }

    let mut table = DataTable::new(COLUMNS.iter().map(|c| c.to_string()).collect());
    for r in suite.records {
        table.rows.push(vec![
            Cell::Text(r.check),
            Cell::Int(r.line as u64),
            Cell::Num(r.analytic),
            Cell::Num(r.empirical),
            Cell::Num(r.standard_error),
            Cell::Num(r.z_score),
            Cell::Bool(r.pass),
        ]);
    }
    Ok(table)
}

/// `(passed, total)` from a suite table.
pub fn tally(table: &DataTable) -> (usize, usize) {
    let i = table.column("pass").expect("pass column");
    let passed = table.rows.iter().filter(|r| r[i] == Cell::Bool(true)).count();
    (passed, table.rows.len())
}
