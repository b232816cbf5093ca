//! End-to-end acceptance checks. Prints one PASS/FAIL line per criterion and
//! exits non-zero if any fails.

use std::path::Path;
use std::process::Command;
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;

use qcomb_cli::commands::{sweep_table, water_table};
use qcomb_cli::config::{load, Layers};
use qcomb_core::budget::{
    classical_counterpart, limit_advantage, max_advantage_over_signal_power, quadrature_coefficient, saturation_thresholds,
    sigma_nep, sigma_quad, sigma_rin, snr_full, DetectorModel,
};
use qcomb_core::gaussian::{joint_quadrature_variance, GaussianState, SqueezeGain};
use qcomb_core::mc::{verify_crb, verify_dft, verify_variance, McRun, SynthesisMode, CRB_TOLERANCE};
use qcomb_core::model::{mean_ac_spectrum, thermal_occupation, DualCombConfig, Environment, LineChannel, Scenario};
use qcomb_core::num::consts::{PLANCK, SPEED_OF_LIGHT};
use qcomb_core::spectra::{absorption_limited_advantage, frequency_from_um, AbsorptionTable};

type Outcome = Result<String, String>;
type Criterion = (&'static str, fn() -> Outcome);

fn check(ok: bool, detail: String) -> Outcome {
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn within(elapsed: Duration, limit_s: f64) -> bool {
    elapsed.as_secs_f64() < limit_s
}

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs()
}

fn gain_db(db: f64) -> SqueezeGain<f64> {
    SqueezeGain::from_db(db).unwrap()
}

/// Line count and per-line photon number used by the sampling checks.
fn mc_config(lines: usize, gamma: f64) -> DualCombConfig<f64> {
    let wavelength = 1e-6;
    let ps = 2e5 * lines as f64 * PLANCK * SPEED_OF_LIGHT / wavelength;
    DualCombConfig::new(lines, wavelength, 1.0, ps, gamma * ps).unwrap()
}

fn c1_closed_form() -> Outcome {
    let start = Instant::now();
    let mut rng = ChaCha20Rng::seed_from_u64(1);
    let mut worst_unity: f64 = 0.0;
    for _ in 0..100 {
        let theta: f64 = rng.random_range(-3.2..3.2);
        worst_unity = worst_unity.max((joint_quadrature_variance(SqueezeGain::unity(), theta) - 1.0).abs());
    }
    let mut worst_zero: f64 = 0.0;
    let mut worst_path: f64 = 0.0;
    for _ in 0..100 {
        let g: SqueezeGain<f64> = SqueezeGain::new(rng.random_range(1.0..1000.0)).unwrap();
        let theta: f64 = rng.random_range(-3.2..3.2);
        worst_zero = worst_zero.max((joint_quadrature_variance(g, 0.0) - 1.0 / g.linear()).abs());
        let closed = joint_quadrature_variance(g, theta);
        let path = GaussianState::tmsv(g).complex_quadrature_variance(0, 1, theta).unwrap();
        worst_path = worst_path.max(rel(path, closed));
    }
    let elapsed = start.elapsed();
    check(
        worst_unity == 0.0 && worst_zero <= 1e-12 && worst_path <= 1e-10 && within(elapsed, 1.0),
        format!(
            "G=1 max dev {worst_unity:.1e}, theta=0 max dev {worst_zero:.1e}, covariance path max rel {worst_path:.1e}, {:.3} s",
            elapsed.as_secs_f64()
        ),
    )
}

fn c2_classical_recovery() -> Outcome {
    let sample = LineChannel::ideal();
    let lo = LineChannel::ideal();
    let env = Environment::cold();
    let rin = 1e-6;
    let mut worst_c: f64 = 0.0;
    let mut worst_c2: f64 = 0.0;
    for gamma in [0.2, 1.0, 5.0, 100.0] {
        let cfg = mc_config(8, gamma);
        let c = quadrature_coefficient(&cfg, &sample, &lo, &env, 1).unwrap();
        worst_c = worst_c.max(rel(c, (1.0 + 1.0 / gamma) / 4.0));

        // The RIN coefficient from the readout jitter model: the extra
        // normalized variance is 4v + 4v² with 4v = (N²/T)·2·c_γ²·RIN.
        let base = McRun::new(Scenario::ideal(cfg.clone()), 0, 1000, SynthesisMode::FrequencyDomain).unwrap();
        let jittered = base.clone().with_rin(rin).unwrap();
        let extra = jittered.analytic_variance(1).unwrap() - base.analytic_variance(1).unwrap();
        let mean2 = mean_ac_spectrum(&cfg, &sample, &lo, 1).unwrap().norm_sqr();
        let n2_over_t = (cfg.lines() as f64).powi(2) / cfg.acquisition();
        let four_v = 2.0 * ((1.0 + extra / mean2).sqrt() - 1.0);
        let c2 = four_v / (2.0 * n2_over_t * rin);
        worst_c2 = worst_c2.max(rel(c2, 0.25));
    }
    check(
        worst_c <= 1e-12 && worst_c2 <= 1e-9,
        format!("c_gamma max rel {worst_c:.1e}, c_gamma2 max rel {worst_c2:.1e}"),
    )
}

fn c3_headline() -> Outcome {
    let start = Instant::now();
    let cfg = DualCombConfig::new(100_000, 1e-6, 1.0, 1e-4, 5e-4).unwrap();
    let q = cfg.clone().with_gains(gain_db(10.0), gain_db(10.0));
    let det = DetectorModel::from_rin_dbc(5e-13, -170.0).unwrap();
    let (s, l, e) = (LineChannel::ideal(), LineChannel::ideal(), Environment::cold());
    let best = max_advantage_over_signal_power(&q, &s, &l, &e, &det, 1, (1e-8, 1.0)).unwrap();
    let limit = limit_advantage(&classical_counterpart(&cfg), &s, &l, &e, &det, 1).unwrap();
    let elapsed = start.elapsed();
    check(
        (best.advantage_db - 4.9).abs() <= 0.2
            && (limit.versus_nep_limit_db - 13.4).abs() <= 0.3
            && rel(limit.crossing_power, 1.0e-4) <= 0.05
            && within(elapsed, 10.0),
        format!(
            "max advantage {:.3} dB at P_S={:.2e} W, NEP-limit advantage {:.3} dB at P_S={:.3e} W, {:.3} s",
            best.advantage_db,
            best.signal_power,
            limit.versus_nep_limit_db,
            limit.crossing_power,
            elapsed.as_secs_f64()
        ),
    )
}

/// Root of a monotone function of log10 P by bisection.
fn crossing(f: impl Fn(f64) -> f64) -> f64 {
    let (mut a, mut b) = (-30.0, 10.0);
    let fa = f(10f64.powf(a));
    for _ in 0..200 {
        let mid = 0.5 * (a + b);
        if (f(10f64.powf(mid)) > 0.0) == (fa > 0.0) {
            a = mid;
        } else {
            b = mid;
        }
    }
    10f64.powf(0.5 * (a + b))
}

fn c4_thresholds() -> Outcome {
    let mut rng = ChaCha20Rng::seed_from_u64(4);
    let mut worst: f64 = 0.0;
    let env = Environment::cold();
    let lo = LineChannel::ideal();
    for _ in 0..20 {
        let g = gain_db(rng.random_range(0.0..20.0));
        let gamma = 10f64.powf(rng.random_range(-1.0..2.0));
        let kappa = rng.random_range(0.05..1.0);
        let nep = 10f64.powf(rng.random_range(-14.0..-11.0));
        let rin_dbc = rng.random_range(-180.0..-140.0);
        let wavelength_um = rng.random_range(0.5..5.0);
        let det = DetectorModel::from_rin_dbc(nep, rin_dbc).unwrap();
        let sample = LineChannel::uniform(kappa, 0.0).unwrap();
        let base = DualCombConfig::new(1000, wavelength_um * 1e-6, 1.0, 1e-4, gamma * 1e-4)
            .unwrap()
            .with_gains(g, g);
        let at = |p: f64| base.clone().with_powers(p, gamma * p).unwrap();
        let quad = |p: f64| sigma_quad(&at(p), &sample, &lo, &env, 1).unwrap();
        let p_nep = crossing(|p| (sigma_nep(&at(p), &sample, &lo, &det, 1).unwrap() / quad(p)).ln());
        let p_rin = crossing(|p| (sigma_rin(&at(p), &det) / quad(p)).ln());
        let closed = saturation_thresholds(g, gamma, kappa, &det, frequency_from_um(wavelength_um)).unwrap();
        worst = worst.max(rel(closed.nep, p_nep)).max(rel(closed.rin, p_rin));
    }
    check(worst <= 0.01, format!("20 random sets, max rel deviation {worst:.2e}"))
}

fn c5_variance() -> Outcome {
    let start = Instant::now();
    let lines = 4;
    let g = gain_db(10.0);
    let classical = Scenario::ideal(mc_config(lines, 5.0));
    let squeezed = Scenario::ideal(mc_config(lines, 5.0).with_gains(g, g));
    let thermal = {
        let config = mc_config(lines, 5.0).with_gains(g, g);
        let env = Environment::with_occupation_at(config.line_frequency(1), 0.01).unwrap();
        Scenario { config, sample: LineChannel::uniform(0.5, 0.0).unwrap(), lo: LineChannel::ideal(), env }
    };
    let mut parts = Vec::new();
    let mut ok = true;
    for (name, scenario) in [("classical", classical), ("squeezed", squeezed), ("thermal", thermal)] {
        let run = McRun::new(scenario, 42, 100_000, SynthesisMode::FrequencyDomain).unwrap();
        let report = verify_variance(&run, 1, 3.0).unwrap();
        ok &= report.pass;
        parts.push(format!("{name} z={:+.2}", report.z_score));
    }
    let elapsed = start.elapsed();
    check(
        ok && within(elapsed, 60.0),
        format!("{}, {:.2} s", parts.join(", "), elapsed.as_secs_f64()),
    )
}

fn c6_crb() -> Outcome {
    let g = gain_db(10.0);
    let classical = McRun::new(Scenario::ideal(mc_config(4, 5.0)), 42, 10_000, SynthesisMode::FrequencyDomain).unwrap();
    let squeezed =
        McRun::new(Scenario::ideal(mc_config(4, 5.0).with_gains(g, g)), 42, 10_000, SynthesisMode::FrequencyDomain).unwrap();
    let cl = verify_crb(&classical, 1, 1.0, 0.0).unwrap();
    let sq = verify_crb(&squeezed, 1, 1.0, 0.0).unwrap();
    let reduction = cl.mse_sqrt_kappa / sq.mse_sqrt_kappa;
    let ok = cl.snr >= 10.0
        && sq.snr >= 10.0
        && cl.pass
        && sq.pass
        && rel(reduction, g.linear()) <= CRB_TOLERANCE;
    check(
        ok,
        format!(
            "SNR {:.0}/{:.0}, MSE/CRB classical {:.3}/{:.3}, squeezed {:.3}/{:.3}, MSE reduction {:.2} (G={})",
            cl.snr,
            sq.snr,
            cl.ratio_sqrt_kappa,
            cl.ratio_theta,
            sq.ratio_sqrt_kappa,
            sq.ratio_theta,
            reduction,
            g.linear()
        ),
    )
}

fn c7_dft() -> Outcome {
    let mut worst: f64 = 0.0;
    let mut ok = true;
    for lines in [1, 4, 8, 16] {
        let report = verify_dft(&Scenario::ideal(mc_config(lines, 5.0)), 1e-6).unwrap();
        ok &= report.pass;
        worst = worst.max(report.max_relative_error);
    }
    check(ok, format!("N in {{1,4,8,16}}, max rel error {worst:.2e}"))
}

fn c8_occupation() -> Outcome {
    let env = Environment::new(300.0f64).unwrap();
    let e10 = thermal_occupation(frequency_from_um(10.0), &env).unwrap();
    let e5 = thermal_occupation(frequency_from_um(5.0), &env).unwrap();
    check(
        (e10 - 0.0083).abs() <= 0.0002 && e5 <= 1e-4,
        format!("E(300 K, 10 um) = {e10:.5}, E(300 K, 5 um) = {e5:.2e}"),
    )
}

fn preset(name: &str) -> qcomb_cli::config::Effective {
    load(&Layers { preset: Some(name), file: None, overrides: &[] }).unwrap()
}

fn c9_properties() -> Outcome {
    // RIN term does not depend on the power split
    let det = DetectorModel::from_rin_dbc(5e-13, -170.0).unwrap();
    let rins: Vec<f64> = [0.1, 1.0, 10.0]
        .iter()
        .map(|gamma| {
            let cfg = DualCombConfig::new(100_000, 1e-6, 1.0, 1e-4, gamma * 1e-4).unwrap();
            snr_full(&cfg, &LineChannel::ideal(), &LineChannel::ideal(), &Environment::cold(), &det, 1)
                .unwrap()
                .sigma2_rin
        })
        .collect();
    let rin_spread = rins.iter().map(|r| rel(*r, rins[0])).fold(0.0, f64::max);

    // fixed total power: best SNR at the even split
    let diag = sweep_table(&preset("fig4-diagonal")).unwrap();
    let fractions = diag.values("comb.signal_fraction").unwrap();
    let snrs = diag.values("snr").unwrap();
    let best = (0..snrs.len()).max_by(|&a, &b| snrs[a].total_cmp(&snrs[b])).unwrap();
    let tangency = fractions.len() == 101 && (fractions[best] - 0.5).abs() < 1e-12;

    // water sweep: advantage against gain and absorption
    let fig5 = preset("fig5");
    let water = water_table(&fig5, &AbsorptionTable::water()).unwrap();
    let wl = water.values("water.wavelength_um").unwrap();
    let gdb = water.values("comb.gain_db").unwrap();
    let adv = water.values("advantage_db_amp").unwrap();
    let kappa = water.values("kappa").unwrap();
    let occ = water.values("occupation").unwrap();
    let idx: Vec<usize> = (0..adv.len()).collect();

    let mut gain_inversions = 0;
    for &i in &idx {
        for &j in &idx {
            if wl[i] == wl[j] && gdb[j] > gdb[i] && adv[j] < adv[i] - 1e-12 {
                gain_inversions += 1;
            }
        }
    }

    // Holding the wavelength (and so the thermal occupation) fixed, more
    // absorption never helps.
    let table = AbsorptionTable::water();
    let env = Environment::new(fig5.config.water.temperature_k).unwrap();
    let gamma = fig5.config.comb.gamma_value().unwrap();
    let mut path_inversions = 0;
    let wavelengths: Vec<f64> = fig5.config.sweeps[0].grid().unwrap();
    for &w in &wavelengths {
        for db in [10.0, 20.0, 30.0] {
            let mut last = f64::INFINITY;
            for step in 0..40 {
                let path_um = 10f64.powf(step as f64 / 39.0 * 2.0);
                let k = table.transmissivity(w, path_um).unwrap();
                let a = absorption_limited_advantage(k, w, gain_db(db), gamma, &env).unwrap().db;
                if a > last + 1e-12 {
                    path_inversions += 1;
                }
                last = a;
            }
        }
    }

    // Across the wavelength sweep, ordering by transmissivity holds wherever
    // the thermal background is negligible.
    let mut cold_inversions = 0;
    let mut warm_inversions = 0;
    let mut warm_worst: f64 = 0.0;
    for &i in &idx {
        for &j in &idx {
            if gdb[i] == gdb[j] && kappa[j] > kappa[i] && adv[j] < adv[i] - 1e-12 {
                if occ[i].max(occ[j]) <= 1e-3 {
                    cold_inversions += 1;
                } else {
                    warm_inversions += 1;
                    warm_worst = warm_worst.max(adv[i] - adv[j]);
                }
            }
        }
    }

    check(
        rin_spread <= 1e-12 && tangency && gain_inversions == 0 && path_inversions == 0 && cold_inversions == 0,
        format!(
            "sigma2_RIN spread {rin_spread:.1e}; diagonal argmax at P_S/P_tot={:.3} of {} points; \
             gain inversions {gain_inversions}; absorption inversions at fixed wavelength {path_inversions}, \
             across wavelengths with E<=1e-3 {cold_inversions} (E>1e-3: {warm_inversions} pairs, max {warm_worst:.4} dB, from thermal occupation)",
            fractions[best],
            fractions.len()
        ),
    )
}

fn run_mc_verify(bin: &Path) -> Result<(i32, Vec<u8>), String> {
    let out = Command::new(bin)
        .args(["mc-verify", "--seed", "42"])
        .output()
        .map_err(|e| format!("cannot run {}: {e}", bin.display()))?;
    Ok((out.status.code().unwrap_or(-1), out.stdout))
}

fn c10_determinism() -> Outcome {
    let bin = Path::new(env!("CARGO_BIN_EXE_qcomb"));
    let (code_a, a) = run_mc_verify(bin)?;
    let (code_b, b) = run_mc_verify(bin)?;
    check(
        code_a == 0 && code_b == 0 && !a.is_empty() && a == b,
        format!("exit codes {code_a}/{code_b}, {} and {} bytes, identical: {}", a.len(), b.len(), a == b),
    )
}

fn main() {
    let criteria: [Criterion; 10] = [
        ("joint quadrature variance closed form", c1_closed_form),
        ("classical coefficient recovery", c2_classical_recovery),
        ("headline advantage numbers", c3_headline),
        ("saturation thresholds vs numerical crossings", c4_thresholds),
        ("Monte-Carlo variance oracle", c5_variance),
        ("Cramer-Rao bound", c6_crb),
        ("interferogram DFT identity", c7_dft),
        ("thermal occupation", c8_occupation),
        ("property suite", c9_properties),
        ("mc-verify determinism", c10_determinism),
    ];
    let mut failed = 0;
    for (i, (name, f)) in criteria.iter().enumerate() {
        let outcome = std::panic::catch_unwind(f).unwrap_or_else(|e| {
            let msg = e
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| e.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_default();
            Err(format!("panicked: {msg}"))
        });
        match outcome {
            Ok(detail) => println!("criterion {:>2} PASS  {name}: {detail}", i + 1),
            Err(detail) => {
                failed += 1;
                println!("criterion {:>2} FAIL  {name}: {detail}", i + 1);
            }
        }
    }
    println!("acceptance: {}/{} passed", criteria.len() - failed, criteria.len());
    if failed > 0 {
        std::process::exit(1);
    }
}
