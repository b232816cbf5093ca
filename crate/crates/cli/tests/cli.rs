use std::path::Path;
use std::process::{Command, Output};

fn qcomb(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_qcomb")).args(args).output().expect("run qcomb")
}

fn body(text: &str) -> Vec<Vec<String>> {
    text.lines()
        .filter(|l| !l.starts_with('#'))
        .map(|l| l.split(',').map(str::to_string).collect())
        .collect()
}

fn read(path: &Path) -> String {
    std::fs::read_to_string(path).unwrap()
}

fn column(rows: &[Vec<String>], name: &str) -> Vec<f64> {
    let i = rows[0].iter().position(|c| c == name).unwrap_or_else(|| panic!("no column {name}"));
    rows[1..].iter().map(|r| r[i].parse().unwrap()).collect()
}

#[test]
fn snr_prints_report_and_csv() {
    let out = qcomb(&["snr", "--set", "comb.gain_db=10", "--set", "detector.nep_w_per_rthz=5e-13"]);
    assert_eq!(out.status.code(), Some(0));
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.contains("dominant noise"));
    assert!(text.contains("# config_hash: "));
    let rows = body(&text[text.find("# qcomb").unwrap()..]);
    assert_eq!(column(&rows, "gain_db"), vec![10.0]);
}

#[test]
fn fig1c_preset_has_800_rows_and_plot() {
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("fig1c.csv");
    let out = qcomb(&["sweep", "--preset", "fig1c", "--out", csv.to_str().unwrap(), "--plot"]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let rows = body(&read(&csv));
    assert_eq!(rows.len(), 801);
    let svg = read(&csv.with_extension("svg"));
    assert!(svg.starts_with("<svg") || svg.starts_with("<?xml"));
    let gain = column(&rows, "comb.gain_db");
    let adv = column(&rows, "advantage_db_amp");
    let best = (0..adv.len()).filter(|&i| gain[i] == 10.0).map(|i| adv[i]).fold(f64::MIN, f64::max);
    assert!((best - 4.9).abs() <= 0.2, "{best}");
}

#[test]
fn fig3_saturates_at_half_the_gain_in_db() {
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("fig3.csv");
    let out = qcomb(&["sweep", "--preset", "fig3", "--out", csv.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0));
    let rows = body(&read(&csv));
    let gamma = column(&rows, "comb.gamma");
    let kappa = column(&rows, "sample.kappa");
    let adv = column(&rows, "advantage_db_amp");
    let i = (0..adv.len())
        .filter(|&i| kappa[i] == 1.0)
        .max_by(|&a, &b| gamma[a].total_cmp(&gamma[b]))
        .unwrap();
    assert!((adv[i] - 5.0).abs() < 0.05, "{}", adv[i]);
}

#[test]
fn overrides_change_the_hash() {
    let a = String::from_utf8(qcomb(&["snr"]).stdout).unwrap();
    let b = String::from_utf8(qcomb(&["snr", "--set", "sample.kappa=0.5"]).stdout).unwrap();
    let hash = |t: &str| t.lines().find(|l| l.starts_with("# config_hash")).unwrap().to_string();
    assert_ne!(hash(&a), hash(&b));
    assert_eq!(hash(&a), hash(&String::from_utf8(qcomb(&["snr"]).stdout).unwrap()));
}

#[test]
fn config_file_and_set_precedence() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.toml");
    std::fs::write(&cfg, "preset = \"fig1c\"\n[comb]\ngain_db = 20\n").unwrap();
    let out = qcomb(&["snr", "--config", cfg.to_str().unwrap(), "--set", "comb.gain_db=3"]);
    assert_eq!(out.status.code(), Some(0));
    let text = String::from_utf8(out.stdout).unwrap();
    let rows = body(&text[text.find("# qcomb").unwrap()..]);
    assert_eq!(column(&rows, "gain_db"), vec![3.0]);
    assert!(text.contains("preset = \"fig1c\""));
}

#[test]
fn usage_and_config_errors_exit_2() {
    assert_eq!(qcomb(&["sweep"]).status.code(), Some(2));
    assert_eq!(qcomb(&["snr", "--set", "comb.bogus=1"]).status.code(), Some(2));
    assert_eq!(qcomb(&["snr", "--set", "nonsense"]).status.code(), Some(2));
    assert_eq!(qcomb(&["snr", "--config", "/nonexistent/run.toml"]).status.code(), Some(2));
    assert_eq!(qcomb(&["snr", "--preset", "nope"]).status.code(), Some(2));
    assert_eq!(qcomb(&["sweep", "--preset", "fig1c", "--plot"]).status.code(), Some(2));
    assert_eq!(qcomb(&["frobnicate"]).status.code(), Some(2));
    assert_eq!(qcomb(&["snr", "--set", "sample.kappa=1.5"]).status.code(), Some(2));
}

#[test]
fn bad_absorption_table_exits_2() {
    let dir = tempfile::tempdir().unwrap();
    let table = dir.path().join("a.csv");
    std::fs::write(&table, "wavelength_um,alpha_per_cm\n1.0,0.1\n2.0,oops\n").unwrap();
    let out = qcomb(&["water", "--preset", "fig5", "--absorption", table.to_str().unwrap(), "--set", "output.precision=3"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("line"));
}

#[test]
fn mc_verify_failure_exits_1() {
    let out = qcomb(&["mc-verify", "--seed", "7", "--set", "mc.corrupt_analytic=1.2"]);
    assert_eq!(out.status.code(), Some(1));
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.contains("# seed: 7"));
    assert!(text.contains(",false"));
}

#[test]
fn mc_verify_seed_changes_samples() {
    let a = qcomb(&["mc-verify", "--seed", "1"]);
    let b = qcomb(&["mc-verify", "--seed", "2"]);
    assert_eq!(a.status.code(), Some(0));
    assert_eq!(b.status.code(), Some(0));
    assert_ne!(body(&String::from_utf8(a.stdout).unwrap()), body(&String::from_utf8(b.stdout).unwrap()));
}

#[test]
fn water_preset_writes_grid() {
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("w.csv");
    let out = qcomb(&["water", "--preset", "fig5", "--out", csv.to_str().unwrap(), "--plot"]);
    assert_eq!(out.status.code(), Some(0));
    let rows = body(&read(&csv));
    assert_eq!(rows[0][..2], ["water.wavelength_um".to_string(), "comb.gain_db".to_string()]);
    assert!(csv.with_extension("svg").exists());
    let kappa = column(&rows, "kappa");
    assert!(kappa.iter().all(|k| (0.0..=1.0).contains(k)));
}
