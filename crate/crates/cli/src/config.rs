//! Run configuration.
//!
//! Configs are TOML files with one table per section. Layers are merged in
//! the order preset → file → `--set` overrides; later layers replace
//! individual keys. Every key has a default, so an empty file is valid.
//!
//! ```toml
//! preset = "fig1c"          # optional base layer
//!
//! [comb]
//! lines = 100000
//! wavelength_um = 1.0
//! acquisition_s = 1.0
//! signal_power_w = 1e-4
//! gamma = 5.0               # or lo_power_w, or total_power_w + signal_fraction
//! gain_db = 10.0            # squeezing gain, 10*log10(G)
//! squeeze = "both"          # both | signal | lo | none
//!
//! [[sweep]]
//! var = "comb.signal_power_w"
//! from = 1e-7
//! to = 1e-1
//! points = 200              # spacing defaults to log for *_w keys
//! ```

use std::path::{Path, PathBuf};

use anyhow::{bail, ensure, Context, Result};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use toml::{Table, Value};

use qcomb_core::budget::DetectorModel;
use qcomb_core::gaussian::SqueezeGain;
use qcomb_core::model::{DualCombConfig, Environment, LineChannel, Scenario};
use qcomb_core::spectra::{AbsorptionTable, AbsorptionUnit};

/// Built-in base configurations.
pub const PRESETS: &[(&str, &str)] = &[
    ("fig1c", include_str!("../presets/fig1c.toml")),
    ("fig3", include_str!("../presets/fig3.toml")),
    ("fig4", include_str!("../presets/fig4.toml")),
    ("fig4-diagonal", include_str!("../presets/fig4-diagonal.toml")),
    ("fig5", include_str!("../presets/fig5.toml")),
];

pub fn preset_text(name: &str) -> Result<&'static str> {
    PRESETS
        .iter()
        .find(|(n, _)| *n == name)
        .map(|(_, t)| *t)
        .with_context(|| {
            let names: Vec<_> = PRESETS.iter().map(|(n, _)| *n).collect();
            format!("unknown preset '{name}' (available: {})", names.join(", "))
        })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum Squeeze {
    #[default]
    Both,
    Signal,
    Lo,
    None,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Scale {
    Linear,
    Log,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct CombSection {
    pub lines: usize,
    pub wavelength_um: f64,
    pub acquisition_s: f64,
    pub rep_rate_hz: f64,
    pub rep_offset_hz: f64,
    pub signal_power_w: Option<f64>,
    pub lo_power_w: Option<f64>,
    /// `P_LO/P_S`, used when `lo_power_w` is absent (default 5).
    pub gamma: Option<f64>,
    /// Fixed total power split by `signal_fraction`.
    pub total_power_w: Option<f64>,
    pub signal_fraction: Option<f64>,
    pub gain_db: f64,
    pub squeeze: Squeeze,
    /// Readout line `m`.
    pub line: usize,
}

impl Default for CombSection {
    fn default() -> Self {
        Self {
            lines: 100_000,
            wavelength_um: 1.0,
            acquisition_s: 1.0,
            rep_rate_hz: DualCombConfig::<f64>::DEFAULT_REP_RATE_HZ,
            rep_offset_hz: DualCombConfig::<f64>::DEFAULT_REP_OFFSET_HZ,
            signal_power_w: None,
            lo_power_w: None,
            gamma: None,
            total_power_w: None,
            signal_fraction: None,
            gain_db: 0.0,
            squeeze: Squeeze::Both,
            line: 1,
        }
    }
}

pub const DEFAULT_SIGNAL_POWER_W: f64 = 1e-4;
pub const DEFAULT_GAMMA: f64 = 5.0;

impl CombSection {
    /// `(P_S, P_LO)` from whichever power keys are present.
    pub fn powers(&self) -> Result<(f64, f64)> {
        if let Some(total) = self.total_power_w {
            ensure!(
                self.signal_power_w.is_none() && self.lo_power_w.is_none() && self.gamma.is_none(),
                "comb.total_power_w cannot be combined with signal_power_w, lo_power_w or gamma"
            );
            let f = self.signal_fraction.unwrap_or(0.5);
            ensure!((0.0..=1.0).contains(&f), "comb.signal_fraction must lie in [0, 1], got {f}");
            return Ok((f * total, (1.0 - f) * total));
        }
        ensure!(
            self.signal_fraction.is_none(),
            "comb.signal_fraction requires comb.total_power_w"
        );
        let ps = self.signal_power_w.unwrap_or(DEFAULT_SIGNAL_POWER_W);
        let plo = match (self.lo_power_w, self.gamma) {
            (Some(_), Some(_)) => bail!("set either comb.lo_power_w or comb.gamma, not both"),
            (Some(p), None) => p,
            (None, g) => g.unwrap_or(DEFAULT_GAMMA) * ps,
        };
        Ok((ps, plo))
    }

    pub fn gains(&self) -> Result<(SqueezeGain<f64>, SqueezeGain<f64>)> {
        let g = SqueezeGain::from_db(self.gain_db).context("comb.gain_db")?;
        let one = SqueezeGain::unity();
        Ok(match self.squeeze {
            Squeeze::Both => (g, g),
            Squeeze::Signal => (g, one),
            Squeeze::Lo => (one, g),
            Squeeze::None => (one, one),
        })
    }

    pub fn gamma_value(&self) -> Result<f64> {
        let (ps, plo) = self.powers()?;
        ensure!(ps > 0.0, "signal power must be positive");
        Ok(plo / ps)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SampleSection {
    pub kappa: f64,
    pub alpha_rad: f64,
}

impl Default for SampleSection {
    fn default() -> Self {
        Self {
            kappa: 1.0,
            alpha_rad: 0.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct LoSection {
    pub eta: f64,
    pub beta_rad: f64,
    /// LO travels with the signal: `η = κ`.
    pub follow_sample: bool,
}

impl Default for LoSection {
    fn default() -> Self {
        Self {
            eta: 1.0,
            beta_rad: 0.0,
            follow_sample: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct EnvironmentSection {
    pub temperature_k: f64,
    /// Thermal occupation at the carrier; overrides `temperature_k`.
    pub occupation: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DetectorSection {
    pub nep_w_per_rthz: f64,
    /// Absent means a noiseless laser.
    pub rin_dbc_per_hz: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct WaterSection {
    /// CSV absorption table; the bundled water spectrum when absent.
    pub absorption: Option<PathBuf>,
    pub unit: String,
    pub path_length_um: f64,
    pub wavelength_um: f64,
    pub temperature_k: f64,
}

impl Default for WaterSection {
    fn default() -> Self {
        Self {
            absorption: None,
            unit: "per_um".into(),
            path_length_um: 15.0,
            wavelength_um: 1.0,
            temperature_k: 295.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct McSection {
    pub seed: u64,
    pub samples: usize,
    pub crb_samples: usize,
    pub lines: usize,
    /// Mean signal photons per line, `A²`.
    pub signal_photons: f64,
    pub gamma: f64,
    pub gain_db: f64,
    pub tolerance_sigmas: f64,
    /// Test hook: scales every analytic variance before comparison.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub corrupt_analytic: Option<f64>,
}

impl Default for McSection {
    fn default() -> Self {
        Self {
            seed: 42,
            samples: 100_000,
            crb_samples: 10_000,
            lines: 4,
            signal_photons: 2e5,
            gamma: 5.0,
            gain_db: 10.0,
            tolerance_sigmas: 3.0,
            corrupt_analytic: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OutputSection {
    /// Significant digits after the point in scientific notation.
    pub precision: usize,
    /// Column drawn by `--plot`.
    pub plot_column: Option<String>,
}

impl Default for OutputSection {
    fn default() -> Self {
        Self {
            precision: 9,
            plot_column: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepAxis {
    pub var: String,
    pub from: Option<f64>,
    pub to: Option<f64>,
    pub points: Option<usize>,
    pub scale: Option<Scale>,
    pub values: Option<Vec<f64>>,
}

impl SweepAxis {
    pub fn scale(&self) -> Scale {
        self.scale.unwrap_or(if self.var.ends_with("_w") { Scale::Log } else { Scale::Linear })
    }

    pub fn grid(&self) -> Result<Vec<f64>> {
        if let Some(values) = &self.values {
            ensure!(
                self.from.is_none() && self.to.is_none() && self.points.is_none(),
                "sweep '{}': give either values or from/to/points",
                self.var
            );
            ensure!(!values.is_empty(), "sweep '{}': values is empty", self.var);
            ensure!(values.iter().all(|v| v.is_finite()), "sweep '{}': non-finite value", self.var);
            return Ok(values.clone());
        }
        let (Some(from), Some(to), Some(points)) = (self.from, self.to, self.points) else {
            bail!("sweep '{}': needs from, to and points (or values)", self.var);
        };
        ensure!(points >= 2, "sweep '{}': points must be >= 2", self.var);
        ensure!(
            from.is_finite() && to.is_finite() && from != to,
            "sweep '{}': range [{from}, {to}] is degenerate",
            self.var
        );
        let last = (points - 1) as f64;
        Ok(match self.scale() {
            Scale::Linear => (0..points)
                .map(|i| from + (to - from) * i as f64 / last)
                .collect(),
            Scale::Log => {
                ensure!(from > 0.0 && to > 0.0, "sweep '{}': log spacing needs positive bounds", self.var);
                let (a, b) = (from.log10(), to.log10());
                (0..points)
                    .map(|i| 10f64.powf(a + (b - a) * i as f64 / last))
                    .collect()
            }
        })
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    pub preset: Option<String>,
    pub comb: CombSection,
    pub sample: SampleSection,
    pub lo: LoSection,
    pub environment: EnvironmentSection,
    pub detector: DetectorSection,
    pub water: WaterSection,
    pub mc: McSection,
    pub output: OutputSection,
    #[serde(rename = "sweep", skip_serializing_if = "Vec::is_empty")]
    pub sweeps: Vec<SweepAxis>,
}

/// Merged configuration layers together with the typed view.
#[derive(Debug, Clone)]
pub struct Effective {
    pub tree: Table,
    pub config: RunConfig,
}

impl Effective {
    /// Canonical TOML text of the merged layers with every default filled in.
    pub fn canonical(&self) -> String {
        toml::to_string(&self.config).expect("config serializes")
    }

    /// First 16 hex digits of the SHA-256 of [`Effective::canonical`].
    pub fn hash(&self) -> String {
        let digest = Sha256::digest(self.canonical().as_bytes());
        hex::encode(&digest[..8])
    }

    /// Typed config with `var = value` applied, for one sweep point.
    pub fn with_values(&self, assignments: &[(&str, f64)]) -> Result<RunConfig> {
        let mut tree = self.tree.clone();
        for (key, value) in assignments {
            set_path(&mut tree, key, number(*value))?;
        }
        tree.remove("sweep");
        typed(&tree)
    }
}

fn number(v: f64) -> Value {
    if v.fract() == 0.0 && v.abs() < 9.0e15 {
        Value::Integer(v as i64)
    } else {
        Value::Float(v)
    }
}

fn typed(tree: &Table) -> Result<RunConfig> {
    Value::Table(tree.clone())
        .try_into::<RunConfig>()
        .map_err(|e| anyhow::anyhow!("invalid config: {}", e.to_string().trim_end()))
}

fn parse_table(text: &str, origin: &str) -> Result<Table> {
    text.parse::<Table>()
        .map_err(|e| anyhow::anyhow!("{origin}: {}", e.to_string().trim_end()))
}

/// Replaces keys of `base` with those of `overlay`, recursing into tables.
/// Arrays (sweep blocks) are replaced wholesale.
fn merge(base: &mut Table, overlay: Table) {
    for (key, value) in overlay {
        match (base.get_mut(&key), value) {
            (Some(Value::Table(b)), Value::Table(o)) => merge(b, o),
            (_, v) => {
                base.insert(key, v);
            }
        }
    }
}

fn set_path(tree: &mut Table, path: &str, value: Value) -> Result<()> {
    let parts: Vec<&str> = path.split('.').collect();
    ensure!(
        parts.iter().all(|p| !p.is_empty()),
        "malformed key '{path}'"
    );
    let (last, sections) = parts.split_last().unwrap();
    let mut table = tree;
    for part in sections {
        let entry = table
            .entry(part.to_string())
            .or_insert_with(|| Value::Table(Table::new()));
        table = match entry {
            Value::Table(t) => t,
            _ => bail!("'{part}' in '{path}' is not a section"),
        };
    }
    table.insert(last.to_string(), value);
    Ok(())
}

/// Parses `key=value`; the value is read as a TOML value, or as a bare string
/// when that fails.
pub fn parse_assignment(text: &str) -> Result<(String, Value)> {
    let (key, raw) = text
        .split_once('=')
        .with_context(|| format!("--set expects key=value, got '{text}'"))?;
    let key = key.trim();
    let raw = raw.trim();
    ensure!(!key.is_empty(), "--set '{text}': empty key");
    let value = format!("v = {raw}")
        .parse::<Table>()
        .ok()
        .and_then(|mut t| t.remove("v"))
        .unwrap_or_else(|| Value::String(raw.to_string()));
    Ok((key.to_string(), value))
}

/// Sources for [`load`].
#[derive(Debug, Clone, Default)]
pub struct Layers<'a> {
    pub preset: Option<&'a str>,
    pub file: Option<&'a Path>,
    pub overrides: &'a [String],
}

pub fn load(layers: &Layers<'_>) -> Result<Effective> {
    let file_tree = match layers.file {
        Some(path) => {
            let text = std::fs::read_to_string(path)
                .with_context(|| format!("cannot read config {}", path.display()))?;
            parse_table(&text, &path.display().to_string())?
        }
        None => Table::new(),
    };
    let mut overrides = Vec::new();
    for item in layers.overrides {
        overrides.push(parse_assignment(item)?);
    }
    let override_preset = overrides.iter().rev().find_map(|(k, v)| match (k.as_str(), v) {
        ("preset", Value::String(s)) => Some(s.clone()),
        _ => None,
    });
    let file_preset = match file_tree.get("preset") {
        Some(Value::String(s)) => Some(s.clone()),
        Some(_) => bail!("'preset' must be a string"),
        None => None,
    };
    let preset = override_preset
        .or(layers.preset.map(str::to_string))
        .or(file_preset);

    let mut tree = match &preset {
        Some(name) => parse_table(preset_text(name)?, &format!("preset {name}"))?,
        None => Table::new(),
    };
    merge(&mut tree, file_tree);
    for (key, value) in overrides {
        set_path(&mut tree, &key, value)?;
    }
    if let Some(name) = preset {
        tree.insert("preset".into(), Value::String(name));
    }
    let config = typed(&tree)?;
    validate_sweeps(&config)?;
    Ok(Effective { tree, config })
}

/// Numeric keys a sweep axis may name.
pub const SWEEPABLE: &[&str] = &[
    "comb.lines",
    "comb.wavelength_um",
    "comb.acquisition_s",
    "comb.rep_rate_hz",
    "comb.rep_offset_hz",
    "comb.signal_power_w",
    "comb.lo_power_w",
    "comb.gamma",
    "comb.total_power_w",
    "comb.signal_fraction",
    "comb.gain_db",
    "comb.line",
    "sample.kappa",
    "sample.alpha_rad",
    "lo.eta",
    "lo.beta_rad",
    "environment.temperature_k",
    "environment.occupation",
    "detector.nep_w_per_rthz",
    "detector.rin_dbc_per_hz",
    "water.path_length_um",
    "water.wavelength_um",
    "water.temperature_k",
];

fn validate_sweeps(config: &RunConfig) -> Result<()> {
    for (i, axis) in config.sweeps.iter().enumerate() {
        ensure!(
            SWEEPABLE.contains(&axis.var.as_str()),
            "sweep axis '{}' is not a numeric config key (sweepable: {})",
            axis.var,
            SWEEPABLE.join(", ")
        );
        axis.grid()?;
        ensure!(
            !config.sweeps[..i].iter().any(|a| a.var == axis.var),
            "sweep axis '{}' appears twice",
            axis.var
        );
    }
    Ok(())
}

/// Model objects for one evaluation point.
#[derive(Debug, Clone)]
pub struct Point {
    pub scenario: Scenario<f64>,
    pub detector: DetectorModel<f64>,
    pub line: usize,
}

impl RunConfig {
    pub fn environment(&self) -> Result<Environment<f64>> {
        match self.environment.occupation {
            Some(occ) => {
                let carrier = qcomb_core::spectra::frequency_from_um(self.comb.wavelength_um);
                Environment::with_occupation_at(carrier, occ).context("environment.occupation")
            }
            None => Environment::new(self.environment.temperature_k).context("environment.temperature_k"),
        }
    }

    pub fn detector(&self) -> Result<DetectorModel<f64>> {
        let rin = self.detector.rin_dbc_per_hz.map_or(0.0, |db| 10f64.powf(db / 10.0));
        DetectorModel::new(self.detector.nep_w_per_rthz, rin).context("detector")
    }

    pub fn point(&self) -> Result<Point> {
        let c = &self.comb;
        let (ps, plo) = c.powers()?;
        let (gs, glo) = c.gains()?;
        let config = DualCombConfig::new(c.lines, c.wavelength_um * 1e-6, c.acquisition_s, ps, plo)
            .and_then(|cfg| cfg.with_rates(c.rep_rate_hz, c.rep_offset_hz))
            .context("comb")?
            .with_gains(gs, glo);
        let sample = LineChannel::uniform(self.sample.kappa, self.sample.alpha_rad).context("sample")?;
        let eta = if self.lo.follow_sample { self.sample.kappa } else { self.lo.eta };
        let lo = LineChannel::uniform(eta, self.lo.beta_rad).context("lo")?;
        ensure!(
            (1..=c.lines).contains(&c.line),
            "comb.line must lie in 1..={}, got {}",
            c.lines,
            c.line
        );
        Ok(Point {
            scenario: Scenario {
                config,
                sample,
                lo,
                env: self.environment()?,
            },
            detector: self.detector()?,
            line: c.line,
        })
    }

    pub fn absorption_table(&self, override_path: Option<&Path>) -> Result<AbsorptionTable<f64>> {
        let unit: AbsorptionUnit = self.water.unit.parse().context("water.unit")?;
        match override_path.or(self.water.absorption.as_deref()) {
            Some(path) => AbsorptionTable::load(path, unit)
                .with_context(|| format!("absorption table {}", path.display())),
            None => Ok(AbsorptionTable::water()),
        }
    }
}
