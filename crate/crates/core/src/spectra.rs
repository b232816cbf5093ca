//! Absorption tables, Lambert-law transmissivity and the absorption-limited
//! quantum advantage.
//!
//! Tables are two-column CSV files:
//!
//! ```text
//! # comment lines start with '#'
//! wavelength_um,alpha_per_um
//! 1.0,3.6e-5
//! 2.0,6.9e-3
//! ```
//!
//! The second header must start with `alpha`. When it names a unit
//! (`alpha_per_um`, `alpha_per_cm`, `alpha_per_m`) that unit must agree with
//! the one requested at load time.

use std::fmt;
use std::path::Path;
use std::str::FromStr;

use crate::error::{invalid, Error, Result};
use crate::gaussian::SqueezeGain;
use crate::model::{snr_fundamental, DualCombConfig, Environment, LineChannel};
use crate::num::{consts, to_db, Real};

/// Bundled liquid-water absorption spectrum, 0.2–10 µm.
pub const WATER_ABSORPTION_CSV: &str = include_str!("../data/water_absorption.csv");

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub enum AbsorptionUnit {
    #[default]
    PerUm,
    PerCm,
    PerM,
}

impl AbsorptionUnit {
    /// Factor converting a value in this unit to 1/µm.
    pub fn to_per_um(self) -> f64 {
        match self {
            AbsorptionUnit::PerUm => 1.0,
            AbsorptionUnit::PerCm => 1e-4,
            AbsorptionUnit::PerM => 1e-6,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            AbsorptionUnit::PerUm => "per_um",
            AbsorptionUnit::PerCm => "per_cm",
            AbsorptionUnit::PerM => "per_m",
        }
    }
}

impl fmt::Display for AbsorptionUnit {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for AbsorptionUnit {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "per_um" | "1/um" => Ok(AbsorptionUnit::PerUm),
            "per_cm" | "1/cm" => Ok(AbsorptionUnit::PerCm),
            "per_m" | "1/m" => Ok(AbsorptionUnit::PerM),
            other => Err(invalid(format!(
                "unknown absorption unit '{other}' (expected per_um, per_cm or per_m)"
            ))),
        }
    }
}

/// Absorption coefficient versus wavelength, stored in µm and 1/µm.
#[derive(Debug, Clone, PartialEq)]
pub struct AbsorptionTable<R> {
    wavelengths_um: Vec<R>,
    alpha_per_um: Vec<R>,
    source_unit: AbsorptionUnit,
}

fn parse_err(line: u64, message: impl Into<String>) -> Error {
    Error::Parse {
        line: line as usize,
        message: message.into(),
    }
}

impl<R: Real> AbsorptionTable<R> {
    /// Builds a table from values already in µm and 1/µm.
    pub fn from_rows(wavelengths_um: Vec<R>, alpha_per_um: Vec<R>) -> Result<Self> {
        if wavelengths_um.len() != alpha_per_um.len() {
            return Err(invalid("wavelength and alpha columns differ in length"));
        }
        if wavelengths_um.len() < 2 {
            return Err(invalid("an absorption table needs at least 2 rows"));
        }
        for (i, (w, a)) in wavelengths_um.iter().zip(&alpha_per_um).enumerate() {
            if !(*w > R::zero()) || !w.is_finite() {
                return Err(invalid(format!("row {}: wavelength must be positive", i + 1)));
            }
            if !(*a >= R::zero()) || !a.is_finite() {
                return Err(invalid(format!("row {}: alpha must be finite and >= 0", i + 1)));
            }
            if i > 0 && !(*w > wavelengths_um[i - 1]) {
                return Err(invalid(format!("row {}: wavelengths must strictly increase", i + 1)));
            }
        }
        Ok(Self {
            wavelengths_um,
            alpha_per_um,
            source_unit: AbsorptionUnit::PerUm,
        })
    }

    /// Parses CSV text, converting the alpha column from `unit` to 1/µm.
    pub fn parse(text: &str, unit: AbsorptionUnit) -> Result<Self> {
        let mut reader = csv::ReaderBuilder::new()
            .comment(Some(b'#'))
            .trim(csv::Trim::All)
            .flexible(true)
            .from_reader(text.as_bytes());

        let headers = reader
            .headers()
            .map_err(|e| parse_err(1, format!("unreadable header: {e}")))?
            .clone();
        let header_line = headers.position().map_or(1, |p| p.line());
        if headers.len() != 2 {
            return Err(parse_err(header_line, "expected two columns: wavelength_um,alpha_<unit>"));
        }
        if &headers[0] != "wavelength_um" {
            return Err(parse_err(
                header_line,
                format!("first column must be 'wavelength_um', found '{}'", &headers[0]),
            ));
        }
        let alpha_header = &headers[1];
        if !alpha_header.starts_with("alpha") {
            return Err(parse_err(
                header_line,
                format!("second column must start with 'alpha', found '{alpha_header}'"),
            ));
        }
        if let Some(declared) = alpha_header.strip_prefix("alpha_") {
            let declared: AbsorptionUnit = declared
                .parse()
                .map_err(|_| parse_err(header_line, format!("unknown unit in header '{alpha_header}'")))?;
            if declared != unit {
                return Err(parse_err(
                    header_line,
                    format!("header declares {declared} but {unit} was requested"),
                ));
            }
        }

        let scale = unit.to_per_um();
        let mut wavelengths = Vec::new();
        let mut alphas = Vec::new();
        for record in reader.records() {
            let record = record.map_err(|e| {
                let line = e.position().map_or(0, |p| p.line());
                parse_err(line, e.to_string())
            })?;
            let line = record.position().map_or(0, |p| p.line());
            if record.len() != 2 {
                return Err(parse_err(line, format!("expected 2 fields, found {}", record.len())));
            }
            let field = |i: usize, name: &str| -> Result<f64> {
                record[i]
                    .parse::<f64>()
                    .ok()
                    .filter(|v| v.is_finite())
                    .ok_or_else(|| parse_err(line, format!("{name} '{}' is not a finite number", &record[i])))
            };
            let w = field(0, "wavelength")?;
            let a = field(1, "alpha")?;
            if w <= 0.0 {
                return Err(parse_err(line, format!("wavelength {w} must be positive")));
            }
            if a < 0.0 {
                return Err(parse_err(line, format!("alpha {a} is negative")));
            }
            if let Some(&prev) = wavelengths.last() {
                if R::lit(w) <= prev {
                    return Err(parse_err(
                        line,
                        format!("wavelength {w} does not increase (previous {prev})"),
                    ));
                }
            }
            wavelengths.push(R::lit(w));
            alphas.push(R::lit(a * scale));
        }
        if wavelengths.len() < 2 {
            return Err(parse_err(0, "an absorption table needs at least 2 data rows"));
        }
        Ok(Self {
            wavelengths_um: wavelengths,
            alpha_per_um: alphas,
            source_unit: unit,
        })
    }

    pub fn load(path: impl AsRef<Path>, unit: AbsorptionUnit) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Self::parse(&text, unit)
    }

    /// The bundled liquid-water spectrum.
    pub fn water() -> Self {
        Self::parse(WATER_ABSORPTION_CSV, AbsorptionUnit::PerUm).expect("bundled table is valid")
    }

    pub fn len(&self) -> usize {
        self.wavelengths_um.len()
    }

    pub fn is_empty(&self) -> bool {
        self.wavelengths_um.is_empty()
    }

    pub fn wavelengths_um(&self) -> &[R] {
        &self.wavelengths_um
    }

    pub fn alpha_per_um(&self) -> &[R] {
        &self.alpha_per_um
    }

    /// Unit of the alpha column before conversion.
    pub fn source_unit(&self) -> AbsorptionUnit {
        self.source_unit
    }

    pub fn range_um(&self) -> (R, R) {
        (self.wavelengths_um[0], *self.wavelengths_um.last().unwrap())
    }

    /// Linearly interpolated α(λ) in 1/µm. Errors outside the table range.
    pub fn alpha_at(&self, wavelength_um: R) -> Result<R> {
        let (min, max) = self.range_um();
        if !(wavelength_um >= min && wavelength_um <= max) {
            return Err(Error::Extrapolation {
                wavelength_um: wavelength_um.to_f64_lossy(),
                min_um: min.to_f64_lossy(),
                max_um: max.to_f64_lossy(),
            });
        }
        let w = &self.wavelengths_um;
        let hi = w.partition_point(|&x| x < wavelength_um).max(1);
        let lo = hi - 1;
        let t = (wavelength_um - w[lo]) / (w[hi] - w[lo]);
        Ok(self.alpha_per_um[lo] + t * (self.alpha_per_um[hi] - self.alpha_per_um[lo]))
    }

    /// `κ = exp(−α(λ)·L)` with `L` in µm.
    pub fn transmissivity(&self, wavelength_um: R, path_length_um: R) -> Result<R> {
        if !(path_length_um >= R::zero()) {
            return Err(invalid("path length must be >= 0"));
        }
        Ok(lambert(self.alpha_at(wavelength_um)?, path_length_um))
    }
}

/// `exp(−α·L)`.
pub fn lambert<R: Real>(alpha_per_um: R, path_length_um: R) -> R {
    (-alpha_per_um * path_length_um).exp()
}

/// Advantage at one wavelength and sample depth.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WaterAdvantage<R> {
    /// Amplitude-SNR dB, `10·log10(SNR_q/SNR_cl)`.
    pub db: R,
    pub kappa: R,
    pub occupation: R,
    /// Set when the sample is opaque (κ = 0) and the 0 dB value is a convention.
    pub flagged: bool,
}

/// Fundamental-limit advantage of gains (G, G) over coherent combs when only
/// the signal passes through the sample (η = 1, uniform κ, matched phase).
pub fn water_limited_advantage<R: Real>(
    table: &AbsorptionTable<R>,
    wavelength_um: R,
    path_length_um: R,
    gain: SqueezeGain<R>,
    gamma: R,
    env: &Environment<R>,
) -> Result<WaterAdvantage<R>> {
    let kappa = table.transmissivity(wavelength_um, path_length_um)?;
    absorption_limited_advantage(kappa, wavelength_um, gain, gamma, env)
}

/// [`water_limited_advantage`] for a known transmissivity.
pub fn absorption_limited_advantage<R: Real>(
    kappa: R,
    wavelength_um: R,
    gain: SqueezeGain<R>,
    gamma: R,
    env: &Environment<R>,
) -> Result<WaterAdvantage<R>> {
    if !(gamma > R::zero()) {
        return Err(invalid("γ must be positive"));
    }
    let signal_power = R::lit(1e-6);
    let cfg = DualCombConfig::new(1, wavelength_um * R::lit(1e-6), R::one(), signal_power, gamma * signal_power)?;
    let occupation = crate::model::thermal_occupation(cfg.line_frequency(1), env)?;
    if kappa == R::zero() {
        return Ok(WaterAdvantage {
            db: R::zero(),
            kappa,
            occupation,
            flagged: true,
        });
    }
    let sample = LineChannel::uniform(kappa, R::zero())?;
    let lo = LineChannel::ideal();
    let classical = snr_fundamental(&cfg, &sample, &lo, env, 1)?;
    let quantum = snr_fundamental(&cfg.with_gains(gain, gain), &sample, &lo, env, 1)?;
    Ok(WaterAdvantage {
        db: to_db(quantum / classical),
        kappa,
        occupation,
        flagged: false,
    })
}

/// Carrier frequency for a vacuum wavelength in µm.
pub fn frequency_from_um<R: Real>(wavelength_um: R) -> R {
    R::lit(consts::SPEED_OF_LIGHT) / (wavelength_um * R::lit(1e-6))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    const TWO_ROWS: &str = "wavelength_um,alpha_per_um\n1.0,1e-5\n2.0,1e-3\n";

    #[test]
    fn parse_examples() {
        let t = AbsorptionTable::<f64>::parse(TWO_ROWS, AbsorptionUnit::PerUm).unwrap();
        assert_eq!(t.len(), 2);
        assert_eq!(t.alpha_at(1.5).unwrap(), 0.5 * (1e-5 + 1e-3));

        let cm = AbsorptionTable::<f64>::parse("wavelength_um,alpha\n1.0,1.0\n2.0,2.0\n", AbsorptionUnit::PerCm)
            .unwrap();
        assert_relative_eq!(cm.alpha_per_um()[0], 1e-4, max_relative = 1e-15);
        assert_eq!(cm.source_unit(), AbsorptionUnit::PerCm);

        let err = AbsorptionTable::<f64>::parse(
            "# c\nwavelength_um,alpha_per_um\n1.0,1e-5\n3.0,1e-3\n2.0,1e-4\n",
            AbsorptionUnit::PerUm,
        )
        .unwrap_err();
        assert!(matches!(err, Error::Parse { line: 5, .. }), "{err:?}");
    }

    #[test]
    fn parse_rejects_bad_input() {
        let unit = AbsorptionUnit::PerUm;
        for (text, line) in [
            ("wavelength_um,alpha_per_um\n1.0,-1\n2.0,1\n", 2),
            ("wavelength_um,alpha_per_um\n1.0,1\n2.0,x\n", 3),
            ("wavelength_um,alpha_per_um\n1.0,1\n2.0\n", 3),
            ("lambda,alpha_per_um\n1.0,1\n2.0,1\n", 1),
            ("wavelength_um,alpha_per_cm\n1.0,1\n2.0,1\n", 1),
            ("wavelength_um,alpha_per_um\n1.0,1\n", 0),
        ] {
            match AbsorptionTable::<f64>::parse(text, unit) {
                Err(Error::Parse { line: l, .. }) => assert_eq!(l, line, "{text}"),
                other => panic!("{text}: {other:?}"),
            }
        }
        assert!("per_furlong".parse::<AbsorptionUnit>().is_err());
    }

    #[test]
    fn transmissivity_examples() {
        let zero = AbsorptionTable::from_rows(vec![1.0, 2.0], vec![0.0, 0.0]).unwrap();
        assert_eq!(zero.transmissivity(1.3, 100.0).unwrap(), 1.0);
        let t = AbsorptionTable::from_rows(vec![1.0, 2.0], vec![1e-4, 1e-4]).unwrap();
        assert_relative_eq!(t.transmissivity(1.5, 15.0).unwrap(), (-1.5e-3f64).exp(), max_relative = 1e-15);
        assert_relative_eq!(t.transmissivity(1.5, 15.0).unwrap(), 0.9985, max_relative = 1e-4);
        assert_eq!(t.transmissivity(1.5, 0.0).unwrap(), 1.0);
        assert!(matches!(t.transmissivity(2.5, 1.0), Err(Error::Extrapolation { .. })));
        assert!(t.transmissivity(1.5, -1.0).is_err());
    }

    #[test]
    fn bundled_water_table_loads() {
        let w = AbsorptionTable::<f64>::water();
        let (lo, hi) = w.range_um();
        assert_eq!((lo, hi), (0.2, 10.0));
        // visible window is orders of magnitude clearer than the 3 µm band
        assert!(w.alpha_at(0.5).unwrap() < 1e-7);
        assert!(w.alpha_at(3.0).unwrap() > 0.5);
        let f32_table = AbsorptionTable::<f32>::parse(WATER_ABSORPTION_CSV, AbsorptionUnit::PerUm).unwrap();
        assert_eq!(f32_table.len(), w.len());
    }

    #[test]
    fn advantage_examples() {
        let cold = Environment::cold();
        let g20 = SqueezeGain::from_db(20.0).unwrap();
        let a = absorption_limited_advantage(1.0, 1.0, g20, 5.0, &cold).unwrap();
        assert_relative_eq!(a.db, 10.0, max_relative = 1e-9);
        let unity = absorption_limited_advantage(0.3f64, 1.0, SqueezeGain::unity(), 5.0, &cold).unwrap();
        assert!(unity.db.abs() < 1e-12);
        let opaque = absorption_limited_advantage(0.0, 1.0, g20, 5.0, &cold).unwrap();
        assert!(opaque.flagged && opaque.db == 0.0);
        let nearly = absorption_limited_advantage(1e-9, 1.0, g20, 5.0, &cold).unwrap();
        assert!(nearly.db < 1e-6);
    }

    #[test]
    fn room_temperature_water_advantage_drops_in_absorption_bands() {
        let w = AbsorptionTable::water();
        let env = Environment::room();
        let g = SqueezeGain::from_db(20.0).unwrap();
        let visible = water_limited_advantage(&w, 0.5, 15.0, g, 5.0, &env).unwrap();
        let band = water_limited_advantage(&w, 3.0, 15.0, g, 5.0, &env).unwrap();
        assert!(visible.db > 9.9);
        assert!(band.db < 0.01);
    }

    proptest! {
        #[test]
        fn transmissivity_non_increasing_in_length(l1 in 0.0..1e3f64, dl in 0.0..1e3f64, lam in 0.2..10.0f64) {
            let w = AbsorptionTable::water();
            prop_assert!(w.transmissivity(lam, l1 + dl).unwrap() <= w.transmissivity(lam, l1).unwrap());
        }

        #[test]
        fn advantage_anti_monotone_in_absorption(a1 in 0.0..1.0f64, da in 0.0..1.0f64, db in 0.0..30.0f64) {
            let env = Environment::room();
            let g = SqueezeGain::from_db(db).unwrap();
            let k1 = lambert(a1, 15.0);
            let k2 = lambert(a1 + da, 15.0);
            let v1 = absorption_limited_advantage(k1, 5.0, g, 5.0, &env).unwrap().db;
            let v2 = absorption_limited_advantage(k2, 5.0, g, 5.0, &env).unwrap().db;
            prop_assert!(v2 <= v1 + 1e-12);
        }

        #[test]
        fn advantage_monotone_in_gain(kappa in 1e-6..1.0f64, g1 in 0.0..30.0f64, dg in 0.0..10.0f64) {
            let env = Environment::room();
            let a1 = absorption_limited_advantage(kappa, 5.0, SqueezeGain::from_db(g1).unwrap(), 5.0, &env).unwrap().db;
            let a2 = absorption_limited_advantage(kappa, 5.0, SqueezeGain::from_db(g1 + dg).unwrap(), 5.0, &env).unwrap().db;
            prop_assert!(a2 >= a1 - 1e-12);
        }
    }
}
