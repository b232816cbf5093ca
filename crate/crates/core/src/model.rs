//! Dual-comb experiment description, mean heterodyne spectrum and readout noise.
//!
//! Comb lines are indexed `1..=N`. Line `n` of the signal comb carries the
//! photon-number amplitude `Aₙ`, line `n` of the LO comb carries `Bₙ`, and the
//! readout at intermediate frequency `m·Δf_r` collects the beat of every line
//! with its sidebands.

use num_complex::Complex;

use crate::error::{degenerate, invalid, Result};
use crate::gaussian::{joint_quadrature_variance, SqueezeGain};
use crate::num::{consts, Real};

/// A per-line quantity that is either the same for all lines or given per line.
#[derive(Debug, Clone, PartialEq)]
pub enum LineValues<R> {
    Uniform(R),
    PerLine(Vec<R>),
}

impl<R: Real> LineValues<R> {
    /// Value at 1-based line `n`. Callers validate the length first.
    pub fn at(&self, n: usize) -> R {
        match self {
            LineValues::Uniform(v) => *v,
            LineValues::PerLine(vs) => vs[n - 1],
        }
    }

    pub fn is_uniform(&self) -> bool {
        match self {
            LineValues::Uniform(_) => true,
            LineValues::PerLine(vs) => vs.windows(2).all(|w| w[0] == w[1]),
        }
    }

    fn values(&self) -> Box<dyn Iterator<Item = R> + '_> {
        match self {
            LineValues::Uniform(v) => Box::new(std::iter::once(*v)),
            LineValues::PerLine(vs) => Box::new(vs.iter().copied()),
        }
    }

    fn check_len(&self, lines: usize, what: &str) -> Result<()> {
        if let LineValues::PerLine(vs) = self {
            if vs.len() != lines {
                return Err(invalid(format!(
                    "{what} has {} entries but the comb has {lines} lines",
                    vs.len()
                )));
            }
        }
        Ok(())
    }
}

/// Per-line transmissivity and phase of a thermal-loss phase-shift channel.
///
/// Used both for the sample (`κₙ, αₙ`) and for the LO path (`ηₙ, βₙ`).
#[derive(Debug, Clone, PartialEq)]
pub struct LineChannel<R> {
    transmissivity: LineValues<R>,
    phase: LineValues<R>,
}

/// Sample channel `(κₙ, αₙ)`.
pub type SampleResponse<R> = LineChannel<R>;
/// LO storage channel `(ηₙ, βₙ)`.
pub type LoPath<R> = LineChannel<R>;

impl<R: Real> LineChannel<R> {
    pub fn new(transmissivity: LineValues<R>, phase: LineValues<R>) -> Result<Self> {
        for t in transmissivity.values() {
            if !(t >= R::zero() && t <= R::one()) {
                return Err(invalid(format!("transmissivity must lie in [0, 1], got {t}")));
            }
        }
        if phase.values().any(|p| !p.is_finite()) {
            return Err(invalid("channel phase must be finite"));
        }
        Ok(Self {
            transmissivity,
            phase,
        })
    }

    pub fn uniform(transmissivity: R, phase: R) -> Result<Self> {
        Self::new(LineValues::Uniform(transmissivity), LineValues::Uniform(phase))
    }

    /// Lossless, phase-free channel.
    pub fn ideal() -> Self {
        Self {
            transmissivity: LineValues::Uniform(R::one()),
            phase: LineValues::Uniform(R::zero()),
        }
    }

    pub fn transmissivity_at(&self, n: usize) -> R {
        self.transmissivity.at(n)
    }

    pub fn phase_at(&self, n: usize) -> R {
        self.phase.at(n)
    }

    pub fn transmissivity(&self) -> &LineValues<R> {
        &self.transmissivity
    }

    pub fn phase(&self) -> &LineValues<R> {
        &self.phase
    }

    pub fn is_uniform(&self) -> bool {
        self.transmissivity.is_uniform() && self.phase.is_uniform()
    }

    pub fn check_lines(&self, lines: usize) -> Result<()> {
        self.transmissivity.check_len(lines, "transmissivity")?;
        self.phase.check_len(lines, "phase")
    }
}

/// Sample environment: temperature of the thermal bath mixed in by the loss.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Environment<R> {
    temperature: R,
}

impl<R: Real> Environment<R> {
    pub fn new(temperature_k: R) -> Result<Self> {
        if !(temperature_k >= R::zero()) || !temperature_k.is_finite() {
            return Err(invalid(format!("temperature must be >= 0 K, got {temperature_k}")));
        }
        Ok(Self {
            temperature: temperature_k,
        })
    }

    /// Zero-temperature bath (vacuum environment).
    pub fn cold() -> Self {
        Self {
            temperature: R::zero(),
        }
    }

    /// Room temperature, 295 K.
    pub fn room() -> Self {
        Self {
            temperature: R::lit(295.0),
        }
    }

    /// Temperature at which the bath holds `occupation` photons at `frequency_hz`.
    pub fn with_occupation_at(frequency_hz: R, occupation: R) -> Result<Self> {
        if !(frequency_hz > R::zero()) {
            return Err(invalid("frequency must be positive"));
        }
        if !(occupation >= R::zero()) {
            return Err(invalid("thermal occupation must be >= 0"));
        }
        if occupation == R::zero() {
            return Ok(Self::cold());
        }
        let hf = R::lit(consts::PLANCK) * frequency_hz;
        let temperature = hf / (R::lit(consts::BOLTZMANN) * (R::one() + occupation.recip()).ln());
        Self::new(temperature)
    }

    pub fn temperature(&self) -> R {
        self.temperature
    }
}

/// Bose–Einstein occupation `1/(exp(hf/k_B T) − 1)`; zero at `T = 0`.
pub fn thermal_occupation<R: Real>(frequency_hz: R, env: &Environment<R>) -> Result<R> {
    if !(frequency_hz > R::zero()) {
        return Err(invalid(format!("frequency must be positive, got {frequency_hz}")));
    }
    if env.temperature == R::zero() {
        return Ok(R::zero());
    }
    let x = R::lit(consts::PLANCK) * frequency_hz / (R::lit(consts::BOLTZMANN) * env.temperature);
    Ok(x.exp_m1().recip())
}

/// Optional explicit per-line photon-number amplitudes `Aₙ`, `Bₙ`.
#[derive(Debug, Clone, PartialEq)]
pub struct LineAmplitudes<R> {
    pub signal: Vec<R>,
    pub lo: Vec<R>,
}

/// The full dual-comb experiment.
///
/// Powers are optical powers of the mean fields; squeezing adds no power.
/// Unless explicit amplitudes are supplied, lines are symmetric:
/// `|A|² = P_S·T/(N·hν₀)` and `|B|² = P_LO·T/(N·hν₀)`.
#[derive(Debug, Clone, PartialEq)]
pub struct DualCombConfig<R> {
    lines: usize,
    rep_rate: R,
    rep_offset: R,
    carrier: R,
    acquisition: R,
    signal_power: R,
    lo_power: R,
    signal_gain: SqueezeGain<R>,
    lo_gain: SqueezeGain<R>,
    amplitudes: Option<LineAmplitudes<R>>,
}

impl<R: Real> DualCombConfig<R> {
    /// Default repetition rate, 100 MHz.
    pub const DEFAULT_REP_RATE_HZ: f64 = 1e8;
    /// Default repetition-rate offset, 100 Hz.
    pub const DEFAULT_REP_OFFSET_HZ: f64 = 100.0;

    /// Coherent-state combs at the default repetition rates.
    pub fn new(
        lines: usize,
        wavelength_m: R,
        acquisition_s: R,
        signal_power_w: R,
        lo_power_w: R,
    ) -> Result<Self> {
        if !(wavelength_m > R::zero()) {
            return Err(invalid("wavelength must be positive"));
        }
        let cfg = Self {
            lines,
            rep_rate: R::lit(Self::DEFAULT_REP_RATE_HZ),
            rep_offset: R::lit(Self::DEFAULT_REP_OFFSET_HZ),
            carrier: R::lit(consts::SPEED_OF_LIGHT) / wavelength_m,
            acquisition: acquisition_s,
            signal_power: signal_power_w,
            lo_power: lo_power_w,
            signal_gain: SqueezeGain::unity(),
            lo_gain: SqueezeGain::unity(),
            amplitudes: None,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn with_rates(mut self, rep_rate_hz: R, rep_offset_hz: R) -> Result<Self> {
        self.rep_rate = rep_rate_hz;
        self.rep_offset = rep_offset_hz;
        self.validate()?;
        Ok(self)
    }

    pub fn with_carrier_frequency(mut self, carrier_hz: R) -> Result<Self> {
        if !(carrier_hz > R::zero()) {
            return Err(invalid("carrier frequency must be positive"));
        }
        self.carrier = carrier_hz;
        Ok(self)
    }

    pub fn with_wavelength(self, wavelength_m: R) -> Result<Self> {
        if !(wavelength_m > R::zero()) {
            return Err(invalid("wavelength must be positive"));
        }
        self.with_carrier_frequency(R::lit(consts::SPEED_OF_LIGHT) / wavelength_m)
    }

    pub fn with_gains(mut self, signal: SqueezeGain<R>, lo: SqueezeGain<R>) -> Self {
        self.signal_gain = signal;
        self.lo_gain = lo;
        self
    }

    pub fn with_powers(mut self, signal_power_w: R, lo_power_w: R) -> Result<Self> {
        self.signal_power = signal_power_w;
        self.lo_power = lo_power_w;
        self.validate()?;
        Ok(self)
    }

    pub fn with_lines(mut self, lines: usize) -> Result<Self> {
        self.lines = lines;
        self.amplitudes = None;
        self.validate()?;
        Ok(self)
    }

    pub fn with_acquisition(mut self, acquisition_s: R) -> Result<Self> {
        self.acquisition = acquisition_s;
        self.validate()?;
        Ok(self)
    }

    /// Overrides the symmetric-line amplitudes. Powers are recomputed from
    /// `P = hν₀ Σ|Aₙ|²/T`.
    pub fn with_amplitudes(mut self, amplitudes: LineAmplitudes<R>) -> Result<Self> {
        if amplitudes.signal.len() != self.lines || amplitudes.lo.len() != self.lines {
            return Err(invalid("amplitude vectors must have one entry per comb line"));
        }
        let energy = self.photon_energy();
        let sum_sq = |v: &[R]| v.iter().fold(R::zero(), |acc, &a| acc + a * a);
        self.signal_power = energy * sum_sq(&amplitudes.signal) / self.acquisition;
        self.lo_power = energy * sum_sq(&amplitudes.lo) / self.acquisition;
        self.amplitudes = Some(amplitudes);
        Ok(self)
    }

    /// Checks the sampling and power invariants.
    pub fn validate(&self) -> Result<()> {
        if self.lines == 0 {
            return Err(invalid("comb needs at least one line"));
        }
        if !(self.acquisition > R::zero()) {
            return Err(invalid("acquisition time must be positive"));
        }
        if !(self.rep_rate > R::zero() && self.rep_offset > R::zero()) {
            return Err(invalid("repetition rate and its offset must be positive"));
        }
        if !(self.rep_offset / self.rep_rate < R::lit(1e-2)) {
            return Err(invalid("repetition-rate offset must satisfy Δf_r/f_r < 1e-2"));
        }
        if !(self.rep_rate > self.acquisition.recip()) {
            return Err(invalid("repetition rate must exceed 1/T to avoid aliasing"));
        }
        let lines = R::from_usize(self.lines).unwrap();
        if !(lines * self.rep_offset < self.rep_rate / R::lit(2.0)) {
            return Err(invalid(format!(
                "N·Δf_r = {} must stay below f_r/2 = {} so sidebands do not overlap",
                lines * self.rep_offset,
                self.rep_rate / R::lit(2.0)
            )));
        }
        if !(self.signal_power >= R::zero() && self.lo_power >= R::zero()) {
            return Err(invalid("optical powers must be >= 0"));
        }
        let threshold = R::lit(1e3);
        let photons = self.signal_photons_per_line().min(self.lo_photons_per_line());
        if photons > R::zero() && photons < threshold {
            log::warn!(
                "only {photons} photons per comb line; the linearized noise model assumes >> 1e3"
            );
        }
        Ok(())
    }

    pub fn lines(&self) -> usize {
        self.lines
    }

    pub fn rep_rate(&self) -> R {
        self.rep_rate
    }

    pub fn rep_offset(&self) -> R {
        self.rep_offset
    }

    pub fn carrier_frequency(&self) -> R {
        self.carrier
    }

    pub fn wavelength(&self) -> R {
        R::lit(consts::SPEED_OF_LIGHT) / self.carrier
    }

    pub fn acquisition(&self) -> R {
        self.acquisition
    }

    pub fn signal_power(&self) -> R {
        self.signal_power
    }

    pub fn lo_power(&self) -> R {
        self.lo_power
    }

    /// `γ = P_LO / P_S`.
    pub fn gamma(&self) -> R {
        self.lo_power / self.signal_power
    }

    pub fn signal_gain(&self) -> SqueezeGain<R> {
        self.signal_gain
    }

    pub fn lo_gain(&self) -> SqueezeGain<R> {
        self.lo_gain
    }

    pub fn amplitudes(&self) -> Option<&LineAmplitudes<R>> {
        self.amplitudes.as_ref()
    }

    /// True when every line carries the same `A` and the same `B`.
    pub fn has_symmetric_lines(&self) -> bool {
        match &self.amplitudes {
            None => true,
            Some(a) => {
                a.signal.windows(2).all(|w| w[0] == w[1]) && a.lo.windows(2).all(|w| w[0] == w[1])
            }
        }
    }

    /// Photon energy `hν₀`, J.
    pub fn photon_energy(&self) -> R {
        R::lit(consts::PLANCK) * self.carrier
    }

    /// Optical frequency of line `n`, `ν₀ + n·f_r`.
    pub fn line_frequency(&self, n: usize) -> R {
        self.carrier + R::from_usize(n).unwrap() * self.rep_rate
    }

    pub fn signal_photons_per_line(&self) -> R {
        photons_per_line(self.signal_power, self)
    }

    pub fn lo_photons_per_line(&self) -> R {
        photons_per_line(self.lo_power, self)
    }

    /// `Aₙ`.
    pub fn signal_amplitude(&self, n: usize) -> R {
        match &self.amplitudes {
            Some(a) => a.signal[n - 1],
            None => self.signal_photons_per_line().sqrt(),
        }
    }

    /// `Bₙ`.
    pub fn lo_amplitude(&self, n: usize) -> R {
        match &self.amplitudes {
            Some(a) => a.lo[n - 1],
            None => self.lo_photons_per_line().sqrt(),
        }
    }

    pub(crate) fn check_line(&self, m: usize) -> Result<()> {
        if m == 0 || m > self.lines {
            return Err(invalid(format!(
                "line index {m} outside 1..={}",
                self.lines
            )));
        }
        Ok(())
    }
}

/// Photons per line in a symmetric comb: `P·T/(N·hν₀)`.
pub fn photons_per_line<R: Real>(power_w: R, cfg: &DualCombConfig<R>) -> R {
    power_w * cfg.acquisition / (R::from_usize(cfg.lines).unwrap() * cfg.photon_energy())
}

/// Mean readout at `m·Δf_r`: `√(κ_m η_m)·A_m·B_m·e^{i(α_m − β_m)}`.
pub fn mean_ac_spectrum<R: Real>(
    cfg: &DualCombConfig<R>,
    sample: &SampleResponse<R>,
    lo: &LoPath<R>,
    m: usize,
) -> Result<Complex<R>> {
    cfg.check_line(m)?;
    sample.check_lines(cfg.lines)?;
    lo.check_lines(cfg.lines)?;
    let magnitude = (sample.transmissivity_at(m) * lo.transmissivity_at(m)).sqrt()
        * cfg.signal_amplitude(m)
        * cfg.lo_amplitude(m);
    Ok(Complex::from_polar(magnitude, sample.phase_at(m) - lo.phase_at(m)))
}

/// Contribution of comb line `n` to the readout noise variance (complex
/// convention `⟨Σ†Σ⟩`), given its environment occupation.
pub fn line_noise_variance<R: Real>(
    cfg: &DualCombConfig<R>,
    sample: &SampleResponse<R>,
    lo: &LoPath<R>,
    n: usize,
    occupation: R,
) -> R {
    let kappa = sample.transmissivity_at(n);
    let eta = lo.transmissivity_at(n);
    let theta = sample.phase_at(n) - lo.phase_at(n);
    let a2 = cfg.signal_amplitude(n).powi(2);
    let b2 = cfg.lo_amplitude(n).powi(2);
    let thermal = R::lit(2.0) * occupation + R::one();
    let environment =
        eta * b2 * (R::one() - kappa) * thermal + kappa * a2 * (R::one() - eta) * thermal;
    let var_x = joint_quadrature_variance(cfg.signal_gain, theta);
    let var_q = joint_quadrature_variance(cfg.lo_gain, theta);
    environment + eta * kappa * (b2 * var_x + a2 * var_q)
}

/// Readout noise variance at `m·Δf_r`, summed over all `N` lines.
///
/// Under symmetric, uniform channels the result does not depend on `m`; the
/// index is kept for range checking and non-uniform spectra.
pub fn ac_noise_variance<R: Real>(
    cfg: &DualCombConfig<R>,
    sample: &SampleResponse<R>,
    lo: &LoPath<R>,
    env: &Environment<R>,
    m: usize,
) -> Result<R> {
    cfg.check_line(m)?;
    sample.check_lines(cfg.lines)?;
    lo.check_lines(cfg.lines)?;

    if env.temperature() == R::zero()
        && sample.is_uniform()
        && lo.is_uniform()
        && cfg.has_symmetric_lines()
    {
        let per_line = line_noise_variance(cfg, sample, lo, 1, R::zero());
        return Ok(R::from_usize(cfg.lines).unwrap() * per_line);
    }

    let mut total = R::zero();
    for n in 1..=cfg.lines {
        let occupation = thermal_occupation(cfg.line_frequency(n), env)?;
        total = total + line_noise_variance(cfg, sample, lo, n, occupation);
    }
    Ok(total)
}

/// Amplitude SNR `|N̄_AC| / √var N_AC` at line `m` with only fundamental noise.
pub fn snr_fundamental<R: Real>(
    cfg: &DualCombConfig<R>,
    sample: &SampleResponse<R>,
    lo: &LoPath<R>,
    env: &Environment<R>,
    m: usize,
) -> Result<R> {
    let mean = mean_ac_spectrum(cfg, sample, lo, m)?;
    let variance = ac_noise_variance(cfg, sample, lo, env, m)?;
    if !(variance > R::zero()) {
        return Err(degenerate("readout noise variance is zero"));
    }
    Ok(mean.norm() / variance.sqrt())
}

/// A complete scenario: experiment, both channels and the environment.
#[derive(Debug, Clone, PartialEq)]
pub struct Scenario<R> {
    pub config: DualCombConfig<R>,
    pub sample: SampleResponse<R>,
    pub lo: LoPath<R>,
    pub env: Environment<R>,
}

impl<R: Real> Scenario<R> {
    /// Ideal channels and a cold environment.
    pub fn ideal(config: DualCombConfig<R>) -> Self {
        Self {
            config,
            sample: LineChannel::ideal(),
            lo: LineChannel::ideal(),
            env: Environment::cold(),
        }
    }

    pub fn mean(&self, m: usize) -> Result<Complex<R>> {
        mean_ac_spectrum(&self.config, &self.sample, &self.lo, m)
    }

    pub fn noise_variance(&self, m: usize) -> Result<R> {
        ac_noise_variance(&self.config, &self.sample, &self.lo, &self.env, m)
    }

    pub fn snr(&self, m: usize) -> Result<R> {
        snr_fundamental(&self.config, &self.sample, &self.lo, &self.env, m)
    }

    /// Same scenario with the signal and LO roles exchanged.
    pub fn swapped(&self) -> Self {
        let c = &self.config;
        let mut config = c.clone();
        config.signal_power = c.lo_power;
        config.lo_power = c.signal_power;
        config.signal_gain = c.lo_gain;
        config.lo_gain = c.signal_gain;
        config.amplitudes = c.amplitudes.as_ref().map(|a| LineAmplitudes {
            signal: a.lo.clone(),
            lo: a.signal.clone(),
        });
        Self {
            config,
            sample: self.lo.clone(),
            lo: self.sample.clone(),
            env: self.env,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::{assert_abs_diff_eq, assert_relative_eq};
    use proptest::prelude::*;
    use std::f64::consts::FRAC_PI_4;

    fn gain(g: f64) -> SqueezeGain<f64> {
        SqueezeGain::new(g).unwrap()
    }

    /// Config with `A = B = amplitude` photons^(1/2) on each of `lines` lines.
    fn config_with_amplitudes(lines: usize, a: f64, b: f64) -> DualCombConfig<f64> {
        let base = DualCombConfig::new(lines, 1e-6, 1.0, 1e-4, 1e-4).unwrap();
        base.with_amplitudes(LineAmplitudes {
            signal: vec![a; lines],
            lo: vec![b; lines],
        })
        .unwrap()
    }

    fn channel(k: f64, phi: f64) -> LineChannel<f64> {
        LineChannel::uniform(k, phi).unwrap()
    }

    #[test]
    fn photons_per_line_examples() {
        let cfg = DualCombConfig::new(100_000, 1e-6, 1.0, 1e-4, 5e-4).unwrap();
        assert_eq!(photons_per_line(0.0, &cfg), 0.0);
        // hν₀ = hc/λ
        let energy = consts::PLANCK * consts::SPEED_OF_LIGHT / 1e-6;
        assert_relative_eq!(cfg.photon_energy(), energy, max_relative = 1e-15);
        assert_relative_eq!(energy, 1.986e-19, max_relative = 1e-3);
        let photons = photons_per_line(1e-4, &cfg);
        assert_relative_eq!(photons, 1e-4 / (1e5 * energy), max_relative = 1e-14);
        assert_relative_eq!(photons, 5.03e9, max_relative = 1e-3);
        let doubled = cfg.clone().with_acquisition(2.0).unwrap();
        assert_relative_eq!(photons_per_line(1e-4, &doubled), 2.0 * photons, max_relative = 1e-14);
        assert_relative_eq!(cfg.gamma(), 5.0, max_relative = 1e-15);
    }

    #[test]
    fn config_invariants() {
        let cfg = DualCombConfig::<f64>::new(100_000, 1e-6, 1.0, 1e-4, 5e-4).unwrap();
        // Δf_r/f_r too large
        assert!(cfg.clone().with_rates(1e8, 2e6).is_err());
        // f_r < 1/T
        assert!(DualCombConfig::<f64>::new(1, 1e-6, 1e-9, 1e-4, 1e-4).is_err());
        // N·Δf_r >= f_r/2
        assert!(cfg.clone().with_rates(1e8, 600.0).is_err());
        assert!(cfg.clone().with_powers(-1.0, 1.0).is_err());
        assert!(DualCombConfig::<f64>::new(0, 1e-6, 1.0, 1e-4, 1e-4).is_err());
        assert!(DualCombConfig::<f64>::new(1, -1e-6, 1.0, 1e-4, 1e-4).is_err());
    }

    #[test]
    fn channel_validation() {
        assert!(LineChannel::<f64>::uniform(1.2, 0.0).is_err());
        assert!(LineChannel::<f64>::uniform(-0.1, 0.0).is_err());
        let per_line =
            LineChannel::new(LineValues::PerLine(vec![0.5, 0.6]), LineValues::Uniform(0.0)).unwrap();
        let cfg = config_with_amplitudes(3, 10.0, 10.0);
        assert!(mean_ac_spectrum(&cfg, &per_line, &LineChannel::ideal(), 1).is_err());
    }

    #[test]
    fn thermal_occupation_examples() {
        let room = Environment::new(300.0).unwrap();
        let at = |lambda: f64| thermal_occupation(consts::SPEED_OF_LIGHT / lambda, &room).unwrap();
        assert_abs_diff_eq!(at(10e-6), 0.0083, epsilon = 2e-4);
        assert!(at(5e-6) <= 1e-4);
        assert_eq!(thermal_occupation(3e13, &Environment::cold()).unwrap(), 0.0);
        assert!(thermal_occupation(0.0, &room).is_err());
        assert!(Environment::new(-1.0).is_err());
    }

    #[test]
    fn environment_from_occupation_inverts() {
        let env = Environment::with_occupation_at(3e14, 0.01).unwrap();
        assert_relative_eq!(thermal_occupation(3e14, &env).unwrap(), 0.01, max_relative = 1e-12);
    }

    #[test]
    fn mean_spectrum_examples() {
        let cfg = config_with_amplitudes(4, 1000.0, 1000.0);
        let ideal = LineChannel::ideal();
        let v = mean_ac_spectrum(&cfg, &ideal, &ideal, 2).unwrap();
        assert_relative_eq!(v.re, 1e6, max_relative = 1e-15);
        assert_abs_diff_eq!(v.im, 0.0);

        let dark = channel(0.0, 0.0);
        assert_eq!(mean_ac_spectrum(&cfg, &dark, &ideal, 1).unwrap().norm(), 0.0);

        let v = mean_ac_spectrum(&cfg, &channel(0.5, FRAC_PI_4), &ideal, 3).unwrap();
        assert_relative_eq!(v.norm(), 7.071_067_811_865_476e5, max_relative = 1e-14);
        assert_relative_eq!(v.arg(), FRAC_PI_4, max_relative = 1e-14);

        assert!(mean_ac_spectrum(&cfg, &ideal, &ideal, 0).is_err());
        assert!(mean_ac_spectrum(&cfg, &ideal, &ideal, 5).is_err());
    }

    #[test]
    fn noise_variance_examples() {
        let (n, a, b) = (8usize, 300.0, 700.0);
        let cfg = config_with_amplitudes(n, a, b);
        let ideal = LineChannel::ideal();
        let cold = Environment::cold();
        let nf = n as f64;

        let classical = ac_noise_variance(&cfg, &ideal, &ideal, &cold, 1).unwrap();
        assert_relative_eq!(classical, nf * (a * a + b * b), max_relative = 1e-14);

        let squeezed_cfg = cfg.clone().with_gains(gain(10.0), gain(10.0));
        let squeezed = ac_noise_variance(&squeezed_cfg, &ideal, &ideal, &cold, 1).unwrap();
        assert_relative_eq!(squeezed, nf * (a * a + b * b) / 10.0, max_relative = 1e-14);

        let opaque = ac_noise_variance(&squeezed_cfg, &channel(0.0, 0.0), &ideal, &cold, 1).unwrap();
        assert_relative_eq!(opaque, nf * b * b, max_relative = 1e-14);
    }

    #[test]
    fn snr_examples() {
        let (n, a) = (8usize, 500.0);
        let cfg = config_with_amplitudes(n, a, a);
        let ideal = LineChannel::ideal();
        let cold = Environment::cold();
        let classical = snr_fundamental(&cfg, &ideal, &ideal, &cold, 1).unwrap();
        assert_relative_eq!(classical, a / (2.0 * n as f64).sqrt(), max_relative = 1e-14);

        let squeezed = cfg.clone().with_gains(gain(10.0), gain(10.0));
        let q = snr_fundamental(&squeezed, &ideal, &ideal, &cold, 1).unwrap();
        assert_relative_eq!(q, classical * 10f64.sqrt(), max_relative = 1e-14);

        assert_eq!(snr_fundamental(&cfg, &channel(0.0, 0.0), &ideal, &cold, 1).unwrap(), 0.0);

        let zero = config_with_amplitudes(2, 0.0, 0.0);
        assert!(matches!(
            snr_fundamental(&zero, &ideal, &ideal, &cold, 1),
            Err(crate::Error::DegenerateModel(_))
        ));
    }

    #[test]
    fn thermal_path_matches_cold_fast_path_at_zero_occupation() {
        let cfg = config_with_amplitudes(5, 100.0, 200.0).with_gains(gain(3.0), gain(2.0));
        let s = channel(0.6, 0.2);
        let l = channel(0.9, 0.05);
        let fast = ac_noise_variance(&cfg, &s, &l, &Environment::cold(), 2).unwrap();
        let slow: f64 = (1..=5).map(|n| line_noise_variance(&cfg, &s, &l, n, 0.0)).sum();
        assert_relative_eq!(fast, slow, max_relative = 1e-13);
    }

    #[test]
    fn signal_squeezing_gain_approaches_sqrt_g_with_bright_lo() {
        let g = 10.0;
        let ideal = LineChannel::ideal();
        let cold = Environment::cold();
        let mut last = 0.0;
        for gamma in [1.0, 10.0, 100.0, 1e4, 1e6] {
            let cfg = DualCombConfig::new(10, 1e-6, 1.0, 1e-6, 1e-6 * gamma).unwrap();
            let cl = snr_fundamental(&cfg, &ideal, &ideal, &cold, 1).unwrap();
            let q = snr_fundamental(&cfg.clone().with_gains(gain(g), gain(1.0)), &ideal, &ideal, &cold, 1)
                .unwrap();
            let ratio = q / cl;
            assert!(ratio > last);
            last = ratio;
        }
        assert_relative_eq!(last, g.sqrt(), max_relative = 1e-4);
    }

    proptest! {
        #[test]
        fn snr_monotone_in_gains(g1 in 1.0f64..1000.0, g2 in 1.0f64..1000.0, f in 1.0f64..3.0, k in 0.0f64..=1.0, e in 0.0f64..=1.0) {
            let cfg = DualCombConfig::new(16, 1e-6, 1.0, 1e-5, 3e-5).unwrap();
            let s = channel(k, 0.0);
            let l = channel(e, 0.0);
            let env = Environment::new(300.0).unwrap();
            let snr = |a: f64, b: f64| {
                snr_fundamental(&cfg.clone().with_gains(gain(a), gain(b)), &s, &l, &env, 3).unwrap_or(0.0)
            };
            let base = snr(g1, g2);
            prop_assert!(snr((g1 * f).min(1000.0), g2) >= base * (1.0 - 1e-12));
            prop_assert!(snr(g1, (g2 * f).min(1000.0)) >= base * (1.0 - 1e-12));
        }

        #[test]
        fn exchange_symmetry(
            g1 in 1.0f64..100.0, g2 in 1.0f64..100.0,
            k in 0.0f64..=1.0, e in 0.0f64..=1.0,
            alpha in -3.0f64..3.0, beta in -3.0f64..3.0,
            ps in 1e-6f64..1e-3, plo in 1e-6f64..1e-3,
        ) {
            let cfg = DualCombConfig::new(6, 2e-6, 1.0, ps, plo).unwrap().with_gains(gain(g1), gain(g2));
            let scenario = Scenario {
                config: cfg,
                sample: channel(k, alpha),
                lo: channel(e, beta),
                env: Environment::new(500.0).unwrap(),
            };
            let v = scenario.noise_variance(2).unwrap();
            let w = scenario.swapped().noise_variance(2).unwrap();
            prop_assert!((v - w).abs() <= 1e-12 * v.abs());
        }
    }
}
