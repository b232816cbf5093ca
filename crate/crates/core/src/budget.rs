//! Practical SNR budget: detector (NEP), quadrature and laser intensity (RIN)
//! noise, normalized by the mean readout power so that
//! `SNR⁻² = σ²_NEP + σ²_quad + σ²_RIN = (N²/T)(a_NEP/P_S² + a_quad/P_S + a_RIN)`.
//!
//! NEP and RIN are single-sided densities integrated over `Δf = 1/(2T)`.
//! Detection is balanced. Quantum advantage is reported in amplitude-SNR
//! decibels, `10·log10(SNR_q/SNR_cl)`, which is `5·log10` of the variance ratio.

use std::fmt;

use crate::error::{degenerate, invalid, Result};
use crate::gaussian::SqueezeGain;
use crate::model::{ac_noise_variance, DualCombConfig, Environment, LoPath, SampleResponse, Scenario};
use crate::num::{from_db, to_db, Real};

/// Photodetector and laser noise figures.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DetectorModel<R> {
    nep: R,
    rin: R,
}

impl<R: Real> DetectorModel<R> {
    /// `nep` in W/√Hz, `rin` in 1/Hz.
    pub fn new(nep: R, rin: R) -> Result<Self> {
        if !(nep >= R::zero()) || !(rin >= R::zero()) {
            return Err(invalid("NEP and RIN must be >= 0"));
        }
        Ok(Self { nep, rin })
    }

    /// RIN given in dBc/Hz.
    pub fn from_rin_dbc(nep: R, rin_dbc_per_hz: R) -> Result<Self> {
        Self::new(nep, from_db(rin_dbc_per_hz))
    }

    /// Ideal detector and noiseless laser.
    pub fn noiseless() -> Self {
        Self {
            nep: R::zero(),
            rin: R::zero(),
        }
    }

    pub fn nep(&self) -> R {
        self.nep
    }

    pub fn rin(&self) -> R {
        self.rin
    }

    /// RIN in dBc/Hz (`-inf` for a noiseless laser).
    pub fn rin_dbc(&self) -> R {
        to_db(self.rin)
    }

    pub fn with_nep(self, nep: R) -> Result<Self> {
        Self::new(nep, self.rin)
    }

    pub fn with_rin(self, rin: R) -> Result<Self> {
        Self::new(self.nep, rin)
    }
}

/// Detection bandwidth `Δf = 1/(2T)` for single-sided densities.
pub fn detection_bandwidth<R: Real>(acquisition_s: R) -> R {
    (R::lit(2.0) * acquisition_s).recip()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum NoiseTerm {
    Nep,
    Quad,
    Rin,
}

impl fmt::Display for NoiseTerm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            NoiseTerm::Nep => "nep",
            NoiseTerm::Quad => "quad",
            NoiseTerm::Rin => "rin",
        })
    }
}

/// The three normalized noise terms, their power-law coefficients and the SNR.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NoiseBreakdown<R> {
    pub sigma2_nep: R,
    pub sigma2_quad: R,
    pub sigma2_rin: R,
    /// Amplitude SNR, `(σ²_NEP + σ²_quad + σ²_RIN)^{-1/2}`.
    pub snr: R,
    /// `NEP²/(η_m κ_m γ)`, W².
    pub a_nep: R,
    /// `4·c_γ·hν₀`, W.
    pub a_quad: R,
    /// `2·c_{γ²}·RIN = RIN/2`.
    pub a_rin: R,
    pub gamma: R,
    pub c_gamma: R,
    pub c_gamma2: R,
}

impl<R: Real> NoiseBreakdown<R> {
    pub fn total(&self) -> R {
        self.sigma2_nep + self.sigma2_quad + self.sigma2_rin
    }

    /// `10·log10(SNR)`.
    pub fn snr_db(&self) -> R {
        to_db(self.snr)
    }

    pub fn dominant(&self) -> NoiseTerm {
        let mut best = (NoiseTerm::Nep, self.sigma2_nep);
        for term in [(NoiseTerm::Quad, self.sigma2_quad), (NoiseTerm::Rin, self.sigma2_rin)] {
            if term.1 > best.1 {
                best = term;
            }
        }
        best.0
    }
}

/// Balanced-detection RIN coefficient `c_{γ²}`.
const C_GAMMA2: f64 = 0.25;

fn require_symmetric_powers<R: Real>(cfg: &DualCombConfig<R>) -> Result<()> {
    if !cfg.has_symmetric_lines() {
        return Err(invalid(
            "power-law noise terms assume symmetric comb lines; use ac_noise_variance for per-line amplitudes",
        ));
    }
    if !(cfg.signal_power() > R::zero()) {
        return Err(invalid("signal power must be positive"));
    }
    if !(cfg.lo_power() > R::zero()) {
        return Err(invalid("LO power must be positive (γ > 0)"));
    }
    Ok(())
}

fn mean_weight<R: Real>(sample: &SampleResponse<R>, lo: &LoPath<R>, lines: usize, m: usize) -> Result<R> {
    sample.check_lines(lines)?;
    lo.check_lines(lines)?;
    let weight = sample.transmissivity_at(m) * lo.transmissivity_at(m);
    if !(weight > R::zero()) {
        return Err(degenerate(format!(
            "η_m·κ_m = 0 at line {m}: the mean signal vanishes"
        )));
    }
    Ok(weight)
}

fn n2_over_t<R: Real>(cfg: &DualCombConfig<R>) -> R {
    R::from_usize(cfg.lines()).unwrap().powi(2) / cfg.acquisition()
}

/// `σ²_NEP = (N²/T)·NEP²/(η_m κ_m γ P_S²)`.
pub fn sigma_nep<R: Real>(
    cfg: &DualCombConfig<R>,
    sample: &SampleResponse<R>,
    lo: &LoPath<R>,
    det: &DetectorModel<R>,
    m: usize,
) -> Result<R> {
    cfg.check_line(m)?;
    require_symmetric_powers(cfg)?;
    let weight = mean_weight(sample, lo, cfg.lines(), m)?;
    let ps = cfg.signal_power();
    Ok(n2_over_t(cfg) * det.nep().powi(2) / (weight * cfg.gamma() * ps * ps))
}

/// `c_γ = var Σ_AC / (4 η_m κ_m B_m² N)`.
///
/// Reduces to `(1 + 1/γ)/4` for coherent states, unit transmissivities and a
/// cold environment.
pub fn quadrature_coefficient<R: Real>(
    cfg: &DualCombConfig<R>,
    sample: &SampleResponse<R>,
    lo: &LoPath<R>,
    env: &Environment<R>,
    m: usize,
) -> Result<R> {
    cfg.check_line(m)?;
    require_symmetric_powers(cfg)?;
    let weight = mean_weight(sample, lo, cfg.lines(), m)?;
    let variance = ac_noise_variance(cfg, sample, lo, env, m)?;
    let b2 = cfg.lo_amplitude(m).powi(2);
    Ok(variance / (R::lit(4.0) * weight * b2 * R::from_usize(cfg.lines()).unwrap()))
}

/// `σ²_quad = (N²/T)·c_γ·4hν₀/P_S`.
pub fn sigma_quad<R: Real>(
    cfg: &DualCombConfig<R>,
    sample: &SampleResponse<R>,
    lo: &LoPath<R>,
    env: &Environment<R>,
    m: usize,
) -> Result<R> {
    let c_gamma = quadrature_coefficient(cfg, sample, lo, env, m)?;
    Ok(n2_over_t(cfg) * c_gamma * R::lit(4.0) * cfg.photon_energy() / cfg.signal_power())
}

/// `σ²_RIN = (N²/T)·2·c_{γ²}·RIN = (N²/T)·RIN/2`, independent of both powers.
pub fn sigma_rin<R: Real>(cfg: &DualCombConfig<R>, det: &DetectorModel<R>) -> R {
    n2_over_t(cfg) * R::lit(2.0 * C_GAMMA2) * det.rin()
}

/// Full noise budget at line `m`.
pub fn snr_full<R: Real>(
    cfg: &DualCombConfig<R>,
    sample: &SampleResponse<R>,
    lo: &LoPath<R>,
    env: &Environment<R>,
    det: &DetectorModel<R>,
    m: usize,
) -> Result<NoiseBreakdown<R>> {
    let sigma2_nep = sigma_nep(cfg, sample, lo, det, m)?;
    let c_gamma = quadrature_coefficient(cfg, sample, lo, env, m)?;
    let sigma2_quad =
        n2_over_t(cfg) * c_gamma * R::lit(4.0) * cfg.photon_energy() / cfg.signal_power();
    let sigma2_rin = sigma_rin(cfg, det);
    let total = sigma2_nep + sigma2_quad + sigma2_rin;
    if !(total > R::zero()) {
        return Err(degenerate("every noise term is zero"));
    }
    let gamma = cfg.gamma();
    let weight = sample.transmissivity_at(m) * lo.transmissivity_at(m);
    Ok(NoiseBreakdown {
        sigma2_nep,
        sigma2_quad,
        sigma2_rin,
        snr: total.sqrt().recip(),
        a_nep: det.nep().powi(2) / (weight * gamma),
        a_quad: R::lit(4.0) * c_gamma * cfg.photon_energy(),
        a_rin: R::lit(2.0 * C_GAMMA2) * det.rin(),
        gamma,
        c_gamma,
        c_gamma2: R::lit(C_GAMMA2),
    })
}

/// [`snr_full`] on a [`Scenario`].
pub fn scenario_budget<R: Real>(
    scenario: &Scenario<R>,
    det: &DetectorModel<R>,
    m: usize,
) -> Result<NoiseBreakdown<R>> {
    snr_full(&scenario.config, &scenario.sample, &scenario.lo, &scenario.env, det, m)
}

/// Quantum advantage in amplitude-SNR dB, `10·log10(SNR_q / SNR_cl)`.
pub fn quantum_advantage<R: Real>(
    cfg_quantum: &DualCombConfig<R>,
    cfg_classical: &DualCombConfig<R>,
    sample: &SampleResponse<R>,
    lo: &LoPath<R>,
    env: &Environment<R>,
    det: &DetectorModel<R>,
    m: usize,
) -> Result<R> {
    let quantum = snr_full(cfg_quantum, sample, lo, env, det, m)?.snr;
    let classical = snr_full(cfg_classical, sample, lo, env, det, m)?.snr;
    if !(classical > R::zero()) || !(quantum > R::zero()) {
        return Err(degenerate("advantage needs both SNRs positive"));
    }
    Ok(to_db(quantum / classical))
}

/// Same config with coherent-state (unit-gain) combs.
pub fn classical_counterpart<R: Real>(cfg: &DualCombConfig<R>) -> DualCombConfig<R> {
    cfg.clone()
        .with_gains(SqueezeGain::unity(), SqueezeGain::unity())
}

/// Advantage maximized over the signal power at fixed `γ`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PowerOptimum<R> {
    pub signal_power: R,
    pub advantage_db: R,
}

/// Maximizes [`quantum_advantage`] of `cfg_quantum` over its coherent-state
/// counterpart across `P_S ∈ [low, high]` (log-spaced scan plus golden-section
/// refinement), keeping `γ` fixed.
pub fn max_advantage_over_signal_power<R: Real>(
    cfg_quantum: &DualCombConfig<R>,
    sample: &SampleResponse<R>,
    lo: &LoPath<R>,
    env: &Environment<R>,
    det: &DetectorModel<R>,
    m: usize,
    (low, high): (R, R),
) -> Result<PowerOptimum<R>> {
    if !(low > R::zero() && high > low) {
        return Err(invalid("power range must satisfy 0 < low < high"));
    }
    let gamma = cfg_quantum.gamma();
    let advantage_at = |log_p: R| -> Result<R> {
        let p = R::lit(10.0).powf(log_p);
        let q = cfg_quantum.clone().with_powers(p, gamma * p)?;
        let c = classical_counterpart(&q);
        quantum_advantage(&q, &c, sample, lo, env, det, m)
    };

    let (lo_x, hi_x) = (low.log10(), high.log10());
    let steps = 240usize;
    let step = (hi_x - lo_x) / R::from_usize(steps).unwrap();
    let mut best = (lo_x, advantage_at(lo_x)?);
    for i in 1..=steps {
        let x = lo_x + step * R::from_usize(i).unwrap();
        let v = advantage_at(x)?;
        if v > best.1 {
            best = (x, v);
        }
    }

    let inv_phi = R::lit(0.618_033_988_749_894_8);
    let (mut a, mut b) = ((best.0 - step).max(lo_x), (best.0 + step).min(hi_x));
    let mut c = b - inv_phi * (b - a);
    let mut d = a + inv_phi * (b - a);
    let (mut fc, mut fd) = (advantage_at(c)?, advantage_at(d)?);
    for _ in 0..80 {
        if fc > fd {
            b = d;
            d = c;
            fd = fc;
            c = b - inv_phi * (b - a);
            fc = advantage_at(c)?;
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + inv_phi * (b - a);
            fd = advantage_at(d)?;
        }
    }
    let x = (a + b) / R::lit(2.0);
    let v = advantage_at(x)?;
    let (x, v) = if v >= best.1 { (x, v) } else { best };
    Ok(PowerOptimum {
        signal_power: R::lit(10.0).powf(x),
        advantage_db: v,
    })
}

/// Ultimate advantage of squeezing at the power where the NEP-only and
/// RIN-only limits cross, `P_S = √(a_NEP/a_RIN)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LimitAdvantage<R> {
    pub crossing_power: R,
    /// Classical SNR against the NEP-only limit (equal to the RIN-only limit there).
    pub versus_nep_limit_db: R,
    /// Classical SNR against infinite squeezing with both practical noises kept.
    pub versus_infinite_gain_db: R,
}

pub fn limit_advantage<R: Real>(
    cfg: &DualCombConfig<R>,
    sample: &SampleResponse<R>,
    lo: &LoPath<R>,
    env: &Environment<R>,
    det: &DetectorModel<R>,
    m: usize,
) -> Result<LimitAdvantage<R>> {
    let probe = snr_full(cfg, sample, lo, env, det, m)?;
    if !(probe.a_rin > R::zero() && probe.a_nep > R::zero()) {
        return Err(degenerate("limit crossing needs both NEP and RIN"));
    }
    let crossing_power = (probe.a_nep / probe.a_rin).sqrt();
    let at = cfg
        .clone()
        .with_powers(crossing_power, probe.gamma * crossing_power)?;
    let classical = snr_full(&classical_counterpart(&at), sample, lo, env, det, m)?;
    let half = R::lit(5.0);
    Ok(LimitAdvantage {
        crossing_power,
        versus_nep_limit_db: half * (classical.total() / classical.sigma2_nep).log10(),
        versus_infinite_gain_db: half
            * (classical.total() / (classical.sigma2_nep + classical.sigma2_rin)).log10(),
    })
}

/// Signal powers above/below which NEP- or RIN-type noise overtakes the
/// quadrature noise, for equal signal and LO squeezing `G`, ideal LO path and
/// uniform transmissivity `κ`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SaturationThresholds<R> {
    /// Below this power σ²_NEP > σ²_quad.
    pub nep: R,
    /// Above this power σ²_RIN > σ²_quad; `+inf` when RIN = 0.
    pub rin: R,
}

/// Closed-form saturation thresholds.
///
/// With `D = γ[G(1−κ)+κ] + κ`:
/// `P_NEP = G·NEP²/(hν₀·D)` and `P_RIN = 2·hν₀·D/(G·γ·κ·RIN)`.
pub fn saturation_thresholds<R: Real>(
    gain: SqueezeGain<R>,
    gamma: R,
    kappa: R,
    det: &DetectorModel<R>,
    carrier_hz: R,
) -> Result<SaturationThresholds<R>> {
    if !(gamma > R::zero()) {
        return Err(invalid("γ must be positive"));
    }
    if !(kappa > R::zero() && kappa <= R::one()) {
        return Err(invalid(format!("κ must lie in (0, 1], got {kappa}")));
    }
    if !(carrier_hz > R::zero()) {
        return Err(invalid("carrier frequency must be positive"));
    }
    let g = gain.linear();
    let energy = R::lit(crate::num::consts::PLANCK) * carrier_hz;
    let d = gamma * (g * (R::one() - kappa) + kappa) + kappa;
    let nep = g * det.nep().powi(2) / (energy * d);
    let rin = if det.rin() == R::zero() {
        R::infinity()
    } else {
        R::lit(2.0) * energy * d / (g * gamma * kappa * det.rin())
    };
    Ok(SaturationThresholds { nep, rin })
}

/// Cramér–Rao bounds on the mean square error of `√κ_m` and of the phase.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MmseBounds<R> {
    /// `κ/(2·SNR²)`.
    pub sqrt_kappa: R,
    /// `1/(2·SNR²)`, rad².
    pub phase: R,
}

pub fn mmse_bounds<R: Real>(snr: R, kappa: R) -> Result<MmseBounds<R>> {
    if !(snr > R::zero()) {
        return Err(invalid(format!("SNR must be positive, got {snr}")));
    }
    if !(kappa > R::zero() && kappa <= R::one()) {
        return Err(invalid(format!("κ must lie in (0, 1], got {kappa}")));
    }
    let phase = (R::lit(2.0) * snr * snr).recip();
    Ok(MmseBounds {
        sqrt_kappa: kappa * phase,
        phase,
    })
}

/// Coherent-state noise coefficients for a given `γ`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ClassicalCoefficients<R> {
    /// `(1 + 1/γ)/4`.
    pub c_gamma: R,
    /// `1/4` for balanced detection.
    pub c_gamma2: R,
    /// `(1 + γ²)/(2γ)`, the unbalanced-detection value, for comparison only.
    pub c_gamma2_unbalanced: R,
}

pub fn classical_coefficients<R: Real>(gamma: R) -> Result<ClassicalCoefficients<R>> {
    if !(gamma > R::zero()) {
        return Err(invalid("γ must be positive"));
    }
    Ok(ClassicalCoefficients {
        c_gamma: (R::one() + gamma.recip()) / R::lit(4.0),
        c_gamma2: R::lit(C_GAMMA2),
        c_gamma2_unbalanced: (R::one() + gamma * gamma) / (R::lit(2.0) * gamma),
    })
}
