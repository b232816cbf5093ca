//! Monte-Carlo oracle for the readout statistics.
//!
//! Every comb line carries its own sideband modes. Signal sidebands `a_{±k}`
//! and LO sidebands `b_{n±k}` are drawn as two-mode squeezed pairs, sent
//! through their phase and thermal-loss channels, and combined with the
//! (linearized) mean fields into the heterodyne readout at `m·Δf_r`:
//!
//! `x_m = conj(B̄'_m)Ā'_m + Σₙ [conj(B̄'_n) a'_m + B̄'_n a'†_{−m} + conj(Ā'_n) b'_{n+m} + Ā'_n b'†_{n−m}]`
//!
//! with `Ā' = √κ e^{iα} A`, `B̄' = √η e^{iβ} B`. The frequency-domain path
//! evaluates this sum directly. The time-domain path synthesizes the full
//! band-limited photocurrent `N(t)` on a grid and reads bin `m` from its DFT.
//!
//! Sampling is Wigner-function sampling of the Gaussian states, which is exact
//! for the symmetrically ordered moments used here.
//!
//! Samples are generated in fixed batches of [`BATCH_SIZE`]. Batch `b` uses
//! its own ChaCha20 stream, so output depends only on the seed and never on
//! the number of worker threads.

use std::sync::Arc;

use nalgebra::{Matrix2, Matrix4};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use rustfft::{Fft, FftPlanner};

use crate::budget::{detection_bandwidth, mmse_bounds};
use crate::error::{degenerate, invalid, Result};
use crate::gaussian::GaussianState;
use crate::model::{ac_noise_variance, mean_ac_spectrum, thermal_occupation, Scenario};

/// Samples per RNG stream.
pub const BATCH_SIZE: usize = 4096;

/// Generator description recorded in output metadata.
pub const RNG_ALGORITHM: &str =
    "ChaCha20Rng (rand_chacha 0.9.0) seed_from_u64, stream=(path<<32)|batch, batch=4096; StandardNormal (rand_distr 0.5.1)";

/// Largest comb accepted by the time-domain path.
pub const MAX_TIME_DOMAIN_LINES: usize = 64;

pub const MIN_SAMPLES: usize = 100;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum SynthesisMode {
    FrequencyDomain,
    TimeDomain,
}

impl SynthesisMode {
    fn stream_tag(self) -> u64 {
        match self {
            SynthesisMode::FrequencyDomain => 1,
            SynthesisMode::TimeDomain => 2,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            SynthesisMode::FrequencyDomain => "frequency_domain",
            SynthesisMode::TimeDomain => "time_domain",
        }
    }
}

/// One Monte-Carlo experiment.
#[derive(Debug, Clone, PartialEq)]
pub struct McRun {
    pub seed: u64,
    pub n_samples: usize,
    pub mode: SynthesisMode,
    pub scenario: Scenario<f64>,
    /// Laser RIN in 1/Hz, injected as common amplitude jitter on both combs.
    pub rin: f64,
}

impl McRun {
    pub fn new(scenario: Scenario<f64>, seed: u64, n_samples: usize, mode: SynthesisMode) -> Result<Self> {
        if n_samples < MIN_SAMPLES {
            return Err(invalid(format!("n_samples must be >= {MIN_SAMPLES}, got {n_samples}")));
        }
        if mode == SynthesisMode::TimeDomain && scenario.config.lines() > MAX_TIME_DOMAIN_LINES {
            return Err(invalid(format!(
                "time-domain synthesis supports at most {MAX_TIME_DOMAIN_LINES} lines"
            )));
        }
        scenario.sample.check_lines(scenario.config.lines())?;
        scenario.lo.check_lines(scenario.config.lines())?;
        Ok(Self {
            seed,
            n_samples,
            mode,
            scenario,
            rin: 0.0,
        })
    }

    pub fn with_rin(mut self, rin: f64) -> Result<Self> {
        if !(rin >= 0.0) || !rin.is_finite() {
            return Err(invalid("RIN must be finite and >= 0"));
        }
        self.rin = rin;
        Ok(self)
    }

    pub fn with_mode(mut self, mode: SynthesisMode) -> Result<Self> {
        let rin = self.rin;
        self = Self::new(self.scenario, self.seed, self.n_samples, mode)?;
        self.rin = rin;
        Ok(self)
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    /// Per-quadrature variance of the relative amplitude jitter of each comb.
    pub fn jitter_variance(&self) -> f64 {
        let n = self.scenario.config.lines() as f64;
        self.rin * detection_bandwidth(self.scenario.config.acquisition()) * n * n / 4.0
    }

    /// Model variance of the readout at line `m`, including injected RIN.
    pub fn analytic_variance(&self, m: usize) -> Result<f64> {
        let s = &self.scenario;
        let base = ac_noise_variance(&s.config, &s.sample, &s.lo, &s.env, m)?;
        let mean = mean_ac_spectrum(&s.config, &s.sample, &s.lo, m)?.norm_sqr();
        let v = self.jitter_variance();
        Ok(base + mean * (4.0 * v + 4.0 * v * v))
    }
}

/// Lower-triangular factor and the mode count it describes.
#[derive(Debug, Clone, Copy)]
struct Factor4([[f64; 4]; 4]);

#[derive(Debug, Clone, Copy)]
struct Factor2([[f64; 2]; 2]);

fn factor4(state: &GaussianState<f64>) -> Result<Factor4> {
    let m = Matrix4::from_row_slice(state.covariance());
    let chol = m
        .cholesky()
        .ok_or_else(|| degenerate("covariance matrix is not positive definite"))?;
    let l = chol.l();
    let mut out = [[0.0; 4]; 4];
    for (i, row) in out.iter_mut().enumerate() {
        for (j, v) in row.iter_mut().enumerate() {
            *v = l[(i, j)];
        }
    }
    Ok(Factor4(out))
}

fn factor2(state: &GaussianState<f64>) -> Result<Factor2> {
    let m = Matrix2::from_row_slice(state.covariance());
    let chol = m
        .cholesky()
        .ok_or_else(|| degenerate("covariance matrix is not positive definite"))?;
    let l = chol.l();
    Ok(Factor2([[l[(0, 0)], 0.0], [l[(1, 0)], l[(1, 1)]]]))
}

fn normal(rng: &mut ChaCha20Rng) -> f64 {
    rng.sample(StandardNormal)
}

impl Factor4 {
    /// Draws `(a₁, a₂)` with `a = (q + ip)/√2`.
    fn draw(&self, rng: &mut ChaCha20Rng) -> (Complex64, Complex64) {
        let z = [normal(rng), normal(rng), normal(rng), normal(rng)];
        let l = &self.0;
        let mut x = [0.0; 4];
        for i in 0..4 {
            for j in 0..=i {
                x[i] += l[i][j] * z[j];
            }
        }
        let h = std::f64::consts::FRAC_1_SQRT_2;
        (Complex64::new(x[0] * h, x[1] * h), Complex64::new(x[2] * h, x[3] * h))
    }
}

impl Factor2 {
    fn draw(&self, rng: &mut ChaCha20Rng) -> Complex64 {
        let (z0, z1) = (normal(rng), normal(rng));
        let l = &self.0;
        let h = std::f64::consts::FRAC_1_SQRT_2;
        Complex64::new(l[0][0] * z0 * h, (l[1][0] * z0 + l[1][1] * z1) * h)
    }
}

/// Mean fields and fluctuation samplers of one comb line after its channels.
#[derive(Debug, Clone)]
struct LinePrep {
    signal_mean: Complex64,
    lo_mean: Complex64,
    signal_pair: Factor4,
    lo_pair: Factor4,
    signal_single: Factor2,
    lo_single: Factor2,
}

fn channel_pair(
    gain: crate::gaussian::SqueezeGain<f64>,
    phase: f64,
    transmissivity: f64,
    occupation: f64,
) -> Result<GaussianState<f64>> {
    let mut s = GaussianState::tmsv(gain);
    for mode in 0..2 {
        s = s.apply_phase(mode, phase)?;
        s = s.apply_loss(mode, transmissivity, occupation)?;
    }
    Ok(s)
}

fn channel_single(phase: f64, transmissivity: f64, occupation: f64) -> Result<GaussianState<f64>> {
    GaussianState::vacuum(1)?
        .apply_phase(0, phase)?
        .apply_loss(0, transmissivity, occupation)
}

fn prepare_lines(scenario: &Scenario<f64>) -> Result<Vec<LinePrep>> {
    let cfg = &scenario.config;
    let mut out = Vec::with_capacity(cfg.lines());
    let mut weak = false;
    for n in 1..=cfg.lines() {
        let kappa = scenario.sample.transmissivity_at(n);
        let eta = scenario.lo.transmissivity_at(n);
        let alpha = scenario.sample.phase_at(n);
        let beta = scenario.lo.phase_at(n);
        let occupation = thermal_occupation(cfg.line_frequency(n), &scenario.env)?;
        let (a, b) = (cfg.signal_amplitude(n), cfg.lo_amplitude(n));
        weak |= (a > 0.0 && a * a < 100.0) || (b > 0.0 && b * b < 100.0);
        out.push(LinePrep {
            signal_mean: Complex64::from_polar(kappa.sqrt() * a, alpha),
            lo_mean: Complex64::from_polar(eta.sqrt() * b, beta),
            signal_pair: factor4(&channel_pair(cfg.signal_gain(), alpha, kappa, occupation)?)?,
            lo_pair: factor4(&channel_pair(cfg.lo_gain(), beta, eta, occupation)?)?,
            signal_single: factor2(&channel_single(alpha, kappa, occupation)?)?,
            lo_single: factor2(&channel_single(beta, eta, occupation)?)?,
        });
    }
    if weak {
        log::warn!("fewer than 100 photons in a comb line; the linearized readout model may be inaccurate");
    }
    Ok(out)
}

/// Common amplitude jitter factors `(1+ε_A, 1+ε_B)`.
fn jitter(rng: &mut ChaCha20Rng, sd: f64) -> (Complex64, Complex64) {
    if sd == 0.0 {
        return (Complex64::new(1.0, 0.0), Complex64::new(1.0, 0.0));
    }
    let ea = Complex64::new(1.0 + sd * normal(rng), sd * normal(rng));
    let eb = Complex64::new(1.0 + sd * normal(rng), sd * normal(rng));
    (ea, eb)
}

fn batch_rng(seed: u64, mode: SynthesisMode, batch: usize) -> ChaCha20Rng {
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    rng.set_stream((mode.stream_tag() << 32) | batch as u64);
    rng
}

fn frequency_domain_sample(lines: &[LinePrep], m: usize, jitter_sd: f64, rng: &mut ChaCha20Rng) -> Complex64 {
    let (ja, jb) = jitter(rng, jitter_sd);
    let mut x = Complex64::new(0.0, 0.0);
    for (idx, line) in lines.iter().enumerate() {
        let a_mean = line.signal_mean * ja;
        let b_mean = line.lo_mean * jb;
        let (a_plus, a_minus) = line.signal_pair.draw(rng);
        let (b_plus, b_minus) = line.lo_pair.draw(rng);
        x += b_mean.conj() * a_plus + b_mean * a_minus.conj();
        x += a_mean.conj() * b_plus + a_mean * b_minus.conj();
        if idx + 1 == m {
            x += b_mean.conj() * a_mean;
        }
    }
    x
}

/// FFT plans and scratch for time-domain synthesis on `points` samples.
struct TimeGrid {
    points: usize,
    inverse: Arc<dyn Fft<f64>>,
    forward: Arc<dyn Fft<f64>>,
}

impl TimeGrid {
    fn new(points: usize) -> Self {
        let mut planner = FftPlanner::new();
        Self {
            points,
            inverse: planner.plan_fft_inverse(points),
            forward: planner.plan_fft_forward(points),
        }
    }

    fn bin(&self, f: isize) -> usize {
        f.rem_euclid(self.points as isize) as usize
    }

    /// `N(t_l) = 2·Re Σ_f Z[f] e^{2πi f l/L}`.
    fn photocurrent(&self, spectrum: &mut [Complex64]) {
        self.inverse.process(spectrum);
        for v in spectrum.iter_mut() {
            *v = Complex64::new(2.0 * v.re, 0.0);
        }
    }

    /// `(1/L)·DFT` of a real series, in place.
    fn line_spectrum(&self, series: &mut [Complex64]) {
        self.forward.process(series);
        let scale = 1.0 / self.points as f64;
        for v in series.iter_mut() {
            *v *= scale;
        }
    }
}

fn time_domain_sample(
    lines: &[LinePrep],
    m: usize,
    jitter_sd: f64,
    grid: &TimeGrid,
    buffer: &mut Vec<Complex64>,
    rng: &mut ChaCha20Rng,
) -> Complex64 {
    let count = lines.len() as isize;
    buffer.clear();
    buffer.resize(grid.points, Complex64::new(0.0, 0.0));
    let (ja, jb) = jitter(rng, jitter_sd);
    for (idx, line) in lines.iter().enumerate() {
        let n = idx as isize + 1;
        let a_mean = line.signal_mean * ja;
        let b_conj = (line.lo_mean * jb).conj();
        // signal sidebands at offsets k ∈ [−N, N] from the LO line; mean at k = n
        buffer[grid.bin(0)] += b_conj * line.signal_single.draw(rng);
        for k in 1..=count {
            let (s_plus, s_minus) = line.signal_pair.draw(rng);
            buffer[grid.bin(k)] += b_conj * s_plus;
            buffer[grid.bin(-k)] += b_conj * s_minus;
        }
        buffer[grid.bin(n)] += b_conj * a_mean;
        // LO sidebands j ∈ [n−N, n+N] beat with the signal line at n − j
        buffer[grid.bin(0)] += a_mean * line.lo_single.draw(rng).conj();
        for k in 1..=count {
            let (l_plus, l_minus) = line.lo_pair.draw(rng);
            buffer[grid.bin(-k)] += a_mean * l_plus.conj();
            buffer[grid.bin(k)] += a_mean * l_minus.conj();
        }
    }
    grid.photocurrent(buffer);
    grid.line_spectrum(buffer);
    buffer[m]
}

fn time_grid_points(lines: usize) -> usize {
    (2 * lines + 1).next_power_of_two()
}

/// Readout samples at line `m`, in deterministic order.
pub fn sample_readout(run: &McRun, m: usize) -> Result<Vec<Complex64>> {
    run.scenario.config.check_line(m)?;
    let lines = prepare_lines(&run.scenario)?;
    let jitter_sd = run.jitter_variance().sqrt();
    let batches = run.n_samples.div_ceil(BATCH_SIZE);
    let grid = match run.mode {
        SynthesisMode::TimeDomain => Some(TimeGrid::new(time_grid_points(lines.len()))),
        SynthesisMode::FrequencyDomain => None,
    };

    let chunks: Vec<Vec<Complex64>> = (0..batches)
        .into_par_iter()
        .map(|b| {
            let mut rng = batch_rng(run.seed, run.mode, b);
            let count = BATCH_SIZE.min(run.n_samples - b * BATCH_SIZE);
            let mut out = Vec::with_capacity(count);
            let mut buffer = Vec::new();
            for _ in 0..count {
                out.push(match &grid {
                    None => frequency_domain_sample(&lines, m, jitter_sd, &mut rng),
                    Some(g) => time_domain_sample(&lines, m, jitter_sd, g, &mut buffer, &mut rng),
                });
            }
            out
        })
        .collect();
    Ok(chunks.into_iter().flatten().collect())
}

/// Noiseless band-limited photocurrent over one interferogram period `1/Δf_r`.
#[derive(Debug, Clone, PartialEq)]
pub struct Interferogram {
    /// Samples per second.
    pub sample_rate: f64,
    pub values: Vec<f64>,
    lines: usize,
}

impl Interferogram {
    pub fn times(&self) -> Vec<f64> {
        (0..self.values.len()).map(|l| l as f64 / self.sample_rate).collect()
    }

    /// `(1/L)·DFT` bins `1..=N`, one per comb line.
    pub fn line_spectrum(&self) -> Vec<Complex64> {
        let grid = TimeGrid::new(self.values.len());
        let mut buf: Vec<Complex64> = self.values.iter().map(|&v| Complex64::new(v, 0.0)).collect();
        grid.line_spectrum(&mut buf);
        buf[1..=self.lines].to_vec()
    }
}

/// Synthesizes `N(t) = Σₙ 2·Re[conj(B̄'ₙ)Ā'ₙ e^{2πi nΔf_r t}]` on `points`
/// samples (default: the smallest power of two above `2N`).
pub fn synthesize_interferogram(scenario: &Scenario<f64>, points: Option<usize>) -> Result<Interferogram> {
    let cfg = &scenario.config;
    let lines = cfg.lines();
    if lines > MAX_TIME_DOMAIN_LINES {
        return Err(invalid(format!(
            "time-domain synthesis supports at most {MAX_TIME_DOMAIN_LINES} lines"
        )));
    }
    let points = points.unwrap_or_else(|| time_grid_points(lines));
    if points <= 2 * lines {
        return Err(invalid(format!(
            "{points} samples per period undersample {lines} lines (need more than {})",
            2 * lines
        )));
    }
    let grid = TimeGrid::new(points);
    let mut buf = vec![Complex64::new(0.0, 0.0); points];
    for (n, slot) in buf.iter_mut().enumerate().take(lines + 1).skip(1) {
        *slot = mean_ac_spectrum(cfg, &scenario.sample, &scenario.lo, n)?;
    }
    grid.photocurrent(&mut buf);
    Ok(Interferogram {
        sample_rate: points as f64 * cfg.rep_offset(),
        values: buf.iter().map(|v| v.re).collect(),
        lines,
    })
}

/// Moments of a complex sample.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EmpiricalStats {
    pub n: usize,
    pub sample_mean: Complex64,
    /// `⟨|x − x̄|²⟩` with the unbiased `1/(n−1)` normalization.
    pub sample_variance: f64,
    /// Standard error of `sample_variance` from the fourth central moment,
    /// `√((m₄ − m₂²)/n)`. Equals `variance/√n` for circular Gaussian data.
    pub standard_error: f64,
    pub var_re: f64,
    pub var_im: f64,
    pub cov_re_im: f64,
    pub cov_standard_error: f64,
    /// Standard error of `var_re − var_im`.
    pub var_diff_standard_error: f64,
}

impl EmpiricalStats {
    pub fn from_samples(samples: &[Complex64]) -> Result<Self> {
        let n = samples.len();
        if n < 2 {
            return Err(invalid("need at least two samples"));
        }
        let nf = n as f64;
        let mean = samples.iter().sum::<Complex64>() / nf;
        let (mut m2, mut m4, mut vr, mut vi, mut c) = (0.0, 0.0, 0.0, 0.0, 0.0);
        for x in samples {
            let d = x - mean;
            let s = d.norm_sqr();
            m2 += s;
            m4 += s * s;
            vr += d.re * d.re;
            vi += d.im * d.im;
            c += d.re * d.im;
        }
        let (m2, m4, vr, vi, c) = (m2 / nf, m4 / nf, vr / nf, vi / nf, c / nf);
        let (mut c4, mut d4) = (0.0, 0.0);
        for x in samples {
            let d = x - mean;
            c4 += (d.re * d.im - c).powi(2);
            d4 += (d.re * d.re - d.im * d.im - (vr - vi)).powi(2);
        }
        let bessel = nf / (nf - 1.0);
        Ok(Self {
            n,
            sample_mean: mean,
            sample_variance: m2 * bessel,
            standard_error: ((m4 - m2 * m2).max(0.0) / nf).sqrt(),
            var_re: vr * bessel,
            var_im: vi * bessel,
            cov_re_im: c * bessel,
            cov_standard_error: (c4 / nf / nf).sqrt(),
            var_diff_standard_error: (d4 / nf / nf).sqrt(),
        })
    }

    /// Standard error of the mean of the real part.
    pub fn mean_re_standard_error(&self) -> f64 {
        (self.var_re / self.n as f64).sqrt()
    }

    pub fn mean_im_standard_error(&self) -> f64 {
        (self.var_im / self.n as f64).sqrt()
    }
}

/// One verification outcome, one CSV row.
#[derive(Debug, Clone, PartialEq)]
pub struct CheckRecord {
    pub check: String,
    pub line: usize,
    pub analytic: f64,
    pub empirical: f64,
    pub standard_error: f64,
    pub z_score: f64,
    pub pass: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct VarianceReport {
    pub line: usize,
    pub analytic: f64,
    pub empirical: f64,
    pub standard_error: f64,
    pub z_score: f64,
    pub tolerance_sigmas: f64,
    pub pass: bool,
    pub stats: EmpiricalStats,
}

impl VarianceReport {
    pub fn record(&self, check: &str) -> CheckRecord {
        CheckRecord {
            check: check.to_string(),
            line: self.line,
            analytic: self.analytic,
            empirical: self.empirical,
            standard_error: self.standard_error,
            z_score: self.z_score,
            pass: self.pass,
        }
    }
}

fn z_score(diff: f64, se: f64) -> f64 {
    if se > 0.0 {
        diff / se
    } else if diff == 0.0 {
        0.0
    } else {
        f64::INFINITY.copysign(diff)
    }
}

/// Compares the empirical readout variance with the model value.
pub fn verify_variance(run: &McRun, m: usize, tolerance_sigmas: f64) -> Result<VarianceReport> {
    let analytic = run.analytic_variance(m)?;
    verify_variance_against(run, m, analytic, tolerance_sigmas)
}

/// As [`verify_variance`] with a caller-supplied reference value.
pub fn verify_variance_against(run: &McRun, m: usize, analytic: f64, tolerance_sigmas: f64) -> Result<VarianceReport> {
    if run.n_samples < 10_000 {
        log::warn!("variance check with {} samples; at least 1e4 recommended", run.n_samples);
    }
    let stats = EmpiricalStats::from_samples(&sample_readout(run, m)?)?;
    let z = z_score(stats.sample_variance - analytic, stats.standard_error);
    Ok(VarianceReport {
        line: m,
        analytic,
        empirical: stats.sample_variance,
        standard_error: stats.standard_error,
        z_score: z,
        tolerance_sigmas,
        pass: z.abs() <= tolerance_sigmas,
        stats,
    })
}

/// Estimator efficiency against the Cramér–Rao bounds.
#[derive(Debug, Clone, PartialEq)]
pub struct CrbReport {
    pub line: usize,
    pub snr: f64,
    pub crb_sqrt_kappa: f64,
    pub crb_theta: f64,
    pub mse_sqrt_kappa: f64,
    pub mse_theta: f64,
    pub ratio_sqrt_kappa: f64,
    pub ratio_theta: f64,
    /// Standard error of each MSE, relative to the MSE.
    pub relative_standard_error: f64,
    pub mean_theta: f64,
    pub mean_theta_standard_error: f64,
    pub pass: bool,
}

impl CrbReport {
    pub fn records(&self) -> [CheckRecord; 2] {
        let rse = self.relative_standard_error;
        [
            CheckRecord {
                check: "crb_sqrt_kappa".into(),
                line: self.line,
                analytic: self.crb_sqrt_kappa,
                empirical: self.mse_sqrt_kappa,
                standard_error: self.mse_sqrt_kappa * rse,
                z_score: z_score(self.mse_sqrt_kappa - self.crb_sqrt_kappa, self.mse_sqrt_kappa * rse),
                pass: (self.ratio_sqrt_kappa - 1.0).abs() <= CRB_TOLERANCE,
            },
            CheckRecord {
                check: "crb_theta".into(),
                line: self.line,
                analytic: self.crb_theta,
                empirical: self.mse_theta,
                standard_error: self.mse_theta * rse,
                z_score: z_score(self.mse_theta - self.crb_theta, self.mse_theta * rse),
                pass: (self.ratio_theta - 1.0).abs() <= CRB_TOLERANCE,
            },
        ]
    }
}

/// Allowed relative deviation of the estimator MSE from the bound.
pub const CRB_TOLERANCE: f64 = 0.15;

/// Runs the maximum-likelihood estimators `√κ̂ = q/(√η·A·B)` and
/// `θ̂ = atan2(p, q)` on the readout at line `m` and compares their mean square
/// errors with the Cramér–Rao bounds.
///
/// The `√κ` estimator reads the real quadrature only and assumes a matched
/// phase (`α_m = β_m`).
pub fn verify_crb(run: &McRun, m: usize, true_kappa: f64, true_theta: f64) -> Result<CrbReport> {
    let s = &run.scenario;
    let mean = mean_ac_spectrum(&s.config, &s.sample, &s.lo, m)?;
    let variance = run.analytic_variance(m)?;
    if !(variance > 0.0) || mean.norm() == 0.0 {
        return Err(degenerate("CRB check needs a nonzero mean and variance"));
    }
    let snr = mean.norm() / variance.sqrt();
    if snr < 3.0 {
        log::warn!("SNR {snr:.2} < 3: estimators are biased outside the linearized regime");
    }
    if true_theta.abs() > 1e-9 {
        log::warn!("√κ estimator assumes matched phase; θ = {true_theta}");
    }
    let bounds = mmse_bounds(snr, true_kappa)?;
    let scale = s.lo.transmissivity_at(m).sqrt() * s.config.signal_amplitude(m) * s.config.lo_amplitude(m);
    let samples = sample_readout(run, m)?;
    let nf = samples.len() as f64;
    let sqrt_kappa = true_kappa.sqrt();
    let (mut mse_k, mut mse_t, mut sum_t, mut sum_t2) = (0.0, 0.0, 0.0, 0.0);
    for x in &samples {
        let k_hat = x.re / scale;
        let t_hat = x.im.atan2(x.re);
        mse_k += (k_hat - sqrt_kappa).powi(2);
        let dt = wrap_phase(t_hat - true_theta);
        mse_t += dt * dt;
        sum_t += dt;
        sum_t2 += dt * dt;
    }
    let mse_sqrt_kappa = mse_k / nf;
    let mse_theta = mse_t / nf;
    let mean_dt = sum_t / nf;
    let var_t = (sum_t2 / nf - mean_dt * mean_dt).max(0.0);
    let ratio_sqrt_kappa = mse_sqrt_kappa / bounds.sqrt_kappa;
    let ratio_theta = mse_theta / bounds.phase;
    let mean_theta_standard_error = (var_t / nf).sqrt();
    let pass = (ratio_sqrt_kappa - 1.0).abs() <= CRB_TOLERANCE
        && (ratio_theta - 1.0).abs() <= CRB_TOLERANCE
        && mean_dt.abs() <= 3.0 * mean_theta_standard_error;
    Ok(CrbReport {
        line: m,
        snr,
        crb_sqrt_kappa: bounds.sqrt_kappa,
        crb_theta: bounds.phase,
        mse_sqrt_kappa,
        mse_theta,
        ratio_sqrt_kappa,
        ratio_theta,
        relative_standard_error: (2.0 / nf).sqrt(),
        mean_theta: true_theta + mean_dt,
        mean_theta_standard_error,
        pass,
    })
}

fn wrap_phase(x: f64) -> f64 {
    use std::f64::consts::PI;
    (x + PI).rem_euclid(2.0 * PI) - PI
}

/// Two-sample z-test on the variances of two runs.
#[derive(Debug, Clone, PartialEq)]
pub struct TwoSampleReport {
    pub line: usize,
    pub variance_a: f64,
    pub variance_b: f64,
    pub standard_error_a: f64,
    pub standard_error_b: f64,
    pub z_score: f64,
    pub pass: bool,
}

impl TwoSampleReport {
    pub fn record(&self, check: &str) -> CheckRecord {
        CheckRecord {
            check: check.to_string(),
            line: self.line,
            analytic: self.variance_a,
            empirical: self.variance_b,
            standard_error: self.standard_error_a.hypot(self.standard_error_b),
            z_score: self.z_score,
            pass: self.pass,
        }
    }
}

pub fn compare_variances(a: &McRun, b: &McRun, m: usize, tolerance_sigmas: f64) -> Result<TwoSampleReport> {
    let sa = EmpiricalStats::from_samples(&sample_readout(a, m)?)?;
    let sb = EmpiricalStats::from_samples(&sample_readout(b, m)?)?;
    let z = z_score(
        sa.sample_variance - sb.sample_variance,
        sa.standard_error.hypot(sb.standard_error),
    );
    Ok(TwoSampleReport {
        line: m,
        variance_a: sa.sample_variance,
        variance_b: sb.sample_variance,
        standard_error_a: sa.standard_error,
        standard_error_b: sb.standard_error,
        z_score: z,
        pass: z.abs() <= tolerance_sigmas,
    })
}

/// Frequency- versus time-domain synthesis of the same scenario.
pub fn compare_synthesis_paths(run: &McRun, m: usize, tolerance_sigmas: f64) -> Result<TwoSampleReport> {
    let freq = run.clone().with_mode(SynthesisMode::FrequencyDomain)?;
    let time = run.clone().with_mode(SynthesisMode::TimeDomain)?;
    compare_variances(&freq, &time, m, tolerance_sigmas)
}

/// Equal variances and zero correlation of the two readout quadratures.
#[derive(Debug, Clone, PartialEq)]
pub struct QuadratureReport {
    pub line: usize,
    pub var_re: f64,
    pub var_im: f64,
    pub cov_re_im: f64,
    pub z_cov: f64,
    pub z_var_diff: f64,
    pub pass: bool,
}

pub fn verify_quadrature_independence(run: &McRun, m: usize, tolerance_sigmas: f64) -> Result<QuadratureReport> {
    let s = EmpiricalStats::from_samples(&sample_readout(run, m)?)?;
    let z_cov = z_score(s.cov_re_im, s.cov_standard_error);
    let z_var_diff = z_score(s.var_re - s.var_im, s.var_diff_standard_error);
    Ok(QuadratureReport {
        line: m,
        var_re: s.var_re,
        var_im: s.var_im,
        cov_re_im: s.cov_re_im,
        z_cov,
        z_var_diff,
        pass: z_cov.abs() <= tolerance_sigmas && z_var_diff.abs() <= tolerance_sigmas,
    })
}

/// Noiseless interferogram DFT against the model mean, line by line.
#[derive(Debug, Clone, PartialEq)]
pub struct DftReport {
    pub lines: usize,
    pub max_relative_error: f64,
    pub tolerance: f64,
    pub pass: bool,
}

impl DftReport {
    pub fn record(&self) -> CheckRecord {
        CheckRecord {
            check: "dft_identity".into(),
            line: self.lines,
            analytic: 0.0,
            empirical: self.max_relative_error,
            standard_error: self.tolerance,
            z_score: self.max_relative_error / self.tolerance,
            pass: self.pass,
        }
    }
}

pub fn verify_dft(scenario: &Scenario<f64>, tolerance: f64) -> Result<DftReport> {
    let spectrum = synthesize_interferogram(scenario, None)?.line_spectrum();
    let mut worst: f64 = 0.0;
    for (i, got) in spectrum.iter().enumerate() {
        let want = mean_ac_spectrum(&scenario.config, &scenario.sample, &scenario.lo, i + 1)?;
        let err = if want.norm() > 0.0 {
            (got - want).norm() / want.norm()
        } else {
            got.norm()
        };
        worst = worst.max(err);
    }
    Ok(DftReport {
        lines: scenario.config.lines(),
        max_relative_error: worst,
        tolerance,
        pass: worst <= tolerance,
    })
}
