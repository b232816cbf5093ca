//! Gaussian-state algebra over quadratures `(q₁, p₁, q₂, p₂, …)`.
//!
//! Convention: `a = (q + i p)/√2`, so the vacuum has variance 1/2 per real
//! quadrature and the complex joint quadrature `X = a₁e^{iθ} + a₂†e^{-iθ}`
//! has `⟨X†X⟩ = 1` on vacuum.

use nalgebra::{DMatrix, SymmetricEigen};

use crate::error::{invalid, Result};
use crate::num::Real;

/// Linear squeezing gain `G = e^{2r} ≥ 1`.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd)]
pub struct SqueezeGain<R>(R);

impl<R: Real> SqueezeGain<R> {
    pub fn new(gain: R) -> Result<Self> {
        if !(gain >= R::one()) || !gain.is_finite() {
            return Err(invalid(format!("squeezing gain must be finite and >= 1, got {gain}")));
        }
        Ok(Self(gain))
    }

    /// Gain from its decibel value `10·log10 G`.
    pub fn from_db(db: R) -> Result<Self> {
        if !(db >= R::zero()) {
            return Err(invalid(format!("squeezing in dB must be >= 0, got {db}")));
        }
        Self::new(crate::num::from_db(db))
    }

    /// `G = 1`, i.e. coherent-state (vacuum) noise.
    pub fn unity() -> Self {
        Self(R::one())
    }

    pub fn linear(self) -> R {
        self.0
    }

    pub fn db(self) -> R {
        crate::num::to_db(self.0)
    }

    /// Squeezing parameter `r = ln(G)/2`.
    pub fn squeezing_parameter(self) -> R {
        self.0.ln() / R::lit(2.0)
    }
}

/// Complex-operator variance `⟨X†X⟩` of a TMSV joint quadrature with phase
/// mismatch `theta`: `[(G²+1) − (G²−1)·cos 2θ] / 2G`.
///
/// Equals `1/G` at `θ = 0` and `G` at `θ = π/2`.
pub fn joint_quadrature_variance<R: Real>(gain: SqueezeGain<R>, theta: R) -> R {
    let g = gain.linear();
    let g2 = g * g;
    ((g2 + R::one()) - (g2 - R::one()) * (R::lit(2.0) * theta).cos()) / (R::lit(2.0) * g)
}

/// Mean vector and dense covariance matrix of an `n`-mode Gaussian state.
#[derive(Debug, Clone, PartialEq)]
pub struct GaussianState<R> {
    modes: usize,
    mean: Vec<R>,
    // row-major, (2n)×(2n)
    covariance: Vec<R>,
}

impl<R: Real> GaussianState<R> {
    pub fn vacuum(mode_count: usize) -> Result<Self> {
        if mode_count == 0 {
            return Err(invalid("a Gaussian state needs at least one mode"));
        }
        let dim = 2 * mode_count;
        let mut covariance = vec![R::zero(); dim * dim];
        for i in 0..dim {
            covariance[i * dim + i] = R::lit(0.5);
        }
        Ok(Self {
            modes: mode_count,
            mean: vec![R::zero(); dim],
            covariance,
        })
    }

    /// Two-mode squeezed vacuum: `var q₊ = var p₋ = 1/2G`, `var q₋ = var p₊ = G/2`
    /// with `a± = (a₁ ± a₂)/√2`.
    pub fn tmsv(gain: SqueezeGain<R>) -> Self {
        let g = gain.linear();
        let quarter = R::lit(0.25);
        let diag = (g + g.recip()) * quarter;
        let corr = (g - g.recip()) * quarter;
        let z = R::zero();
        #[rustfmt::skip]
        let covariance = vec![
            diag, z,    -corr, z,
            z,    diag, z,     corr,
            -corr, z,   diag,  z,
            z,    corr, z,     diag,
        ];
        Self {
            modes: 2,
            mean: vec![z; 4],
            covariance,
        }
    }

    /// Thermal state with mean photon number `occupation` in every mode.
    pub fn thermal(mode_count: usize, occupation: R) -> Result<Self> {
        if !(occupation >= R::zero()) {
            return Err(invalid(format!("thermal occupation must be >= 0, got {occupation}")));
        }
        let mut state = Self::vacuum(mode_count)?;
        let dim = state.dim();
        for i in 0..dim {
            state.covariance[i * dim + i] = occupation + R::lit(0.5);
        }
        Ok(state)
    }

    /// Builds a state from raw parts, checking dimensions and symmetry (1e-12).
    pub fn from_parts(mean: Vec<R>, covariance: Vec<R>) -> Result<Self> {
        if mean.is_empty() || !mean.len().is_multiple_of(2) {
            return Err(invalid("mean vector length must be a positive even number"));
        }
        let dim = mean.len();
        if covariance.len() != dim * dim {
            return Err(invalid(format!(
                "covariance must be {dim}x{dim}, got {} entries",
                covariance.len()
            )));
        }
        let state = Self {
            modes: dim / 2,
            mean,
            covariance,
        };
        if !state.is_symmetric(R::lit(1e-12)) {
            return Err(invalid("covariance matrix is not symmetric"));
        }
        Ok(state)
    }

    pub fn mode_count(&self) -> usize {
        self.modes
    }

    /// Number of real quadratures, `2·mode_count`.
    pub fn dim(&self) -> usize {
        2 * self.modes
    }

    pub fn mean(&self) -> &[R] {
        &self.mean
    }

    /// Row-major covariance entries.
    pub fn covariance(&self) -> &[R] {
        &self.covariance
    }

    pub fn cov(&self, i: usize, j: usize) -> R {
        self.covariance[i * self.dim() + j]
    }

    pub fn is_symmetric(&self, tol: R) -> bool {
        let dim = self.dim();
        (0..dim).all(|i| {
            (i + 1..dim).all(|j| {
                let (a, b) = (self.cov(i, j), self.cov(j, i));
                (a - b).abs() <= tol * R::one().max(a.abs().max(b.abs()))
            })
        })
    }

    /// Checks the uncertainty relation `V + (i/2)Ω ⪰ 0` (smallest eigenvalue of
    /// the realified Hermitian matrix must be `>= -tol`).
    pub fn check_physical(&self, tol: f64) -> Result<()> {
        if !self.is_symmetric(R::lit(1e-12)) {
            return Err(invalid("covariance matrix is not symmetric"));
        }
        let dim = self.dim();
        // H = V + iB with B = Ω/2 maps to the real matrix [[V, -B], [B, V]].
        let mut real = DMatrix::<f64>::zeros(2 * dim, 2 * dim);
        for i in 0..dim {
            for j in 0..dim {
                let v = self.cov(i, j).to_f64_lossy();
                real[(i, j)] = v;
                real[(i + dim, j + dim)] = v;
            }
        }
        for k in 0..self.modes {
            let (q, p) = (2 * k, 2 * k + 1);
            // Ω = ⊕ [[0, 1], [-1, 0]]
            real[(q + dim, p)] = 0.5;
            real[(p + dim, q)] = -0.5;
            real[(q, p + dim)] = -0.5;
            real[(p, q + dim)] = 0.5;
        }
        let min = SymmetricEigen::new(real)
            .eigenvalues
            .iter()
            .copied()
            .fold(f64::INFINITY, f64::min);
        if min < -tol {
            return Err(invalid(format!(
                "covariance violates the uncertainty relation (min eigenvalue {min:e})"
            )));
        }
        Ok(())
    }

    fn check_mode(&self, mode: usize) -> Result<()> {
        if mode >= self.modes {
            return Err(invalid(format!(
                "mode index {mode} out of range for a {}-mode state",
                self.modes
            )));
        }
        Ok(())
    }

    /// Applies the 2×2 real map `s` to one mode: `μ → Sμ`, `V → S V Sᵀ`.
    fn transform_mode(&mut self, mode: usize, s: [[R; 2]; 2]) {
        let dim = self.dim();
        let (q, p) = (2 * mode, 2 * mode + 1);

        let (mq, mp) = (self.mean[q], self.mean[p]);
        self.mean[q] = s[0][0] * mq + s[0][1] * mp;
        self.mean[p] = s[1][0] * mq + s[1][1] * mp;

        // rows
        for j in 0..dim {
            let (a, b) = (self.covariance[q * dim + j], self.covariance[p * dim + j]);
            self.covariance[q * dim + j] = s[0][0] * a + s[0][1] * b;
            self.covariance[p * dim + j] = s[1][0] * a + s[1][1] * b;
        }
        // columns
        for i in 0..dim {
            let (a, b) = (self.covariance[i * dim + q], self.covariance[i * dim + p]);
            self.covariance[i * dim + q] = s[0][0] * a + s[0][1] * b;
            self.covariance[i * dim + p] = s[1][0] * a + s[1][1] * b;
        }
    }

    /// Thermal-loss channel on one mode: `a → √κ a + √(1−κ) e`, with the
    /// environment mode `e` holding `thermal_occupation` photons.
    pub fn apply_loss(&self, mode: usize, transmissivity: R, thermal_occupation: R) -> Result<Self> {
        self.check_mode(mode)?;
        if !(transmissivity >= R::zero() && transmissivity <= R::one()) {
            return Err(invalid(format!(
                "transmissivity must lie in [0, 1], got {transmissivity}"
            )));
        }
        if !(thermal_occupation >= R::zero()) {
            return Err(invalid(format!(
                "thermal occupation must be >= 0, got {thermal_occupation}"
            )));
        }
        let mut out = self.clone();
        let amp = transmissivity.sqrt();
        out.transform_mode(mode, [[amp, R::zero()], [R::zero(), amp]]);
        let added = (R::one() - transmissivity) * (thermal_occupation + R::lit(0.5));
        let dim = out.dim();
        for idx in [2 * mode, 2 * mode + 1] {
            out.covariance[idx * dim + idx] = out.covariance[idx * dim + idx] + added;
        }
        Ok(out)
    }

    /// Phase shift `a → e^{iφ} a` on one mode.
    pub fn apply_phase(&self, mode: usize, phi: R) -> Result<Self> {
        self.check_mode(mode)?;
        let mut out = self.clone();
        let (s, c) = phi.sin_cos();
        out.transform_mode(mode, [[c, -s], [s, c]]);
        Ok(out)
    }

    /// `⟨X†X⟩` of the fluctuation of `X = a_{first}e^{iθ} + a_{second}†e^{-iθ}`,
    /// evaluated from the covariance matrix through the decomposition
    /// `Re X = cosθ q₊ − sinθ p₊`, `Im X = cosθ p₋ + sinθ q₋`.
    ///
    /// `X` commutes with `X†`, so the symmetrised covariance gives the normally
    /// ordered moment exactly.
    pub fn complex_quadrature_variance(&self, first: usize, second: usize, theta: R) -> Result<R> {
        self.check_mode(first)?;
        self.check_mode(second)?;
        if first == second {
            return Err(invalid("joint quadrature needs two distinct modes"));
        }
        let dim = self.dim();
        let (s, c) = theta.sin_cos();
        let h = R::FRAC_1_SQRT_2();
        let mut re = vec![R::zero(); dim];
        let mut im = vec![R::zero(); dim];
        re[2 * first] = c * h;
        re[2 * first + 1] = -s * h;
        re[2 * second] = c * h;
        re[2 * second + 1] = -s * h;
        im[2 * first] = s * h;
        im[2 * first + 1] = c * h;
        im[2 * second] = -s * h;
        im[2 * second + 1] = -c * h;
        Ok(self.quadratic_form(&re) + self.quadratic_form(&im))
    }

    /// `vᵀ V v`.
    pub fn quadratic_form(&self, v: &[R]) -> R {
        let dim = self.dim();
        let mut acc = R::zero();
        for i in 0..dim {
            if v[i] == R::zero() {
                continue;
            }
            for j in 0..dim {
                acc = acc + v[i] * self.covariance[i * dim + j] * v[j];
            }
        }
        acc
    }
}
