//! Spectral density models: analytic Drude–Lorentz sums and tabulated curves.

use std::f64::consts::PI;

use crate::error::{invalid, Result};
use crate::quad;
use crate::units::HBAR;

/// One Lorentzian pair of a Drude–Lorentz spectral density.
///
/// `center` Ω, `reorg` λ and `width` ν are all in cm⁻¹.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DrudeLorentzPeak {
    pub center: f64,
    pub reorg: f64,
    pub width: f64,
}

impl DrudeLorentzPeak {
    pub fn new(center: f64, reorg: f64, width: f64) -> Result<Self> {
        if !(center.is_finite() && reorg.is_finite() && width.is_finite()) {
            return invalid("peak parameters must be finite");
        }
        if center < 0.0 {
            return invalid(format!("peak center must be >= 0, got {center}"));
        }
        if reorg < 0.0 {
            return invalid(format!("reorganization energy must be >= 0, got {reorg}"));
        }
        if width <= 0.0 {
            return invalid(format!("peak width must be > 0, got {width}"));
        }
        Ok(Self { center, reorg, width })
    }

    /// Builds a peak whose width is given as a decay time τ (fs), ν = ħ/τ.
    pub fn with_decay_time(center: f64, reorg: f64, tau_fs: f64) -> Result<Self> {
        if tau_fs <= 0.0 {
            return invalid(format!("decay time must be > 0, got {tau_fs}"));
        }
        Self::new(center, reorg, HBAR / tau_fs)
    }

    /// J(ω)/ω, finite at ω = 0.
    #[inline]
    fn j_over_omega(&self, omega: f64) -> f64 {
        let nu = self.width;
        let nl = nu * self.reorg;
        let dm = omega - self.center;
        let dp = omega + self.center;
        (nl / (nu * nu + dm * dm) + nl / (nu * nu + dp * dp)) / PI
    }
}

/// J(ω) sampled on a strictly increasing grid, linearly interpolated and
/// zero outside the grid.
#[derive(Debug, Clone, PartialEq)]
pub struct TabulatedSd {
    omega: Vec<f64>,
    values: Vec<f64>,
}

impl TabulatedSd {
    pub fn new(omega: Vec<f64>, values: Vec<f64>) -> Result<Self> {
        if omega.len() != values.len() {
            return invalid("tabulated grid and values differ in length");
        }
        if omega.len() < 2 {
            return invalid("tabulated spectral density needs at least two points");
        }
        if omega.iter().chain(&values).any(|v| !v.is_finite()) {
            return invalid("tabulated spectral density contains non-finite entries");
        }
        if omega[0] < 0.0 {
            return invalid("tabulated grid must start at omega >= 0");
        }
        if omega.windows(2).any(|w| w[1] <= w[0]) {
            return invalid("tabulated grid must be strictly increasing");
        }
        if let Some(v) = values.iter().find(|v| **v < 0.0) {
            return invalid(format!("spectral density must be nonnegative, found {v}"));
        }
        if omega[0] == 0.0 && values[0] != 0.0 {
            return invalid("J(0) must vanish; J(omega)/omega would diverge at zero");
        }
        Ok(Self { omega, values })
    }

    pub fn omega(&self) -> &[f64] {
        &self.omega
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    fn interpolate(&self, w: f64) -> f64 {
        let n = self.omega.len();
        if w < self.omega[0] || w > self.omega[n - 1] {
            return 0.0;
        }
        let hi = self.omega.partition_point(|&x| x < w).clamp(1, n - 1);
        let (x0, x1) = (self.omega[hi - 1], self.omega[hi]);
        let (y0, y1) = (self.values[hi - 1], self.values[hi]);
        y0 + (y1 - y0) * (w - x0) / (x1 - x0)
    }

    /// Linear extrapolation of J(ω)/ω to ω = 0 from the two smallest
    /// positive grid points, clamped at zero.
    fn j_over_omega_at_zero(&self) -> f64 {
        let mut pos = self.omega.iter().zip(&self.values).filter(|(w, _)| **w > 0.0);
        let (Some((&w1, &j1)), Some((&w2, &j2))) = (pos.next(), pos.next()) else {
            return 0.0;
        };
        let (g1, g2) = (j1 / w1, j2 / w2);
        (g1 - w1 * (g2 - g1) / (w2 - w1)).max(0.0)
    }
}

/// A bath spectral density J(ω) in cm⁻¹.
#[derive(Debug, Clone, PartialEq)]
pub enum SpectralDensity {
    DrudeLorentz(Vec<DrudeLorentzPeak>),
    Tabulated(TabulatedSd),
}

impl SpectralDensity {
    pub fn drude_lorentz(peaks: Vec<DrudeLorentzPeak>) -> Self {
        Self::DrudeLorentz(peaks)
    }

    pub fn tabulated(omega: Vec<f64>, values: Vec<f64>) -> Result<Self> {
        Ok(Self::Tabulated(TabulatedSd::new(omega, values)?))
    }

    /// The identically vanishing spectral density.
    pub fn zero() -> Self {
        Self::DrudeLorentz(Vec::new())
    }

    /// J(ω); rejects negative frequencies.
    pub fn eval(&self, omega: f64) -> Result<f64> {
        if omega < 0.0 || omega.is_nan() {
            return invalid(format!("spectral density evaluated at omega = {omega} < 0"));
        }
        Ok(self.value(omega))
    }

    /// J(ω) without argument validation; `omega` must be ≥ 0.
    pub(crate) fn value(&self, omega: f64) -> f64 {
        match self {
            Self::DrudeLorentz(peaks) => omega * peaks.iter().map(|p| p.j_over_omega(omega)).sum::<f64>(),
            Self::Tabulated(t) => t.interpolate(omega),
        }
    }

    /// J(ω)/ω including its finite ω → 0 limit.
    pub fn j_over_omega(&self, omega: f64) -> f64 {
        match self {
            Self::DrudeLorentz(peaks) => peaks.iter().map(|p| p.j_over_omega(omega)).sum(),
            Self::Tabulated(t) => {
                if omega == 0.0 {
                    t.j_over_omega_at_zero()
                } else {
                    t.interpolate(omega) / omega
                }
            }
        }
    }

    /// λ = ∫₀^∞ J(ω)/ω dω. Drude–Lorentz sums use the closed form Σλ_k.
    pub fn reorganization_energy(&self) -> Result<f64> {
        match self {
            Self::DrudeLorentz(peaks) => Ok(peaks.iter().map(|p| p.reorg).sum()),
            Self::Tabulated(_) => self.reorganization_energy_quadrature(),
        }
    }

    /// λ by adaptive quadrature, for any model.
    pub fn reorganization_energy_quadrature(&self) -> Result<f64> {
        let f = |w: f64| self.j_over_omega(w);
        let total = match self {
            Self::Tabulated(t) => {
                let mut sum = 0.0;
                for w in t.omega.windows(2) {
                    sum += quad::integrate(f, w[0], w[1], 1e-14, 1e-11).0;
                }
                sum
            }
            Self::DrudeLorentz(peaks) => {
                if peaks.is_empty() {
                    return Ok(0.0);
                }
                let mut breaks = vec![0.0];
                for p in peaks {
                    for m in [-20.0, -3.0, 0.0, 3.0, 20.0] {
                        breaks.push((p.center + m * p.width).max(0.0));
                    }
                }
                breaks.sort_by(f64::total_cmp);
                breaks.dedup();
                let mut sum = 0.0;
                for w in breaks.windows(2) {
                    sum += quad::integrate(f, w[0], w[1], 1e-13, 1e-11).0;
                }
                let last = *breaks.last().unwrap();
                let scale = peaks.iter().map(|p| p.width).fold(0.0, f64::max).max(1.0);
                sum + quad::integrate_to_infinity(f, last, scale, 1e-13, 1e-11).0
            }
        };
        if !total.is_finite() {
            return Err(crate::Error::Numerical("reorganization energy integral diverged".into()));
        }
        Ok(total)
    }

    /// Pointwise multiplication by `factor` (≥ 0).
    pub fn scaled(&self, factor: f64) -> Result<Self> {
        if !(factor >= 0.0 && factor.is_finite()) {
            return invalid(format!("scale factor must be finite and >= 0, got {factor}"));
        }
        Ok(match self {
            Self::DrudeLorentz(peaks) => Self::DrudeLorentz(
                peaks
                    .iter()
                    .map(|p| DrudeLorentzPeak { reorg: p.reorg * factor, ..*p })
                    .collect(),
            ),
            Self::Tabulated(t) => Self::Tabulated(TabulatedSd {
                omega: t.omega.clone(),
                values: t.values.iter().map(|v| v * factor).collect(),
            }),
        })
    }

    /// Rescales the model so that its reorganization energy equals `target`.
    pub fn rescale_to_lambda(&self, target: f64) -> Result<Self> {
        if target < 0.0 || !target.is_finite() {
            return invalid(format!("target reorganization energy must be >= 0, got {target}"));
        }
        let current = self.reorganization_energy()?;
        if current <= 0.0 {
            return invalid("cannot rescale a spectral density with zero reorganization energy");
        }
        self.scaled(target / current)
    }

    /// Samples the model on `grid`, producing a tabulated model.
    pub fn sample(&self, grid: &[f64]) -> Result<Self> {
        let values = grid.iter().map(|&w| self.eval(w)).collect::<Result<Vec<_>>>()?;
        Self::tabulated(grid.to_vec(), values)
    }

    /// Upper edge of the frequency support (∞ for analytic models).
    pub fn max_omega(&self) -> f64 {
        match self {
            Self::DrudeLorentz(_) => f64::INFINITY,
            Self::Tabulated(t) => *t.omega.last().unwrap(),
        }
    }

    pub fn min_omega(&self) -> f64 {
        match self {
            Self::DrudeLorentz(_) => 0.0,
            Self::Tabulated(t) => t.omega[0],
        }
    }
}
