//! Cosine transforms between C(t) and J(ω) via the symmetric-extension FFT
//! (a DCT-I).
//!
//! With ω in cm⁻¹ and t in fs the continuous pair reads
//! C(t) = 2k_BT ∫₀^∞ (J(ω)/ω) cos(ωt/ħ) dω and
//! J(ω) = ω/(πħ k_BT) ∫₀^∞ C(t) cos(ωt/ħ) dt.
//! For `n` lags at step Δt the frequency grid is ω_k = πħk/((n−1)Δt),
//! k = 0..n, ending at the Nyquist frequency.

use crate::error::{invalid, Result};
use crate::fft;
use crate::spectral::SpectralDensity;
use crate::units::{thermal_energy, HBAR};

use super::{AutocorrelationSeries, CorrelationSource};

/// J(ω) sampled on a grid, possibly with negative lobes (estimates from
/// noisy or hard-truncated correlation functions are not guaranteed to be
/// nonnegative).
#[derive(Debug, Clone, PartialEq)]
pub struct SpectralCurve {
    pub omega: Vec<f64>,
    pub values: Vec<f64>,
}

impl SpectralCurve {
    pub fn new(omega: Vec<f64>, values: Vec<f64>) -> Result<Self> {
        if omega.len() != values.len() || omega.is_empty() {
            return invalid("spectral curve needs equal, nonzero numbers of grid points and values");
        }
        if omega.windows(2).any(|w| w[1] <= w[0]) {
            return invalid("spectral curve grid must be strictly increasing");
        }
        Ok(Self { omega, values })
    }

    /// Samples `model` on `grid`.
    pub fn from_model(model: &SpectralDensity, grid: &[f64]) -> Result<Self> {
        let values = grid.iter().map(|&w| model.eval(w)).collect::<Result<Vec<_>>>()?;
        Self::new(grid.to_vec(), values)
    }

    pub fn len(&self) -> usize {
        self.omega.len()
    }

    pub fn is_empty(&self) -> bool {
        self.omega.is_empty()
    }

    pub fn peak(&self) -> f64 {
        self.values.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn min_value(&self) -> f64 {
        self.values.iter().copied().fold(f64::INFINITY, f64::min)
    }

    /// Linear interpolation; `None` outside the grid.
    pub fn interpolate(&self, w: f64) -> Option<f64> {
        let n = self.omega.len();
        if w < self.omega[0] || w > self.omega[n - 1] {
            return None;
        }
        if n == 1 {
            return Some(self.values[0]);
        }
        let hi = self.omega.partition_point(|&x| x < w).clamp(1, n - 1);
        let (x0, x1) = (self.omega[hi - 1], self.omega[hi]);
        let (y0, y1) = (self.values[hi - 1], self.values[hi]);
        Some(y0 + (y1 - y0) * (w - x0) / (x1 - x0))
    }

    /// Tabulated model with negative values clipped to zero.
    pub fn to_model(&self) -> Result<SpectralDensity> {
        let mut values: Vec<f64> = self.values.iter().map(|v| v.max(0.0)).collect();
        if self.omega[0] == 0.0 {
            values[0] = 0.0;
        }
        SpectralDensity::tabulated(self.omega.clone(), values)
    }
}

fn check_temperature(temperature: f64) -> Result<()> {
    if !(temperature > 0.0 && temperature.is_finite()) {
        return invalid(format!("temperature must be positive, got {temperature}"));
    }
    Ok(())
}

/// Frequency grid dual to `n` lags at step `dt`.
pub(crate) fn dual_grid(n: usize, dt: f64) -> Vec<f64> {
    let step = std::f64::consts::PI * HBAR / ((n - 1) as f64 * dt);
    (0..n).map(|k| k as f64 * step).collect()
}

/// J(ω) = ωΔt/(2πħk_BT) · Re FFT(C extended symmetrically).
pub fn sd_from_autocorrelation(c: &AutocorrelationSeries, temperature: f64) -> Result<SpectralCurve> {
    check_temperature(temperature)?;
    let n = c.len();
    if n < 3 {
        return invalid("need at least 3 lags to transform an autocorrelation");
    }
    let mut ext = fft::symmetric_extension(c.values());
    fft::forward(&mut ext);
    let omega = dual_grid(n, c.dt());
    let scale = c.dt() / (2.0 * std::f64::consts::PI * HBAR * thermal_energy(temperature));
    let values = omega.iter().zip(&ext).map(|(w, f)| w * scale * f.re).collect();
    SpectralCurve::new(omega, values)
}

/// C(t_j) = (2πħk_BT/Δt) · Re IFFT((J/ω) extended symmetrically) on `n_lags`
/// lags.
pub fn autocorrelation_from_sd(
    model: &SpectralDensity,
    temperature: f64,
    dt: f64,
    n_lags: usize,
) -> Result<AutocorrelationSeries> {
    check_temperature(temperature)?;
    if n_lags < 3 {
        return invalid("need at least 3 lags");
    }
    if !(dt > 0.0) {
        return invalid("lag spacing must be positive");
    }
    let omega = dual_grid(n_lags, dt);
    let ratio: Vec<f64> = omega.iter().map(|&w| model.j_over_omega(w)).collect();
    if ratio.iter().any(|r| !r.is_finite()) {
        return Err(crate::Error::Numerical("J(omega)/omega is not finite".into()));
    }
    let mut ext = fft::symmetric_extension(&ratio);
    fft::inverse(&mut ext);
    let scale = 2.0 * std::f64::consts::PI * HBAR * thermal_energy(temperature) / dt;
    let values = ext[..n_lags].iter().map(|v| v.re * scale).collect();
    AutocorrelationSeries::new(values, dt, CorrelationSource::Theoretical)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quad;
    use crate::spectral::DrudeLorentzPeak;

    #[test]
    fn exponential_correlation_gives_lorentzian() {
        let (c0, tau, t, dt) = (1000.0, 200.0, 300.0, 0.5);
        let n = 200_000;
        let values: Vec<f64> = (0..n).map(|j| c0 * (-(j as f64) * dt / tau).exp()).collect();
        let c = AutocorrelationSeries::new(values, dt, CorrelationSource::Theoretical).unwrap();
        let j = sd_from_autocorrelation(&c, t).unwrap();
        let beta = 1.0 / thermal_energy(t);
        for (&w, &v) in j.omega.iter().zip(&j.values).skip(1) {
            let x = w * tau / HBAR;
            if x > 10.0 {
                break;
            }
            let exact = beta * w / (std::f64::consts::PI * HBAR) * c0 * tau / (1.0 + x * x);
            assert!((v - exact).abs() < 0.01 * exact, "omega {w}: {v} vs {exact}");
        }
    }

    #[test]
    fn zero_in_zero_out() {
        let c = AutocorrelationSeries::new(vec![0.0; 64], 2.0, CorrelationSource::Theoretical).unwrap();
        assert!(sd_from_autocorrelation(&c, 300.0).unwrap().values.iter().all(|&v| v == 0.0));
        let back = autocorrelation_from_sd(&SpectralDensity::zero(), 300.0, 2.0, 64).unwrap();
        assert!(back.values().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn round_trip_from_tabulated_model() {
        let (n, dt, t) = (400, 2.0, 300.0);
        let grid = dual_grid(n, dt);
        let values: Vec<f64> = grid
            .iter()
            .map(|&w| 30.0 * w / (1.0 + ((w - 725.0) / 40.0).powi(2)) / 725.0 + 0.02 * w * (-w / 300.0).exp())
            .collect();
        let model = SpectralDensity::tabulated(grid.clone(), values.clone()).unwrap();
        let c = autocorrelation_from_sd(&model, t, dt, n).unwrap();
        let back = sd_from_autocorrelation(&c, t).unwrap();
        assert_eq!(back.omega.len(), n);
        let peak = values.iter().copied().fold(0.0, f64::max);
        for (k, (a, b)) in values.iter().zip(&back.values).enumerate() {
            assert!((back.omega[k] - grid[k]).abs() < 1e-9);
            assert!((a - b).abs() < 1e-10 * peak, "bin {k}: {a} vs {b}");
        }
    }

    #[test]
    fn drude_zero_lag_matches_quadrature() {
        let peak = DrudeLorentzPeak::new(0.0, 35.0, 53.088).unwrap();
        let model = SpectralDensity::drude_lorentz(vec![peak]);
        let t = 300.0;
        let c = autocorrelation_from_sd(&model, t, 1.0, 20_000).unwrap();
        let nyq = std::f64::consts::PI * HBAR / 1.0;
        let (integral, _) = quad::integrate(|w| model.j_over_omega(w), 0.0, nyq, 1e-12, 1e-10);
        let expected = 2.0 * thermal_energy(t) * integral;
        assert!((c.values()[0] - expected).abs() < 0.01 * expected);
        let full = 2.0 * thermal_energy(t) * 35.0;
        assert!((c.values()[0] - full).abs() < 0.01 * full);
    }

    #[test]
    fn curve_to_model_clips() {
        let curve = SpectralCurve::new(vec![0.0, 1.0, 2.0], vec![0.5, -1.0, 2.0]).unwrap();
        let m = curve.to_model().unwrap();
        assert_eq!(m.eval(1.0).unwrap(), 0.0);
        assert_eq!(m.eval(2.0).unwrap(), 2.0);
        assert_eq!(curve.interpolate(1.5), Some(0.5));
        assert_eq!(curve.interpolate(3.0), None);
    }
}
