//! Gaussian noise trajectories with a prescribed bath spectral density.
//!
//! White noise of twice the requested length is filtered in frequency space
//! by the square root of the target power spectrum
//! `C̃(ω) = 2πħ k_B T J(ω)/ω`; the second half of the filtered (periodic)
//! series is discarded.

use std::sync::Arc;

use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rustfft::{Fft, FftPlanner};

use crate::error::{invalid, Error, Result};
use crate::fft::signed_index;
use crate::spectral::SpectralDensity;
use crate::units::{thermal_energy, HBAR};

const GOLDEN_GAMMA: u64 = 0x9E37_79B9_7F4A_7C15;

fn splitmix_finalize(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Derives an independent seed for sub-stream `stream` of `base`.
///
/// This is the `(stream + 1)`-th output of a SplitMix64 generator started at
/// `base`, so streams are reproducible and need no shared state.
pub fn derive_seed(base: u64, stream: u64) -> u64 {
    splitmix_finalize(base.wrapping_add(GOLDEN_GAMMA.wrapping_mul(stream.wrapping_add(1))))
}

/// Seed used for site `site` of realization `realization`.
pub fn realization_site_seed(base: u64, realization: u64, site: u64) -> u64 {
    derive_seed(derive_seed(base, realization), site)
}

/// Two-sided power spectrum C̃(ω) (cm⁻²·fs) on the FFT grid of `2·n_steps`
/// points at step `dt`.
#[derive(Debug, Clone, PartialEq)]
pub struct PowerSpectrum {
    omega: Vec<f64>,
    values: Vec<f64>,
    dt: f64,
}

impl PowerSpectrum {
    /// Wraps precomputed values laid out in FFT order.
    pub fn new(values: Vec<f64>, dt: f64) -> Result<Self> {
        if !(dt > 0.0) {
            return invalid("time step must be positive");
        }
        if let Some(v) = values.iter().find(|v| !(**v >= 0.0 && v.is_finite())) {
            return invalid(format!("power spectrum entries must be finite and >= 0, found {v}"));
        }
        let omega = fft_omega_grid(values.len(), dt);
        Ok(Self { omega, values, dt })
    }

    pub fn constant(value: f64, n_steps: usize, dt: f64) -> Result<Self> {
        Self::new(vec![value; 2 * n_steps], dt)
    }

    pub fn omega(&self) -> &[f64] {
        &self.omega
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

/// Angular frequencies (cm⁻¹) of the bins of a length-`n` FFT at step `dt`.
pub fn fft_omega_grid(n: usize, dt: f64) -> Vec<f64> {
    let step = 2.0 * std::f64::consts::PI * HBAR / (n as f64 * dt);
    (0..n).map(|k| signed_index(k, n) as f64 * step).collect()
}

/// Target power spectrum of `model` at temperature `temperature` for a
/// trajectory of `n_steps` samples.
pub fn target_power_spectrum(model: &SpectralDensity, temperature: f64, n_steps: usize, dt: f64) -> Result<PowerSpectrum> {
    if !(temperature > 0.0) {
        return invalid(format!("temperature must be positive, got {temperature}"));
    }
    if !(dt > 0.0) {
        return invalid("time step must be positive");
    }
    let n = 2 * n_steps;
    let omega = fft_omega_grid(n, dt);
    let prefactor = 2.0 * std::f64::consts::PI * HBAR * thermal_energy(temperature);
    let values: Vec<f64> = omega
        .iter()
        .map(|&w| prefactor * model.j_over_omega(w.abs()))
        .collect();
    if values.iter().any(|v| !v.is_finite()) {
        return Err(Error::Numerical("J(omega)/omega is not finite on the FFT grid".into()));
    }
    Ok(PowerSpectrum {
        omega,
        values,
        dt,
    })
}

/// Site-energy fluctuations ΔE_n(t_i) (cm⁻¹) on a uniform time grid.
#[derive(Debug, Clone, PartialEq)]
pub struct NoiseTrajectory {
    dt: f64,
    sites: Vec<Vec<f64>>,
    seed: Option<u64>,
}

impl NoiseTrajectory {
    pub fn new(dt: f64, sites: Vec<Vec<f64>>) -> Result<Self> {
        if !(dt > 0.0 && dt.is_finite()) {
            return invalid(format!("time step must be positive, got {dt}"));
        }
        if let Some(first) = sites.first() {
            if sites.iter().any(|s| s.len() != first.len()) {
                return invalid("all site sequences must have equal length");
            }
        }
        Ok(Self { dt, sites, seed: None })
    }

    pub fn single(dt: f64, values: Vec<f64>) -> Result<Self> {
        Self::new(dt, vec![values])
    }

    /// A noiseless trajectory for `n_sites` sites.
    pub fn zeros(dt: f64, n_sites: usize, len: usize) -> Result<Self> {
        Self::new(dt, vec![vec![0.0; len]; n_sites])
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = Some(seed);
        self
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn seed(&self) -> Option<u64> {
        self.seed
    }

    pub fn n_sites(&self) -> usize {
        self.sites.len()
    }

    pub fn len(&self) -> usize {
        self.sites.first().map_or(0, Vec::len)
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn site(&self, n: usize) -> &[f64] {
        &self.sites[n]
    }

    pub fn sites(&self) -> &[Vec<f64>] {
        &self.sites
    }

    pub fn into_sites(self) -> Vec<Vec<f64>> {
        self.sites
    }

    /// Energies of all sites at step `i`.
    pub fn at(&self, i: usize) -> impl Iterator<Item = f64> + '_ {
        self.sites.iter().map(move |s| s[i])
    }

    pub fn times(&self) -> Vec<f64> {
        (0..self.len()).map(|i| i as f64 * self.dt).collect()
    }

    /// Time-averaged fluctuation of every site.
    pub fn site_means(&self) -> Vec<f64> {
        self.sites
            .iter()
            .map(|s| if s.is_empty() { 0.0 } else { s.iter().sum::<f64>() / s.len() as f64 })
            .collect()
    }

    /// Sub-trajectory of samples `start..start + len`.
    pub fn slice(&self, start: usize, len: usize) -> Self {
        Self {
            dt: self.dt,
            sites: self.sites.iter().map(|s| s[start..start + len].to_vec()).collect(),
            seed: self.seed,
        }
    }
}

/// Reusable filter for one power spectrum; holds planned FFTs.
#[derive(Clone)]
pub struct NoiseFilter {
    amplitude: Vec<f64>,
    n_steps: usize,
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
}

impl NoiseFilter {
    pub fn new(ps: &PowerSpectrum, n_steps: usize, dt: f64) -> Result<Self> {
        if n_steps < 2 {
            return invalid(format!("need at least 2 steps, got {n_steps}"));
        }
        if ps.len() != 2 * n_steps {
            return Err(Error::Mismatch(format!(
                "power spectrum has {} points, expected {}",
                ps.len(),
                2 * n_steps
            )));
        }
        if (ps.dt - dt).abs() > 1e-12 * dt {
            return Err(Error::Mismatch(format!("power spectrum built for dt = {}, not {dt}", ps.dt)));
        }
        let scale = 1.0 / dt.sqrt();
        let amplitude = ps.values.iter().map(|c| c.sqrt() * scale).collect();
        let mut planner = FftPlanner::new();
        Ok(Self {
            amplitude,
            n_steps,
            forward: planner.plan_fft_forward(2 * n_steps),
            inverse: planner.plan_fft_inverse(2 * n_steps),
        })
    }

    /// One filtered realization of `n_steps` samples from `seed`.
    pub fn realize(&self, seed: u64) -> Vec<f64> {
        let n = 2 * self.n_steps;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut buf: Vec<Complex64> = (0..n)
            .map(|_| Complex64::new(StandardNormal.sample(&mut rng), 0.0))
            .collect();
        self.forward.process(&mut buf);
        for (v, a) in buf.iter_mut().zip(&self.amplitude) {
            *v *= *a;
        }
        self.inverse.process(&mut buf);
        let norm = 1.0 / n as f64;
        buf.truncate(self.n_steps);
        buf.into_iter().map(|c| c.re * norm).collect()
    }
}

/// One site's noise realization following `ps`.
pub fn generate_noise(ps: &PowerSpectrum, n_steps: usize, dt: f64, seed: u64) -> Result<NoiseTrajectory> {
    let filter = NoiseFilter::new(ps, n_steps, dt)?;
    Ok(NoiseTrajectory::single(dt, filter.realize(seed))?.with_seed(seed))
}

/// Filters for independent per-site baths, reusable across realizations.
pub struct SiteNoiseGenerator {
    filters: Vec<NoiseFilter>,
    dt: f64,
}

impl SiteNoiseGenerator {
    pub fn new(models: &[SpectralDensity], temperature: f64, n_steps: usize, dt: f64) -> Result<Self> {
        let mut filters: Vec<NoiseFilter> = Vec::with_capacity(models.len());
        for (i, model) in models.iter().enumerate() {
            // Identical models share the same spectrum; skip recomputing it.
            if let Some(j) = models[..i].iter().position(|m| m == model) {
                let shared = filters[j].clone();
                filters.push(shared);
                continue;
            }
            let ps = target_power_spectrum(model, temperature, n_steps, dt)?;
            filters.push(NoiseFilter::new(&ps, n_steps, dt)?);
        }
        Ok(Self { filters, dt })
    }

    pub fn n_sites(&self) -> usize {
        self.filters.len()
    }

    /// All sites for `base_seed`; site `n` uses `derive_seed(base_seed, n)`.
    pub fn generate(&self, base_seed: u64) -> NoiseTrajectory {
        let sites = self
            .filters
            .iter()
            .enumerate()
            .map(|(n, f)| f.realize(derive_seed(base_seed, n as u64)))
            .collect();
        NoiseTrajectory {
            dt: self.dt,
            sites,
            seed: Some(base_seed),
        }
    }

    /// Realization `r` of an ensemble started from `ensemble_seed`.
    pub fn realization(&self, ensemble_seed: u64, r: u64) -> NoiseTrajectory {
        self.generate(derive_seed(ensemble_seed, r))
    }
}

/// Independent noise for every site, one model per site.
pub fn generate_site_noise(
    models: &[SpectralDensity],
    temperature: f64,
    n_steps: usize,
    dt: f64,
    base_seed: u64,
) -> Result<NoiseTrajectory> {
    Ok(SiteNoiseGenerator::new(models, temperature, n_steps, dt)?.generate(base_seed))
}

/// Overlapping windows of `window_len` samples spaced `stride` samples apart.
///
/// A window covering a duration `T` at step `dt` has `round(T/dt) + 1`
/// samples; see [`samples_for_duration`].
pub fn windows_from_trajectory(traj: &NoiseTrajectory, window_len: usize, stride: usize) -> Result<Vec<NoiseTrajectory>> {
    if stride == 0 {
        return invalid("window stride must be at least one step");
    }
    if window_len == 0 {
        return invalid("window length must be positive");
    }
    let len = traj.len();
    if window_len > len {
        return Ok(Vec::new());
    }
    let count = (len - window_len) / stride + 1;
    Ok((0..count).map(|w| traj.slice(w * stride, window_len)).collect())
}

/// Number of samples spanning `duration` (inclusive of both end points).
pub fn samples_for_duration(duration: f64, dt: f64) -> usize {
    (duration / dt).round() as usize + 1
}

/// Number of whole steps in `duration`.
pub fn steps_for_duration(duration: f64, dt: f64) -> usize {
    (duration / dt).round() as usize
}
