use num_complex::Complex64;

use crate::error::{invalid, Result};
use crate::fft;
use crate::noise::NoiseTrajectory;

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct ResampleOptions {
    /// Fraction of the original band (below its Nyquist edge) rolled off by
    /// a raised cosine before padding; `None` pads without tapering.
    pub taper: Option<f64>,
}

/// Number of zeros to insert, `N(Δt/Δt_target − 1)`, if it is an integer.
fn padding(n: usize, dt: f64, dt_target: f64) -> Result<usize> {
    if !(dt_target > 0.0 && dt_target.is_finite()) {
        return invalid(format!("target time step must be positive, got {dt_target}"));
    }
    if dt_target > dt * (1.0 + 1e-12) {
        return invalid(format!("downsampling from {dt} fs to {dt_target} fs is not supported"));
    }
    let z = n as f64 * (dt / dt_target - 1.0);
    let rounded = z.round();
    if (z - rounded).abs() > 1e-6 * rounded.max(1.0) {
        return invalid(format!(
            "{n} samples at {dt} fs cannot be resampled to {dt_target} fs: {z} padding bins is not an integer"
        ));
    }
    Ok(rounded.max(0.0) as usize)
}

fn taper_weight(k: usize, n: usize, fraction: f64) -> f64 {
    let half = n as f64 / 2.0;
    let start = (1.0 - fraction) * half;
    let k = k as f64;
    if k <= start || half <= start {
        1.0
    } else {
        0.5 * (1.0 + (std::f64::consts::PI * (k - start) / (half - start)).cos())
    }
}

/// Band-limited upsampling of one real series by zero-padding its spectrum.
///
/// Bins `0..=N/2` keep their place, `Z` zeros follow, and the remaining
/// (negative-frequency) bins are moved to the end. The result is rescaled by
/// `(N+Z)/N` so that samples at coincident times keep their values.
pub fn resample_series(series: &[f64], dt: f64, dt_target: f64, options: ResampleOptions) -> Result<Vec<f64>> {
    let n = series.len();
    if n < 2 {
        return invalid("need at least two samples to resample");
    }
    let z = padding(n, dt, dt_target)?;
    if z == 0 && options.taper.is_none() {
        return Ok(series.to_vec());
    }
    if let Some(f) = options.taper {
        if !(f > 0.0 && f <= 1.0) {
            return invalid(format!("taper fraction must be in (0, 1], got {f}"));
        }
    }
    let mut spec = fft::forward_real(series);
    if let Some(f) = options.taper {
        for (k, v) in spec.iter_mut().enumerate() {
            *v *= taper_weight(k.min(n - k), n, f);
        }
    }
    let m = n + z;
    let keep = n / 2;
    let mut padded = vec![Complex64::new(0.0, 0.0); m];
    padded[..=keep].copy_from_slice(&spec[..=keep]);
    let tail = n - keep - 1;
    padded[m - tail..].copy_from_slice(&spec[keep + 1..]);
    fft::inverse(&mut padded);
    let scale = m as f64 / n as f64;
    Ok(padded.into_iter().map(|c| c.re * scale).collect())
}

/// Resamples every site of `traj` to step `dt_target`.
pub fn resample(traj: &NoiseTrajectory, dt_target: f64, options: ResampleOptions) -> Result<NoiseTrajectory> {
    let sites = traj
        .sites()
        .iter()
        .map(|s| resample_series(s, traj.dt(), dt_target, options))
        .collect::<Result<Vec<_>>>()?;
    let out = NoiseTrajectory::new(dt_target, sites)?;
    Ok(match traj.seed() {
        Some(seed) => out.with_seed(seed),
        None => out,
    })
}
