use crate::error::{invalid, Error, Result};

use super::{AutocorrelationSeries, SpectralCurve};

/// Default comparison window for correlation functions (fs).
pub const DEFAULT_MAE_WINDOW_FS: f64 = 20_000.0;

/// Mean |a − b| over the grid points of `a` inside `range` where `b` is
/// defined; `b` is linearly interpolated onto them.
pub fn mae_sd(a: &SpectralCurve, b: &SpectralCurve, range: (f64, f64)) -> Result<f64> {
    let mut sum = 0.0;
    let mut count = 0usize;
    for (&w, &va) in a.omega.iter().zip(&a.values) {
        if w < range.0 || w > range.1 {
            continue;
        }
        if let Some(vb) = b.interpolate(w) {
            sum += (va - vb).abs();
            count += 1;
        }
    }
    if count == 0 {
        return Err(Error::Mismatch(format!(
            "spectral curves share no grid points in [{}, {}] cm-1",
            range.0, range.1
        )));
    }
    Ok(sum / count as f64)
}

/// Mean |a − b| over the lags of `a` inside `range` (fs).
pub fn mae_c(a: &AutocorrelationSeries, b: &AutocorrelationSeries, range: (f64, f64)) -> Result<f64> {
    if range.1 < range.0 {
        return invalid("empty lag range");
    }
    let bt = b.last_lag();
    let mut sum = 0.0;
    let mut count = 0usize;
    for (j, &va) in a.values().iter().enumerate() {
        let t = j as f64 * a.dt();
        if t < range.0 || t > range.1 || t > bt * (1.0 + 1e-12) {
            continue;
        }
        let x = t / b.dt();
        let i = (x.floor() as usize).min(b.len() - 1);
        let frac = x - i as f64;
        let vb = if i + 1 < b.len() {
            b.values()[i] * (1.0 - frac) + b.values()[i + 1] * frac
        } else {
            b.values()[i]
        };
        sum += (va - vb).abs();
        count += 1;
    }
    if count == 0 {
        return Err(Error::Mismatch("correlation functions share no lags in range".into()));
    }
    Ok(sum / count as f64)
}
