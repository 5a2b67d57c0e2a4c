use num_complex::Complex64;

use crate::error::{invalid, Error, Result};
use crate::fft;

/// Whether a correlation function was computed from a model or estimated
/// from sampled noise.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CorrelationSource {
    Theoretical,
    Estimated,
}

/// C(t_j) in cm⁻² on lags `j·dt`.
#[derive(Debug, Clone, PartialEq)]
pub struct AutocorrelationSeries {
    values: Vec<f64>,
    dt: f64,
    source: CorrelationSource,
}

impl AutocorrelationSeries {
    pub fn new(values: Vec<f64>, dt: f64, source: CorrelationSource) -> Result<Self> {
        if values.len() < 2 {
            return invalid("an autocorrelation series needs at least two lags");
        }
        if !(dt > 0.0 && dt.is_finite()) {
            return invalid(format!("lag spacing must be positive, got {dt}"));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return invalid("autocorrelation contains non-finite values");
        }
        Ok(Self { values, dt, source })
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn source(&self) -> CorrelationSource {
        self.source
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn lags(&self) -> Vec<f64> {
        (0..self.values.len()).map(|j| j as f64 * self.dt).collect()
    }

    pub fn last_lag(&self) -> f64 {
        (self.values.len() - 1) as f64 * self.dt
    }

    /// Keeps the lags with `t ≤ t_max`.
    pub fn truncated(&self, t_max: f64) -> Result<Self> {
        let keep = ((t_max / self.dt + 1e-9).floor() as usize + 1).min(self.values.len());
        Self::new(self.values[..keep].to_vec(), self.dt, self.source)
    }

    pub(crate) fn map_values(&self, f: impl Fn(f64, f64) -> f64) -> Self {
        let values = self
            .values
            .iter()
            .enumerate()
            .map(|(j, &c)| f(j as f64 * self.dt, c))
            .collect();
        Self { values, ..*self }
    }
}

/// Unbiased estimator of the autocorrelation of one site's fluctuations.
///
/// The sample mean is removed first; the sum over pairs at lag `j` is divided
/// by `N − j`. Only lags `j < N/2` are returned.
pub fn autocorrelation(series: &[f64], dt: f64) -> Result<AutocorrelationSeries> {
    let n = series.len();
    if n < 4 {
        return invalid(format!("autocorrelation needs at least 4 samples, got {n}"));
    }
    if series.iter().any(|v| !v.is_finite()) {
        return invalid("trajectory contains non-finite values");
    }
    let mean = series.iter().sum::<f64>() / n as f64;
    let m = (2 * n).next_power_of_two();
    let mut buf = vec![Complex64::new(0.0, 0.0); m];
    for (b, &x) in buf.iter_mut().zip(series) {
        b.re = x - mean;
    }
    fft::forward(&mut buf);
    for v in buf.iter_mut() {
        *v = Complex64::new(v.norm_sqr(), 0.0);
    }
    fft::inverse(&mut buf);
    let lags = n.div_ceil(2);
    let values = (0..lags).map(|j| buf[j].re / (n - j) as f64).collect();
    AutocorrelationSeries::new(values, dt, CorrelationSource::Estimated)
}

/// Pointwise mean of equally sampled series.
pub fn average_autocorrelations(list: &[AutocorrelationSeries]) -> Result<AutocorrelationSeries> {
    let Some(first) = list.first() else {
        return invalid("cannot average an empty list of autocorrelations");
    };
    let mut sum = vec![0.0; first.len()];
    for c in list {
        if c.len() != first.len() || (c.dt - first.dt).abs() > 1e-12 * first.dt {
            return Err(Error::Mismatch(format!(
                "autocorrelation grids differ: {} lags at {} fs vs {} lags at {} fs",
                c.len(),
                c.dt,
                first.len(),
                first.dt
            )));
        }
        for (s, v) in sum.iter_mut().zip(&c.values) {
            *s += v;
        }
    }
    let k = list.len() as f64;
    let source = if list.iter().all(|c| c.source == CorrelationSource::Theoretical) {
        CorrelationSource::Theoretical
    } else {
        CorrelationSource::Estimated
    };
    AutocorrelationSeries::new(sum.into_iter().map(|s| s / k).collect(), first.dt, source)
}
