use crate::error::{invalid, Result};

use super::AutocorrelationSeries;

/// Tuning constants of [`suggest_cutoff`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CutoffOptions {
    /// Length of the running average over |C| (fs).
    pub window: f64,
    /// The running average must stay below `threshold × floor`.
    pub threshold: f64,
}

impl Default for CutoffOptions {
    fn default() -> Self {
        Self {
            window: 500.0,
            threshold: 2.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CutoffEstimate {
    /// Suggested cutoff time (fs).
    pub cutoff: f64,
    /// Mean |C| over the last quarter of the lags.
    pub floor: f64,
    /// Set when no flat noise floor was found; `cutoff` is then half the
    /// series length.
    pub warning: bool,
}

/// Locates where an estimated autocorrelation has decayed into its noise
/// floor.
///
/// A running average of |C| over `options.window` is taken looking forward
/// from every lag (only lags whose window fits in the series). The floor is
/// the mean |C| over the last quarter of the lags. The cutoff is the first
/// lag from which the running average never exceeds `threshold × floor`.
/// If the floor is zero, or the running average is not flat over the last
/// quarter, no floor exists and the warning path is taken.
pub fn suggest_cutoff(c: &AutocorrelationSeries, options: CutoffOptions) -> Result<CutoffEstimate> {
    let n = c.len();
    let dt = c.dt();
    let w = ((options.window / dt).round() as usize).max(1);
    if w >= n {
        return invalid(format!(
            "series of {} fs is not longer than the {} fs averaging window",
            c.last_lag(),
            options.window
        ));
    }
    if !(options.threshold > 1.0) {
        return invalid("cutoff threshold must exceed 1");
    }
    let abs: Vec<f64> = c.values().iter().map(|v| v.abs()).collect();
    let quarter = (n / 4).max(1);
    let floor = abs[n - quarter..].iter().sum::<f64>() / quarter as f64;
    let fallback = CutoffEstimate {
        cutoff: 0.5 * c.last_lag(),
        floor,
        warning: true,
    };
    if floor <= 0.0 {
        log::warn!("autocorrelation has no noise floor; using half the series as cutoff");
        return Ok(fallback);
    }

    let m = n - w + 1;
    let mut running = Vec::with_capacity(m);
    let mut acc: f64 = abs[..w].iter().sum();
    running.push(acc / w as f64);
    for i in 1..m {
        acc += abs[i + w - 1] - abs[i - 1];
        running.push(acc / w as f64);
    }

    let limit = options.threshold * floor;
    let tail_start = m.saturating_sub(quarter);
    if running[tail_start..].iter().any(|&v| v > limit) {
        log::warn!("autocorrelation tail is not flat; using half the series as cutoff");
        return Ok(fallback);
    }
    let last_above = running.iter().rposition(|&v| v > limit);
    let index = last_above.map_or(0, |i| i + 1);
    Ok(CutoffEstimate {
        cutoff: index as f64 * dt,
        floor,
        warning: false,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bath::{autocorrelation, CorrelationSource};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use rand_distr::{Distribution, StandardNormal};

    #[test]
    fn clean_exponential_warns() {
        let values: Vec<f64> = (0..5000).map(|j| (-(j as f64) * 2.0 / 300.0).exp()).collect();
        let c = AutocorrelationSeries::new(values, 2.0, CorrelationSource::Theoretical).unwrap();
        let est = suggest_cutoff(&c, CutoffOptions::default()).unwrap();
        assert!(est.warning);
        assert_eq!(est.cutoff, 0.5 * c.last_lag());
    }

    #[test]
    fn zero_series_warns() {
        let c = AutocorrelationSeries::new(vec![0.0; 1000], 2.0, CorrelationSource::Estimated).unwrap();
        assert!(suggest_cutoff(&c, CutoffOptions::default()).unwrap().warning);
    }

    #[test]
    fn white_noise_cuts_immediately() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let x: Vec<f64> = (0..50_000).map(|_| StandardNormal.sample(&mut rng)).collect();
        let c = autocorrelation(&x, 2.0).unwrap();
        let est = suggest_cutoff(&c, CutoffOptions::default()).unwrap();
        assert!(!est.warning);
        assert!(est.cutoff <= 10.0, "{est:?}");
    }

    #[test]
    fn decay_into_floor() {
        // exponential with tau = 400 fs on top of a constant-magnitude floor
        let values: Vec<f64> = (0..20_000)
            .map(|j| {
                let t = j as f64 * 2.0;
                100.0 * (-t / 400.0).exp() + if j % 2 == 0 { 0.1 } else { -0.1 }
            })
            .collect();
        let c = AutocorrelationSeries::new(values, 2.0, CorrelationSource::Estimated).unwrap();
        let est = suggest_cutoff(&c, CutoffOptions::default()).unwrap();
        assert!(!est.warning);
        // forward mean of 100 e^{-t/400} over 500 fs reaches 0.2 at
        // t = 400 ln(500 · 0.8 · (1 - e^{-1.25})) ≈ 2.26 ps
        assert!((est.cutoff - 2262.0).abs() < 20.0, "{est:?}");
    }

    #[test]
    fn rejects_short_series() {
        let c = AutocorrelationSeries::new(vec![1.0; 100], 2.0, CorrelationSource::Estimated).unwrap();
        assert!(suggest_cutoff(&c, CutoffOptions::default()).is_err());
    }
}
