use nalgebra::DMatrix;
use num_complex::Complex64;

use super::series::{AveragingTag, EnsembleDensitySeries};
use crate::error::{invalid, Error, Result};

/// Fitted population lifetimes, one per site.
#[derive(Debug, Clone, PartialEq)]
pub struct LifetimeSet {
    /// τ_n (fs).
    pub taus: Vec<f64>,
    /// Root-mean-square fit residual per site.
    pub rms: Vec<f64>,
    /// Asymptotic population P∞ per site.
    pub asymptotes: Vec<f64>,
    /// True where the fit failed and τ_n was set to the series length.
    pub fallback: Vec<bool>,
}

const SCAN_POINTS: usize = 240;

/// Sum of squared residuals of P∞ + (P₀ − P∞)e^{−t/τ} with the optimal P∞
/// for fixed τ, and that P∞.
fn profile(times: &[f64], pops: &[f64], tau: f64) -> (f64, f64) {
    let p0 = pops[0];
    let (mut num, mut den) = (0.0, 0.0);
    for (&t, &p) in times.iter().zip(pops) {
        let e = (-t / tau).exp();
        let basis = 1.0 - e;
        num += (p - p0 * e) * basis;
        den += basis * basis;
    }
    let p_inf = if den > 0.0 { num / den } else { p0 };
    let ssr = times
        .iter()
        .zip(pops)
        .map(|(&t, &p)| {
            let e = (-t / tau).exp();
            let r = p - p_inf - (p0 - p_inf) * e;
            r * r
        })
        .sum();
    (ssr, p_inf)
}

/// Fits P(t) = P∞ + (P(0) − P∞)e^{−t/τ} to one population curve.
/// Returns (τ, P∞, rms, fallback).
fn fit_one(times: &[f64], pops: &[f64], dt: f64) -> (f64, f64, f64, bool) {
    let t_max = *times.last().expect("nonempty");
    let (lo, hi) = (dt.ln(), (100.0 * t_max).ln());
    let at = |k: usize| lo + (hi - lo) * k as f64 / (SCAN_POINTS - 1) as f64;
    let cost = |log_tau: f64| profile(times, pops, log_tau.exp()).0;

    let mut best_k = 0;
    let mut best = f64::INFINITY;
    for k in 0..SCAN_POINTS {
        let v = cost(at(k));
        if v < best {
            best = v;
            best_k = k;
        }
    }
    // golden-section refinement inside the bracketing scan cells
    let (mut a, mut b) = (at(best_k.saturating_sub(1)), at((best_k + 1).min(SCAN_POINTS - 1)));
    let g = (5f64.sqrt() - 1.0) / 2.0;
    let mut x1 = b - g * (b - a);
    let mut x2 = a + g * (b - a);
    let (mut f1, mut f2) = (cost(x1), cost(x2));
    for _ in 0..80 {
        if f1 <= f2 {
            b = x2;
            x2 = x1;
            f2 = f1;
            x1 = b - g * (b - a);
            f1 = cost(x1);
        } else {
            a = x1;
            x1 = x2;
            f1 = f2;
            x2 = a + g * (b - a);
            f2 = cost(x2);
        }
    }
    let log_tau = if f1 <= f2 { x1 } else { x2 };
    let tau = log_tau.exp();
    let (ssr, p_inf) = profile(times, pops, tau);
    let rms = (ssr / times.len() as f64).sqrt();
    let amplitude = (pops[0] - p_inf).abs();
    let at_edge = best_k == 0 || best_k == SCAN_POINTS - 1;
    let failed = !tau.is_finite() || at_edge || amplitude < 1e-6 || tau < dt || tau > 100.0 * t_max;
    if failed {
        (t_max, p_inf, rms, true)
    } else {
        (tau, p_inf, rms, false)
    }
}

/// Exponential lifetimes of every site population of a (plain NISE) series.
pub fn fit_lifetimes(series: &EnsembleDensitySeries) -> Result<LifetimeSet> {
    if series.len() < 10 {
        return invalid("lifetime fit needs at least 10 time points");
    }
    let times = series.times();
    let mut out = LifetimeSet {
        taus: Vec::new(),
        rms: Vec::new(),
        asymptotes: Vec::new(),
        fallback: Vec::new(),
    };
    for site in 0..series.n_sites() {
        let pops = series.site_population(site);
        if pops.iter().any(|p| !p.is_finite()) {
            return Err(Error::Numerical(format!("non-finite population on site {}", site + 1)));
        }
        let (tau, p_inf, rms, fallback) = fit_one(&times, &pops, series.dt);
        if fallback {
            log::warn!("lifetime fit for site {} failed; using τ = {tau} fs", site + 1);
        }
        out.taus.push(tau);
        out.asymptotes.push(p_inf);
        out.rms.push(rms);
        out.fallback.push(fallback);
    }
    Ok(out)
}

/// w(t) = 1 − e^{−t/(factor·τ)}.
pub fn interpolation_weight(t: f64, tau: f64, factor: f64) -> f64 {
    1.0 - (-t / (factor * tau)).exp()
}

/// Site populations P_n = w_n P^c_nn + (1 − w_n) P^T_nn renormalized to a
/// total of one. Coherences are copied from `thermal` and marked invalid.
pub fn interpolated_populations(
    thermal: &EnsembleDensitySeries,
    constructed: &EnsembleDensitySeries,
    lifetimes: &LifetimeSet,
    factor: f64,
) -> Result<EnsembleDensitySeries> {
    if thermal.len() != constructed.len()
        || (thermal.dt - constructed.dt).abs() > 1e-12 * thermal.dt
        || thermal.n_sites() != constructed.n_sites()
    {
        return Err(Error::Mismatch("interpolated series must share grid and dimension".into()));
    }
    if lifetimes.taus.len() != thermal.n_sites() {
        return Err(Error::Mismatch("one lifetime per site is required".into()));
    }
    if !(factor > 0.0) {
        return invalid("interpolation factor must be positive");
    }
    if lifetimes.taus.iter().any(|&t| !(t > 0.0)) {
        return invalid("lifetimes must be positive");
    }
    let n = thermal.n_sites();
    let mut matrices = Vec::with_capacity(thermal.len());
    for (i, (mt, mc)) in thermal.matrices.iter().zip(&constructed.matrices).enumerate() {
        let t = i as f64 * thermal.dt;
        let pops: Vec<f64> = (0..n)
            .map(|k| {
                let w = interpolation_weight(t, lifetimes.taus[k], factor);
                w * mc[(k, k)].re + (1.0 - w) * mt[(k, k)].re
            })
            .collect();
        let total: f64 = pops.iter().sum();
        if !(total > 0.0) {
            return Err(Error::Numerical(format!("interpolated populations vanish at t = {t} fs")));
        }
        let mut m: DMatrix<Complex64> = mt.clone();
        for (k, p) in pops.iter().enumerate() {
            m[(k, k)] = Complex64::new(p / total, 0.0);
        }
        matrices.push(m);
    }
    let mut out = EnsembleDensitySeries::new(thermal.dt, matrices, AveragingTag::Interpolated)?;
    out.coherences_valid = false;
    out.lifetimes = Some(lifetimes.clone());
    Ok(out)
}
