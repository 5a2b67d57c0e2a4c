//! Linear absorption from the dipole response function and population
//! extraction.
//!
//! σ(t) = Σ_mn (d_m·d_n) U_mn(t, 0); the spectrum is the real part of its
//! Fourier transform taken with e^{+iωt/ħ}, so a site at energy E gives a
//! peak at ω = +E.

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::averaging::EnsembleDensitySeries;
use crate::error::{invalid, Error, Result};
use crate::fft;
use crate::nise::{propagate_states, Correction, NoiseSource, PropagatorSeries, SystemHamiltonian};
use crate::parallel::{chunked_reduce, DEFAULT_CHUNK};
use crate::units::HBAR;

/// Transition dipole vectors, one per site.
#[derive(Debug, Clone, PartialEq)]
pub struct DipoleSet {
    vectors: Vec<[f64; 3]>,
}

impl DipoleSet {
    pub fn new(vectors: Vec<[f64; 3]>) -> Result<Self> {
        if vectors.is_empty() {
            return invalid("dipole set is empty");
        }
        if vectors.iter().flatten().any(|v| !v.is_finite()) {
            return invalid("dipoles must be finite");
        }
        Ok(Self { vectors })
    }

    /// Unit dipoles along one axis on every site.
    pub fn parallel(n_sites: usize) -> Result<Self> {
        Self::new(vec![[1.0, 0.0, 0.0]; n_sites])
    }

    pub fn len(&self) -> usize {
        self.vectors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vectors.is_empty()
    }

    pub fn vectors(&self) -> &[[f64; 3]] {
        &self.vectors
    }

    pub fn is_zero(&self) -> bool {
        self.vectors.iter().flatten().all(|&v| v == 0.0)
    }

    /// d_m·d_n.
    pub fn overlap_matrix(&self) -> DMatrix<f64> {
        let n = self.len();
        DMatrix::from_fn(n, n, |m, k| {
            let (a, b) = (self.vectors[m], self.vectors[k]);
            a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
        })
    }
}

fn response(u: &DMatrix<Complex64>, d: &DMatrix<f64>) -> Complex64 {
    u.iter().zip(d.iter()).map(|(z, &w)| z * w).sum()
}

/// σ(t_i) of one propagator series.
pub fn sigma_t(series: &PropagatorSeries, dipoles: &DipoleSet) -> Result<Vec<Complex64>> {
    let d = dipoles.overlap_matrix();
    if series.matrices.iter().any(|u| u.shape() != d.shape()) {
        return Err(Error::Mismatch("dipoles do not match the propagator dimension".into()));
    }
    Ok(series.matrices.iter().map(|u| response(u, &d)).collect())
}

/// Realization-averaged σ(t_i), streamed over `source`.
pub fn ensemble_sigma(
    hamiltonian: &SystemHamiltonian,
    source: &(impl NoiseSource + ?Sized),
    correction: &dyn Correction,
    n_steps: usize,
    dipoles: &DipoleSet,
) -> Result<Vec<Complex64>> {
    let n = hamiltonian.n_sites();
    if dipoles.len() != n {
        return Err(Error::Mismatch(format!("{} dipoles for {n} sites", dipoles.len())));
    }
    let d = dipoles.overlap_matrix();
    let count = source.count();
    let identity = DMatrix::<Complex64>::identity(n, n);
    let sums = chunked_reduce(
        count,
        DEFAULT_CHUNK,
        || vec![Complex64::new(0.0, 0.0); n_steps + 1],
        |acc, r| {
            let noise = source.realization(r)?;
            propagate_states(hamiltonian, &noise, correction, n_steps, &identity, |i, u| {
                acc[i] += response(u, &d)
            })?;
            Ok(())
        },
        |a, b| {
            for (x, y) in a.iter_mut().zip(b) {
                *x += y;
            }
        },
    )?;
    Ok(sums.into_iter().map(|z| z / count as f64).collect())
}

/// Intensity on a uniform, ascending frequency grid.
#[derive(Debug, Clone, PartialEq)]
pub struct AbsorptionSpectrum {
    pub omega: Vec<f64>,
    pub intensity: Vec<f64>,
    /// Frequency shift already added to `omega` (cm⁻¹).
    pub shift: f64,
    pub normalized: bool,
    /// Largest |Im| of the transform relative to the peak.
    pub imaginary_residue: f64,
}

impl AbsorptionSpectrum {
    pub fn spacing(&self) -> f64 {
        self.omega[1] - self.omega[0]
    }

    /// Grid point of maximum intensity.
    pub fn peak_position(&self) -> f64 {
        let k = self
            .intensity
            .iter()
            .enumerate()
            .max_by(|a, b| a.1.total_cmp(b.1))
            .map(|(k, _)| k)
            .unwrap_or(0);
        self.omega[k]
    }

    pub fn peak(&self) -> f64 {
        self.intensity.iter().fold(f64::NEG_INFINITY, |a, &b| a.max(b))
    }
}

/// Real part of the Fourier transform of σ(t), extended to negative times by
/// σ(−t) = σ(t)*. `apodize` multiplies σ by a raised-cosine window.
pub fn absorption_spectrum(sigma: &[Complex64], dt: f64, apodize: bool) -> Result<AbsorptionSpectrum> {
    let len = sigma.len();
    if len < 4 {
        return invalid("absorption needs at least 4 time points");
    }
    if !(dt > 0.0) {
        return invalid("time step must be positive");
    }
    if sigma.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
        return Err(Error::Numerical("non-finite response function".into()));
    }
    let window = |i: usize| {
        if apodize {
            0.5 * (1.0 + (std::f64::consts::PI * i as f64 / (len - 1) as f64).cos())
        } else {
            1.0
        }
    };
    let m = 2 * len - 1;
    let mut full = vec![Complex64::new(0.0, 0.0); m];
    for i in 0..len {
        let v = sigma[i] * window(i);
        full[i] = v;
        if i > 0 {
            full[m - i] = v.conj();
        }
    }
    // Σ_j s_j e^{+2πijk/m}: the unnormalized inverse transform
    let mut spec = full;
    fft::inverse(&mut spec);
    for z in spec.iter_mut() {
        *z *= (m as f64) * dt;
    }
    let mut order: Vec<usize> = (0..m).collect();
    order.sort_by_key(|&k| fft::signed_index(k, m));
    let d_omega = 2.0 * std::f64::consts::PI * HBAR / (m as f64 * dt);
    let omega: Vec<f64> = order.iter().map(|&k| fft::signed_index(k, m) as f64 * d_omega).collect();
    let intensity: Vec<f64> = order.iter().map(|&k| spec[k].re).collect();
    let peak = intensity.iter().fold(0.0_f64, |a, &b| a.max(b.abs()));
    let imag = order.iter().fold(0.0_f64, |a, &k| a.max(spec[k].im.abs()));
    Ok(AbsorptionSpectrum {
        omega,
        intensity,
        shift: 0.0,
        normalized: false,
        imaginary_residue: if peak > 0.0 { imag / peak } else { 0.0 },
    })
}

/// Scales the maximum intensity to one.
pub fn normalize_peak(spectrum: &AbsorptionSpectrum) -> Result<AbsorptionSpectrum> {
    let peak = spectrum.peak();
    if !(peak > 0.0) {
        return Err(Error::Numerical("spectrum has no positive peak to normalize".into()));
    }
    Ok(AbsorptionSpectrum {
        intensity: spectrum.intensity.iter().map(|v| v / peak).collect(),
        normalized: true,
        ..spectrum.clone()
    })
}

/// Adds `shift` to every frequency and records it.
pub fn apply_shift(spectrum: &AbsorptionSpectrum, shift: f64) -> AbsorptionSpectrum {
    AbsorptionSpectrum {
        omega: spectrum.omega.iter().map(|w| w + shift).collect(),
        shift: spectrum.shift + shift,
        ..spectrum.clone()
    }
}

/// Integer-bin shift s (cm⁻¹) maximizing Σ S(ω − s)·R(ω) over reference
/// points with ω in `range`; |s| is limited to `max_shift`.
pub fn align_shift(
    spectrum: &AbsorptionSpectrum,
    reference: &AbsorptionSpectrum,
    range: (f64, f64),
    max_shift: f64,
) -> Result<f64> {
    if spectrum.omega.len() < 2 || reference.omega.len() < 2 {
        return invalid("spectra need at least two points");
    }
    let step = spectrum.spacing();
    if (reference.spacing() - step).abs() > 1e-9 * step {
        return Err(Error::Mismatch("spectra must share the frequency spacing".into()));
    }
    let offset = (reference.omega[0] - spectrum.omega[0]) / step;
    if (offset - offset.round()).abs() > 1e-6 {
        return Err(Error::Mismatch("spectrum grids are not aligned to whole bins".into()));
    }
    let offset = offset.round() as i64;
    let points: Vec<usize> = (0..reference.omega.len())
        .filter(|&k| reference.omega[k] >= range.0 && reference.omega[k] <= range.1)
        .collect();
    if points.is_empty() {
        return invalid("alignment range contains no reference points");
    }
    let max_bins = (max_shift / step).floor().max(0.0) as i64;
    let mut best: Option<(f64, i64)> = None;
    for j in -max_bins..=max_bins {
        let mut score = 0.0;
        let mut overlap = 0;
        for &k in &points {
            let idx = k as i64 + offset + j;
            if idx >= 0 && (idx as usize) < spectrum.intensity.len() {
                score += spectrum.intensity[idx as usize] * reference.intensity[k];
                overlap += 1;
            }
        }
        if overlap == 0 {
            continue;
        }
        let better = match best {
            None => true,
            Some((s, bj)) => score > s || (score == s && j.abs() < bj.abs()),
        };
        if better {
            best = Some((score, j));
        }
    }
    match best {
        Some((_, j)) => Ok(-(j as f64) * step),
        None => invalid("spectra do not overlap"),
    }
}

/// Site populations `[i][n]` of a density series.
pub fn populations(series: &EnsembleDensitySeries) -> Vec<Vec<f64>> {
    series.populations()
}

/// Sum of the populations of `sites` (zero-based) at every time point.
pub fn summed_populations(series: &EnsembleDensitySeries, sites: &[usize]) -> Result<Vec<f64>> {
    if sites.iter().any(|&s| s >= series.n_sites()) {
        return invalid("site index out of range");
    }
    Ok(series
        .populations()
        .iter()
        .map(|p| sites.iter().map(|&s| p[s]).sum())
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::nise::{propagate_realization, Nise};
    use crate::noise::NoiseTrajectory;

    fn single_site(e: f64, steps: usize) -> Vec<Complex64> {
        let h = SystemHamiltonian::diagonal(&[e]).unwrap();
        let noise = NoiseTrajectory::zeros(1.0, 1, steps + 1).unwrap();
        let u = propagate_realization(&h, &noise, &Nise, steps).unwrap();
        sigma_t(&u, &DipoleSet::new(vec![[0.0, 1.0, 0.0]]).unwrap()).unwrap()
    }

    #[test]
    fn single_site_response_and_peak() {
        let e = 430.0;
        let sigma = single_site(e, 1023);
        for (i, z) in sigma.iter().enumerate() {
            assert!((z - Complex64::from_polar(1.0, -e * i as f64 / HBAR)).norm() < 1e-10);
        }
        let spec = absorption_spectrum(&sigma, 1.0, false).unwrap();
        assert!((spec.peak_position() - e).abs() <= spec.spacing());
        assert!(spec.imaginary_residue < 1e-10);
        let windowed = absorption_spectrum(&sigma, 1.0, true).unwrap();
        assert!((windowed.peak_position() - e).abs() <= windowed.spacing());
    }

    #[test]
    fn response_at_zero_is_total_dipole() {
        let h = SystemHamiltonian::from_parts(&[0.0, 100.0], &[(0, 1, 20.0)]).unwrap();
        let noise = NoiseTrajectory::zeros(1.0, 2, 3).unwrap();
        let u = propagate_realization(&h, &noise, &Nise, 2).unwrap();
        let d = DipoleSet::new(vec![[1.0, 2.0, 0.0], [0.5, -1.0, 3.0]]).unwrap();
        let s = sigma_t(&u, &d).unwrap();
        // U(0) = I leaves Σ_n |d_n|²
        assert!((s[0].re - (5.0 + 10.25)).abs() < 1e-12 && s[0].im.abs() < 1e-15);
        let zero = DipoleSet::new(vec![[0.0; 3]; 2]).unwrap();
        assert!(zero.is_zero());
        assert!(sigma_t(&u, &zero).unwrap().iter().all(|z| z.norm() == 0.0));
    }

    #[test]
    fn symmetric_dimer_bright_state() {
        let v = 120.0;
        let h = SystemHamiltonian::from_parts(&[0.0, 0.0], &[(0, 1, v)]).unwrap();
        let noise = NoiseTrajectory::zeros(1.0, 2, 2048).unwrap();
        let u = propagate_realization(&h, &noise, &Nise, 2047).unwrap();
        let s = sigma_t(&u, &DipoleSet::parallel(2).unwrap()).unwrap();
        let spec = absorption_spectrum(&s, 1.0, false).unwrap();
        assert!((spec.peak_position() - v).abs() <= spec.spacing());
    }

    #[test]
    fn normalization_and_alignment() {
        let sigma = single_site(300.0, 511);
        let spec = absorption_spectrum(&sigma, 2.0, false).unwrap();
        let n = normalize_peak(&spec).unwrap();
        assert!((n.peak() - 1.0).abs() < 1e-15);
        assert_eq!(normalize_peak(&n).unwrap().intensity, n.intensity);
        let scaled = AbsorptionSpectrum {
            intensity: spec.intensity.iter().map(|v| v * 7.5).collect(),
            ..spec.clone()
        };
        let ns = normalize_peak(&scaled).unwrap();
        assert!(ns.intensity.iter().zip(&n.intensity).all(|(a, b)| (a - b).abs() < 1e-14));

        let range = (0.0, 800.0);
        assert_eq!(align_shift(&spec, &spec, range, 200.0).unwrap(), 0.0);
        let k = 4;
        let mut moved = spec.clone();
        moved.intensity.rotate_right(k);
        let s = align_shift(&moved, &spec, range, 200.0).unwrap();
        assert!((s + k as f64 * spec.spacing()).abs() < 1e-9);
        let fixed = apply_shift(&moved, s);
        assert!((fixed.peak_position() - spec.peak_position()).abs() < 1e-9);
        assert_eq!(fixed.shift, s);
        let zero = AbsorptionSpectrum {
            intensity: vec![0.0; spec.intensity.len()],
            ..spec
        };
        assert!(normalize_peak(&zero).is_err());
    }

    #[test]
    fn too_short() {
        assert!(absorption_spectrum(&[Complex64::new(1.0, 0.0); 3], 1.0, false).is_err());
    }
}
