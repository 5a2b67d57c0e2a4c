use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use super::correction::{nonadiabatic_s, Correction};
use super::hamiltonian::{eigh, EigenFrame, SystemHamiltonian};
use crate::error::{invalid, Error, Result};
use crate::noise::NoiseTrajectory;
use crate::units::HBAR;

/// Multiplies eigenbasis amplitudes by exp(−iε_αΔt/ħ).
pub fn nise_step(psi: &DVector<Complex64>, frame: &EigenFrame, dt: f64) -> Result<DVector<Complex64>> {
    if psi.len() != frame.energies.len() {
        return Err(Error::Mismatch("state and eigenframe differ in dimension".into()));
    }
    Ok(DVector::from_fn(psi.len(), |k, _| {
        psi[k] * Complex64::from_polar(1.0, -frame.energies[k] * dt / HBAR)
    }))
}

fn to_complex(m: &DMatrix<f64>) -> DMatrix<Complex64> {
    m.map(|v| Complex64::new(v, 0.0))
}

/// Counters collected while stepping.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct StepStats {
    /// Steps where some |S_αα| fell below 0.5.
    pub weak_overlap_steps: usize,
    /// Steps where such a weak overlap met a near-degenerate pair of levels.
    pub degenerate_crossings: usize,
}

/// Propagates the columns of `initial` (site basis) through `n_steps` steps
/// of the noise, calling `observe(i, states)` at every time point including
/// t = 0. The Hamiltonian is constant within each step.
pub fn propagate_states(
    hamiltonian: &SystemHamiltonian,
    noise: &NoiseTrajectory,
    correction: &dyn Correction,
    n_steps: usize,
    initial: &DMatrix<Complex64>,
    mut observe: impl FnMut(usize, &DMatrix<Complex64>),
) -> Result<StepStats> {
    let n = hamiltonian.n_sites();
    if noise.n_sites() != n {
        return Err(Error::Mismatch(format!(
            "noise has {} sites, Hamiltonian has {n}",
            noise.n_sites()
        )));
    }
    if initial.nrows() != n {
        return Err(Error::Mismatch("initial states do not match the Hamiltonian".into()));
    }
    if noise.len() < n_steps + 1 {
        return Err(Error::Mismatch(format!(
            "{n_steps} steps need {} noise samples, got {}",
            n_steps + 1,
            noise.len()
        )));
    }
    let dt = noise.dt();
    let frame_at = |i: usize| -> Result<EigenFrame> {
        let delta: Vec<f64> = noise.at(i).collect();
        if delta.iter().any(|v| !v.is_finite()) {
            return Err(Error::Numerical(format!("non-finite noise at step {i}")));
        }
        eigh(&hamiltonian.with_fluctuations(&delta)?)
    };

    let mut stats = StepStats::default();
    let mut frame = frame_at(0)?;
    let mut amplitudes = to_complex(&frame.vectors.transpose()) * initial;
    observe(0, initial);
    for i in 0..n_steps {
        for (a, mut row) in amplitudes.row_iter_mut().enumerate() {
            row *= Complex64::from_polar(1.0, -frame.energies[a] * dt / HBAR);
        }
        let mut next = frame_at(i + 1)?;
        let (s, weak) = nonadiabatic_s(&frame, &mut next)?;
        if weak {
            stats.weak_overlap_steps += 1;
            let close = frame.energies.as_slice().windows(2).any(|w| (w[1] - w[0]).abs() < 1e-6);
            if close {
                stats.degenerate_crossings += 1;
            }
        }
        let transfer = correction.transfer(&s, &frame.energies)?;
        amplitudes = to_complex(&transfer) * amplitudes;
        if correction.renormalizes() {
            for mut col in amplitudes.column_iter_mut() {
                let norm = col.norm();
                if norm > 0.0 {
                    col /= Complex64::new(norm, 0.0);
                }
            }
        }
        frame = next;
        let states = to_complex(&frame.vectors) * &amplitudes;
        observe(i + 1, &states);
    }
    if stats.degenerate_crossings > 0 {
        log::warn!(
            "{} steps with strong eigenbasis rotation at near-degenerate levels",
            stats.degenerate_crossings
        );
    }
    Ok(stats)
}

/// U(t_i, 0) for every time point of one realization.
#[derive(Debug, Clone, PartialEq)]
pub struct PropagatorSeries {
    pub dt: f64,
    pub mode: &'static str,
    pub matrices: Vec<DMatrix<Complex64>>,
    pub stats: StepStats,
}

impl PropagatorSeries {
    pub fn len(&self) -> usize {
        self.matrices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.matrices.is_empty()
    }

    pub fn times(&self) -> Vec<f64> {
        (0..self.len()).map(|i| i as f64 * self.dt).collect()
    }
}

/// Full propagator of one realization. In renormalizing modes every column
/// (the state started on one site) is kept at unit norm.
pub fn propagate_realization(
    hamiltonian: &SystemHamiltonian,
    noise: &NoiseTrajectory,
    correction: &dyn Correction,
    n_steps: usize,
) -> Result<PropagatorSeries> {
    let n = hamiltonian.n_sites();
    let mut matrices = Vec::with_capacity(n_steps + 1);
    let stats = propagate_states(hamiltonian, noise, correction, n_steps, &DMatrix::identity(n, n), |_, u| {
        matrices.push(u.clone())
    })?;
    Ok(PropagatorSeries {
        dt: noise.dt(),
        mode: correction.name(),
        matrices,
        stats,
    })
}

/// ψ(t_i) for one realization starting from `psi0`.
pub fn propagate_wavefunction(
    hamiltonian: &SystemHamiltonian,
    noise: &NoiseTrajectory,
    correction: &dyn Correction,
    n_steps: usize,
    psi0: &DVector<Complex64>,
) -> Result<Vec<DVector<Complex64>>> {
    let norm = psi0.norm();
    if !(norm > 0.0) || !norm.is_finite() {
        return invalid("initial state must be nonzero and finite");
    }
    let start = DMatrix::from_column_slice(psi0.len(), 1, (psi0 / Complex64::new(norm, 0.0)).as_slice());
    let mut out = Vec::with_capacity(n_steps + 1);
    propagate_states(hamiltonian, noise, correction, n_steps, &start, |_, s| out.push(s.column(0).into_owned()))?;
    Ok(out)
}

/// Site basis vector |n⟩.
pub fn site_state(n_sites: usize, site: usize) -> Result<DVector<Complex64>> {
    if site >= n_sites {
        return invalid(format!("site {} outside 1..={n_sites}", site + 1));
    }
    let mut v = DVector::zeros(n_sites);
    v[site] = Complex64::new(1.0, 0.0);
    Ok(v)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::nise::correction::{Nise, Tnise};

    fn dimer(e1: f64, e2: f64, v: f64) -> SystemHamiltonian {
        SystemHamiltonian::from_parts(&[e1, e2], &[(0, 1, v)]).unwrap()
    }

    #[test]
    fn single_site_phase() {
        let h = SystemHamiltonian::diagonal(&[250.0]).unwrap();
        let noise = NoiseTrajectory::zeros(1.0, 1, 11).unwrap();
        let u = propagate_realization(&h, &noise, &Nise, 10).unwrap();
        let expect = Complex64::from_polar(1.0, -250.0 * 10.0 / HBAR);
        assert!((u.matrices[10][(0, 0)] - expect).norm() < 1e-12);
        let frame = eigh(h.matrix()).unwrap();
        let psi = DVector::from_element(1, Complex64::new(1.0, 0.0));
        assert_eq!(nise_step(&psi, &frame, 0.0).unwrap(), psi);
    }

    #[test]
    fn uncoupled_sites_keep_populations() {
        let h = SystemHamiltonian::diagonal(&[0.0, 100.0, -50.0]).unwrap();
        let noise = NoiseTrajectory::zeros(2.0, 3, 101).unwrap();
        let u = propagate_realization(&h, &noise, &Nise, 100).unwrap();
        for m in &u.matrices {
            for i in 0..3 {
                for j in 0..3 {
                    assert_eq!(m[(i, j)].norm() > 0.5, i == j);
                }
            }
        }
    }

    #[test]
    fn resonant_rabi_oscillation() {
        let v = 100.0;
        let h = dimer(0.0, 0.0, v);
        let noise = NoiseTrajectory::zeros(1.0, 2, 1001).unwrap();
        let psi = propagate_wavefunction(&h, &noise, &Nise, 1000, &site_state(2, 0).unwrap()).unwrap();
        for (i, p) in psi.iter().enumerate() {
            let t = i as f64;
            assert!((p[1].norm_sqr() - (v * t / HBAR).sin().powi(2)).abs() < 1e-10);
        }
    }

    #[test]
    fn nise_is_unitary_with_noise() {
        let h = dimer(-100.0, 0.0, 80.0);
        let sites = (0..2)
            .map(|s| (0..301).map(|i| 60.0 * ((i as f64) * 0.07 + s as f64).sin()).collect())
            .collect();
        let noise = NoiseTrajectory::new(1.0, sites).unwrap();
        let u = propagate_realization(&h, &noise, &Nise, 300).unwrap();
        for m in &u.matrices {
            let dev = m.adjoint() * m - DMatrix::<Complex64>::identity(2, 2);
            assert!(dev.iter().all(|z| z.norm() < 1e-8));
        }
        assert_eq!(u.stats.weak_overlap_steps, 0);

        let t = propagate_realization(&h, &noise, &Tnise { temperature: 300.0 }, 300).unwrap();
        for m in &t.matrices {
            for col in m.column_iter() {
                assert!((col.norm() - 1.0).abs() < 1e-8);
            }
        }
    }

    #[test]
    fn rejects_bad_noise() {
        let h = dimer(0.0, 0.0, 10.0);
        let short = NoiseTrajectory::zeros(1.0, 2, 5).unwrap();
        assert!(propagate_realization(&h, &short, &Nise, 10).is_err());
        let wrong = NoiseTrajectory::zeros(1.0, 3, 50).unwrap();
        assert!(propagate_realization(&h, &wrong, &Nise, 10).is_err());
        let nan = NoiseTrajectory::new(1.0, vec![vec![0.0, f64::NAN, 0.0], vec![0.0; 3]]);
        if let Ok(nan) = nan {
            assert!(propagate_realization(&h, &nan, &Nise, 2).is_err());
        }
    }
}
