use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use super::correction::Correction;
use super::hamiltonian::SystemHamiltonian;
use super::propagate::{propagate_states, PropagatorSeries, StepStats};
use crate::averaging::{AveragingTag, EnsembleDensitySeries};
use crate::error::{invalid, Error, Result};
use crate::noise::{NoiseTrajectory, SiteNoiseGenerator};
use crate::parallel::{chunked_reduce, DEFAULT_CHUNK};

/// Supplies the noise of realization `r`.
pub trait NoiseSource: Sync {
    fn count(&self) -> usize;
    fn realization(&self, r: usize) -> Result<NoiseTrajectory>;
}

/// Realizations generated on demand from one ensemble seed.
pub struct GeneratedNoise<'a> {
    pub generator: &'a SiteNoiseGenerator,
    pub seed: u64,
    pub count: usize,
}

impl NoiseSource for GeneratedNoise<'_> {
    fn count(&self) -> usize {
        self.count
    }

    fn realization(&self, r: usize) -> Result<NoiseTrajectory> {
        Ok(self.generator.realization(self.seed, r as u64))
    }
}

/// Precomputed trajectories, e.g. overlapping windows of one long run.
impl NoiseSource for [NoiseTrajectory] {
    fn count(&self) -> usize {
        self.len()
    }

    fn realization(&self, r: usize) -> Result<NoiseTrajectory> {
        self.get(r)
            .cloned()
            .ok_or_else(|| Error::InvalidInput(format!("no noise realization {r}")))
    }
}

/// Realization sums of |ψ⟩⟨ψ| per time point.
#[derive(Debug, Clone, PartialEq)]
pub struct EnsembleRun {
    pub dt: f64,
    pub count: usize,
    pub mode: &'static str,
    /// Σ_α |ψ^α(t_i)⟩⟨ψ^α(t_i)| under the chosen correction.
    pub sums: Vec<DMatrix<Complex64>>,
    /// The same sums under plain NISE, when requested.
    pub reference_sums: Option<Vec<DMatrix<Complex64>>>,
    pub stats: StepStats,
}

impl EnsembleRun {
    fn mean_of(&self, sums: &[DMatrix<Complex64>]) -> Result<EnsembleDensitySeries> {
        let scale = Complex64::new(1.0 / self.count as f64, 0.0);
        let matrices = sums
            .iter()
            .map(|s| {
                let m = s * scale;
                (&m + m.adjoint()) * Complex64::new(0.5, 0.0)
            })
            .collect();
        EnsembleDensitySeries::new(self.dt, matrices, AveragingTag::Plain)
    }

    /// Arithmetic mean under the chosen correction.
    pub fn plain(&self) -> Result<EnsembleDensitySeries> {
        self.mean_of(&self.sums)
    }

    /// Arithmetic mean under plain NISE.
    pub fn reference(&self) -> Result<EnsembleDensitySeries> {
        match &self.reference_sums {
            Some(s) => self.mean_of(s),
            None => invalid("ensemble was run without a NISE reference"),
        }
    }
}

struct Accumulator {
    sums: Vec<DMatrix<Complex64>>,
    reference: Option<Vec<DMatrix<Complex64>>>,
    stats: StepStats,
}

fn add_projectors(into: &mut [DMatrix<Complex64>], i: usize, states: &DMatrix<Complex64>) {
    let psi = states.column(0);
    into[i] += &psi * psi.adjoint();
}

fn merge_sums(a: &mut [DMatrix<Complex64>], b: Vec<DMatrix<Complex64>>) {
    for (x, y) in a.iter_mut().zip(b) {
        *x += y;
    }
}

/// Propagates `psi0` through every realization of `source` and sums the
/// projectors. With `with_reference`, each realization is also propagated
/// with plain NISE on the same noise.
pub fn run_ensemble(
    hamiltonian: &SystemHamiltonian,
    source: &(impl NoiseSource + ?Sized),
    correction: &dyn Correction,
    with_reference: bool,
    n_steps: usize,
    psi0: &DVector<Complex64>,
) -> Result<EnsembleRun> {
    let n = hamiltonian.n_sites();
    if psi0.len() != n {
        return Err(Error::Mismatch("initial state does not match the Hamiltonian".into()));
    }
    let norm = psi0.norm();
    if !(norm > 0.0) {
        return invalid("initial state must be nonzero");
    }
    let start = DMatrix::from_column_slice(n, 1, (psi0 / Complex64::new(norm, 0.0)).as_slice());
    let count = source.count();
    if count == 0 {
        return invalid("ensemble needs at least one realization");
    }
    let dt = source.realization(0)?.dt();
    let nise = super::correction::Nise;
    let zeros = || vec![DMatrix::<Complex64>::zeros(n, n); n_steps + 1];

    let acc = chunked_reduce(
        count,
        DEFAULT_CHUNK,
        || Accumulator {
            sums: zeros(),
            reference: with_reference.then(zeros),
            stats: StepStats::default(),
        },
        |acc, r| {
            let noise = source.realization(r)?;
            if (noise.dt() - dt).abs() > 1e-12 * dt {
                return Err(Error::Mismatch(format!("realization {r} has a different time step")));
            }
            let s = propagate_states(hamiltonian, &noise, correction, n_steps, &start, |i, st| {
                add_projectors(&mut acc.sums, i, st)
            })?;
            acc.stats.weak_overlap_steps += s.weak_overlap_steps;
            acc.stats.degenerate_crossings += s.degenerate_crossings;
            if let Some(reference) = acc.reference.as_mut() {
                propagate_states(hamiltonian, &noise, &nise, n_steps, &start, |i, st| {
                    add_projectors(reference, i, st)
                })?;
            }
            Ok(())
        },
        |a, b| {
            merge_sums(&mut a.sums, b.sums);
            if let (Some(x), Some(y)) = (a.reference.as_mut(), b.reference) {
                merge_sums(x, y);
            }
            a.stats.weak_overlap_steps += b.stats.weak_overlap_steps;
            a.stats.degenerate_crossings += b.stats.degenerate_crossings;
        },
    )?;
    Ok(EnsembleRun {
        dt,
        count,
        mode: correction.name(),
        sums: acc.sums,
        reference_sums: acc.reference,
        stats: acc.stats,
    })
}

/// ρ(t) = ⟨U^α(t,0)|ψ₀⟩⟨ψ₀|U^α(t,0)†⟩ over precomputed propagators.
pub fn ensemble_density(series: &[PropagatorSeries], psi0: &DVector<Complex64>) -> Result<EnsembleDensitySeries> {
    let first = series.first().ok_or_else(|| Error::InvalidInput("no realizations".into()))?;
    let (len, n) = (first.len(), psi0.len());
    if series
        .iter()
        .any(|s| s.len() != len || s.matrices.iter().any(|m| m.nrows() != n) || (s.dt - first.dt).abs() > 0.0)
    {
        return Err(Error::Mismatch("propagator series differ in shape or step".into()));
    }
    let norm = psi0.norm();
    if !(norm > 0.0) {
        return invalid("initial state must be nonzero");
    }
    let psi0 = psi0 / Complex64::new(norm, 0.0);
    let sums = chunked_reduce(
        series.len(),
        DEFAULT_CHUNK,
        || vec![DMatrix::<Complex64>::zeros(n, n); len],
        |acc, r| {
            for (i, u) in series[r].matrices.iter().enumerate() {
                let psi = u * &psi0;
                let psi = if series[r].mode == "nise" {
                    psi
                } else {
                    let nn = psi.norm();
                    psi / Complex64::new(nn, 0.0)
                };
                acc[i] += &psi * psi.adjoint();
            }
            Ok(())
        },
        |a, b| merge_sums(a, b),
    )?;
    let run = EnsembleRun {
        dt: first.dt,
        count: series.len(),
        mode: first.mode,
        sums,
        reference_sums: None,
        stats: StepStats::default(),
    };
    run.plain()
}
