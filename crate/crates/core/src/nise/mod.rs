//! Numerical integration of the Schrödinger equation with fluctuating site
//! energies (NISE) and its thermalized variant (TNISE).
//!
//! Each step diagonalizes H + diag(ΔE(t)), advances the eigenbasis amplitudes
//! by their phases, and carries them into the next eigenbasis with the
//! overlap matrix S, optionally modified by a [`Correction`].

mod correction;
mod ensemble;
mod hamiltonian;
mod propagate;

pub use correction::{
    correction_registry, nonadiabatic_s, thermal_factor, Correction, CorrectionParams, Nise, Tnise, WEAK_OVERLAP,
};
pub use ensemble::{ensemble_density, run_ensemble, EnsembleRun, GeneratedNoise, NoiseSource};
pub use hamiltonian::{boltzmann_density, eigh, EigenFrame, SystemHamiltonian};
pub use propagate::{
    nise_step, propagate_realization, propagate_states, propagate_wavefunction, site_state, PropagatorSeries,
    StepStats,
};
