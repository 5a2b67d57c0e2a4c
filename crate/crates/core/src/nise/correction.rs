use nalgebra::{DMatrix, DVector};

use super::hamiltonian::EigenFrame;
use crate::error::{invalid, Error, Result};
use crate::registry::Registry;
use crate::units::thermal_energy;

/// Diagonal overlaps below this magnitude mark a step where the eigenbasis
/// rotated too far to be followed reliably.
pub const WEAK_OVERLAP: f64 = 0.5;

/// Overlap of consecutive eigenframes, S = W(t+Δt)ᵀ W(t).
///
/// The columns of `next` are flipped in place so that every diagonal element
/// of S is nonnegative. Returns S and whether any |S_αα| < 0.5.
pub fn nonadiabatic_s(current: &EigenFrame, next: &mut EigenFrame) -> Result<(DMatrix<f64>, bool)> {
    if current.vectors.shape() != next.vectors.shape() {
        return Err(Error::Mismatch("eigenframes differ in dimension".into()));
    }
    let n = current.vectors.ncols();
    for a in 0..n {
        let overlap = next.vectors.column(a).dot(&current.vectors.column(a));
        if overlap < 0.0 {
            let flipped = -next.vectors.column(a);
            next.vectors.set_column(a, &flipped);
        }
    }
    let s = next.vectors.transpose() * &current.vectors;
    let weak = (0..n).any(|a| s[(a, a)].abs() < WEAK_OVERLAP);
    Ok((s, weak))
}

/// Scales the entry coupling source eigenstate β to destination α by
/// exp((ε_β − ε_α)/(4k_BT)); transfer downhill in energy is enhanced.
pub fn thermal_factor(s: &DMatrix<f64>, energies: &DVector<f64>, temperature: f64) -> Result<DMatrix<f64>> {
    if !(temperature > 0.0) {
        return invalid("temperature must be positive");
    }
    if s.nrows() != energies.len() || !s.is_square() {
        return Err(Error::Mismatch("S and eigenvalues differ in dimension".into()));
    }
    let four_kt = 4.0 * thermal_energy(temperature);
    Ok(DMatrix::from_fn(s.nrows(), s.ncols(), |a, b| {
        if a == b {
            s[(a, b)]
        } else {
            s[(a, b)] * ((energies[b] - energies[a]) / four_kt).exp()
        }
    }))
}

/// Modification of the non-adiabatic coupling matrix applied at each step.
pub trait Correction: Send + Sync {
    fn name(&self) -> &'static str;

    /// Matrix applied to eigenbasis amplitudes after the phase step.
    fn transfer(&self, s: &DMatrix<f64>, energies: &DVector<f64>) -> Result<DMatrix<f64>>;

    /// Whether states are renormalized after every step.
    fn renormalizes(&self) -> bool;
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CorrectionParams {
    pub temperature: f64,
}

/// Plain NISE: S is used unchanged.
#[derive(Debug, Clone, Copy)]
pub struct Nise;

impl Correction for Nise {
    fn name(&self) -> &'static str {
        "nise"
    }

    fn transfer(&self, s: &DMatrix<f64>, _energies: &DVector<f64>) -> Result<DMatrix<f64>> {
        Ok(s.clone())
    }

    fn renormalizes(&self) -> bool {
        false
    }
}

/// Thermalized NISE with per-step renormalization.
#[derive(Debug, Clone, Copy)]
pub struct Tnise {
    pub temperature: f64,
}

impl Correction for Tnise {
    fn name(&self) -> &'static str {
        "tnise"
    }

    fn transfer(&self, s: &DMatrix<f64>, energies: &DVector<f64>) -> Result<DMatrix<f64>> {
        thermal_factor(s, energies, self.temperature)
    }

    fn renormalizes(&self) -> bool {
        true
    }
}

pub fn correction_registry() -> Registry<dyn Correction, CorrectionParams> {
    let mut reg: Registry<dyn Correction, CorrectionParams> = Registry::new("coupling correction");
    reg.register("nise", |_| Ok(Box::new(Nise))).register("tnise", |p| {
        if !(p.temperature > 0.0) {
            return invalid("TNISE needs a positive temperature");
        }
        Ok(Box::new(Tnise {
            temperature: p.temperature,
        }))
    });
    reg
}
