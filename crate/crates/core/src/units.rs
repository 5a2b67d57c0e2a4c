//! Physical constants in the crate's internal unit system.
//!
//! Energies and angular frequencies are in cm⁻¹, times in fs, temperatures
//! in K. A phase accumulated by an energy `E` over a time `t` is `E * t / HBAR`.

/// Reduced Planck constant in cm⁻¹·fs.
pub const HBAR: f64 = 5308.8;

/// Boltzmann constant in cm⁻¹/K.
pub const KB: f64 = 0.695035;

/// Conversion factor eV → cm⁻¹.
pub const EV_TO_CM1: f64 = 8065.544;

/// Factor converting this crate's J(ω) to the Caldeira-Leggett convention,
/// `J_CL = CALDEIRA_LEGGETT_FACTOR * J` (in units with ħ = 1).
pub const CALDEIRA_LEGGETT_FACTOR: f64 = std::f64::consts::PI;

/// Thermal energy k_B·T in cm⁻¹.
#[inline]
pub fn thermal_energy(temperature: f64) -> f64 {
    KB * temperature
}

/// Converts a decay time τ (fs) into an energy width ħ/τ (cm⁻¹).
#[inline]
pub fn width_from_time(tau_fs: f64) -> f64 {
    HBAR / tau_fs
}

/// Nyquist angular frequency (cm⁻¹) for a sampling step in fs.
#[inline]
pub fn nyquist(dt_fs: f64) -> f64 {
    std::f64::consts::PI * HBAR / dt_fs
}
