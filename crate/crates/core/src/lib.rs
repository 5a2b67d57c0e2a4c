//! Structured bath noise, spectral density estimation and ensemble-averaged
//! exciton dynamics.
//!
//! Units are fixed throughout: energies and angular frequencies in cm⁻¹,
//! times in fs, temperatures in K (see [`units`]).

pub mod averaging;
pub mod bath;
pub mod error;
pub mod fft;
pub mod io;
pub mod nise;
pub mod noise;
pub mod observables;
pub mod parallel;
pub mod presets;
pub mod quad;
pub mod registry;
pub mod spectral;
pub mod superres;
pub mod units;

pub use error::{Error, Result};
pub use noise::{NoiseTrajectory, PowerSpectrum};
pub use spectral::{DrudeLorentzPeak, SpectralDensity};

pub const VERSION: &str = env!("CARGO_PKG_VERSION");
