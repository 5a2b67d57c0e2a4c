//! Estimation of bath autocorrelation functions and spectral densities from
//! noise trajectories, and the transforms, damping, resampling and error
//! metrics used along the way.

mod autocorrelation;
mod cutoff;
mod damping;
mod mae;
mod resample;
mod transform;

pub use autocorrelation::{autocorrelation, average_autocorrelations, AutocorrelationSeries, CorrelationSource};
pub use cutoff::{suggest_cutoff, CutoffEstimate, CutoffOptions};
pub use damping::{apply_damping, damping_registry, Damping, DampingSpec};
pub use mae::{mae_c, mae_sd, DEFAULT_MAE_WINDOW_FS};
pub use resample::{resample, resample_series, ResampleOptions};
pub use transform::{autocorrelation_from_sd, sd_from_autocorrelation, SpectralCurve};
