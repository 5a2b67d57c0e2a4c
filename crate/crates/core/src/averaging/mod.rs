//! Ensemble averaging of per-realization density matrices: the arithmetic
//! mean, the matrix-logarithm construction exp(⟨ln ρ^α⟩), and the
//! lifetime-weighted interpolation between the two.

mod construct;
mod lifetimes;
mod series;

pub use construct::{
    constructed_density, constructed_density_via_hamiltonians, constructed_from_pure_mean, density_log,
    hermitian_exp, DEFAULT_LOG_FLOOR,
};
pub use lifetimes::{fit_lifetimes, interpolated_populations, interpolation_weight, LifetimeSet};
pub use series::{check_density, AveragingTag, DensityCheck, EnsembleDensitySeries};

use crate::error::{invalid, Result};
use crate::nise::EnsembleRun;
use crate::registry::Registry;

/// Default adjustment factor in the interpolation weight.
pub const DEFAULT_INTERPOLATION_FACTOR: f64 = 5.0;

/// Turns the realization sums of an ensemble run into a density series.
pub trait Averaging: Send + Sync {
    fn name(&self) -> &'static str;

    /// Whether the run must also carry plain-NISE sums.
    fn needs_reference(&self) -> bool {
        false
    }

    fn average(&self, run: &EnsembleRun) -> Result<EnsembleDensitySeries>;
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AveragingParams {
    pub factor: f64,
    pub floor: f64,
}

impl Default for AveragingParams {
    fn default() -> Self {
        Self {
            factor: DEFAULT_INTERPOLATION_FACTOR,
            floor: DEFAULT_LOG_FLOOR,
        }
    }
}

pub struct Plain;

impl Averaging for Plain {
    fn name(&self) -> &'static str {
        "plain"
    }

    fn average(&self, run: &EnsembleRun) -> Result<EnsembleDensitySeries> {
        run.plain()
    }
}

/// Matrix-logarithm construction. Every realization is a normalized pure
/// state, so the mean logarithm follows from the plain mean.
pub struct Constructed {
    pub floor: f64,
}

impl Averaging for Constructed {
    fn name(&self) -> &'static str {
        "constructed"
    }

    fn average(&self, run: &EnsembleRun) -> Result<EnsembleDensitySeries> {
        let plain = run.plain()?;
        let matrices = plain
            .matrices
            .iter()
            .map(|m| constructed_from_pure_mean(m, self.floor))
            .collect::<Result<Vec<_>>>()?;
        EnsembleDensitySeries::new(run.dt, matrices, AveragingTag::Constructed)
    }
}

/// Populations switched from the plain mean to the constructed density with
/// weights set by lifetimes fitted to the plain-NISE populations.
pub struct Interpolated {
    pub factor: f64,
    pub floor: f64,
}

impl Averaging for Interpolated {
    fn name(&self) -> &'static str {
        "interpolated"
    }

    fn needs_reference(&self) -> bool {
        true
    }

    fn average(&self, run: &EnsembleRun) -> Result<EnsembleDensitySeries> {
        let reference = run.reference()?;
        let lifetimes = fit_lifetimes(&reference)?;
        let plain = run.plain()?;
        let constructed = Constructed { floor: self.floor }.average(run)?;
        interpolated_populations(&plain, &constructed, &lifetimes, self.factor)
    }
}

pub fn averaging_registry() -> Registry<dyn Averaging, AveragingParams> {
    let mut reg: Registry<dyn Averaging, AveragingParams> = Registry::new("averaging scheme");
    reg.register("plain", |_| Ok(Box::new(Plain)))
        .register("constructed", |p| {
            if !(p.floor > 0.0) {
                return invalid("logarithm floor must be positive");
            }
            Ok(Box::new(Constructed { floor: p.floor }))
        })
        .register("interpolated", |p| {
            if !(p.floor > 0.0 && p.factor > 0.0) {
                return invalid("interpolation factor and logarithm floor must be positive");
            }
            Ok(Box::new(Interpolated {
                factor: p.factor,
                floor: p.floor,
            }))
        });
    reg
}
