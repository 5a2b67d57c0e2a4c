use crate::error::{invalid, Result};
use crate::registry::Registry;

use super::AutocorrelationSeries;

/// A multiplicative window applied to an estimated autocorrelation.
pub trait Damping: Send + Sync {
    fn name(&self) -> &'static str;
    fn factor(&self, t: f64) -> f64;
}

/// Parameters for building a [`Damping`] from the registry.
#[derive(Debug, Clone, PartialEq)]
pub struct DampingSpec {
    pub kind: String,
    /// Cutoff time t_c in fs.
    pub cutoff: f64,
    /// Exponent b; only read by the `general` kind.
    pub exponent: f64,
}

impl DampingSpec {
    pub fn new(kind: &str, cutoff: f64) -> Self {
        Self {
            kind: kind.to_string(),
            cutoff,
            exponent: 2.0,
        }
    }

    pub fn general(cutoff: f64, exponent: f64) -> Self {
        Self {
            kind: "general".into(),
            cutoff,
            exponent,
        }
    }

    pub fn build(&self) -> Result<Box<dyn Damping>> {
        damping_registry().build(&self.kind, self)
    }
}

struct PowerExp {
    name: &'static str,
    cutoff: f64,
    exponent: f64,
}

impl Damping for PowerExp {
    fn name(&self) -> &'static str {
        self.name
    }

    fn factor(&self, t: f64) -> f64 {
        (-(t.abs() / self.cutoff).powf(self.exponent)).exp()
    }
}

struct Step {
    cutoff: f64,
}

impl Damping for Step {
    fn name(&self) -> &'static str {
        "step"
    }

    fn factor(&self, t: f64) -> f64 {
        if t.abs() <= self.cutoff {
            1.0
        } else {
            0.0
        }
    }
}

fn check_cutoff(spec: &DampingSpec) -> Result<()> {
    if !(spec.cutoff > 0.0 && spec.cutoff.is_finite()) {
        return invalid(format!("damping cutoff must be positive, got {}", spec.cutoff));
    }
    Ok(())
}

fn power_exp(name: &'static str, spec: &DampingSpec, exponent: f64) -> Result<Box<dyn Damping>> {
    check_cutoff(spec)?;
    if !(exponent > 0.0 && exponent.is_finite()) {
        return invalid(format!("damping exponent must be positive, got {exponent}"));
    }
    Ok(Box::new(PowerExp {
        name,
        cutoff: spec.cutoff,
        exponent,
    }))
}

/// Damping functions exp(−(t/t_c)^b): `gaussian` (b = 2), `exponential`
/// (b = 1), `general` (user b) and the hard `step` window.
pub fn damping_registry() -> Registry<dyn Damping, DampingSpec> {
    let mut r = Registry::new("damping function");
    r.register("gaussian", |s| power_exp("gaussian", s, 2.0))
        .register("exponential", |s| power_exp("exponential", s, 1.0))
        .register("general", |s| power_exp("general", s, s.exponent))
        .register("step", |s| {
            check_cutoff(s)?;
            Ok(Box::new(Step { cutoff: s.cutoff }))
        });
    r
}

pub fn apply_damping(c: &AutocorrelationSeries, spec: &DampingSpec) -> Result<AutocorrelationSeries> {
    let damping = spec.build()?;
    Ok(c.map_values(|t, v| v * damping.factor(t)))
}
