use nalgebra::{DMatrix, SymmetricEigen};
use num_complex::Complex64;

use super::lifetimes::LifetimeSet;
use crate::error::{invalid, Error, Result};

/// How a density series was obtained from the realizations.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AveragingTag {
    Plain,
    Constructed,
    Interpolated,
}

impl AveragingTag {
    pub fn as_str(self) -> &'static str {
        match self {
            Self::Plain => "plain",
            Self::Constructed => "constructed",
            Self::Interpolated => "interpolated",
        }
    }
}

/// Site-basis density matrices on a uniform time grid.
#[derive(Debug, Clone, PartialEq)]
pub struct EnsembleDensitySeries {
    pub dt: f64,
    pub matrices: Vec<DMatrix<Complex64>>,
    pub tag: AveragingTag,
    /// False when only the diagonal was interpolated and the coherences were
    /// copied from another series.
    pub coherences_valid: bool,
    /// Lifetimes used for interpolation, if any.
    pub lifetimes: Option<LifetimeSet>,
}

impl EnsembleDensitySeries {
    pub fn new(dt: f64, matrices: Vec<DMatrix<Complex64>>, tag: AveragingTag) -> Result<Self> {
        if !(dt > 0.0) {
            return invalid("time step must be positive");
        }
        if matrices.is_empty() {
            return invalid("density series is empty");
        }
        let n = matrices[0].nrows();
        if matrices.iter().any(|m| m.nrows() != n || m.ncols() != n) {
            return Err(Error::Mismatch("density matrices differ in dimension".into()));
        }
        Ok(Self {
            dt,
            matrices,
            tag,
            coherences_valid: true,
            lifetimes: None,
        })
    }

    pub fn len(&self) -> usize {
        self.matrices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.matrices.is_empty()
    }

    pub fn n_sites(&self) -> usize {
        self.matrices[0].nrows()
    }

    pub fn times(&self) -> Vec<f64> {
        (0..self.len()).map(|i| i as f64 * self.dt).collect()
    }

    /// ρ_nn(t_i) as `[i][n]`.
    pub fn populations(&self) -> Vec<Vec<f64>> {
        self.matrices
            .iter()
            .map(|m| m.diagonal().iter().map(|z| z.re).collect())
            .collect()
    }

    /// Population of `site` over time.
    pub fn site_population(&self, site: usize) -> Vec<f64> {
        self.matrices.iter().map(|m| m[(site, site)].re).collect()
    }

    /// Largest deviation from unit trace, hermiticity, and the most negative
    /// eigenvalue over the series.
    pub fn check(&self) -> DensityCheck {
        let mut out = DensityCheck::default();
        for m in &self.matrices {
            let c = check_density(m);
            out.trace_error = out.trace_error.max(c.trace_error);
            out.hermiticity_error = out.hermiticity_error.max(c.hermiticity_error);
            out.min_eigenvalue = out.min_eigenvalue.min(c.min_eigenvalue);
        }
        out
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DensityCheck {
    pub trace_error: f64,
    pub hermiticity_error: f64,
    pub min_eigenvalue: f64,
}

impl Default for DensityCheck {
    fn default() -> Self {
        Self {
            trace_error: 0.0,
            hermiticity_error: 0.0,
            min_eigenvalue: f64::INFINITY,
        }
    }
}

impl DensityCheck {
    pub fn is_valid(&self, tol: f64) -> bool {
        self.trace_error <= tol && self.hermiticity_error <= tol && self.min_eigenvalue >= -tol
    }
}

pub fn check_density(m: &DMatrix<Complex64>) -> DensityCheck {
    let trace: Complex64 = m.diagonal().iter().sum();
    let herm = (m - m.adjoint()).iter().fold(0.0_f64, |a, z| a.max(z.norm()));
    let sym = (m + m.adjoint()) * Complex64::new(0.5, 0.0);
    let min = SymmetricEigen::new(sym)
        .eigenvalues
        .iter()
        .fold(f64::INFINITY, |a, &v| a.min(v));
    DensityCheck {
        trace_error: (trace - Complex64::new(1.0, 0.0)).norm(),
        hermiticity_error: herm,
        min_eigenvalue: min,
    }
}
