use nalgebra::{DMatrix, SymmetricEigen};
use num_complex::Complex64;

use crate::error::{invalid, Error, Result};
use crate::parallel::{chunked_reduce, DEFAULT_CHUNK};

/// Eigenvalue floor applied before taking logarithms.
pub const DEFAULT_LOG_FLOOR: f64 = 1e-10;

fn c(v: f64) -> Complex64 {
    Complex64::new(v, 0.0)
}

fn hermitian_function(m: &DMatrix<Complex64>, f: impl Fn(f64) -> f64) -> DMatrix<Complex64> {
    let eig = SymmetricEigen::new(m.clone());
    let n = m.nrows();
    let mut out = DMatrix::zeros(n, n);
    for (k, &lambda) in eig.eigenvalues.iter().enumerate() {
        let v = eig.eigenvectors.column(k);
        out += &v * v.adjoint() * c(f(lambda));
    }
    out
}

fn check_hermitian(m: &DMatrix<Complex64>) -> Result<()> {
    if !m.is_square() || m.nrows() == 0 {
        return invalid("density matrix must be nonempty and square");
    }
    let scale = m.iter().fold(1.0_f64, |a, z| a.max(z.norm()));
    let dev = (m - m.adjoint()).iter().fold(0.0_f64, |a, z| a.max(z.norm()));
    if dev > 1e-10 * scale {
        return invalid(format!("matrix is not Hermitian (deviation {dev:e})"));
    }
    Ok(())
}

/// ln ρ with eigenvalues clamped below at `floor`.
pub fn density_log(rho: &DMatrix<Complex64>, floor: f64) -> Result<DMatrix<Complex64>> {
    if !(floor > 0.0) {
        return invalid("logarithm floor must be positive");
    }
    check_hermitian(rho)?;
    let sym = (rho + rho.adjoint()) * c(0.5);
    Ok(hermitian_function(&sym, |l| l.max(floor).ln()))
}

/// exp(M) for Hermitian M.
pub fn hermitian_exp(m: &DMatrix<Complex64>) -> Result<DMatrix<Complex64>> {
    check_hermitian(m)?;
    let sym = (m + m.adjoint()) * c(0.5);
    Ok(hermitian_function(&sym, f64::exp))
}

fn normalized(m: DMatrix<Complex64>) -> Result<DMatrix<Complex64>> {
    let trace: f64 = m.diagonal().iter().map(|z| z.re).sum();
    if !(trace > 0.0) || !trace.is_finite() {
        return Err(Error::Numerical("constructed density has no positive trace".into()));
    }
    let out = m / c(trace);
    Ok((&out + out.adjoint()) * c(0.5))
}

/// exp(⟨ln ρ^α⟩), normalized to unit trace.
pub fn constructed_density(realizations: &[DMatrix<Complex64>], floor: f64) -> Result<DMatrix<Complex64>> {
    if realizations.is_empty() {
        return invalid("constructed density needs at least one realization");
    }
    let n = realizations[0].nrows();
    if realizations.iter().any(|m| m.nrows() != n || m.ncols() != n) {
        return Err(Error::Mismatch("realizations differ in dimension".into()));
    }
    let sum = chunked_reduce(
        realizations.len(),
        DEFAULT_CHUNK,
        || DMatrix::<Complex64>::zeros(n, n),
        |acc, k| {
            *acc += density_log(&realizations[k], floor)?;
            Ok(())
        },
        |a, b| *a += b,
    )?;
    let mean = sum / c(realizations.len() as f64);
    normalized(hermitian_exp(&mean)?)
}

/// The same construction written through artificial Hamiltonians
/// H^α = −ln ρ^α / β and ρ^c = exp(−β⟨H^α⟩)/Z; β cancels.
pub fn constructed_density_via_hamiltonians(
    realizations: &[DMatrix<Complex64>],
    beta: f64,
    floor: f64,
) -> Result<DMatrix<Complex64>> {
    if !(beta > 0.0) || !beta.is_finite() {
        return invalid("β must be positive and finite");
    }
    if realizations.is_empty() {
        return invalid("constructed density needs at least one realization");
    }
    let n = realizations[0].nrows();
    let mut mean_h = DMatrix::<Complex64>::zeros(n, n);
    for rho in realizations {
        mean_h += density_log(rho, floor)? / c(-beta);
    }
    mean_h /= c(realizations.len() as f64);
    normalized(hermitian_exp(&(mean_h * c(-beta)))?)
}

/// Constructed density when every realization is a normalized pure state:
/// ln(|ψ⟩⟨ψ|) = ln(floor)·(I − |ψ⟩⟨ψ|) after clamping, so the mean logarithm
/// is ln(floor)·(I − ρ̄) with ρ̄ the plain average.
pub fn constructed_from_pure_mean(mean: &DMatrix<Complex64>, floor: f64) -> Result<DMatrix<Complex64>> {
    if !(floor > 0.0) {
        return invalid("logarithm floor must be positive");
    }
    check_hermitian(mean)?;
    let n = mean.nrows();
    let log_mean = (DMatrix::<Complex64>::identity(n, n) - mean) * c(floor.ln());
    normalized(hermitian_exp(&log_mean)?)
}
