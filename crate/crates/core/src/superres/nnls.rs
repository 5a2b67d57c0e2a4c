//! Lawson–Hanson active-set non-negative least squares.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

#[derive(Debug, Clone)]
pub struct NnlsSolution {
    pub x: DVector<f64>,
    pub residual_norm: f64,
    /// Largest KKT violation of the gradient `g = Aᵀ(Ax − b)` (|g_j| on the
    /// support, max(0, −g_j) off it), relative to `‖Aᵀb‖∞`.
    pub kkt_residual: f64,
    pub iterations: usize,
}

fn lstsq(a: &DMatrix<f64>, b: &DVector<f64>, cols: &[usize]) -> Result<DVector<f64>> {
    let sub = a.select_columns(cols);
    let svd = sub.svd(true, true);
    svd.solve(b, 1e-14)
        .map_err(|e| Error::Numerical(format!("least squares on the passive set failed: {e}")))
}

pub(crate) fn kkt_residual(a: &DMatrix<f64>, b: &DVector<f64>, x: &DVector<f64>) -> f64 {
    let scale = (a.transpose() * b).amax();
    if scale == 0.0 {
        return 0.0;
    }
    let g = a.transpose() * (a * x - b);
    let worst = x
        .iter()
        .zip(g.iter())
        .map(|(&xj, &gj)| if xj > 0.0 { gj.abs() } else { (-gj).max(0.0) })
        .fold(0.0, f64::max);
    worst / scale
}

/// Solves `min ‖Ax − b‖₂` subject to `x ≥ 0`.
pub fn nnls(a: &DMatrix<f64>, b: &DVector<f64>) -> Result<NnlsSolution> {
    let n = a.ncols();
    if a.nrows() != b.len() {
        return Err(Error::Mismatch(format!("matrix has {} rows, rhs {}", a.nrows(), b.len())));
    }
    let mut x = DVector::zeros(n);
    let mut passive = vec![false; n];
    let tol = 1e-12 * (a.transpose() * b).amax().max(f64::MIN_POSITIVE);
    let max_outer = 3 * n + 10;
    let mut iterations = 0;
    loop {
        let w = a.transpose() * (b - a * &x);
        let candidate = (0..n)
            .filter(|&j| !passive[j] && w[j] > tol)
            .max_by(|&i, &j| w[i].total_cmp(&w[j]));
        let Some(j) = candidate else { break };
        if iterations >= max_outer {
            break;
        }
        iterations += 1;
        passive[j] = true;
        loop {
            let cols: Vec<usize> = (0..n).filter(|&k| passive[k]).collect();
            let z = lstsq(a, b, &cols)?;
            if z.iter().all(|&v| v > 0.0) {
                x.fill(0.0);
                for (&c, &v) in cols.iter().zip(z.iter()) {
                    x[c] = v;
                }
                break;
            }
            // step back towards x until the first passive variable hits zero
            let mut alpha = f64::INFINITY;
            for (&c, &v) in cols.iter().zip(z.iter()) {
                if v <= 0.0 {
                    alpha = alpha.min(x[c] / (x[c] - v));
                }
            }
            for (&c, &v) in cols.iter().zip(z.iter()) {
                x[c] += alpha * (v - x[c]);
            }
            let eps = f64::EPSILON * x.amax().max(f64::MIN_POSITIVE);
            for &c in &cols {
                if x[c] <= eps {
                    x[c] = 0.0;
                    passive[c] = false;
                }
            }
            if !passive.iter().any(|&p| p) {
                break;
            }
        }
    }
    let residual_norm = (a * &x - b).norm();
    let kkt_residual = kkt_residual(a, b, &x);
    Ok(NnlsSolution {
        x,
        residual_norm,
        kkt_residual,
        iterations,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn unconstrained_optimum_is_returned_when_nonnegative() {
        let a = DMatrix::from_row_slice(3, 2, &[1.0, 0.0, 0.0, 1.0, 1.0, 1.0]);
        let b = DVector::from_vec(vec![1.0, 2.0, 3.0]);
        let sol = nnls(&a, &b).unwrap();
        assert!((sol.x[0] - 1.0).abs() < 1e-12 && (sol.x[1] - 2.0).abs() < 1e-12);
        assert!(sol.kkt_residual < 1e-12);
    }

    #[test]
    fn negative_component_is_clamped() {
        // unconstrained solution is (2, -1)
        let a = DMatrix::from_row_slice(2, 2, &[1.0, 1.0, 0.0, 1.0]);
        let b = DVector::from_vec(vec![1.0, -1.0]);
        let sol = nnls(&a, &b).unwrap();
        assert_eq!(sol.x[1], 0.0);
        assert!((sol.x[0] - 1.0).abs() < 1e-12);
    }

    #[test]
    fn zero_rhs() {
        let a = DMatrix::from_element(4, 3, 1.0);
        let sol = nnls(&a, &DVector::zeros(4)).unwrap();
        assert!(sol.x.iter().all(|&v| v == 0.0));
    }

    proptest! {
        #[test]
        fn kkt_holds(entries in prop::collection::vec(-1.0f64..1.0, 40), rhs in prop::collection::vec(-1.0f64..1.0, 8)) {
            let a = DMatrix::from_row_slice(8, 5, &entries);
            let b = DVector::from_vec(rhs);
            let sol = nnls(&a, &b).unwrap();
            prop_assert!(sol.x.iter().all(|&v| v >= 0.0));
            prop_assert!(sol.kkt_residual < 1e-8, "kkt {}", sol.kkt_residual);
        }
    }
}
