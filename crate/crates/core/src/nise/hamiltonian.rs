use nalgebra::{DMatrix, DVector, SymmetricEigen};

use crate::error::{invalid, Error, Result};

/// Tight-binding system Hamiltonian: site energies on the diagonal,
/// couplings off the diagonal (cm⁻¹).
#[derive(Debug, Clone, PartialEq)]
pub struct SystemHamiltonian {
    matrix: DMatrix<f64>,
}

impl SystemHamiltonian {
    pub fn new(matrix: DMatrix<f64>) -> Result<Self> {
        if matrix.nrows() == 0 || !matrix.is_square() {
            return invalid("Hamiltonian must be a nonempty square matrix");
        }
        if matrix.iter().any(|v| !v.is_finite()) {
            return invalid("Hamiltonian entries must be finite");
        }
        let scale = matrix.amax().max(1.0);
        for i in 0..matrix.nrows() {
            for j in 0..i {
                if (matrix[(i, j)] - matrix[(j, i)]).abs() > 1e-10 * scale {
                    return invalid(format!("Hamiltonian is not symmetric at ({}, {})", i + 1, j + 1));
                }
            }
        }
        let sym = (&matrix + matrix.transpose()) * 0.5;
        Ok(Self { matrix: sym })
    }

    /// Builds H from site energies and a list of (m, n, V_mn) couplings
    /// with zero-based site indices.
    pub fn from_parts(energies: &[f64], couplings: &[(usize, usize, f64)]) -> Result<Self> {
        let n = energies.len();
        let mut m = DMatrix::from_diagonal(&DVector::from_column_slice(energies));
        for &(a, b, v) in couplings {
            if a >= n || b >= n || a == b {
                return invalid(format!("coupling ({a}, {b}) is not between two distinct sites"));
            }
            m[(a, b)] = v;
            m[(b, a)] = v;
        }
        Self::new(m)
    }

    /// Uncoupled sites with energies `energies`.
    pub fn diagonal(energies: &[f64]) -> Result<Self> {
        Self::from_parts(energies, &[])
    }

    pub fn n_sites(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.matrix
    }

    pub fn site_energies(&self) -> Vec<f64> {
        self.matrix.diagonal().iter().copied().collect()
    }

    /// H + diag(ΔE).
    pub fn with_fluctuations(&self, delta: &[f64]) -> Result<DMatrix<f64>> {
        if delta.len() != self.n_sites() {
            return Err(Error::Mismatch(format!(
                "{} energy fluctuations for {} sites",
                delta.len(),
                self.n_sites()
            )));
        }
        let mut h = self.matrix.clone();
        for (k, &d) in delta.iter().enumerate() {
            h[(k, k)] += d;
        }
        Ok(h)
    }
}

/// Eigenvalues in ascending order and eigenvectors as columns.
#[derive(Debug, Clone, PartialEq)]
pub struct EigenFrame {
    pub energies: DVector<f64>,
    pub vectors: DMatrix<f64>,
}

/// Symmetric eigendecomposition with ascending eigenvalues. Each eigenvector
/// is signed so that its largest-magnitude component (first one on ties) is
/// positive.
pub fn eigh(h: &DMatrix<f64>) -> Result<EigenFrame> {
    if !h.is_square() || h.nrows() == 0 {
        return invalid("eigh needs a nonempty square matrix");
    }
    let scale = h.amax().max(1.0);
    if h.iter().any(|v| !v.is_finite()) {
        return Err(Error::Numerical("non-finite Hamiltonian entry".into()));
    }
    let n = h.nrows();
    for i in 0..n {
        for j in 0..i {
            if (h[(i, j)] - h[(j, i)]).abs() > 1e-10 * scale {
                return invalid("eigh input is not symmetric");
            }
        }
    }
    let eig = SymmetricEigen::new(h.clone());
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]).then(a.cmp(&b)));
    let energies = DVector::from_iterator(n, order.iter().map(|&k| eig.eigenvalues[k]));
    let mut vectors = DMatrix::zeros(n, n);
    for (dst, &src) in order.iter().enumerate() {
        let col = eig.eigenvectors.column(src);
        let mut lead = 0;
        for k in 1..n {
            if col[k].abs() > col[lead].abs() * (1.0 + 1e-12) {
                lead = k;
            }
        }
        let sign = if col[lead] < 0.0 { -1.0 } else { 1.0 };
        vectors.set_column(dst, &(col * sign));
    }
    Ok(EigenFrame { energies, vectors })
}

/// exp(−βH)/Tr exp(−βH) at temperature `temperature` (K).
pub fn boltzmann_density(h: &DMatrix<f64>, temperature: f64) -> Result<DMatrix<f64>> {
    if !(temperature > 0.0) {
        return invalid("temperature must be positive");
    }
    let frame = eigh(h)?;
    let kt = crate::units::thermal_energy(temperature);
    let e0 = frame.energies[0];
    let weights: Vec<f64> = frame.energies.iter().map(|&e| (-(e - e0) / kt).exp()).collect();
    let z: f64 = weights.iter().sum();
    let n = h.nrows();
    let mut rho = DMatrix::zeros(n, n);
    for (k, &wk) in weights.iter().enumerate() {
        let v = frame.vectors.column(k);
        rho += (wk / z) * &v * v.transpose();
    }
    Ok(rho)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::units::thermal_energy;
    use proptest::prelude::*;

    #[test]
    fn diagonal_hamiltonian() {
        let f = eigh(&DMatrix::from_diagonal(&DVector::from_vec(vec![3.0, -1.0, 2.0]))).unwrap();
        assert_eq!(f.energies.as_slice(), &[-1.0, 2.0, 3.0]);
        assert_eq!(f.vectors[(1, 0)], 1.0);
        assert_eq!(f.vectors[(2, 1)], 1.0);
        assert_eq!(f.vectors[(0, 2)], 1.0);
    }

    #[test]
    fn symmetric_dimer() {
        let v = 50.0;
        let f = eigh(&DMatrix::from_row_slice(2, 2, &[0.0, v, v, 0.0])).unwrap();
        assert!((f.energies[0] + v).abs() < 1e-12 && (f.energies[1] - v).abs() < 1e-12);
        let s = 1.0 / 2f64.sqrt();
        // ties in magnitude keep the first component as the leading one
        assert!((f.vectors[(0, 0)] - s).abs() < 1e-12 && (f.vectors[(1, 0)] + s).abs() < 1e-12);
        assert!((f.vectors[(0, 1)] - s).abs() < 1e-12 && (f.vectors[(1, 1)] - s).abs() < 1e-12);
    }

    #[test]
    fn rejects_asymmetric() {
        assert!(eigh(&DMatrix::from_row_slice(2, 2, &[0.0, 1.0, 2.0, 0.0])).is_err());
        assert!(SystemHamiltonian::new(DMatrix::from_row_slice(2, 2, &[0.0, 1.0, 2.0, 0.0])).is_err());
    }

    #[test]
    fn boltzmann_two_level() {
        let gap = 150.0;
        let rho = boltzmann_density(&DMatrix::from_diagonal(&DVector::from_vec(vec![0.0, gap])), 300.0).unwrap();
        assert!((rho[(1, 1)] / rho[(0, 0)] - (-gap / thermal_energy(300.0)).exp()).abs() < 1e-12);
        assert!((rho.trace() - 1.0).abs() < 1e-14);
        let hot = boltzmann_density(&DMatrix::from_row_slice(2, 2, &[0.0, 30.0, 30.0, 80.0]), 1e12).unwrap();
        assert!((hot[(0, 0)] - 0.5).abs() < 1e-8 && hot[(0, 1)].abs() < 1e-8);
    }

    proptest! {
        #[test]
        fn reconstructs_random_symmetric(vals in proptest::collection::vec(-500.0f64..500.0, 36)) {
            let a = DMatrix::from_vec(8, 8, vals.iter().chain(vals.iter()).take(64).copied().collect());
            let h = (&a + a.transpose()) * 0.5;
            let f = eigh(&h).unwrap();
            let back = &f.vectors * DMatrix::from_diagonal(&f.energies) * f.vectors.transpose();
            prop_assert!((back - &h).amax() <= 1e-8 * h.amax().max(1.0));
            let id = f.vectors.transpose() * &f.vectors - DMatrix::identity(8, 8);
            prop_assert!(id.amax() < 1e-10);
            prop_assert!(f.energies.as_slice().windows(2).all(|w| w[0] <= w[1]));
        }
    }
}
