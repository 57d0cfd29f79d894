use nalgebra::{DMatrix, SymmetricEigen};

use super::DataMatrix;

/// Real symmetric M×M matrix of second-order statistics.
#[derive(Debug, Clone, PartialEq)]
pub struct CovarianceMatrix(DMatrix<f64>);

impl CovarianceMatrix {
    /// Wraps a square matrix, symmetrizing it to remove rounding asymmetry.
    pub fn from_matrix(m: DMatrix<f64>) -> Self {
        assert!(m.is_square(), "covariance must be square");
        let sym = (&m + m.transpose()) * 0.5;
        Self(sym)
    }

    pub fn dim(&self) -> usize {
        self.0.nrows()
    }

    pub fn as_matrix(&self) -> &DMatrix<f64> {
        &self.0
    }

    /// Eigenvalues in descending order.
    pub fn eigenvalues(&self) -> Vec<f64> {
        let mut ev: Vec<f64> = SymmetricEigen::new(self.0.clone()).eigenvalues.iter().copied().collect();
        ev.sort_by(|a, b| b.total_cmp(a));
        ev
    }
}

/// `(1/K)·XᵀX` for a K×M data matrix.
pub fn sample_covariance(x: &DataMatrix) -> CovarianceMatrix {
    let k = x.rows() as f64;
    let m = x.as_matrix();
    CovarianceMatrix::from_matrix(m.tr_mul(m) / k)
}

/// Number of eigenvalues within `dynamic_range_db` of the largest one.
///
/// An eigenvalue counts when `λ ≥ λ_max·10^(−dr/10)`, so a zero dynamic range
/// still counts the largest eigenvalue. An all-zero matrix has rank 0.
pub fn evd_rank(r: &CovarianceMatrix, dynamic_range_db: f64) -> usize {
    assert!(dynamic_range_db >= 0.0, "dynamic range must be non-negative");
    let ev = r.eigenvalues();
    let max = ev.first().copied().unwrap_or(0.0);
    if max <= 0.0 {
        return 0;
    }
    let floor = max * 10f64.powf(-dynamic_range_db / 10.0);
    ev.iter().filter(|&&l| l >= floor).count()
}
