//! Dense linear-algebra kernels used by the decomposition.
//!
//! Data matrices hold one observation (time sample) per row and one channel
//! per column. The generalized SVD is computed from the stacked matrix
//! `[X; N]` via a thin QR factorization followed by a cosine-sine split of the
//! orthogonal factor, so the condition number of the data is never squared.
//! The GEVD of the sample covariances is kept as an independent route for
//! cross-checking.

mod covariance;
mod gevd;
mod gsvd;

pub use covariance::{evd_rank, sample_covariance, CovarianceMatrix};
pub use gevd::{gevd, gevd_project, GevdResult};
pub use gsvd::{gsvd, gsvd_split, gsvd_with, GsvdFactors, GsvdOptions};

use nalgebra::DMatrix;
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum LinalgError {
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("{which} is rank deficient (smallest value {smallest:e})")]
    RankDeficient { which: &'static str, smallest: f64 },
    #[error("subspace dimension {q} out of range 0..={max}")]
    SubspaceOutOfRange { q: usize, max: usize },
    #[error("matrix contains non-finite entries")]
    NonFinite,
    #[error("empty matrix")]
    Empty,
}

/// A K×M block of M-channel samples (rows are observations).
#[derive(Debug, Clone, PartialEq)]
pub struct DataMatrix(pub(crate) DMatrix<f64>);

impl DataMatrix {
    pub fn new(values: DMatrix<f64>) -> Result<Self, LinalgError> {
        if values.nrows() == 0 || values.ncols() == 0 {
            return Err(LinalgError::Empty);
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(LinalgError::NonFinite);
        }
        Ok(Self(values))
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self(DMatrix::zeros(rows, cols))
    }

    /// Builds a matrix from row-major sample frames.
    pub fn from_row_slice(rows: usize, cols: usize, data: &[f64]) -> Result<Self, LinalgError> {
        if data.len() != rows * cols {
            return Err(LinalgError::DimensionMismatch(format!("{} values for a {rows}x{cols} matrix", data.len())));
        }
        Self::new(DMatrix::from_row_slice(rows, cols, data))
    }

    /// Builds a matrix from per-channel columns of equal length.
    pub fn from_columns(columns: &[Vec<f64>]) -> Result<Self, LinalgError> {
        let cols = columns.len();
        let rows = columns.first().map_or(0, Vec::len);
        if columns.iter().any(|c| c.len() != rows) {
            return Err(LinalgError::DimensionMismatch("ragged channel columns".into()));
        }
        Self::new(DMatrix::from_fn(rows, cols, |r, c| columns[c][r]))
    }

    #[inline]
    pub fn rows(&self) -> usize {
        self.0.nrows()
    }

    #[inline]
    pub fn cols(&self) -> usize {
        self.0.ncols()
    }

    pub fn as_matrix(&self) -> &DMatrix<f64> {
        &self.0
    }

    pub fn as_matrix_mut(&mut self) -> &mut DMatrix<f64> {
        &mut self.0
    }

    pub fn into_matrix(self) -> DMatrix<f64> {
        self.0
    }

    pub fn column(&self, c: usize) -> &[f64] {
        let n = self.rows();
        &self.0.as_slice()[c * n..(c + 1) * n]
    }

    pub fn column_mut(&mut self, c: usize) -> &mut [f64] {
        let n = self.rows();
        &mut self.0.as_mut_slice()[c * n..(c + 1) * n]
    }

    /// Copies rows `start..start + len` into a new matrix.
    pub fn slice_rows(&self, start: usize, len: usize) -> DataMatrix {
        DataMatrix(self.0.rows(start, len).into_owned())
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.0.norm()
    }

    pub fn scaled(&self, alpha: f64) -> DataMatrix {
        DataMatrix(&self.0 * alpha)
    }
}

impl std::ops::Add for &DataMatrix {
    type Output = DataMatrix;

    fn add(self, rhs: &DataMatrix) -> DataMatrix {
        DataMatrix(&self.0 + &rhs.0)
    }
}

impl std::ops::Sub for &DataMatrix {
    type Output = DataMatrix;

    fn sub(self, rhs: &DataMatrix) -> DataMatrix {
        DataMatrix(&self.0 - &rhs.0)
    }
}

/// Binary selection of the first `q` diagonal entries.
pub(crate) fn check_q(q: usize, m: usize) -> Result<(), LinalgError> {
    if q > m {
        Err(LinalgError::SubspaceOutOfRange { q, max: m })
    } else {
        Ok(())
    }
}
