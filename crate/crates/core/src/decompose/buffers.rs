use std::collections::VecDeque;

use nalgebra::{DMatrix, DVector};

use crate::numerics::DataMatrix;

/// Fixed-length FIFO of residual-classified sample rows.
///
/// Rows are kept in a ring; the order of rows does not affect the GSVD, so
/// [`ResidualBuffer::data`] returns them in storage order. The Gram matrix
/// `NᵀN` is maintained incrementally and rebuilt once per buffer length.
#[derive(Debug, Clone)]
pub struct ResidualBuffer {
    rows: DMatrix<f64>,
    head: usize,
    gram: DMatrix<f64>,
    pushes_since_rebuild: usize,
}

impl ResidualBuffer {
    /// Starts from the given `L×M` block.
    pub fn new(initial: &DataMatrix) -> Self {
        let rows = initial.as_matrix().clone();
        let gram = rows.transpose() * &rows;
        Self { rows, head: 0, gram, pushes_since_rebuild: 0 }
    }

    pub fn len(&self) -> usize {
        self.rows.nrows()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.nrows() == 0
    }

    pub fn channels(&self) -> usize {
        self.rows.ncols()
    }

    /// Replaces the oldest row.
    pub fn push_row(&mut self, row: &[f64]) {
        let m = self.channels();
        assert_eq!(row.len(), m);
        let old = DVector::from_iterator(m, self.rows.row(self.head).iter().copied());
        let new = DVector::from_column_slice(row);
        self.gram += &new * new.transpose() - &old * old.transpose();
        for (c, v) in row.iter().enumerate() {
            self.rows[(self.head, c)] = *v;
        }
        self.head = (self.head + 1) % self.len();
        self.pushes_since_rebuild += 1;
        if self.pushes_since_rebuild >= self.len() {
            self.gram = self.rows.transpose() * &self.rows;
            self.pushes_since_rebuild = 0;
        }
    }

    pub fn data(&self) -> DataMatrix {
        DataMatrix(self.rows.clone())
    }

    /// `NᵀN`.
    pub fn gram(&self) -> &DMatrix<f64> {
        &self.gram
    }
}

/// FIFO of recent GSV sums, initialized with `+∞` sentinels.
#[derive(Debug, Clone, PartialEq)]
pub struct GsvSumBuffer {
    values: VecDeque<f64>,
}

impl GsvSumBuffer {
    pub fn new(len: usize) -> Self {
        assert!(len >= 1);
        Self { values: std::iter::repeat_n(f64::INFINITY, len).collect() }
    }

    /// Builds a buffer from explicit values (oldest first).
    pub fn from_values(values: &[f64]) -> Self {
        Self { values: values.iter().copied().collect() }
    }

    pub fn push(&mut self, xi: f64) {
        self.values.pop_front();
        self.values.push_back(xi);
    }

    pub fn capacity(&self) -> usize {
        self.values.len()
    }

    fn real(&self) -> impl Iterator<Item = f64> + '_ {
        self.values.iter().copied().filter(|v| v.is_finite())
    }

    pub fn real_count(&self) -> usize {
        self.real().count()
    }

    /// No sentinel left.
    pub fn is_full(&self) -> bool {
        self.real_count() == self.values.len()
    }

    /// Mean over real entries; `None` with fewer than two.
    pub fn mean(&self) -> Option<f64> {
        let n = self.real_count();
        (n >= 2).then(|| self.real().sum::<f64>() / n as f64)
    }

    /// Sample standard deviation (`n−1`) over real entries.
    pub fn std(&self) -> Option<f64> {
        let n = self.real_count();
        let mean = self.mean()?;
        let ss: f64 = self.real().map(|v| (v - mean) * (v - mean)).sum();
        Some((ss / (n - 1) as f64).sqrt())
    }

    /// `mean + κ·std`.
    pub fn threshold(&self, kappa: f64) -> Option<f64> {
        Some(self.mean()? + kappa * self.std()?)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn incremental_gram_tracks_contents() {
        let init = DataMatrix::from_row_slice(4, 2, &[1.0, 2.0, 3.0, 4.0, 5.0, 6.0, 7.0, 8.0]).unwrap();
        let mut b = ResidualBuffer::new(&init);
        for i in 0..7 {
            b.push_row(&[i as f64 * 0.5, -(i as f64)]);
            let d = b.data();
            let direct = d.as_matrix().transpose() * d.as_matrix();
            assert!((b.gram() - direct).amax() < 1e-12);
        }
        assert_eq!(b.len(), 4);
    }

    #[test]
    fn fifo_evicts_oldest() {
        let init = DataMatrix::zeros(3, 1);
        let mut b = ResidualBuffer::new(&init);
        for v in [1.0, 2.0, 3.0, 4.0] {
            b.push_row(&[v]);
        }
        let mut vals: Vec<f64> = b.data().column(0).to_vec();
        vals.sort_by(f64::total_cmp);
        assert_eq!(vals, vec![2.0, 3.0, 4.0]);
    }

    #[test]
    fn sentinel_statistics() {
        let mut b = GsvSumBuffer::new(4);
        assert_eq!(b.mean(), None);
        b.push(2.0);
        assert_eq!(b.mean(), None);
        b.push(4.0);
        assert_eq!(b.mean(), Some(3.0));
        assert!((b.std().unwrap() - 2f64.sqrt()).abs() < 1e-15);
        assert!(!b.is_full());
        b.push(4.0);
        b.push(4.0);
        assert!(b.is_full());
    }
}
