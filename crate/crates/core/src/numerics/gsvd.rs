use nalgebra::{DMatrix, DVector};

use super::{check_q, DataMatrix, LinalgError};

/// Economy-sized generalized SVD of a pair `(X, N)`:
/// `X = V_x Σ_x Φᵀ`, `N = V_n Σ_n Φᵀ`.
///
/// All factor columns follow the order of `gsv`, which holds the squared
/// generalized singular values `diag(Σ_x² Σ_n⁻²)` in descending order.
#[derive(Debug, Clone)]
pub struct GsvdFactors {
    pub v_x: DMatrix<f64>,
    pub v_n: DMatrix<f64>,
    pub sigma_x: DVector<f64>,
    pub sigma_n: DVector<f64>,
    pub phi: DMatrix<f64>,
    pub gsv: DVector<f64>,
}

impl GsvdFactors {
    pub fn channels(&self) -> usize {
        self.phi.nrows()
    }

    /// `V_x Σ_x Φᵀ`
    pub fn reconstruct_x(&self) -> DMatrix<f64> {
        scale_columns(&self.v_x, &self.sigma_x) * self.phi.transpose()
    }

    /// `V_n Σ_n Φᵀ`
    pub fn reconstruct_n(&self) -> DMatrix<f64> {
        scale_columns(&self.v_n, &self.sigma_n) * self.phi.transpose()
    }

    pub fn gsv_sum(&self) -> f64 {
        self.gsv.sum()
    }
}

#[derive(Debug, Clone, Copy, Default)]
pub struct GsvdOptions {
    /// Append `√ε·I` rows to N with `ε = 1e-10·trace(NᵀN)/M` before factorizing.
    pub regularize: bool,
}

/// Relative size below which a diagonal entry counts as zero.
const RANK_TOL: f64 = 1e-13;

pub fn gsvd(x: &DataMatrix, n: &DataMatrix) -> Result<GsvdFactors, LinalgError> {
    gsvd_with(x, n, GsvdOptions::default())
}

pub fn gsvd_with(x: &DataMatrix, n: &DataMatrix, opts: GsvdOptions) -> Result<GsvdFactors, LinalgError> {
    let m = x.cols();
    if n.cols() != m {
        return Err(LinalgError::DimensionMismatch(format!("signal has {m} channels, noise has {}", n.cols())));
    }
    if x.rows() < m || n.rows() < m {
        return Err(LinalgError::DimensionMismatch(format!(
            "economy GSVD needs at least {m} rows (got {} and {})",
            x.rows(),
            n.rows()
        )));
    }

    let n_mat = if opts.regularize {
        let nm = n.as_matrix();
        let eps = 1e-10 * nm.norm_squared() / m as f64;
        let mut aug = DMatrix::zeros(nm.nrows() + m, m);
        aug.rows_mut(0, nm.nrows()).copy_from(nm);
        for i in 0..m {
            aug[(nm.nrows() + i, i)] = eps.sqrt();
        }
        aug
    } else {
        n.as_matrix().clone()
    };
    let k = x.rows();
    let l = n_mat.nrows();

    let mut stacked = DMatrix::zeros(k + l, m);
    stacked.rows_mut(0, k).copy_from(x.as_matrix());
    stacked.rows_mut(k, l).copy_from(&n_mat);

    let qr = stacked.qr();
    let r = qr.r();
    let rmax = r.diagonal().amax();
    let rmin = r.diagonal().iter().fold(f64::INFINITY, |a, v| a.min(v.abs()));
    if !(rmin > RANK_TOL * rmax) {
        return Err(LinalgError::RankDeficient { which: "noise data matrix", smallest: rmin });
    }
    let q = qr.q();
    let q1 = q.rows(0, k).into_owned();
    let q2 = q.rows(k, l).into_owned();

    // CS split: Q1 = U C Wᵀ, Q2 W = Z with ZᵀZ = I − C².
    let svd = q1.svd(true, true);
    let u = svd.u.expect("requested U");
    let wt = svd.v_t.expect("requested Vᵀ");
    let mut order: Vec<usize> = (0..m).collect();
    order.sort_by(|&a, &b| svd.singular_values[b].total_cmp(&svd.singular_values[a]));

    let c = DVector::from_iterator(m, order.iter().map(|&i| svd.singular_values[i].min(1.0)));
    let v_x = DMatrix::from_fn(k, m, |row, col| u[(row, order[col])]);
    let w = DMatrix::from_fn(m, m, |row, col| wt[(order[col], row)]);

    let z = &q2 * &w;
    let s = DVector::from_iterator(m, z.column_iter().map(|col| col.norm()));
    let smin = s.iter().fold(f64::INFINITY, |a, &v| a.min(v));
    if !(smin > RANK_TOL) {
        return Err(LinalgError::RankDeficient { which: "noise data matrix", smallest: smin });
    }
    let mut v_n = z;
    for (j, mut col) in v_n.column_iter_mut().enumerate() {
        col /= s[j];
    }
    let phi = r.transpose() * &w;
    let gsv = DVector::from_iterator(m, c.iter().zip(s.iter()).map(|(c, s)| (c * c) / (s * s)));

    Ok(GsvdFactors { v_x, v_n, sigma_x: c, sigma_n: s, phi, gsv })
}

/// Low-rank split of X: the first `q_s` generalized components form the
/// direct part, the remaining ones the residual.
pub fn gsvd_split(f: &GsvdFactors, q_s: usize) -> Result<(DataMatrix, DataMatrix), LinalgError> {
    let m = f.channels();
    check_q(q_s, m)?;
    let us = scale_columns(&f.v_x, &f.sigma_x);
    let phit = f.phi.transpose();
    let k = us.nrows();
    let xs = if q_s == 0 { DMatrix::zeros(k, m) } else { us.columns(0, q_s) * phit.rows(0, q_s) };
    let xn = if q_s == m { DMatrix::zeros(k, m) } else { us.columns(q_s, m - q_s) * phit.rows(q_s, m - q_s) };
    Ok((DataMatrix(xs), DataMatrix(xn)))
}

fn scale_columns(a: &DMatrix<f64>, d: &DVector<f64>) -> DMatrix<f64> {
    let mut out = a.clone();
    for (j, mut col) in out.column_iter_mut().enumerate() {
        col *= d[j];
    }
    out
}
