use nalgebra::{Cholesky, DMatrix, DVector, SymmetricEigen};

use super::{check_q, CovarianceMatrix, DataMatrix, LinalgError};

/// Generalized eigendecomposition of a covariance pencil `(R_x, R_n)`.
///
/// Columns of `psi` are scaled so that `ψᵀ R_n ψ = I`.
#[derive(Debug, Clone)]
pub struct GevdResult {
    pub psi: DMatrix<f64>,
    pub delta: DVector<f64>,
}

/// Simultaneous diagonalization of `r_x` and `r_n`, eigenvalues descending.
pub fn gevd(r_x: &CovarianceMatrix, r_n: &CovarianceMatrix) -> Result<GevdResult, LinalgError> {
    let m = r_x.dim();
    if r_n.dim() != m {
        return Err(LinalgError::DimensionMismatch(format!("pencil of {m}x{m} and {n}x{n}", n = r_n.dim())));
    }
    let ev = r_n.eigenvalues();
    let (max, min) = (ev[0], ev[m - 1]);
    if !(min > 1e-12 * max) {
        return Err(LinalgError::RankDeficient { which: "noise covariance", smallest: min });
    }
    let chol = Cholesky::new(r_n.as_matrix().clone())
        .ok_or(LinalgError::RankDeficient { which: "noise covariance", smallest: min })?;
    let l = chol.l();
    // C = L⁻¹ R_x L⁻ᵀ
    let linv_rx = l.solve_lower_triangular(r_x.as_matrix()).expect("cholesky factor is nonsingular");
    let c = l.solve_lower_triangular(&linv_rx.transpose()).expect("cholesky factor is nonsingular");
    let c = (&c + c.transpose()) * 0.5;
    let eig = SymmetricEigen::new(c);

    let mut order: Vec<usize> = (0..m).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]));
    let delta = DVector::from_iterator(m, order.iter().map(|&i| eig.eigenvalues[i]));
    let u = DMatrix::from_fn(m, m, |r, c| eig.eigenvectors[(r, order[c])]);
    // ψ = L⁻ᵀ U
    let psi = l.transpose().solve_upper_triangular(&u).expect("cholesky factor is nonsingular");
    Ok(GevdResult { psi, delta })
}

/// Oblique projection of each row of `x` onto the first `q_s` generalized
/// eigenvectors: `X_s = X Ψ Γ_s Ψ⁻¹`, `X_n = X − X_s`.
pub fn gevd_project(x: &DataMatrix, gevd: &GevdResult, q_s: usize) -> Result<(DataMatrix, DataMatrix), LinalgError> {
    let m = gevd.psi.ncols();
    if x.cols() != m {
        return Err(LinalgError::DimensionMismatch(format!("{} channels vs {m}", x.cols())));
    }
    check_q(q_s, m)?;
    let psi_inv = gevd
        .psi
        .clone()
        .try_inverse()
        .ok_or(LinalgError::RankDeficient { which: "eigenvector matrix", smallest: 0.0 })?;
    let mut gamma_s = DMatrix::zeros(m, m);
    let mut gamma_n = DMatrix::zeros(m, m);
    for i in 0..m {
        if i < q_s {
            gamma_s[(i, i)] = 1.0;
        } else {
            gamma_n[(i, i)] = 1.0;
        }
    }
    let xp = x.as_matrix() * &gevd.psi;
    let xs = &xp * gamma_s * &psi_inv;
    let xn = &xp * gamma_n * &psi_inv;
    Ok((DataMatrix(xs), DataMatrix(xn)))
}

#[cfg(test)]
mod tests {
    use super::super::sample_covariance;
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random(rng: &mut ChaCha8Rng, r: usize, c: usize) -> DataMatrix {
        DataMatrix::new(DMatrix::from_fn(r, c, |_, _| rng.random_range(-1.0..1.0))).unwrap()
    }

    fn spd(rng: &mut ChaCha8Rng, m: usize) -> CovarianceMatrix {
        sample_covariance(&random(rng, 4 * m, m))
    }

    #[test]
    fn identity_noise_reduces_to_evd() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let rx = spd(&mut rng, 5);
        let g = gevd(&rx, &CovarianceMatrix::from_matrix(DMatrix::identity(5, 5))).unwrap();
        let ev = rx.eigenvalues();
        for (a, b) in g.delta.iter().zip(ev.iter()) {
            assert!((a - b).abs() < 1e-12 * ev[0]);
        }
    }

    #[test]
    fn equal_pencil_gives_unit_eigenvalues() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let r = spd(&mut rng, 6);
        let g = gevd(&r, &r).unwrap();
        assert!(g.delta.iter().all(|d| (d - 1.0).abs() < 1e-10));
    }

    #[test]
    fn normalization_and_diagonalization() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let rx = spd(&mut rng, 6);
        let rn = spd(&mut rng, 6);
        let g = gevd(&rx, &rn).unwrap();
        let n = g.psi.transpose() * rn.as_matrix() * &g.psi;
        assert!((n - DMatrix::identity(6, 6)).amax() < 1e-8);
        let x = g.psi.transpose() * rx.as_matrix() * &g.psi;
        assert!((x - DMatrix::from_diagonal(&g.delta)).amax() < 1e-8);
    }

    #[test]
    fn matches_dense_pencil_solve() {
        // Oracle: eigenvalues of R_n⁻¹R_x via LU solve and a general eigen-solver
        // on the (non-symmetric) product.
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let rx = spd(&mut rng, 6);
        let rn = spd(&mut rng, 6);
        let prod = rn.as_matrix().clone().lu().solve(rx.as_matrix()).unwrap();
        let mut oracle: Vec<f64> = prod.complex_eigenvalues().iter().map(|c| c.re).collect();
        oracle.sort_by(|a, b| b.total_cmp(a));
        let g = gevd(&rx, &rn).unwrap();
        for (a, b) in g.delta.iter().zip(oracle.iter()) {
            assert!((a - b).abs() <= 1e-8 * b.abs());
        }
    }

    #[test]
    fn singular_noise_is_rejected() {
        let rx = CovarianceMatrix::from_matrix(DMatrix::identity(3, 3));
        let rn = CovarianceMatrix::from_matrix(DMatrix::from_diagonal(&nalgebra::dvector![1.0, 1.0, 0.0]));
        match gevd(&rx, &rn) {
            Err(LinalgError::RankDeficient { smallest, .. }) => assert!(smallest.abs() < 1e-12),
            other => panic!("expected rank deficiency, got {other:?}"),
        }
    }

    #[test]
    fn projection_extremes() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let x = random(&mut rng, 20, 4);
        let g = gevd(&sample_covariance(&x), &spd(&mut rng, 4)).unwrap();
        let (xs, xn) = gevd_project(&x, &g, 4).unwrap();
        assert!((xs.as_matrix() - x.as_matrix()).amax() < 1e-10);
        assert!(xn.as_matrix().amax() < 1e-10);
        let (xs, xn) = gevd_project(&x, &g, 0).unwrap();
        assert!(xs.as_matrix().amax() < 1e-10);
        assert!((xn.as_matrix() - x.as_matrix()).amax() < 1e-10);
        assert!(matches!(gevd_project(&x, &g, 5), Err(LinalgError::SubspaceOutOfRange { .. })));
    }
}
