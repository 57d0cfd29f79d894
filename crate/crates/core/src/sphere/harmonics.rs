use std::f64::consts::PI;

use nalgebra::DMatrix;

use super::Direction;

/// Number of SH channels up to and including `order`.
#[inline]
pub fn sh_count(order: usize) -> usize {
    (order + 1) * (order + 1)
}

/// Degree `n` of the ACN channel index `n² + n + m`.
#[inline]
pub fn acn_degree(index: usize) -> usize {
    let mut n = (index as f64).sqrt() as usize;
    while (n + 1) * (n + 1) <= index {
        n += 1;
    }
    while n * n > index {
        n -= 1;
    }
    n
}

/// Real orthonormal spherical harmonics at one direction, ACN ordering.
///
/// `Y_n0 = P̄_n^0`, `Y_nm = √2 P̄_n^m cos(mφ)` and `Y_n,−m = √2 P̄_n^m sin(mφ)`,
/// where `P̄` are associated Legendre functions normalized over the sphere and
/// without the Condon-Shortley phase.
pub fn real_sh_vector(order: usize, dir: Direction, out: &mut [f64]) {
    assert_eq!(out.len(), sh_count(order));
    let (st, ct) = dir.colatitude.sin_cos();
    let p = normalized_legendre(order, ct, st);
    for n in 0..=order {
        let base = n * n + n;
        out[base] = p[idx(n, 0)];
        for m in 1..=n {
            let (sm, cm) = (m as f64 * dir.azimuth).sin_cos();
            let v = std::f64::consts::SQRT_2 * p[idx(n, m)];
            out[base + m] = v * cm;
            out[base - m] = v * sm;
        }
    }
}

/// P×(order+1)² matrix of real SH evaluated at each direction (one row per direction).
pub fn real_sh_matrix(order: usize, dirs: &[Direction]) -> DMatrix<f64> {
    let q = sh_count(order);
    let mut out = DMatrix::zeros(dirs.len(), q);
    let mut row = vec![0.0; q];
    for (p, d) in dirs.iter().enumerate() {
        real_sh_vector(order, *d, &mut row);
        for (c, v) in row.iter().enumerate() {
            out[(p, c)] = *v;
        }
    }
    out
}

/// Legendre polynomials `P_0(x) … P_order(x)` by the three-term recurrence.
pub fn legendre_series(order: usize, x: f64) -> Vec<f64> {
    let mut p = vec![0.0; order + 1];
    p[0] = 1.0;
    if order >= 1 {
        p[1] = x;
    }
    for n in 2..=order {
        let nf = n as f64;
        p[n] = ((2.0 * nf - 1.0) * x * p[n - 1] - (nf - 1.0) * p[n - 2]) / nf;
    }
    p
}

#[inline]
fn idx(n: usize, m: usize) -> usize {
    n * (n + 1) / 2 + m
}

/// Fully normalized associated Legendre functions, including the `1/√(4π)`
/// factor (and the `1/√2` of the azimuthal part for m > 0).
fn normalized_legendre(order: usize, x: f64, s: f64) -> Vec<f64> {
    let mut p = vec![0.0; idx(order, order) + 1];
    p[0] = 1.0 / (4.0 * PI).sqrt();
    for m in 1..=order {
        let mf = m as f64;
        p[idx(m, m)] = ((2.0 * mf + 1.0) / (2.0 * mf)).sqrt() * s * p[idx(m - 1, m - 1)];
    }
    for m in 0..order {
        let mf = m as f64;
        p[idx(m + 1, m)] = (2.0 * mf + 3.0).sqrt() * x * p[idx(m, m)];
    }
    for m in 0..=order {
        let mf = m as f64;
        for n in (m + 2)..=order {
            let nf = n as f64;
            let a = ((4.0 * nf * nf - 1.0) / (nf * nf - mf * mf)).sqrt();
            let b = (((nf - 1.0) * (nf - 1.0) - mf * mf) / (4.0 * (nf - 1.0) * (nf - 1.0) - 1.0)).sqrt();
            p[idx(n, m)] = a * (x * p[idx(n - 1, m)] - b * p[idx(n - 2, m)]);
        }
    }
    p
}
