use std::f64::consts::PI;

use num_complex::Complex64;

use super::{legendre_series, Baffle};

/// Spherical Bessel functions of the first and second kind, `n = 0..=order`.
#[derive(Debug, Clone)]
pub struct Bessel {
    pub j: Vec<f64>,
    pub y: Vec<f64>,
}

impl Bessel {
    /// `j_n'(x)` from `j_{n-1} − (n+1)/x j_n`.
    pub fn j_prime(&self, n: usize, x: f64) -> f64 {
        derivative(&self.j, n, x)
    }

    pub fn y_prime(&self, n: usize, x: f64) -> f64 {
        derivative(&self.y, n, x)
    }
}

fn derivative(f: &[f64], n: usize, x: f64) -> f64 {
    if n == 0 {
        -f[1]
    } else {
        f[n - 1] - (n as f64 + 1.0) / x * f[n]
    }
}

/// `j_n(x)` and `y_n(x)` for `n = 0..=order` (one extra order is kept for
/// derivatives). `j` uses Miller's downward recurrence, `y` the upward one;
/// `y` saturates at `-f64::MAX` instead of overflowing.
pub fn spherical_bessel(order: usize, x: f64) -> Bessel {
    assert!(x > 0.0, "spherical_bessel needs x > 0");
    let len = order + 2;
    let (s, c) = x.sin_cos();

    // j_n: downward recurrence from well above max(order, x)
    let start = len + 20 + (x as usize) + ((x.max(1.0)).cbrt() * 10.0) as usize;
    let mut j = vec![0.0; len];
    let mut next = 0.0f64;
    let mut cur = 1e-300f64;
    for n in (0..=start).rev() {
        // f_{n-1} = (2n+1)/x f_n − f_{n+1}
        if n < len {
            j[n] = cur;
        }
        if n == 0 {
            break;
        }
        let prev = (2.0 * n as f64 + 1.0) / x * cur - next;
        next = cur;
        cur = prev;
        if cur.abs() > 1e250 {
            next *= 1e-250;
            cur *= 1e-250;
            for v in j.iter_mut() {
                *v *= 1e-250;
            }
        }
    }
    let j0 = if x < 1e-4 { 1.0 - x * x / 6.0 } else { s / x };
    let j1 = if x < 1e-4 { x / 3.0 - x * x * x / 30.0 } else { s / (x * x) - c / x };
    let scale = if j0.abs() >= j1.abs() { j0 / j[0] } else { j1 / j[1] };
    for v in j.iter_mut() {
        *v *= scale;
    }

    let mut y = vec![0.0; len];
    y[0] = -c / x;
    if len > 1 {
        y[1] = -c / (x * x) - s / x;
    }
    for n in 1..len - 1 {
        let v = (2.0 * n as f64 + 1.0) / x * y[n] - y[n - 1];
        y[n + 1] = if v.is_finite() { v.max(-f64::MAX) } else { -f64::MAX };
        if y[n + 1] == -f64::MAX {
            for w in &mut y[n + 1..] {
                *w = -f64::MAX;
            }
            break;
        }
    }
    Bessel { j, y }
}

/// Plane-wave modal coefficients `b_n(kr)` for `n = 0..=order` at each `kr`.
///
/// Open sphere: `4π iⁿ j_n(kr)`. Rigid sphere: `4π iⁿ (j_n − j_n'/h_n'·h_n)`
/// with `h_n = j_n − i y_n`, evaluated through the Wronskian as
/// `4π iⁿ (−i) / (kr² h_n'(kr))`. At `kr = 0` the limits `b_0 = 4π`,
/// `b_{n>0} = 0` are returned. Output is indexed `[n][k]`.
pub fn radial_functions(order: usize, kr: &[f64], baffle: Baffle) -> Vec<Vec<Complex64>> {
    let mut out = vec![vec![Complex64::new(0.0, 0.0); kr.len()]; order + 1];
    for (k, &x) in kr.iter().enumerate() {
        assert!(x >= 0.0 && x.is_finite(), "kr must be finite and non-negative");
        if x == 0.0 {
            out[0][k] = Complex64::new(4.0 * PI, 0.0);
            continue;
        }
        let bes = spherical_bessel(order, x);
        for n in 0..=order {
            let i_n = i_pow(n);
            let v = match baffle {
                Baffle::Open => Complex64::new(bes.j[n], 0.0),
                Baffle::Rigid => {
                    let jp = bes.j_prime(n, x);
                    let yp = bes.y_prime(n, x);
                    if !yp.is_finite() || yp.abs() >= f64::MAX / 4.0 {
                        Complex64::new(0.0, 0.0)
                    } else {
                        let hp = Complex64::new(jp, -yp);
                        Complex64::new(0.0, -1.0) / (hp * (x * x))
                    }
                }
            };
            out[n][k] = i_n * v * (4.0 * PI);
        }
    }
    out
}

#[inline]
fn i_pow(n: usize) -> Complex64 {
    match n % 4 {
        0 => Complex64::new(1.0, 0.0),
        1 => Complex64::new(0.0, 1.0),
        2 => Complex64::new(-1.0, 0.0),
        _ => Complex64::new(0.0, -1.0),
    }
}

/// Tikhonov-regularized inverses of the normalized modal coefficients
/// `b̃_n = b_n/(4π)`: `d_n = b̃_n* / (|b̃_n|² + λ²)` with `λ = 1/(2·10^(g/20))`,
/// so `max |d_n| = 10^(g/20)`. Indexed `[n][k]`.
pub fn radial_filters_tikhonov(order: usize, kr: &[f64], baffle: Baffle, max_gain_db: f64) -> Vec<Vec<Complex64>> {
    assert!(max_gain_db > 0.0, "max_gain_db must be positive");
    let lambda = 0.5 * 10f64.powf(-max_gain_db / 20.0);
    let b = radial_functions(order, kr, baffle);
    b.into_iter()
        .map(|bn| {
            bn.into_iter()
                .map(|v| {
                    let v = v / (4.0 * PI);
                    v.conj() / (v.norm_sqr() + lambda * lambda)
                })
                .collect()
        })
        .collect()
}

/// Cross-spectral coherence between two points on the sphere in an
/// isotropic diffuse field: `Σ_n |b̃_n|² (2n+1) P_n(cos γ)`, relative to the
/// free-field pressure power. Reduces to `sinc(k d)` for an open sphere.
pub fn diffuse_coherence(b_tilde_sq: &[f64], cos_gamma: f64) -> f64 {
    let p = legendre_series(b_tilde_sq.len().saturating_sub(1), cos_gamma);
    b_tilde_sq.iter().zip(p.iter()).enumerate().map(|(n, (b, p))| b * (2 * n + 1) as f64 * p).sum()
}

/// Series truncation order that resolves `kr` to near machine precision.
pub(crate) fn truncation_order(kr_max: f64) -> usize {
    (kr_max + 8.0 * kr_max.max(1.0).cbrt() + 12.0).ceil() as usize
}
