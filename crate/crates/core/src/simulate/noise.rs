use std::f64::consts::PI;

use nalgebra::{DMatrix, SymmetricEigen};
use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rustfft::FftPlanner;

use super::SimulateError;
use crate::numerics::DataMatrix;
use crate::sphere::{diffuse_coherence, encode_sh, radial_functions, truncation_order, ArrayGeometry, ShTransform};

/// Frequency resolution of the coherence factorization.
pub const COHERENCE_FFT_LEN: usize = 512;

/// Gaussian noise with the spatial coherence of an isotropic diffuse field
/// on the given array.
///
/// Independent white spectra are mixed per frequency bin by a square root
/// of the normalized coherence matrix, evaluated on a `COHERENCE_FFT_LEN`
/// grid and held constant between grid points. Every channel has unit
/// variance and a flat spectrum.
pub fn isotropic_coherent_noise(
    geometry: &ArrayGeometry,
    length: usize,
    fs: f64,
    speed_of_sound: f64,
    seed: u64,
) -> Result<DataMatrix, SimulateError> {
    if length < 256 {
        return Err(SimulateError::InvalidParameter(format!("noise length {length} below 256 samples")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let m = geometry.mics();
    let n = length.next_power_of_two().max(COHERENCE_FFT_LEN);
    let mut planner = FftPlanner::new();
    let fwd = planner.plan_fft_forward(n);
    let inv = planner.plan_fft_inverse(n);

    let spectra: Vec<Vec<Complex64>> = (0..m)
        .map(|_| {
            let mut buf: Vec<Complex64> =
                (0..n).map(|_| Complex64::new(StandardNormal.sample(&mut rng), 0.0)).collect();
            fwd.process(&mut buf);
            buf
        })
        .collect();

    let mixers = coherence_factors(geometry, fs, speed_of_sound);
    let bins = n / 2 + 1;
    let mut mixed = vec![vec![Complex64::new(0.0, 0.0); n]; m];
    let mut x = vec![Complex64::new(0.0, 0.0); m];
    for k in 0..bins {
        let coarse = ((k * COHERENCE_FFT_LEN) as f64 / n as f64).round() as usize;
        let c = &mixers[coarse.min(COHERENCE_FFT_LEN / 2)];
        for (j, s) in spectra.iter().enumerate() {
            x[j] = s[k];
        }
        for i in 0..m {
            let mut acc = Complex64::new(0.0, 0.0);
            for j in 0..m {
                acc += x[j] * c[(i, j)];
            }
            mixed[i][k] = acc;
            if k > 0 && k < n - k {
                mixed[i][n - k] = acc.conj();
            }
        }
    }
    let mut out = DataMatrix::zeros(length, m);
    for (i, mut buf) in mixed.into_iter().enumerate() {
        inv.process(&mut buf);
        let col = out.column_mut(i);
        for (t, v) in col.iter_mut().enumerate() {
            *v = buf[t].re / n as f64;
        }
    }
    Ok(out)
}

/// Isotropic noise rendered at the microphones and then SH-encoded.
pub fn isotropic_coherent_noise_sh(
    geometry: &ArrayGeometry,
    transform: &ShTransform,
    length: usize,
    fs: f64,
    speed_of_sound: f64,
    seed: u64,
) -> Result<DataMatrix, SimulateError> {
    let mics = isotropic_coherent_noise(geometry, length, fs, speed_of_sound, seed)?;
    Ok(encode_sh(&mics, geometry, transform)?)
}

/// Normalized diffuse-field coherence between every microphone pair at
/// each bin of the `COHERENCE_FFT_LEN` grid.
pub fn diffuse_coherence_matrices(geometry: &ArrayGeometry, fs: f64, speed_of_sound: f64) -> Vec<DMatrix<f64>> {
    let bins = COHERENCE_FFT_LEN / 2 + 1;
    let kr: Vec<f64> = (0..bins)
        .map(|k| 2.0 * PI * (k as f64 * fs / COHERENCE_FFT_LEN as f64) * geometry.radius / speed_of_sound)
        .collect();
    let order = truncation_order(kr[bins - 1]);
    let b = radial_functions(order, &kr, geometry.baffle);
    let vecs: Vec<[f64; 3]> = geometry.directions.iter().map(|d| d.to_unit_vector()).collect();
    let m = vecs.len();
    (0..bins)
        .map(|k| {
            let b2: Vec<f64> = b.iter().map(|bn| (bn[k] / (4.0 * PI)).norm_sqr()).collect();
            let diag = diffuse_coherence(&b2, 1.0);
            DMatrix::from_fn(m, m, |i, j| {
                if i == j {
                    return 1.0;
                }
                let c = vecs[i][0] * vecs[j][0] + vecs[i][1] * vecs[j][1] + vecs[i][2] * vecs[j][2];
                diffuse_coherence(&b2, c.clamp(-1.0, 1.0)) / diag
            })
        })
        .collect()
}

fn coherence_factors(geometry: &ArrayGeometry, fs: f64, speed_of_sound: f64) -> Vec<DMatrix<f64>> {
    diffuse_coherence_matrices(geometry, fs, speed_of_sound)
        .into_iter()
        .enumerate()
        .map(|(k, gamma)| {
            let eig = SymmetricEigen::new(gamma);
            let max = eig.eigenvalues.max();
            let min = eig.eigenvalues.min();
            if min < -1e-8 * max {
                log::warn!("coherence matrix at bin {k} is indefinite (min eigenvalue {min:e}); clamping");
            }
            let mut c = eig.eigenvectors;
            for (j, &lam) in eig.eigenvalues.iter().enumerate() {
                let s = lam.max(0.0).sqrt();
                c.column_mut(j).iter_mut().for_each(|v| *v *= s);
            }
            c
        })
        .collect()
}

/// Multiplies sample `t` by `10^(−decay·t/(20·fs))`.
pub fn apply_decay(noise: &DataMatrix, decay_db_per_s: f64, fs: f64) -> DataMatrix {
    assert!(decay_db_per_s >= 0.0, "decay must be non-negative");
    let mut out = noise.clone();
    if decay_db_per_s == 0.0 {
        return out;
    }
    let env: Vec<f64> = (0..noise.rows()).map(|t| 10f64.powf(-decay_db_per_s * t as f64 / (20.0 * fs))).collect();
    for c in 0..out.cols() {
        for (v, e) in out.column_mut(c).iter_mut().zip(env.iter()) {
            *v *= e;
        }
    }
    out
}
