use std::f64::consts::PI;

use nalgebra::DMatrix;
use num_complex::Complex64;

use super::{acn_degree, radial_filters_tikhonov, real_sh_matrix, sh_count, ArrayGeometry, SphereError};
use crate::dsp::{convolve_same, hermitian_irfft};
use crate::numerics::DataMatrix;

/// FIR length of the radial filters.
pub const FILTER_LEN: usize = 512;

/// Least-squares SH encoder with Tikhonov-regularized radial filters.
///
/// Radial filters equalize `b_n/(4π)`, so a unit plane wave from `u` encodes
/// to `4π·Y_nm(u)` in the filter passband.
#[derive(Debug, Clone)]
pub struct ShTransform {
    pub order: usize,
    /// (order+1)² × M
    pub encoding: DMatrix<f64>,
    /// One FIR per SH degree, `FILTER_LEN` taps, bulk delay `FILTER_LEN / 2`.
    pub radial_filters: Vec<Vec<f64>>,
    /// Sampled frequency responses, `FILTER_LEN / 2 + 1` bins per degree.
    pub responses: Vec<Vec<Complex64>>,
    pub sample_rate: f64,
    pub max_gain_db: f64,
}

impl ShTransform {
    pub fn new(
        geometry: &ArrayGeometry,
        order: usize,
        sample_rate: f64,
        speed_of_sound: f64,
        max_gain_db: f64,
    ) -> Result<Self, SphereError> {
        let q = sh_count(order);
        if q > geometry.mics() {
            return Err(SphereError::TooFewMicrophones { order, needed: q, available: geometry.mics() });
        }
        let y = real_sh_matrix(order, &geometry.directions);
        let encoding = y
            .pseudo_inverse(1e-12)
            .map_err(|e| SphereError::InvalidGeometry(format!("SH matrix pseudo-inverse failed: {e}")))?;

        let bins = FILTER_LEN / 2 + 1;
        let kr: Vec<f64> = (0..bins)
            .map(|k| 2.0 * PI * (k as f64 * sample_rate / FILTER_LEN as f64) * geometry.radius / speed_of_sound)
            .collect();
        let mut responses = radial_filters_tikhonov(order, &kr, geometry.baffle, max_gain_db);
        for resp in responses.iter_mut() {
            let last = resp[bins - 1];
            resp[bins - 1] = Complex64::new(last.re, 0.0);
        }
        let window = tukey(FILTER_LEN, 0.25);
        let radial_filters = responses
            .iter()
            .map(|resp| {
                let delayed: Vec<Complex64> =
                    resp.iter().enumerate().map(|(k, v)| if k % 2 == 0 { *v } else { -*v }).collect();
                let mut h = hermitian_irfft(&delayed, FILTER_LEN);
                for (v, w) in h.iter_mut().zip(window.iter()) {
                    *v *= w;
                }
                h
            })
            .collect();
        Ok(Self { order, encoding, radial_filters, responses, sample_rate, max_gain_db })
    }

    pub fn channels(&self) -> usize {
        self.encoding.nrows()
    }

    pub fn mics(&self) -> usize {
        self.encoding.ncols()
    }
}

/// Least-squares SH encoding followed by per-degree radial filtering.
/// The filter bulk delay is compensated, so the output is time-aligned with
/// the input and has the same length.
pub fn encode_sh(
    signals: &DataMatrix,
    geometry: &ArrayGeometry,
    transform: &ShTransform,
) -> Result<DataMatrix, SphereError> {
    if signals.cols() != geometry.mics() || transform.mics() != geometry.mics() {
        return Err(SphereError::ChannelMismatch { signal: signals.cols(), geometry: geometry.mics() });
    }
    let projected = signals.as_matrix() * transform.encoding.transpose();
    let mut out = DataMatrix::zeros(signals.rows(), transform.channels());
    for ch in 0..transform.channels() {
        let col: Vec<f64> = projected.column(ch).iter().copied().collect();
        let filt = &transform.radial_filters[acn_degree(ch)];
        let y = convolve_same(&col, filt, FILTER_LEN / 2);
        out.column_mut(ch).copy_from_slice(&y);
    }
    Ok(out)
}

pub(crate) fn tukey(len: usize, alpha: f64) -> Vec<f64> {
    let taper = ((alpha * (len - 1) as f64) / 2.0).floor() as usize;
    (0..len)
        .map(|i| {
            let d = i.min(len - 1 - i);
            if d >= taper || taper == 0 {
                1.0
            } else {
                0.5 * (1.0 - (PI * d as f64 / taper as f64).cos())
            }
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::super::{tdesign_directions, Baffle, Direction};
    use super::*;
    use crate::simulate::{render_array_response, ReflectionEvent, RenderOptions};

    const FS: f64 = 48_000.0;
    const C: f64 = 343.0;

    #[test]
    fn zero_in_zero_out() {
        let geo = ArrayGeometry::tdesign(32, 0.042, Baffle::Rigid).unwrap();
        let t = ShTransform::new(&geo, 4, FS, C, 40.0).unwrap();
        let out = encode_sh(&DataMatrix::zeros(300, 32), &geo, &t).unwrap();
        assert_eq!(out.cols(), 25);
        assert_eq!(out.rows(), 300);
        assert!(out.as_matrix().amax() == 0.0);
    }

    #[test]
    fn order_too_high() {
        let geo = ArrayGeometry::tdesign(16, 0.042, Baffle::Open).unwrap();
        assert!(matches!(
            ShTransform::new(&geo, 4, FS, C, 40.0),
            Err(SphereError::TooFewMicrophones { needed: 25, available: 16, .. })
        ));
    }

    #[test]
    fn omni_signal_encodes_to_sqrt_four_pi() {
        // Low-frequency sinusoid identical at every open-array microphone.
        let geo = ArrayGeometry::tdesign(32, 0.042, Baffle::Open).unwrap();
        let t = ShTransform::new(&geo, 4, FS, C, 40.0).unwrap();
        let n = 4096;
        let sig: Vec<f64> = (0..n).map(|i| (2.0 * PI * 375.0 * i as f64 / FS).sin()).collect();
        let cols = vec![sig.clone(); 32];
        let x = DataMatrix::from_columns(&cols).unwrap();
        let y = encode_sh(&x, &geo, &t).unwrap();
        let mid = 1024..3072;
        let rms_in = (sig[mid.clone()].iter().map(|v| v * v).sum::<f64>() / 2048.0).sqrt();
        let rms_out = (y.column(0)[mid].iter().map(|v| v * v).sum::<f64>() / 2048.0).sqrt();
        let ratio_db = 20.0 * (rms_out / (rms_in * (4.0 * PI).sqrt())).log10();
        assert!(ratio_db.abs() < 0.5, "{ratio_db} dB");
    }

    #[test]
    fn beam_scan_peaks_at_arrival_direction() {
        let geo = ArrayGeometry::tdesign(32, 0.042, Baffle::Rigid).unwrap();
        let t = ShTransform::new(&geo, 4, FS, C, 40.0).unwrap();
        let grid = tdesign_directions(240).unwrap();
        for &src in &[grid[17], grid[101], Direction::new(1.0, 2.0)] {
            let ev = ReflectionEvent { toa: 0.01, doa: src, gain: 1.0 };
            // pulse band-limited to 6 kHz, below the spatial aliasing limit of order 4
            let opts = RenderOptions { pulse_cutoff: 0.25, ..RenderOptions::default() };
            let x = render_array_response(&[ev], &geo, FS, 2048, &opts).unwrap();
            let a = encode_sh(&x, &geo, &t).unwrap();
            let y = real_sh_matrix(4, &grid);
            let beams = a.as_matrix() * y.transpose();
            let energy: Vec<f64> = beams.column_iter().map(|c| c.norm_squared()).collect();
            let best = (0..grid.len()).max_by(|&i, &j| energy[i].total_cmp(&energy[j])).unwrap();
            // best grid point is the nearest grid point to the source
            let nearest =
                (0..grid.len()).min_by(|&i, &j| grid[i].angle_to(src).total_cmp(&grid[j].angle_to(src))).unwrap();
            assert_eq!(best, nearest);
        }
    }

    #[test]
    fn tukey_shape() {
        let w = tukey(16, 0.5);
        assert_eq!(w[0], 0.0);
        assert_eq!(w[8], 1.0);
        assert!(w.iter().all(|v| (0.0..=1.0).contains(v)));
    }
}
