use std::f64::consts::PI;

use num_complex::Complex64;
use rustfft::FftPlanner;

use super::{ReflectionEvent, SimulateError};
use crate::dsp::hermitian_irfft;
use crate::numerics::DataMatrix;
use crate::sphere::{legendre_series, radial_functions, truncation_order, ArrayGeometry};

/// Controls for [`render_array_response`].
#[derive(Debug, Clone, PartialEq)]
pub struct RenderOptions {
    /// Length of each synthesized microphone response. The pulse sits at
    /// `kernel_len / 2`, so an event needs that many samples after its TOA.
    pub kernel_len: usize,
    /// Taps of the windowed-sinc fractional-delay pulse.
    pub pulse_taps: usize,
    pub kaiser_beta: f64,
    /// Pulse cutoff as a fraction of Nyquist. The default of 0.72 (17.3 kHz
    /// at 48 kHz) reproduces the single-plane-wave covariance ranks of 17/19
    /// and 29/30 reported for open/rigid 4.2 cm and 8.5 cm arrays.
    pub pulse_cutoff: f64,
    /// Modal series truncation; `None` picks an order that converges at Nyquist.
    pub max_order: Option<usize>,
    pub speed_of_sound: f64,
}

impl Default for RenderOptions {
    fn default() -> Self {
        Self {
            kernel_len: 512,
            pulse_taps: 64,
            kaiser_beta: 8.6,
            pulse_cutoff: 0.72,
            max_order: None,
            speed_of_sound: 343.0,
        }
    }
}

/// Renders plane-wave events at every microphone of a spherical array.
///
/// The transfer function of microphone `m` for an arrival from `u` is
/// `Σ_n b̃_n(kr)·(2n+1)·P_n(cos Θ_m)` with `b̃_n = b_n/(4π)`, applied to a
/// Kaiser-windowed sinc pulse that carries the fractional part of the TOA.
pub fn render_array_response(
    events: &[ReflectionEvent],
    geometry: &ArrayGeometry,
    fs: f64,
    length: usize,
    opts: &RenderOptions,
) -> Result<DataMatrix, SimulateError> {
    ArrayRenderer::new(geometry, fs, opts)?.render(events, length)
}

/// Precomputed modal coefficients for repeated rendering on one array.
#[derive(Debug, Clone)]
pub struct ArrayRenderer {
    geometry: ArrayGeometry,
    fs: f64,
    opts: RenderOptions,
    // [n][k], normalized by 4π and weighted by 2n+1
    modal: Vec<Vec<Complex64>>,
    mic_vectors: Vec<[f64; 3]>,
}

impl ArrayRenderer {
    pub fn new(geometry: &ArrayGeometry, fs: f64, opts: &RenderOptions) -> Result<Self, SimulateError> {
        let n = opts.kernel_len;
        if n < 2 * opts.pulse_taps || n % 2 != 0 {
            return Err(SimulateError::InvalidParameter(format!(
                "kernel_len {n} must be even and at least twice pulse_taps {}",
                opts.pulse_taps
            )));
        }
        if !(opts.pulse_cutoff > 0.0 && opts.pulse_cutoff <= 1.0) {
            return Err(SimulateError::InvalidParameter("pulse_cutoff must lie in (0, 1]".into()));
        }
        if !(fs > 0.0 && opts.speed_of_sound > 0.0) {
            return Err(SimulateError::InvalidParameter("sample rate and speed of sound must be positive".into()));
        }
        let bins = n / 2 + 1;
        let kr: Vec<f64> =
            (0..bins).map(|k| 2.0 * PI * (k as f64 * fs / n as f64) * geometry.radius / opts.speed_of_sound).collect();
        let order = opts.max_order.unwrap_or_else(|| truncation_order(kr[bins - 1]));
        let mut modal = radial_functions(order, &kr, geometry.baffle);
        for (deg, row) in modal.iter_mut().enumerate() {
            let w = (2 * deg + 1) as f64 / (4.0 * PI);
            row.iter_mut().for_each(|v| *v *= w);
        }
        Ok(Self {
            geometry: geometry.clone(),
            fs,
            opts: opts.clone(),
            modal,
            mic_vectors: geometry.directions.iter().map(|d| d.to_unit_vector()).collect(),
        })
    }

    pub fn geometry(&self) -> &ArrayGeometry {
        &self.geometry
    }

    /// Sum of all events, `length` samples long.
    pub fn render(&self, events: &[ReflectionEvent], length: usize) -> Result<DataMatrix, SimulateError> {
        let n = self.opts.kernel_len;
        let half = n / 2;
        let mut out = DataMatrix::zeros(length, self.geometry.mics());
        for ev in events {
            if !(ev.toa >= 0.0 && ev.toa.is_finite() && ev.gain.is_finite()) {
                return Err(SimulateError::InvalidParameter(format!("invalid event {ev:?}")));
            }
            let pos = ev.toa * self.fs;
            let i0 = pos.floor() as usize;
            if i0 + half > length {
                return Err(SimulateError::LengthTooShort { needed: i0 + half, length });
            }
            let kernels = self.event_kernels(ev, pos - i0 as f64);
            for (m, h) in kernels.iter().enumerate() {
                let col = out.column_mut(m);
                for (tau, v) in h.iter().enumerate() {
                    let t = i0 as isize - half as isize + tau as isize;
                    if t >= 0 && (t as usize) < length {
                        col[t as usize] += ev.gain * v;
                    }
                }
            }
        }
        Ok(out)
    }

    /// Per-microphone responses of one unit-gain event, each `kernel_len`
    /// long with the arrival at index `kernel_len/2 + frac`.
    pub fn event_kernels(&self, ev: &ReflectionEvent, frac: f64) -> Vec<Vec<f64>> {
        let n = self.opts.kernel_len;
        let bins = n / 2 + 1;
        let pulse = windowed_sinc(
            n,
            n as f64 / 2.0 + frac,
            self.opts.pulse_taps,
            self.opts.pulse_cutoff,
            self.opts.kaiser_beta,
        );
        let mut spec: Vec<Complex64> = pulse.iter().map(|&v| Complex64::new(v, 0.0)).collect();
        FftPlanner::new().plan_fft_forward(n).process(&mut spec);
        let u = ev.doa.to_unit_vector();
        let order = self.modal.len() - 1;
        self.mic_vectors
            .iter()
            .map(|mv| {
                let cos = (mv[0] * u[0] + mv[1] * u[1] + mv[2] * u[2]).clamp(-1.0, 1.0);
                let p = legendre_series(order, cos);
                let mut h: Vec<Complex64> = (0..bins)
                    .map(|k| {
                        let s: Complex64 = (0..=order).map(|deg| self.modal[deg][k] * p[deg]).sum();
                        s * spec[k]
                    })
                    .collect();
                h[bins - 1] = Complex64::new(h[bins - 1].re, 0.0);
                hermitian_irfft(&h, n)
            })
            .collect()
    }
}

/// Kaiser-windowed sinc of `taps` samples centred at the continuous
/// position `center`, with cutoff `cutoff`·Nyquist and unit DC gain.
pub(crate) fn windowed_sinc(len: usize, center: f64, taps: usize, cutoff: f64, beta: f64) -> Vec<f64> {
    let half = taps as f64 / 2.0;
    let norm = bessel_i0(beta);
    let first = (center - half).ceil().max(0.0) as usize;
    let mut out = vec![0.0; len];
    for (i, v) in out.iter_mut().enumerate().skip(first) {
        let t = i as f64 - center;
        if t.abs() > half {
            if t > 0.0 {
                break;
            }
            continue;
        }
        let r = t / half;
        let w = bessel_i0(beta * (1.0 - r * r).max(0.0).sqrt()) / norm;
        *v = cutoff * sinc(cutoff * t) * w;
    }
    out
}

fn sinc(x: f64) -> f64 {
    if x.abs() < 1e-12 {
        1.0
    } else {
        (PI * x).sin() / (PI * x)
    }
}

// Power series of the modified Bessel function I0.
fn bessel_i0(x: f64) -> f64 {
    let q = x * x / 4.0;
    let mut term = 1.0;
    let mut sum = 1.0;
    for k in 1..200 {
        term *= q / (k * k) as f64;
        sum += term;
        if term < sum * 1e-17 {
            break;
        }
    }
    sum
}
