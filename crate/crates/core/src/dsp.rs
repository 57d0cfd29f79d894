//! FFT helpers shared by the encoder, the renderers and the evaluation code.

use num_complex::Complex64;
use rustfft::FftPlanner;

/// Forward DFT of a real signal zero-padded (or truncated) to `n` points.
/// Returns all `n` bins.
pub fn fft_real(x: &[f64], n: usize) -> Vec<Complex64> {
    let mut buf: Vec<Complex64> = (0..n).map(|i| Complex64::new(x.get(i).copied().unwrap_or(0.0), 0.0)).collect();
    FftPlanner::new().plan_fft_forward(n).process(&mut buf);
    buf
}

/// Inverse DFT of the one-sided spectrum `half` (`n/2 + 1` bins) of a real
/// signal. Output is scaled by `1/n`.
pub fn hermitian_irfft(half: &[Complex64], n: usize) -> Vec<f64> {
    assert_eq!(half.len(), n / 2 + 1, "one-sided spectrum has n/2+1 bins");
    let mut buf = vec![Complex64::new(0.0, 0.0); n];
    buf[..half.len()].copy_from_slice(half);
    for k in 1..n.div_ceil(2) {
        buf[n - k] = half[k].conj();
    }
    FftPlanner::new().plan_fft_inverse(n).process(&mut buf);
    buf.iter().map(|v| v.re / n as f64).collect()
}

/// `y[t] = Σ_τ h[τ]·x[t + delay − τ]` for `t` in `0..x.len()`.
pub fn convolve_same(x: &[f64], h: &[f64], delay: usize) -> Vec<f64> {
    let full = x.len() + h.len() - 1;
    let n = full.next_power_of_two();
    let mut planner = FftPlanner::new();
    let fwd = planner.plan_fft_forward(n);
    let inv = planner.plan_fft_inverse(n);
    let mut a: Vec<Complex64> = (0..n).map(|i| Complex64::new(x.get(i).copied().unwrap_or(0.0), 0.0)).collect();
    let mut b: Vec<Complex64> = (0..n).map(|i| Complex64::new(h.get(i).copied().unwrap_or(0.0), 0.0)).collect();
    fwd.process(&mut a);
    fwd.process(&mut b);
    for (u, v) in a.iter_mut().zip(b.iter()) {
        *u *= v;
    }
    inv.process(&mut a);
    (0..x.len())
        .map(|t| {
            let i = t + delay;
            if i < full {
                a[i].re / n as f64
            } else {
                0.0
            }
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn convolution_matches_direct_sum() {
        let x: Vec<f64> = (0..50).map(|i| ((i * 7) % 11) as f64 - 5.0).collect();
        let h = [0.5, -1.0, 0.25, 2.0];
        let y = convolve_same(&x, &h, 2);
        for t in 0..x.len() {
            let mut acc = 0.0;
            for (tau, hv) in h.iter().enumerate() {
                let idx = t as isize + 2 - tau as isize;
                if idx >= 0 && (idx as usize) < x.len() {
                    acc += hv * x[idx as usize];
                }
            }
            assert!((acc - y[t]).abs() < 1e-12);
        }
    }

    #[test]
    fn irfft_inverts_fft() {
        let x: Vec<f64> = (0..16).map(|i| (i as f64 * 0.3).sin()).collect();
        let spec = fft_real(&x, 16);
        let back = hermitian_irfft(&spec[..9], 16);
        for (a, b) in x.iter().zip(back.iter()) {
            assert!((a - b).abs() < 1e-12);
        }
    }
}
