use super::rank::mean_std;
use super::AnalyzeError;
use crate::dsp::fft_real;
use crate::numerics::DataMatrix;

/// Rectangular evaluation window, zero-padded to `nfft` points.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ErrorWindow {
    pub len: usize,
    pub nfft: usize,
}

impl Default for ErrorWindow {
    /// 1 ms at 48 kHz in a 128-point DFT.
    fn default() -> Self {
        Self { len: 48, nfft: 128 }
    }
}

impl ErrorWindow {
    /// 1 ms window at `fs`, with at least 128 DFT points.
    pub fn one_ms(fs: f64) -> Self {
        let len = ((1e-3 * fs).round() as usize).max(1);
        Self { len, nfft: len.next_power_of_two().max(128) }
    }

    /// First sample of the window centred on `toa` seconds.
    pub fn start(&self, toa: f64, fs: f64) -> isize {
        (toa * fs).round() as isize - (self.len / 2) as isize
    }
}

/// `Σ_b ‖χ(f_b) − χ_gt(f_b)‖ / Σ_b ‖χ_gt(f_b)‖`, with channel-wise spectra of
/// the window centred on `toa`.
pub fn spatio_spectral_error(
    est: &DataMatrix,
    gt: &DataMatrix,
    toa: f64,
    fs: f64,
    window: ErrorWindow,
) -> Result<f64, AnalyzeError> {
    if est.cols() != gt.cols() {
        return Err(AnalyzeError::InvalidParameter(format!(
            "estimate has {} channels, ground truth {}",
            est.cols(),
            gt.cols()
        )));
    }
    if window.len == 0 || window.nfft < window.len {
        return Err(AnalyzeError::InvalidParameter(format!(
            "window of {} samples in a {}-point DFT",
            window.len, window.nfft
        )));
    }
    let start = window.start(toa, fs);
    let end = start + window.len as isize;
    if start < 0 || end as usize > est.rows().min(gt.rows()) {
        return Err(AnalyzeError::InvalidParameter(format!(
            "window [{start}, {end}) around {toa} s leaves the signal"
        )));
    }
    let start = start as usize;
    let mut diff_sq = vec![0.0; window.nfft];
    let mut gt_sq = vec![0.0; window.nfft];
    for c in 0..gt.cols() {
        let e = fft_real(&est.column(c)[start..start + window.len], window.nfft);
        let g = fft_real(&gt.column(c)[start..start + window.len], window.nfft);
        for b in 0..window.nfft {
            diff_sq[b] += (e[b] - g[b]).norm_sqr();
            gt_sq[b] += g[b].norm_sqr();
        }
    }
    let den: f64 = gt_sq.iter().map(|v| v.sqrt()).sum();
    if den == 0.0 {
        return Err(AnalyzeError::ZeroGroundTruth);
    }
    Ok(diff_sq.iter().map(|v| v.sqrt()).sum::<f64>() / den)
}

/// Euclidean norm across channels, per sample.
pub fn norm_trace(x: &DataMatrix) -> Vec<f64> {
    x.as_matrix().row_iter().map(|r| r.norm()).collect()
}

/// Keeps `srir` inside the union of windows centred on `toas` and zeroes
/// everything else. Windows are clipped to the signal.
pub fn temporal_cutout(srir: &DataMatrix, toas: &[f64], fs: f64, window_len: usize) -> DataMatrix {
    let n = srir.rows();
    let mut keep = vec![false; n];
    for &toa in toas {
        let start = (toa * fs).round() as isize - (window_len / 2) as isize;
        let lo = start.clamp(0, n as isize) as usize;
        let hi = (start + window_len as isize).clamp(0, n as isize) as usize;
        keep[lo..hi].iter_mut().for_each(|k| *k = true);
    }
    let mut out = srir.clone();
    for c in 0..out.cols() {
        for (v, k) in out.column_mut(c).iter_mut().zip(&keep) {
            if !k {
                *v = 0.0;
            }
        }
    }
    out
}

/// Per-event errors of one method on one scene.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ErrorReport {
    pub eps_dir: Vec<f64>,
    /// Empty for methods without a residual output.
    pub eps_res: Vec<f64>,
    /// Great-circle DOA errors in degrees.
    pub doa_error_deg: Vec<f64>,
}

impl ErrorReport {
    /// Mean and sample standard deviation of `eps_dir`.
    pub fn eps_dir_stats(&self) -> (f64, f64) {
        mean_std(&self.eps_dir)
    }

    pub fn eps_res_stats(&self) -> (f64, f64) {
        mean_std(&self.eps_res)
    }

    pub fn doa_error_mean(&self) -> f64 {
        mean_std(&self.doa_error_deg).0
    }
}
