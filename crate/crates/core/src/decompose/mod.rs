//! Backward blockwise GSVD decomposition of an SRIR into a direct part and
//! a residual.
//!
//! The sweep starts at the end of the signal, where the last `L` samples
//! seed the residual estimate, and moves toward the beginning in steps of
//! `hop`. Each block is compared with the residual estimate through its
//! GSV sum ξ. Blocks whose ξ exceeds `mean + κ·std` of recent sums are
//! split by a low-rank GSVD approximation; all others are residual and feed
//! both FIFOs.

mod buffers;
mod trace;

pub use buffers::{GsvSumBuffer, ResidualBuffer};
pub(crate) use trace::sig9;
pub use trace::{write_trace_csv, TRACE_CSV_HEADER};

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::numerics::{gsvd, gsvd_split, DataMatrix, LinalgError};

#[derive(Debug, Error)]
pub enum DecomposeError {
    #[error("invalid parameters: {0}")]
    InvalidParams(String),
    #[error("signal has {length} samples but at least {needed} are required")]
    TooShort { length: usize, needed: usize },
    #[error("decomposition needs at least 2 channels, got {0}")]
    TooFewChannels(usize),
    #[error(transparent)]
    Linalg(#[from] LinalgError),
}

/// Tuning knobs of the sweep.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DecomposeParams {
    /// Block length K in samples.
    pub block_size: usize,
    pub hop: usize,
    /// Residual estimate length L in samples.
    pub residual_len: usize,
    /// Number of GSV sums averaged for the threshold.
    pub gsv_avg_len: usize,
    pub kappa: f64,
    pub sample_rate: f64,
}

impl Default for DecomposeParams {
    /// 32-sample blocks, hop 4, 20 ms residual estimate at 48 kHz,
    /// 32 averaged blocks, κ = 4.
    fn default() -> Self {
        Self { block_size: 32, hop: 4, residual_len: 960, gsv_avg_len: 32, kappa: 4.0, sample_rate: 48_000.0 }
    }
}

impl DecomposeParams {
    /// Defaults for an array with `channels` channels: 32-sample blocks up
    /// to 32 channels, 64 above, hop one eighth of the block.
    pub fn for_channels(channels: usize) -> Self {
        let block_size = if channels <= 32 { 32 } else { 64 };
        Self { block_size, hop: block_size / 8, ..Self::default() }
    }

    /// Residual estimate length for `seconds` at the configured rate.
    pub fn with_residual_seconds(mut self, seconds: f64) -> Self {
        self.residual_len = (seconds * self.sample_rate).round() as usize;
        self
    }

    pub fn validate(&self, channels: usize) -> Result<(), DecomposeError> {
        let bad = |m: String| Err(DecomposeError::InvalidParams(m));
        if self.hop == 0 || self.block_size % self.hop != 0 {
            return bad(format!("hop {} must divide block size {}", self.hop, self.block_size));
        }
        if self.block_size < channels {
            return bad(format!("block size {} below channel count {channels}", self.block_size));
        }
        if self.residual_len < channels {
            return bad(format!("residual length {} below channel count {channels}", self.residual_len));
        }
        if self.gsv_avg_len < 2 {
            return bad("gsv_avg_len must be at least 2".into());
        }
        if !(self.kappa > 0.0 && self.kappa.is_finite()) {
            return bad(format!("kappa {} must be positive", self.kappa));
        }
        if !(self.sample_rate > 0.0) {
            return bad("sample rate must be positive".into());
        }
        Ok(())
    }
}

/// Per-block record of the sweep.
#[derive(Debug, Clone, PartialEq)]
pub struct BlockTrace {
    /// First sample of the block; negative for the zero-padded last block.
    pub block_start: isize,
    /// ξ, NaN if the residual estimate was singular.
    pub gsv_sum: f64,
    /// Mean of the GSV-sum buffer, NaN while it still holds sentinels.
    pub mean_mu: f64,
    pub threshold: f64,
    pub detected: bool,
    pub q_s: usize,
    /// ζ(1..=M) for detected blocks.
    pub zeta: Option<Vec<f64>>,
}

#[derive(Debug, Clone)]
pub struct DecompositionResult {
    pub direct: DataMatrix,
    pub residual: DataMatrix,
    pub traces: Vec<BlockTrace>,
}

impl DecompositionResult {
    /// Number of runs of consecutive detected blocks.
    pub fn detection_clusters(&self) -> Vec<std::ops::Range<usize>> {
        let mut out = Vec::new();
        let mut open: Option<usize> = None;
        for (i, t) in self.traces.iter().enumerate() {
            match (t.detected, open) {
                (true, None) => open = Some(i),
                (false, Some(s)) => {
                    out.push(s..i);
                    open = None;
                }
                _ => {}
            }
        }
        if let Some(s) = open {
            out.push(s..self.traces.len());
        }
        out
    }
}

/// True iff `ξ > mean + κ·std` of the real entries of `buffer`. Always
/// false while fewer than two real entries exist.
pub fn detect_reflection(gsv_sum: f64, buffer: &GsvSumBuffer, kappa: f64) -> bool {
    match buffer.threshold(kappa) {
        Some(th) => gsv_sum > th,
        None => false,
    }
}

/// ζ(k) = (M/k)·(sum of the k smallest σ), for k = 1..=M.
pub fn cumulative_sums(gsv: &[f64]) -> Vec<f64> {
    let m = gsv.len();
    let mut acc = 0.0;
    (1..=m)
        .map(|k| {
            acc += gsv[m - k];
            m as f64 / k as f64 * acc
        })
        .collect()
}

/// Residual and direct subspace dimensions `(q_n, q_s)` from descending
/// GSVs: `q_n` is the largest `k` with `ζ(k) < μ`, or 0 if there is none.
pub fn estimate_qn(gsv: &[f64], mu: f64) -> (usize, usize) {
    let zeta = cumulative_sums(gsv);
    let q_n = zeta.iter().rposition(|&z| z < mu).map_or(0, |i| i + 1);
    (q_n, gsv.len() - q_n)
}

/// One block's split, positioned at `start` (may be negative; rows before
/// sample 0 are dropped).
#[derive(Debug, Clone)]
pub struct BlockSplit {
    pub start: isize,
    pub direct: DataMatrix,
    pub residual: DataMatrix,
}

/// Overlap-average of block splits. Samples not covered by any block are 0.
pub fn recombine_blocks(splits: &[BlockSplit], length: usize, channels: usize) -> (DataMatrix, DataMatrix) {
    let mut acc = Recombiner::new(length, channels);
    for s in splits {
        acc.add(s.start, s.direct.as_matrix(), s.residual.as_matrix());
    }
    let (d, r, _) = acc.finish();
    (d, r)
}

struct Recombiner {
    direct: DMatrix<f64>,
    residual: DMatrix<f64>,
    count: Vec<u32>,
}

impl Recombiner {
    fn new(length: usize, channels: usize) -> Self {
        Self {
            direct: DMatrix::zeros(length, channels),
            residual: DMatrix::zeros(length, channels),
            count: vec![0; length],
        }
    }

    fn add(&mut self, start: isize, direct: &DMatrix<f64>, residual: &DMatrix<f64>) {
        let len = self.count.len() as isize;
        for r in 0..direct.nrows() {
            let t = start + r as isize;
            if t < 0 || t >= len {
                continue;
            }
            let t = t as usize;
            self.count[t] += 1;
            for c in 0..direct.ncols() {
                self.direct[(t, c)] += direct[(r, c)];
                self.residual[(t, c)] += residual[(r, c)];
            }
        }
    }

    fn finish(mut self) -> (DataMatrix, DataMatrix, Vec<u32>) {
        for (t, &n) in self.count.iter().enumerate() {
            if n > 1 {
                let w = 1.0 / n as f64;
                for c in 0..self.direct.ncols() {
                    self.direct[(t, c)] *= w;
                    self.residual[(t, c)] *= w;
                }
            }
        }
        (DataMatrix(self.direct), DataMatrix(self.residual), self.count)
    }
}

/// ξ = trace(XᵀX·(NᵀN)⁻¹), the sum of the squared generalized singular
/// values of (X, N). `None` if the Gram matrix is not positive definite.
fn gsv_sum_whitened(x: &DMatrix<f64>, gram: &DMatrix<f64>) -> Option<f64> {
    let l = gram.clone().cholesky()?.l();
    let y = l.solve_lower_triangular(&x.transpose())?;
    let v = y.norm_squared();
    v.is_finite().then_some(v)
}

/// Runs the backward sweep.
pub fn run(srir: &DataMatrix, params: &DecomposeParams) -> Result<DecompositionResult, DecomposeError> {
    let len = srir.rows();
    let m = srir.cols();
    if m < 2 {
        return Err(DecomposeError::TooFewChannels(m));
    }
    params.validate(m)?;
    let k = params.block_size;
    let l = params.residual_len;
    if len < l + k {
        return Err(DecomposeError::TooShort { length: len, needed: l + k });
    }
    let x_all = srir.as_matrix();
    let mut noise = ResidualBuffer::new(&srir.slice_rows(len - l, l));
    let mut sums = GsvSumBuffer::new(params.gsv_avg_len);
    let mut acc = Recombiner::new(len, m);
    let mut traces = Vec::new();

    let mut frontier = len - l;
    let mut start = (len - l - k) as isize;
    loop {
        let block = DMatrix::from_fn(k, m, |r, c| {
            let t = start + r as isize;
            if t < 0 {
                0.0
            } else {
                x_all[(t as usize, c)]
            }
        });
        let xi = gsv_sum_whitened(&block, noise.gram());
        let ready = sums.is_full();
        let mean_mu = if ready { sums.mean().unwrap_or(f64::NAN) } else { f64::NAN };
        let threshold = if ready { sums.threshold(params.kappa).unwrap_or(f64::NAN) } else { f64::NAN };
        let mut trace = BlockTrace {
            block_start: start,
            gsv_sum: xi.unwrap_or(f64::NAN),
            mean_mu,
            threshold,
            detected: false,
            q_s: 0,
            zeta: None,
        };

        let mut split = None;
        if let Some(xi) = xi {
            if ready && detect_reflection(xi, &sums, params.kappa) {
                match gsvd(&DataMatrix(block.clone()), &noise.data()) {
                    Ok(f) => {
                        let (_, q_s) = estimate_qn(f.gsv.as_slice(), mean_mu);
                        let (xs, xn) = gsvd_split(&f, q_s)?;
                        trace.detected = true;
                        trace.q_s = q_s;
                        trace.zeta = Some(cumulative_sums(f.gsv.as_slice()));
                        split = Some((xs.0, xn.0));
                    }
                    Err(e) => log::warn!("block at {start}: GSVD failed ({e}); treating as residual"),
                }
            }
        }

        let first_new = start.max(0) as usize;
        match split {
            Some((xs, xn)) => acc.add(start, &xs, &xn),
            None => {
                acc.add(start, &DMatrix::zeros(k, m), &block);
                for t in (first_new..frontier).rev() {
                    let row: Vec<f64> = x_all.row(t).iter().copied().collect();
                    noise.push_row(&row);
                }
                if let Some(xi) = xi {
                    sums.push(xi);
                }
            }
        }
        frontier = frontier.min(first_new);
        traces.push(trace);
        if start <= 0 {
            break;
        }
        start -= params.hop as isize;
    }

    let (mut direct, mut residual, count) = acc.finish();
    for t in 0..len {
        if count[t] == 0 {
            for c in 0..m {
                direct.0[(t, c)] = 0.0;
                residual.0[(t, c)] = x_all[(t, c)];
            }
        }
    }
    Ok(DecompositionResult { direct, residual, traces })
}
