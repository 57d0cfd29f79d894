use rayon::prelude::*;

use super::AnalyzeError;
use crate::numerics::{evd_rank, sample_covariance, DataMatrix};
use crate::simulate::{ArrayRenderer, ReflectionEvent, RenderOptions};
use crate::sphere::{ArrayGeometry, Direction};

/// Covariance rank over sliding rectangular windows.
#[derive(Debug, Clone, PartialEq)]
pub struct RankTrace {
    /// Window start in seconds.
    pub time: Vec<f64>,
    pub rank: Vec<usize>,
    pub window: usize,
    pub hop: usize,
    pub dynamic_range_db: f64,
}

/// Rank of the sample covariance of every `window`-sample window, advanced
/// by `hop`.
pub fn rank_trace(
    srir: &DataMatrix,
    window: usize,
    hop: usize,
    dynamic_range_db: f64,
    sample_rate: f64,
) -> Result<RankTrace, AnalyzeError> {
    if window < 2 || hop == 0 {
        return Err(AnalyzeError::InvalidParameter(format!("window {window} must be >= 2 and hop {hop} >= 1")));
    }
    if srir.rows() < window {
        return Err(AnalyzeError::InvalidParameter(format!("signal shorter than window {window}")));
    }
    let starts: Vec<usize> = (0..=srir.rows() - window).step_by(hop).collect();
    let rank = starts
        .par_iter()
        .map(|&s| evd_rank(&sample_covariance(&srir.slice_rows(s, window)), dynamic_range_db))
        .collect();
    Ok(RankTrace {
        time: starts.iter().map(|&s| s as f64 / sample_rate).collect(),
        rank,
        window,
        hop,
        dynamic_range_db,
    })
}

/// Rank of the covariance of a single plane wave from `doa`, taken over the
/// whole rendered response.
pub fn plane_wave_rank(renderer: &ArrayRenderer, doa: Direction, fs: f64, dynamic_range_db: f64) -> usize {
    let len = 2048;
    let ev = ReflectionEvent { toa: 1024.0 / fs, doa, gain: 1.0 };
    let x = renderer.render(&[ev], len).expect("event fits the window");
    evd_rank(&sample_covariance(&x), dynamic_range_db)
}

/// Mean and standard deviation of the plane-wave covariance rank over the
/// given incidence directions.
#[derive(Debug, Clone, PartialEq)]
pub struct RankStudyRow {
    pub mics: usize,
    pub radius: f64,
    pub baffle: crate::sphere::Baffle,
    pub mean: f64,
    pub std: f64,
}

pub fn mean_rank_study(
    configs: &[ArrayGeometry],
    directions: &[Direction],
    fs: f64,
    opts: &RenderOptions,
    dynamic_range_db: f64,
) -> Result<Vec<RankStudyRow>, AnalyzeError> {
    configs
        .iter()
        .map(|geo| {
            let renderer = ArrayRenderer::new(geo, fs, opts)?;
            let ranks: Vec<f64> =
                directions.par_iter().map(|&d| plane_wave_rank(&renderer, d, fs, dynamic_range_db) as f64).collect();
            let (mean, std) = mean_std(&ranks);
            Ok(RankStudyRow { mics: geo.mics(), radius: geo.radius, baffle: geo.baffle, mean, std })
        })
        .collect()
}

/// Population mean and sample standard deviation (0 for a single value).
pub(crate) fn mean_std(v: &[f64]) -> (f64, f64) {
    if v.is_empty() {
        return (f64::NAN, f64::NAN);
    }
    let mean = v.iter().sum::<f64>() / v.len() as f64;
    if v.len() < 2 {
        return (mean, 0.0);
    }
    let var = v.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (v.len() - 1) as f64;
    (mean, var.sqrt())
}
