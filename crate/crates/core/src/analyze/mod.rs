//! Rank analysis, error measures, DOA estimation and study orchestration.

mod error;
mod music;
mod rank;
mod study;

pub use error::{norm_trace, spatio_spectral_error, temporal_cutout, ErrorReport, ErrorWindow};
pub use music::{fibonacci_grid, match_doa_errors, music_pseudospectrum, sh_music_doa, MusicGrid};
pub use rank::{mean_rank_study, plane_wave_rank, rank_trace, RankStudyRow, RankTrace};
pub use study::{
    evaluate_scene, run_simulation_study, run_two_reflection_study, study_params, summarize, two_reflection_trial,
    write_study_csv, write_summary_csv, Method, StudyConfig, StudyFailure, StudyOutcome, StudyRow, StudySummary,
    TwoReflectionRow, STUDY_CSV_HEADER, SUMMARY_CSV_HEADER,
};

use thiserror::Error;

use crate::decompose::DecomposeError;
use crate::numerics::LinalgError;
use crate::simulate::SimulateError;
use crate::sphere::SphereError;

#[derive(Debug, Error)]
pub enum AnalyzeError {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("ground truth has zero energy in the evaluation window")]
    ZeroGroundTruth,
    #[error("covariance rank {rank} is below the {needed} requested sources")]
    RankTooLow { rank: usize, needed: usize },
    #[error(transparent)]
    Simulate(#[from] SimulateError),
    #[error(transparent)]
    Decompose(#[from] DecomposeError),
    #[error(transparent)]
    Sphere(#[from] SphereError),
    #[error(transparent)]
    Linalg(#[from] LinalgError),
}
