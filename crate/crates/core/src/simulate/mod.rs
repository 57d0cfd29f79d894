//! Ground-truth SRIR synthesis: first-order image sources rendered as plane
//! waves on spherical arrays, isotropic diffuse residuals, DNR mixing and
//! randomized scenarios.

mod noise;
mod render;
mod room;
mod scenario;

pub use noise::{
    apply_decay, diffuse_coherence_matrices, isotropic_coherent_noise, isotropic_coherent_noise_sh, COHERENCE_FFT_LEN,
};
pub(crate) use render::windowed_sinc;
pub use render::{render_array_response, ArrayRenderer, RenderOptions};
pub use room::{image_sources_first_order, ReflectionEvent, RoomSpec, MIN_SOURCE_DISTANCE, WALL_CLEARANCE};
pub use scenario::{
    dnr_scale, mix_dnr, random_scenario, render_scene, two_reflection_scene, ArraySpec, Mixture, RenderedScene,
    ScenarioSpec, Scene, MAX_ATTEMPTS, MIN_TDOA_S, TWO_REFLECTION_LEN_S, TWO_REFLECTION_TOA_S,
};

use thiserror::Error;

use crate::numerics::LinalgError;
use crate::sphere::SphereError;

#[derive(Debug, Error)]
pub enum SimulateError {
    #[error("invalid room: {0}")]
    InvalidRoom(String),
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("output of {length} samples cannot hold a response that needs {needed}")]
    LengthTooShort { needed: usize, length: usize },
    #[error("no valid scenario after {0} attempts")]
    ResamplingExhausted(usize),
    #[error("direct part has zero peak on channel 0")]
    ZeroDirectPeak,
    #[error("residual has zero RMS on channel 0")]
    ZeroResidualRms,
    #[error(transparent)]
    Sphere(#[from] SphereError),
    #[error(transparent)]
    Linalg(#[from] LinalgError),
}
