use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::room::default_speed_of_sound;
use super::{
    apply_decay, image_sources_first_order, isotropic_coherent_noise, ArrayRenderer, ReflectionEvent, RenderOptions,
    RoomSpec, SimulateError, MIN_SOURCE_DISTANCE, WALL_CLEARANCE,
};
use crate::numerics::DataMatrix;
use crate::sphere::{dodecahedron_directions, encode_sh, sh_count, ArrayGeometry, Baffle, ShTransform};

/// A spherical t-design array.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ArraySpec {
    pub points: usize,
    pub radius: f64,
    pub baffle: Baffle,
}

impl ArraySpec {
    /// Rigid, 4.2 cm, 24 microphones.
    pub const ARRAY1: ArraySpec = ArraySpec { points: 24, radius: 0.042, baffle: Baffle::Rigid };
    /// Rigid, 4.2 cm, 32 microphones.
    pub const ARRAY2: ArraySpec = ArraySpec { points: 32, radius: 0.042, baffle: Baffle::Rigid };
    /// Rigid, 8.5 cm, 48 microphones.
    pub const ARRAY3: ArraySpec = ArraySpec { points: 48, radius: 0.085, baffle: Baffle::Rigid };

    /// `array1`, `array2` or `array3`, case-insensitive.
    pub fn named(name: &str) -> Option<ArraySpec> {
        match name.to_ascii_lowercase().as_str() {
            "array1" => Some(Self::ARRAY1),
            "array2" => Some(Self::ARRAY2),
            "array3" => Some(Self::ARRAY3),
            _ => None,
        }
    }

    pub fn geometry(&self) -> Result<ArrayGeometry, SimulateError> {
        Ok(ArrayGeometry::tdesign(self.points, self.radius, self.baffle)?)
    }

    /// Highest order `N` with `(N+1)² ≤ points`.
    pub fn default_sh_order(&self) -> usize {
        let mut n = 0;
        while sh_count(n + 1) <= self.points {
            n += 1;
        }
        n
    }

    /// 32-sample blocks up to 32 microphones, 64 samples above.
    pub fn default_block_size(&self) -> usize {
        if self.points <= 32 {
            32
        } else {
            64
        }
    }
}

fn default_sample_rate() -> f64 {
    48_000.0
}
fn default_decay() -> f64 {
    60.0
}
fn default_max_gain() -> f64 {
    40.0
}

/// Full description of one simulated shoebox SRIR.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioSpec {
    pub room: RoomSpec,
    pub array: ArraySpec,
    pub dnr_db: f64,
    #[serde(default = "default_decay")]
    pub decay_db_per_s: f64,
    pub seed: u64,
    #[serde(default = "default_sample_rate")]
    pub sample_rate: f64,
    /// Samples.
    pub length: usize,
    /// SH order of the encoded output; defaults to the array maximum.
    #[serde(default)]
    pub sh_order: Option<usize>,
    #[serde(default = "default_max_gain")]
    pub max_gain_db: f64,
}

impl ScenarioSpec {
    pub fn with_array(mut self, array: ArraySpec) -> Self {
        self.array = array;
        self
    }

    pub fn with_dnr(mut self, dnr_db: f64) -> Self {
        self.dnr_db = dnr_db;
        self
    }

    pub fn scene(&self) -> Result<Scene, SimulateError> {
        self.room.validate()?;
        let events = image_sources_first_order(&self.room);
        Ok(Scene {
            events,
            array: self.array,
            dnr_db: self.dnr_db,
            decay_db_per_s: self.decay_db_per_s,
            seed: self.seed,
            sample_rate: self.sample_rate,
            length: self.length,
            speed_of_sound: self.room.speed_of_sound,
            sh_order: self.sh_order,
            max_gain_db: self.max_gain_db,
        })
    }
}

/// Events plus everything needed to render them with a residual.
#[derive(Debug, Clone, PartialEq)]
pub struct Scene {
    pub events: Vec<ReflectionEvent>,
    pub array: ArraySpec,
    pub dnr_db: f64,
    pub decay_db_per_s: f64,
    pub seed: u64,
    pub sample_rate: f64,
    pub length: usize,
    pub speed_of_sound: f64,
    pub sh_order: Option<usize>,
    pub max_gain_db: f64,
}

/// Mixture and its two ground-truth parts.
#[derive(Debug, Clone, PartialEq)]
pub struct Mixture {
    pub mixture: DataMatrix,
    pub direct: DataMatrix,
    pub residual: DataMatrix,
}

/// Output of [`render_scene`], in both the microphone and the SH domain.
/// The same residual scale applies to both domains.
#[derive(Debug, Clone)]
pub struct RenderedScene {
    pub events: Vec<ReflectionEvent>,
    pub geometry: ArrayGeometry,
    pub mic: Mixture,
    pub sh: Mixture,
    pub sh_order: usize,
    pub residual_scale: f64,
    pub speed_of_sound: f64,
}

/// Residual scale that puts `max|direct₀₀| / RMS(reference₀₀)` at `dnr_db`.
pub fn dnr_scale(direct: &DataMatrix, reference: &DataMatrix, dnr_db: f64) -> Result<f64, SimulateError> {
    if !dnr_db.is_finite() {
        return Err(SimulateError::InvalidParameter("DNR must be finite".into()));
    }
    let peak = direct.column(0).iter().fold(0.0f64, |a, v| a.max(v.abs()));
    if peak == 0.0 {
        return Err(SimulateError::ZeroDirectPeak);
    }
    let r = reference.column(0);
    let rms = (r.iter().map(|v| v * v).sum::<f64>() / r.len() as f64).sqrt();
    if rms == 0.0 {
        return Err(SimulateError::ZeroResidualRms);
    }
    Ok(peak / (rms * 10f64.powf(dnr_db / 20.0)))
}

/// Scales `residual` to the requested DNR (measured on channel 0) and adds
/// it to `direct`.
pub fn mix_dnr(direct: &DataMatrix, residual: &DataMatrix, dnr_db: f64) -> Result<Mixture, SimulateError> {
    let scale = dnr_scale(direct, residual, dnr_db)?;
    mix_scaled(direct, residual, scale)
}

fn mix_scaled(direct: &DataMatrix, residual: &DataMatrix, scale: f64) -> Result<Mixture, SimulateError> {
    if direct.rows() != residual.rows() || direct.cols() != residual.cols() {
        return Err(SimulateError::InvalidParameter(format!(
            "direct is {}x{}, residual is {}x{}",
            direct.rows(),
            direct.cols(),
            residual.rows(),
            residual.cols()
        )));
    }
    let residual = residual.scaled(scale);
    let mixture = direct + &residual;
    Ok(Mixture { mixture, direct: direct.clone(), residual })
}

/// Renders events, isotropic residual and their SH encodings.
///
/// The DNR scale is computed on the stationary residual before the decay
/// envelope is applied, then the same scaled, decayed residual is used in
/// both domains.
pub fn render_scene(scene: &Scene) -> Result<RenderedScene, SimulateError> {
    let geometry = scene.array.geometry()?;
    let sh_order = scene.sh_order.unwrap_or_else(|| scene.array.default_sh_order());
    let opts = RenderOptions { speed_of_sound: scene.speed_of_sound, ..RenderOptions::default() };
    let renderer = ArrayRenderer::new(&geometry, scene.sample_rate, &opts)?;
    let direct_mic = renderer.render(&scene.events, scene.length)?;
    let noise = isotropic_coherent_noise(
        &geometry,
        scene.length,
        scene.sample_rate,
        scene.speed_of_sound,
        noise_seed(scene.seed),
    )?;
    let transform = ShTransform::new(&geometry, sh_order, scene.sample_rate, scene.speed_of_sound, scene.max_gain_db)?;
    let direct_sh = encode_sh(&direct_mic, &geometry, &transform)?;
    let noise_sh = encode_sh(&noise, &geometry, &transform)?;
    let scale = dnr_scale(&direct_sh, &noise_sh, scene.dnr_db)?;
    let residual_mic = apply_decay(&noise, scene.decay_db_per_s, scene.sample_rate);
    let residual_sh = apply_decay(&noise_sh, scene.decay_db_per_s, scene.sample_rate);
    Ok(RenderedScene {
        events: scene.events.clone(),
        mic: mix_scaled(&direct_mic, &residual_mic, scale)?,
        sh: mix_scaled(&direct_sh, &residual_sh, scale)?,
        geometry,
        sh_order,
        residual_scale: scale,
        speed_of_sound: scene.speed_of_sound,
    })
}

fn noise_seed(seed: u64) -> u64 {
    seed ^ 0x9e37_79b9_7f4a_7c15
}

/// Cap on rejected room draws in [`random_scenario`].
pub const MAX_ATTEMPTS: usize = 10_000;
/// Minimum arrival-time difference between any two generated events.
pub const MIN_TDOA_S: f64 = 1e-3;
/// Samples appended after the last event.
const TAIL_S: f64 = 0.06;

/// Random shoebox room with absorption 0.3, rejection-sampled until the
/// positions satisfy the clearance rules and all seven arrivals are at
/// least 1 ms apart. Uses Array2 at 20 dB DNR; see `with_array` and
/// `with_dnr`.
pub fn random_scenario(seed: u64) -> Result<ScenarioSpec, SimulateError> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let c = default_speed_of_sound();
    for _ in 0..MAX_ATTEMPTS {
        let dims = [rng.random_range(4.0..=15.0), rng.random_range(4.0..=15.0), rng.random_range(2.0..=10.0)];
        let mut pos = || -> [f64; 3] {
            let mut p = [0.0; 3];
            for a in 0..3 {
                p[a] = if dims[a] > 2.0 * WALL_CLEARANCE {
                    rng.random_range(WALL_CLEARANCE..=dims[a] - WALL_CLEARANCE)
                } else {
                    dims[a] / 2.0
                };
            }
            p
        };
        let room = RoomSpec { dims, absorption: 0.3, source_pos: pos(), array_pos: pos(), speed_of_sound: c };
        if room.source_distance() < MIN_SOURCE_DISTANCE || room.validate().is_err() {
            continue;
        }
        let events = image_sources_first_order(&room);
        if min_tdoa(&events) < MIN_TDOA_S {
            continue;
        }
        let last = events.iter().map(|e| e.toa).fold(0.0, f64::max);
        let fs = default_sample_rate();
        return Ok(ScenarioSpec {
            room,
            array: ArraySpec::ARRAY2,
            dnr_db: 20.0,
            decay_db_per_s: default_decay(),
            seed,
            sample_rate: fs,
            length: ((last + TAIL_S) * fs).ceil() as usize,
            sh_order: None,
            max_gain_db: default_max_gain(),
        });
    }
    Err(SimulateError::ResamplingExhausted(MAX_ATTEMPTS))
}

pub(crate) fn min_tdoa(events: &[ReflectionEvent]) -> f64 {
    let mut min = f64::INFINITY;
    for i in 0..events.len() {
        for j in i + 1..events.len() {
            min = min.min((events[i].toa - events[j].toa).abs());
        }
    }
    min
}

/// Arrival time of the first of the two reflections.
pub const TWO_REFLECTION_TOA_S: f64 = 0.02;
/// Length of the two-reflection fixture.
pub const TWO_REFLECTION_LEN_S: f64 = 0.1;

/// Two unit-gain plane waves `tdoa_s` apart on Array2, in stationary
/// isotropic noise at 20 dB DNR.
///
/// The DOA pair is a pair of distinct dodecahedron vertices. Seeds index a
/// fixed shuffle of all 190 vertex pairs, so any 190 consecutive seeds give
/// distinct pairs; which vertex arrives first is drawn from the seed.
pub fn two_reflection_scene(tdoa_s: f64, seed: u64) -> Result<Scene, SimulateError> {
    if !(0.0..=0.5e-3).contains(&tdoa_s) {
        return Err(SimulateError::InvalidParameter(format!("TDOA {tdoa_s} s outside [0, 0.5 ms]")));
    }
    let verts = dodecahedron_directions();
    let mut pairs: Vec<(usize, usize)> =
        (0..verts.len()).flat_map(|i| (i + 1..verts.len()).map(move |j| (i, j))).collect();
    pairs.shuffle(&mut ChaCha8Rng::seed_from_u64(0x5eed));
    let (mut a, mut b) = pairs[(seed % pairs.len() as u64) as usize];
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    if rng.random_bool(0.5) {
        std::mem::swap(&mut a, &mut b);
    }
    let fs = default_sample_rate();
    Ok(Scene {
        events: vec![
            ReflectionEvent { toa: TWO_REFLECTION_TOA_S, doa: verts[a], gain: 1.0 },
            ReflectionEvent { toa: TWO_REFLECTION_TOA_S + tdoa_s, doa: verts[b], gain: 1.0 },
        ],
        array: ArraySpec::ARRAY2,
        dnr_db: 20.0,
        decay_db_per_s: 0.0,
        seed,
        sample_rate: fs,
        length: (TWO_REFLECTION_LEN_S * fs).round() as usize,
        speed_of_sound: default_speed_of_sound(),
        sh_order: Some(4),
        max_gain_db: default_max_gain(),
    })
}

#[cfg(test)]
mod tests {
    use std::collections::HashSet;

    use super::*;

    #[test]
    fn mix_dnr_definition() {
        let mut d = DataMatrix::zeros(100, 2);
        d.column_mut(0)[10] = -1.0;
        let r = DataMatrix::from_columns(&[vec![3.0; 100], vec![1.0; 100]]).unwrap();
        let m = mix_dnr(&d, &r, 20.0).unwrap();
        let rms = (m.residual.column(0).iter().map(|v| v * v).sum::<f64>() / 100.0).sqrt();
        assert!((rms - 0.1).abs() < 1e-15);
        assert_eq!(&m.direct + &m.residual, m.mixture);
        assert!(matches!(mix_dnr(&DataMatrix::zeros(100, 2), &r, 20.0), Err(SimulateError::ZeroDirectPeak)));
        assert!(matches!(mix_dnr(&d, &DataMatrix::zeros(100, 2), 20.0), Err(SimulateError::ZeroResidualRms)));
    }

    #[test]
    fn random_scenarios_respect_constraints() {
        for seed in 0..40 {
            let s = random_scenario(seed).unwrap();
            let d = s.room.dims;
            assert!((4.0..=15.0).contains(&d[0]) && (4.0..=15.0).contains(&d[1]) && (2.0..=10.0).contains(&d[2]));
            s.room.validate().unwrap();
            let ev = image_sources_first_order(&s.room);
            assert!(min_tdoa(&ev) >= 1e-3);
            assert_eq!(random_scenario(seed).unwrap(), s);
        }
    }

    #[test]
    fn two_reflection_pairs_are_unique_and_separated() {
        let mut seen = HashSet::new();
        for seed in 0..100 {
            let s = two_reflection_scene(0.0, seed).unwrap();
            assert_eq!(s.events[0].toa, s.events[1].toa);
            let sep = s.events[0].doa.angle_to(s.events[1].doa).to_degrees();
            assert!(sep >= 41.0, "{sep}");
            let key = |d: crate::sphere::Direction| {
                let v = d.to_unit_vector();
                ((v[0] * 1e6).round() as i64, (v[1] * 1e6).round() as i64, (v[2] * 1e6).round() as i64)
            };
            let (a, b) = (key(s.events[0].doa), key(s.events[1].doa));
            assert!(seen.insert(if a < b { (a, b) } else { (b, a) }));
        }
        assert!(two_reflection_scene(0.6e-3, 0).is_err());
    }

    #[test]
    fn rendered_scene_hits_target_dnr_and_is_additive() {
        let scene = random_scenario(4).unwrap().scene().unwrap();
        let r = render_scene(&scene).unwrap();
        assert_eq!(r.sh.mixture.cols(), 25);
        assert_eq!(r.mic.mixture.cols(), 32);
        assert_eq!(&r.sh.direct + &r.sh.residual, r.sh.mixture);
        assert_eq!(&r.mic.direct + &r.mic.residual, r.mic.mixture);
        // undo the decay to measure the stationary residual RMS
        let fs = scene.sample_rate;
        let res: Vec<f64> =
            r.sh.residual
                .column(0)
                .iter()
                .enumerate()
                .map(|(t, v)| v * 10f64.powf(60.0 * t as f64 / (20.0 * fs)))
                .collect();
        let rms = (res.iter().map(|v| v * v).sum::<f64>() / res.len() as f64).sqrt();
        let peak = r.sh.direct.column(0).iter().fold(0.0f64, |a, v| a.max(v.abs()));
        let dnr = 20.0 * (peak / rms).log10();
        assert!((dnr - 20.0).abs() < 1e-6, "{dnr}");
    }

    #[test]
    fn scenario_round_trips_through_toml() {
        let s = random_scenario(11).unwrap().with_dnr(15.0).with_array(ArraySpec::ARRAY3);
        let text = toml::to_string(&s).unwrap();
        let back: ScenarioSpec = toml::from_str(&text).unwrap();
        assert_eq!(back, s);
        assert!(toml::from_str::<ScenarioSpec>(&format!("{text}\nbogus = 1\n")).is_err());
    }

    #[test]
    fn default_orders_match_array_sizes() {
        assert_eq!(ArraySpec::ARRAY1.default_sh_order(), 3);
        assert_eq!(ArraySpec::ARRAY2.default_sh_order(), 4);
        assert_eq!(ArraySpec::ARRAY3.default_sh_order(), 5);
    }
}
