use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::{read_geometry, read_text, BitDepth, IoError};
use crate::decompose::DecomposeParams;
use crate::numerics::DataMatrix;
use crate::simulate::ArraySpec;
use crate::sphere::ArrayGeometry;

/// Signal domain the decomposition runs in.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Domain {
    /// Channels as they are in the file: microphone signals, or SH signals
    /// that were encoded elsewhere.
    #[default]
    Raw,
    /// Microphone signals encoded to SH with the configured geometry first.
    Sh,
}

impl FromStr for Domain {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "raw" => Ok(Domain::Raw),
            "sh" => Ok(Domain::Sh),
            other => Err(format!("unknown domain '{other}', expected raw or sh")),
        }
    }
}

/// Decomposition settings, with the residual length in milliseconds so the
/// file does not depend on the sample rate.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DecomposeSection {
    pub block_size: usize,
    pub hop: usize,
    pub residual_ms: f64,
    pub gsv_avg_len: usize,
    pub kappa: f64,
}

impl Default for DecomposeSection {
    fn default() -> Self {
        Self { block_size: 32, hop: 4, residual_ms: 20.0, gsv_avg_len: 32, kappa: 4.0 }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OutputSection {
    pub dir: Option<PathBuf>,
    pub bit_depth: BitDepth,
    /// Also write `.f64` sidecars next to every output WAV.
    pub float64_sidecar: bool,
}

/// Settings of a `decompose` run.
///
/// ```toml
/// domain = "sh"               # raw | sh
/// geometry = "em32.txt"       # or: array = "array2"
/// sh_order = 4
/// channel_order = [1, 0, 2]   # optional input permutation
///
/// [decompose]
/// block_size = 32
/// hop = 4
/// residual_ms = 20.0
/// gsv_avg_len = 64
/// kappa = 3.0
///
/// [output]
/// dir = "out"
/// bit_depth = "float32"       # float32 | int24 | int16
/// float64_sidecar = true
/// ```
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default)]
    pub domain: Domain,
    /// Geometry table; relative paths are resolved against the config file.
    pub geometry: Option<PathBuf>,
    /// Named simulated array, as an alternative to `geometry`.
    pub array: Option<String>,
    /// SH order for `domain = "sh"`; defaults to the highest the array supports.
    pub sh_order: Option<usize>,
    #[serde(default = "default_max_gain")]
    pub max_gain_db: f64,
    #[serde(default = "default_speed_of_sound")]
    pub speed_of_sound: f64,
    /// Input channel `channel_order[i]` becomes channel `i`.
    pub channel_order: Option<Vec<usize>>,
    #[serde(default)]
    pub decompose: DecomposeSection,
    #[serde(default)]
    pub output: OutputSection,
}

fn default_max_gain() -> f64 {
    40.0
}
fn default_speed_of_sound() -> f64 {
    343.0
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            domain: Domain::Raw,
            geometry: None,
            array: None,
            sh_order: None,
            max_gain_db: default_max_gain(),
            speed_of_sound: default_speed_of_sound(),
            channel_order: None,
            decompose: DecomposeSection::default(),
            output: OutputSection::default(),
        }
    }
}

impl RunConfig {
    pub fn from_toml_str(text: &str) -> Result<Self, IoError> {
        let cfg: RunConfig = toml::from_str(text).map_err(|e| IoError::InvalidConfig(e.message().to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self, IoError> {
        let mut cfg: RunConfig = toml::from_str(&read_text(path)?)
            .map_err(|e| IoError::Parse { path: path.into(), reason: e.to_string() })?;
        if let (Some(g), Some(dir)) = (&cfg.geometry, path.parent()) {
            if g.is_relative() {
                cfg.geometry = Some(dir.join(g));
            }
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<(), IoError> {
        let bad = |m: String| Err(IoError::InvalidConfig(m));
        if self.geometry.is_some() && self.array.is_some() {
            return bad("set either geometry or array, not both".into());
        }
        if let Some(a) = &self.array {
            if ArraySpec::named(a).is_none() {
                return bad(format!("unknown array '{a}'"));
            }
        }
        if self.domain == Domain::Sh && self.geometry.is_none() && self.array.is_none() {
            return bad("domain = \"sh\" needs a geometry or an array".into());
        }
        if !(self.speed_of_sound > 0.0) || !self.max_gain_db.is_finite() {
            return bad("speed_of_sound must be positive and max_gain_db finite".into());
        }
        if !(self.decompose.residual_ms > 0.0) {
            return bad("residual_ms must be positive".into());
        }
        if let Some(order) = &self.channel_order {
            let mut seen = vec![false; order.len()];
            for &i in order {
                if i >= order.len() || std::mem::replace(&mut seen[i], true) {
                    return bad(format!("channel_order {order:?} is not a permutation of 0..{}", order.len()));
                }
            }
        }
        Ok(())
    }

    /// Decomposition parameters at `sample_rate`.
    pub fn decompose_params(&self, sample_rate: f64) -> DecomposeParams {
        let d = &self.decompose;
        DecomposeParams {
            block_size: d.block_size,
            hop: d.hop,
            residual_len: (d.residual_ms * 1e-3 * sample_rate).round() as usize,
            gsv_avg_len: d.gsv_avg_len,
            kappa: d.kappa,
            sample_rate,
        }
    }

    /// The configured array, if any.
    pub fn resolve_geometry(&self) -> Result<Option<ArrayGeometry>, IoError> {
        if let Some(p) = &self.geometry {
            return read_geometry(p).map(Some);
        }
        match &self.array {
            Some(a) => {
                let spec = ArraySpec::named(a).ok_or_else(|| IoError::InvalidConfig(format!("unknown array '{a}'")))?;
                Ok(Some(spec.geometry().map_err(|e| IoError::InvalidConfig(e.to_string()))?))
            }
            None => Ok(None),
        }
    }

    /// Reorders channels per `channel_order`.
    pub fn apply_channel_order(&self, x: &DataMatrix) -> Result<DataMatrix, IoError> {
        let Some(order) = &self.channel_order else {
            return Ok(x.clone());
        };
        if order.len() != x.cols() {
            return Err(IoError::InvalidConfig(format!(
                "channel_order has {} entries, signal has {} channels",
                order.len(),
                x.cols()
            )));
        }
        let cols: Vec<Vec<f64>> = order.iter().map(|&i| x.column(i).to_vec()).collect();
        DataMatrix::from_columns(&cols).map_err(|e| IoError::InvalidConfig(e.to_string()))
    }
}
