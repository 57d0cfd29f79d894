//! Spherical geometry, real spherical harmonics, sphere radial functions and
//! spherical-harmonic encoding of array signals.

mod encode;
mod harmonics;
mod radial;
mod tdesign;

pub use encode::{encode_sh, ShTransform, FILTER_LEN};
pub use harmonics::{acn_degree, legendre_series, real_sh_matrix, real_sh_vector, sh_count};
pub(crate) use radial::truncation_order;
pub use radial::{diffuse_coherence, radial_filters_tikhonov, radial_functions, spherical_bessel, Bessel};
pub use tdesign::{
    dodecahedron_directions, parse_unit_vectors, tdesign_degree, tdesign_directions, SUPPORTED_TDESIGNS,
};

use std::f64::consts::PI;

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SphereError {
    #[error("no embedded t-design with {0} points")]
    UnsupportedDesign(usize),
    #[error("SH order {order} needs {needed} channels but the array has {available}")]
    TooFewMicrophones { order: usize, needed: usize, available: usize },
    #[error("channel count mismatch: signal has {signal}, geometry has {geometry}")]
    ChannelMismatch { signal: usize, geometry: usize },
    #[error("invalid geometry: {0}")]
    InvalidGeometry(String),
    #[error("malformed direction table line {line}: {reason}")]
    Parse { line: usize, reason: String },
}

/// A direction on the unit sphere.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Direction {
    /// Radians in `[0, 2π)`.
    pub azimuth: f64,
    /// Radians in `[0, π]`, measured from +z.
    pub colatitude: f64,
}

impl Direction {
    /// Wraps azimuth into `[0, 2π)` and clamps colatitude into `[0, π]`.
    pub fn new(azimuth: f64, colatitude: f64) -> Self {
        let mut az = azimuth.rem_euclid(2.0 * PI);
        if az >= 2.0 * PI {
            az = 0.0;
        }
        Self { azimuth: az, colatitude: colatitude.clamp(0.0, PI) }
    }

    pub fn from_unit_vector(v: [f64; 3]) -> Self {
        let n = (v[0] * v[0] + v[1] * v[1] + v[2] * v[2]).sqrt();
        let z = (v[2] / n).clamp(-1.0, 1.0);
        Self::new(v[1].atan2(v[0]), z.acos())
    }

    pub fn to_unit_vector(self) -> [f64; 3] {
        let (st, ct) = self.colatitude.sin_cos();
        let (sp, cp) = self.azimuth.sin_cos();
        [st * cp, st * sp, ct]
    }

    pub fn antipode(self) -> Self {
        Self::new(self.azimuth + PI, PI - self.colatitude)
    }

    /// Great-circle angle in radians.
    pub fn angle_to(self, other: Direction) -> f64 {
        let a = self.to_unit_vector();
        let b = other.to_unit_vector();
        let cross = [a[1] * b[2] - a[2] * b[1], a[2] * b[0] - a[0] * b[2], a[0] * b[1] - a[1] * b[0]];
        let s = (cross[0] * cross[0] + cross[1] * cross[1] + cross[2] * cross[2]).sqrt();
        let c = a[0] * b[0] + a[1] * b[1] + a[2] * b[2];
        s.atan2(c)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Baffle {
    Open,
    Rigid,
}

impl std::str::FromStr for Baffle {
    type Err = SphereError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "open" => Ok(Baffle::Open),
            "rigid" => Ok(Baffle::Rigid),
            other => Err(SphereError::InvalidGeometry(format!("unknown baffle '{other}'"))),
        }
    }
}

impl std::fmt::Display for Baffle {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Baffle::Open => "open",
            Baffle::Rigid => "rigid",
        })
    }
}

/// Microphone positions on a sphere of radius `radius` (meters).
#[derive(Debug, Clone, PartialEq)]
pub struct ArrayGeometry {
    pub radius: f64,
    pub directions: Vec<Direction>,
    pub baffle: Baffle,
}

impl ArrayGeometry {
    pub fn new(radius: f64, directions: Vec<Direction>, baffle: Baffle) -> Result<Self, SphereError> {
        if !(radius > 0.0 && radius.is_finite()) {
            return Err(SphereError::InvalidGeometry(format!("radius {radius} must be positive")));
        }
        if directions.is_empty() {
            return Err(SphereError::InvalidGeometry("no microphones".into()));
        }
        Ok(Self { radius, directions, baffle })
    }

    /// Array on an embedded t-design with `points` microphones.
    pub fn tdesign(points: usize, radius: f64, baffle: Baffle) -> Result<Self, SphereError> {
        Self::new(radius, tdesign_directions(points)?, baffle)
    }

    pub fn mics(&self) -> usize {
        self.directions.len()
    }

    /// Largest chord between two microphones.
    pub fn aperture(&self) -> f64 {
        let mut best = 0.0f64;
        for (i, a) in self.directions.iter().enumerate() {
            for b in &self.directions[i + 1..] {
                best = best.max(2.0 * self.radius * (a.angle_to(*b) / 2.0).sin());
            }
        }
        best
    }
}
