use std::fmt::Write as _;
use std::path::Path;

use super::{read_text, IoError};
use crate::sphere::{ArrayGeometry, Baffle, Direction, SphereError};

/// Parses a geometry table:
///
/// ```text
/// # comments and blank lines are ignored
/// 0.042          radius in meters
/// rigid          open | rigid
/// 0.0 1.5708     azimuth and colatitude in radians, one microphone per line
/// ```
pub fn parse_geometry(text: &str) -> Result<ArrayGeometry, SphereError> {
    let mut lines = text
        .lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.split('#').next().unwrap_or("").trim()))
        .filter(|(_, l)| !l.is_empty());
    let parse_err = |line: usize, reason: String| SphereError::Parse { line, reason };
    let (ln, radius) = lines.next().ok_or_else(|| parse_err(0, "missing radius".into()))?;
    let radius: f64 = radius.parse().map_err(|_| parse_err(ln, format!("bad radius '{radius}'")))?;
    let (ln, baffle) = lines.next().ok_or_else(|| parse_err(ln, "missing baffle".into()))?;
    let baffle: Baffle = baffle.parse().map_err(|e: SphereError| parse_err(ln, e.to_string()))?;
    let mut dirs = Vec::new();
    for (ln, l) in lines {
        let v: Vec<f64> = l
            .split_whitespace()
            .map(|t| t.parse::<f64>())
            .collect::<Result<_, _>>()
            .map_err(|_| parse_err(ln, format!("bad number in '{l}'")))?;
        if v.len() != 2 || !v.iter().all(|x| x.is_finite()) {
            return Err(parse_err(ln, format!("expected 'azimuth colatitude', got '{l}'")));
        }
        if !(0.0..=std::f64::consts::PI).contains(&v[1]) {
            return Err(parse_err(ln, format!("colatitude {} outside [0, π]", v[1])));
        }
        dirs.push(Direction::new(v[0], v[1]));
    }
    ArrayGeometry::new(radius, dirs, baffle)
}

pub fn read_geometry(path: &Path) -> Result<ArrayGeometry, IoError> {
    parse_geometry(&read_text(path)?).map_err(|e| IoError::Parse { path: path.into(), reason: e.to_string() })
}

/// Inverse of [`parse_geometry`], with 17 significant digits.
pub fn format_geometry(geo: &ArrayGeometry) -> String {
    let mut s = format!("# radius_m, baffle, then azimuth colatitude [rad]\n{:.17e}\n{}\n", geo.radius, geo.baffle);
    for d in &geo.directions {
        let _ = writeln!(s, "{:.17e} {:.17e}", d.azimuth, d.colatitude);
    }
    s
}
