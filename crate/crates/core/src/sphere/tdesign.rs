use super::{Direction, SphereError};

/// Point counts of the embedded designs.
pub const SUPPORTED_TDESIGNS: &[usize] = &[4, 6, 8, 12, 16, 24, 32, 36, 48, 60, 72, 240];

// (points, degree, table)
const TABLES: &[(usize, usize, &str)] = &[
    (4, 2, include_str!("../../data/tdesign_004.txt")),
    (6, 3, include_str!("../../data/tdesign_006.txt")),
    (8, 3, include_str!("../../data/tdesign_008.txt")),
    (12, 5, include_str!("../../data/tdesign_012.txt")),
    (16, 5, include_str!("../../data/tdesign_016.txt")),
    (24, 7, include_str!("../../data/tdesign_024.txt")),
    (32, 7, include_str!("../../data/tdesign_032.txt")),
    (36, 7, include_str!("../../data/tdesign_036.txt")),
    (48, 8, include_str!("../../data/tdesign_048.txt")),
    (60, 9, include_str!("../../data/tdesign_060.txt")),
    (72, 10, include_str!("../../data/tdesign_072.txt")),
    (240, 17, include_str!("../../data/tdesign_240.txt")),
];

const DODECAHEDRON: &str = include_str!("../../data/dodecahedron_020.txt");

/// Directions of the embedded spherical t-design with `points` points.
pub fn tdesign_directions(points: usize) -> Result<Vec<Direction>, SphereError> {
    let (_, _, table) = TABLES.iter().find(|(p, _, _)| *p == points).ok_or(SphereError::UnsupportedDesign(points))?;
    let dirs = parse_unit_vectors(table)?;
    debug_assert_eq!(dirs.len(), points);
    Ok(dirs)
}

/// Polynomial degree up to which the embedded design integrates exactly.
pub fn tdesign_degree(points: usize) -> Result<usize, SphereError> {
    TABLES.iter().find(|(p, _, _)| *p == points).map(|(_, t, _)| *t).ok_or(SphereError::UnsupportedDesign(points))
}

/// The 20 vertices of a regular dodecahedron.
pub fn dodecahedron_directions() -> Vec<Direction> {
    parse_unit_vectors(DODECAHEDRON).expect("embedded table is valid")
}

/// Parses `x y z` lines (blank lines and `#` comments skipped).
pub fn parse_unit_vectors(text: &str) -> Result<Vec<Direction>, SphereError> {
    let mut out = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let vals: Vec<f64> = line
            .split_whitespace()
            .map(str::parse)
            .collect::<Result<_, _>>()
            .map_err(|e: std::num::ParseFloatError| SphereError::Parse { line: i + 1, reason: e.to_string() })?;
        if vals.len() != 3 {
            return Err(SphereError::Parse { line: i + 1, reason: format!("expected 3 values, got {}", vals.len()) });
        }
        let norm = (vals[0] * vals[0] + vals[1] * vals[1] + vals[2] * vals[2]).sqrt();
        if (norm - 1.0).abs() > 1e-6 {
            return Err(SphereError::Parse { line: i + 1, reason: format!("vector norm {norm} is not 1") });
        }
        out.push(Direction::from_unit_vector([vals[0], vals[1], vals[2]]));
    }
    Ok(out)
}
