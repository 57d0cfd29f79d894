use serde::{Deserialize, Serialize};

use super::SimulateError;
use crate::sphere::Direction;

/// Shoebox room with one source and one array (array center).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RoomSpec {
    /// Room extent along x, y, z in meters; the room spans `[0, dims]`.
    pub dims: [f64; 3],
    /// Broadband absorption coefficient in `[0, 1]`.
    pub absorption: f64,
    pub source_pos: [f64; 3],
    pub array_pos: [f64; 3],
    #[serde(default = "default_speed_of_sound")]
    pub speed_of_sound: f64,
}

pub(crate) fn default_speed_of_sound() -> f64 {
    343.0
}

/// Minimum distance of source and array to every wall.
pub const WALL_CLEARANCE: f64 = 1.0;
/// Minimum source-array distance.
pub const MIN_SOURCE_DISTANCE: f64 = 2.0;

impl RoomSpec {
    pub fn validate(&self) -> Result<(), SimulateError> {
        let bad = |m: String| Err(SimulateError::InvalidRoom(m));
        if !(0.0..=1.0).contains(&self.absorption) {
            return bad(format!("absorption {} outside [0, 1]", self.absorption));
        }
        if !(self.speed_of_sound > 0.0) {
            return bad("speed of sound must be positive".into());
        }
        for (name, p) in [("source", self.source_pos), ("array", self.array_pos)] {
            for a in 0..3 {
                let lo = p[a] - WALL_CLEARANCE;
                let hi = self.dims[a] - WALL_CLEARANCE - p[a];
                // tolerate rounding when a room is exactly 2 m high
                if lo < -1e-9 || hi < -1e-9 {
                    return bad(format!("{name} position {p:?} closer than {WALL_CLEARANCE} m to a wall"));
                }
            }
        }
        if self.source_distance() < MIN_SOURCE_DISTANCE {
            return bad(format!("source-array distance {:.3} m below {MIN_SOURCE_DISTANCE} m", self.source_distance()));
        }
        Ok(())
    }

    pub fn source_distance(&self) -> f64 {
        dist(self.source_pos, self.array_pos)
    }
}

/// One plane-wave arrival at the array center.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ReflectionEvent {
    /// Seconds.
    pub toa: f64,
    /// Direction the sound arrives from.
    pub doa: Direction,
    /// Linear amplitude.
    pub gain: f64,
}

fn dist(a: [f64; 3], b: [f64; 3]) -> f64 {
    ((a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2) + (a[2] - b[2]).powi(2)).sqrt()
}

/// Direct sound followed by the six first-order wall images, in wall order
/// x=0, x=Lx, y=0, y=Ly, z=0, z=Lz.
pub fn image_sources_first_order(room: &RoomSpec) -> Vec<ReflectionEvent> {
    let mut sources = vec![(room.source_pos, 0)];
    for axis in 0..3 {
        for wall in [0.0, room.dims[axis]] {
            let mut img = room.source_pos;
            img[axis] = 2.0 * wall - img[axis];
            sources.push((img, 1));
        }
    }
    sources
        .into_iter()
        .map(|(pos, order)| {
            let path = dist(pos, room.array_pos);
            let v = [pos[0] - room.array_pos[0], pos[1] - room.array_pos[1], pos[2] - room.array_pos[2]];
            ReflectionEvent {
                toa: path / room.speed_of_sound,
                doa: Direction::from_unit_vector(v),
                gain: (1.0 - room.absorption).powi(order) / path,
            }
        })
        .collect()
}
