use std::io::{self, Write};
use std::path::Path;

use super::{read_text, IoError};
use crate::analyze::RankTrace;
use crate::decompose::sig9;
use crate::simulate::ReflectionEvent;
use crate::sphere::Direction;

pub const RANK_CSV_HEADER: &str = "time_s,rank";
pub const EVENTS_CSV_HEADER: &str = "toa_s,azimuth_rad,colatitude_rad,gain";

pub fn write_rank_csv<W: Write>(mut w: W, trace: &RankTrace) -> io::Result<()> {
    writeln!(w, "{RANK_CSV_HEADER}")?;
    for (t, r) in trace.time.iter().zip(&trace.rank) {
        writeln!(w, "{},{r}", sig9(*t))?;
    }
    Ok(())
}

/// Ground-truth events, full precision so they read back exactly.
pub fn write_events_csv<W: Write>(mut w: W, events: &[ReflectionEvent]) -> io::Result<()> {
    writeln!(w, "{EVENTS_CSV_HEADER}")?;
    for e in events {
        writeln!(w, "{:e},{:e},{:e},{:e}", e.toa, e.doa.azimuth, e.doa.colatitude, e.gain)?;
    }
    Ok(())
}

pub fn read_events_csv(path: &Path) -> Result<Vec<ReflectionEvent>, IoError> {
    let text = read_text(path)?;
    let err = |reason: String| IoError::Parse { path: path.into(), reason };
    let mut lines = text.lines().filter(|l| !l.trim().is_empty());
    match lines.next() {
        Some(h) if h.trim() == EVENTS_CSV_HEADER => {}
        other => return Err(err(format!("expected header '{EVENTS_CSV_HEADER}', got {other:?}"))),
    }
    lines
        .enumerate()
        .map(|(i, l)| {
            let v: Vec<f64> = l
                .split(',')
                .map(|t| t.trim().parse::<f64>())
                .collect::<Result<_, _>>()
                .map_err(|_| err(format!("row {}: bad number in '{l}'", i + 1)))?;
            if v.len() != 4 {
                return Err(err(format!("row {}: expected 4 fields", i + 1)));
            }
            Ok(ReflectionEvent { toa: v[0], doa: Direction::new(v[1], v[2]), gain: v[3] })
        })
        .collect()
}
