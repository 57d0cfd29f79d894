use std::io::{self, Write};

use super::BlockTrace;

pub const TRACE_CSV_HEADER: &str = "block_start_sample,time_s,gsv_sum,mean_mu,threshold,detected,q_s";

/// One row per block, floats with 9 significant digits.
pub fn write_trace_csv<W: Write>(mut w: W, traces: &[BlockTrace], sample_rate: f64) -> io::Result<()> {
    writeln!(w, "{TRACE_CSV_HEADER}")?;
    for t in traces {
        writeln!(
            w,
            "{},{},{},{},{},{},{}",
            t.block_start,
            sig9(t.block_start as f64 / sample_rate),
            sig9(t.gsv_sum),
            sig9(t.mean_mu),
            sig9(t.threshold),
            u8::from(t.detected),
            t.q_s
        )?;
    }
    Ok(())
}

pub(crate) fn sig9(x: f64) -> String {
    if x.is_nan() {
        "nan".into()
    } else if x.is_infinite() {
        if x > 0.0 { "inf" } else { "-inf" }.into()
    } else {
        format!("{x:.8e}")
    }
}
