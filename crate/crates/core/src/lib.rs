//! Separation of spatial room impulse responses into a direct part and a
//! residual by a backward blockwise GSVD sweep, with the simulation and
//! evaluation tools used to validate it.

pub mod analyze;
pub mod decompose;
pub mod io;
pub mod numerics;
pub mod simulate;
pub mod sphere;

mod dsp;
