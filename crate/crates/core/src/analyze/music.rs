use std::f64::consts::PI;

use nalgebra::{DMatrix, DVector};

use super::AnalyzeError;
use crate::dsp::convolve_same;
use crate::numerics::{evd_rank, sample_covariance, DataMatrix};
use crate::simulate::windowed_sinc;
use crate::sphere::{real_sh_matrix, real_sh_vector, sh_count, Direction};

/// Dynamic range used for the rank check before the subspace split.
const MUSIC_RANK_DR_DB: f64 = 150.0;

/// `N·c / (2π·r)`, above which an order-`N` decomposition aliases.
pub fn aliasing_frequency(order: usize, radius: f64, speed_of_sound: f64) -> f64 {
    order as f64 * speed_of_sound / (2.0 * PI * radius)
}

/// Zero-phase low-pass of every channel with a 129-tap Kaiser-windowed sinc.
pub fn lowpass(x: &DataMatrix, cutoff_hz: f64, fs: f64) -> DataMatrix {
    let h = windowed_sinc(129, 64.0, 128, (2.0 * cutoff_hz / fs).min(1.0), 8.6);
    let mut out = DataMatrix::zeros(x.rows(), x.cols());
    for c in 0..x.cols() {
        out.column_mut(c).copy_from_slice(&convolve_same(x.column(c), &h, 64));
    }
    out
}

/// `n` near-uniform points on a Fibonacci spiral.
pub fn fibonacci_grid(n: usize) -> Vec<Direction> {
    let golden = PI * (3.0 - 5f64.sqrt());
    (0..n)
        .map(|i| {
            let z = 1.0 - (2 * i + 1) as f64 / n as f64;
            Direction::new(golden * i as f64, z.clamp(-1.0, 1.0).acos())
        })
        .collect()
}

/// Candidate directions with their SH steering vectors.
#[derive(Debug, Clone)]
pub struct MusicGrid {
    pub order: usize,
    pub directions: Vec<Direction>,
    /// Unit-norm steering vectors, one row per direction.
    steering: DMatrix<f64>,
    /// Minimum angle between two returned peaks.
    pub exclusion_deg: f64,
}

impl MusicGrid {
    /// Fibonacci grid with about `resolution_deg` spacing.
    pub fn new(order: usize, resolution_deg: f64) -> Self {
        let r = resolution_deg.to_radians();
        let n = ((4.0 * PI) / (r * r)).ceil() as usize;
        Self::from_directions(order, fibonacci_grid(n.max(2)))
    }

    pub fn from_directions(order: usize, directions: Vec<Direction>) -> Self {
        let mut steering = real_sh_matrix(order, &directions);
        for mut row in steering.row_iter_mut() {
            let n = row.norm();
            row /= n;
        }
        Self { order, directions, steering, exclusion_deg: 10.0 }
    }

    pub fn channels(&self) -> usize {
        sh_count(self.order)
    }
}

/// Orthonormal basis of the `q` strongest eigenvectors of the block
/// covariance.
fn signal_subspace(block: &DataMatrix, q: usize) -> Result<DMatrix<f64>, AnalyzeError> {
    if q == 0 {
        return Err(AnalyzeError::InvalidParameter("need at least one source".into()));
    }
    let cov = sample_covariance(block);
    let rank = evd_rank(&cov, MUSIC_RANK_DR_DB);
    if rank < q {
        return Err(AnalyzeError::RankTooLow { rank, needed: q });
    }
    let eig = cov.as_matrix().clone().symmetric_eigen();
    let mut order: Vec<usize> = (0..eig.eigenvalues.len()).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]));
    let cols: Vec<DVector<f64>> = order[..q].iter().map(|&i| eig.eigenvectors.column(i).into_owned()).collect();
    Ok(DMatrix::from_columns(&cols))
}

fn check_channels(block: &DataMatrix, grid: &MusicGrid) -> Result<(), AnalyzeError> {
    if block.cols() != grid.channels() {
        return Err(AnalyzeError::InvalidParameter(format!(
            "block has {} channels, order {} needs {}",
            block.cols(),
            grid.order,
            grid.channels()
        )));
    }
    Ok(())
}

fn pseudo(signal_energy: f64) -> f64 {
    1.0 / (1.0 - signal_energy).max(1e-300)
}

/// MUSIC pseudospectrum `1 / ‖P_n ŷ(Ω)‖²` on the grid, where `P_n` projects
/// onto the noise subspace and `ŷ` is the normalized SH steering vector.
pub fn music_pseudospectrum(block: &DataMatrix, q: usize, grid: &MusicGrid) -> Result<Vec<f64>, AnalyzeError> {
    check_channels(block, grid)?;
    let es = signal_subspace(block, q)?;
    let proj = &grid.steering * es;
    Ok(proj.row_iter().map(|r| pseudo(r.norm_squared())).collect())
}

/// The `q` strongest MUSIC peaks, refined off-grid.
pub fn sh_music_doa(block: &DataMatrix, q: usize, grid: &MusicGrid) -> Result<Vec<Direction>, AnalyzeError> {
    check_channels(block, grid)?;
    let es = signal_subspace(block, q)?;
    let proj = &grid.steering * &es;
    let energy: Vec<f64> = proj.row_iter().map(|r| r.norm_squared()).collect();
    let mut idx: Vec<usize> = (0..energy.len()).collect();
    idx.sort_by(|&a, &b| energy[b].total_cmp(&energy[a]));
    let excl = grid.exclusion_deg.to_radians();
    let mut peaks: Vec<Direction> = Vec::with_capacity(q);
    for i in idx {
        let d = grid.directions[i];
        if peaks.iter().all(|p| p.angle_to(d) > excl) {
            peaks.push(d);
            if peaks.len() == q {
                break;
            }
        }
    }
    let mut buf = vec![0.0; grid.channels()];
    let mut energy_at = |d: Direction| {
        real_sh_vector(grid.order, d, &mut buf);
        let y = DVector::from_column_slice(&buf);
        let y = &y / y.norm();
        (es.transpose() * y).norm_squared()
    };
    Ok(peaks.into_iter().map(|p| refine(p, &mut energy_at)).collect())
}

/// Compass search on the tangent plane, from 1° down to 0.001°.
fn refine(start: Direction, f: &mut impl FnMut(Direction) -> f64) -> Direction {
    let mut best = start;
    let mut best_val = f(best);
    let mut step = 1f64.to_radians();
    while step > 1e-3f64.to_radians() {
        let u = best.to_unit_vector();
        let (e1, e2) = tangent_basis(u);
        let mut moved = false;
        for (a, b) in [(1.0, 0.0), (-1.0, 0.0), (0.0, 1.0), (0.0, -1.0)] {
            let v = [
                u[0] + step * (a * e1[0] + b * e2[0]),
                u[1] + step * (a * e1[1] + b * e2[1]),
                u[2] + step * (a * e1[2] + b * e2[2]),
            ];
            let d = Direction::from_unit_vector(v);
            let val = f(d);
            if val > best_val {
                best = d;
                best_val = val;
                moved = true;
            }
        }
        if !moved {
            step /= 2.0;
        }
    }
    best
}

fn tangent_basis(u: [f64; 3]) -> ([f64; 3], [f64; 3]) {
    let a = if u[0].abs() < 0.9 { [1.0, 0.0, 0.0] } else { [0.0, 1.0, 0.0] };
    let cross =
        |x: [f64; 3], y: [f64; 3]| [x[1] * y[2] - x[2] * y[1], x[2] * y[0] - x[0] * y[2], x[0] * y[1] - x[1] * y[0]];
    let mut e1 = cross(u, a);
    let n = (e1[0] * e1[0] + e1[1] * e1[1] + e1[2] * e1[2]).sqrt();
    e1.iter_mut().for_each(|v| *v /= n);
    (e1, cross(u, e1))
}

/// Great-circle errors in degrees under the estimate-to-truth assignment
/// with the smallest mean error. Unmatched entries are dropped.
pub fn match_doa_errors(estimates: &[Direction], truth: &[Direction]) -> Vec<f64> {
    let (short, long, swapped) =
        if estimates.len() <= truth.len() { (estimates, truth, false) } else { (truth, estimates, true) };
    let mut best: Option<(f64, Vec<f64>)> = None;
    let mut chosen = Vec::with_capacity(short.len());
    let mut used = vec![false; long.len()];
    assign(short, long, swapped, &mut chosen, &mut used, &mut best);
    best.map(|(_, e)| e).unwrap_or_default()
}

fn assign(
    short: &[Direction],
    long: &[Direction],
    swapped: bool,
    chosen: &mut Vec<f64>,
    used: &mut [bool],
    best: &mut Option<(f64, Vec<f64>)>,
) {
    let i = chosen.len();
    if i == short.len() {
        let total: f64 = chosen.iter().sum();
        if best.as_ref().is_none_or(|(b, _)| total < *b) {
            *best = Some((total, chosen.clone()));
        }
        return;
    }
    for j in 0..long.len() {
        if used[j] {
            continue;
        }
        let (a, b) = if swapped { (long[j], short[i]) } else { (short[i], long[j]) };
        used[j] = true;
        chosen.push(a.angle_to(b).to_degrees());
        assign(short, long, swapped, chosen, used, best);
        chosen.pop();
        used[j] = false;
    }
}
