use std::collections::BTreeMap;
use std::fmt;
use std::io::{self, Write};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::error::{spatio_spectral_error, temporal_cutout, ErrorReport, ErrorWindow};
use super::music::{aliasing_frequency, lowpass, match_doa_errors, sh_music_doa, MusicGrid};
use super::rank::mean_std;
use super::AnalyzeError;
use crate::decompose::{self, sig9, DecomposeParams};
use crate::simulate::{random_scenario, render_scene, two_reflection_scene, ArraySpec, RenderedScene};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    SubDec,
    TempCut,
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Method::SubDec => "subdec",
            Method::TempCut => "tempcut",
        })
    }
}

/// Decomposition settings used in the studies for a given array: block size
/// by microphone count, hop one eighth of it, 20 ms residual estimate, 32
/// averaged blocks and κ = 4.
pub fn study_params(array: &ArraySpec, sample_rate: f64) -> DecomposeParams {
    let block_size = array.default_block_size();
    DecomposeParams { block_size, hop: block_size / 8, sample_rate, ..DecomposeParams::default() }
        .with_residual_seconds(0.02)
}

/// Rooms × arrays × DNRs sweep over random shoebox scenarios.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StudyConfig {
    pub room_seeds: Vec<u64>,
    /// Named arrays, see [`ArraySpec::named`].
    #[serde(default = "default_arrays")]
    pub arrays: Vec<String>,
    pub dnrs_db: Vec<f64>,
    /// Count the direct sound as one of the evaluated events.
    #[serde(default = "default_true")]
    pub include_direct: bool,
    #[serde(default = "default_resolution")]
    pub music_resolution_deg: f64,
}

fn default_arrays() -> Vec<String> {
    vec!["array2".into()]
}
fn default_true() -> bool {
    true
}
fn default_resolution() -> f64 {
    2.0
}

impl StudyConfig {
    pub fn new(room_seeds: Vec<u64>, arrays: Vec<String>, dnrs_db: Vec<f64>) -> Self {
        Self { room_seeds, arrays, dnrs_db, include_direct: true, music_resolution_deg: default_resolution() }
    }

    fn resolve_arrays(&self) -> Result<Vec<(String, ArraySpec)>, AnalyzeError> {
        self.arrays
            .iter()
            .map(|n| {
                ArraySpec::named(n)
                    .map(|a| (n.to_ascii_lowercase(), a))
                    .ok_or_else(|| AnalyzeError::InvalidParameter(format!("unknown array '{n}'")))
            })
            .collect()
    }
}

/// Errors of one method on one scenario.
#[derive(Debug, Clone, PartialEq)]
pub struct StudyRow {
    pub room_seed: u64,
    pub array_id: String,
    pub dnr_db: f64,
    pub method: Method,
    pub report: ErrorReport,
}

/// A study cell that could not be evaluated.
#[derive(Debug, Clone, PartialEq)]
pub struct StudyFailure {
    pub room_seed: u64,
    pub array_id: String,
    pub dnr_db: f64,
    pub message: String,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct StudyOutcome {
    pub rows: Vec<StudyRow>,
    pub failures: Vec<StudyFailure>,
}

pub const STUDY_CSV_HEADER: &str =
    "room_seed,array_id,dnr_db,method,eps_dir_mean,eps_dir_std,eps_res_mean,eps_res_std,doa_err_mean_deg";

/// Evaluates one rendered scene in the SH domain.
///
/// SubDec errors compare the decomposition outputs against the ground-truth
/// direct part and residual; TempCut cuts 1 ms windows around the true TOAs
/// of all events. The DOA errors are those of single-source SH-MUSIC on the
/// mixture around each event, low-passed to the spatial aliasing frequency,
/// and are attached to both reports.
pub fn evaluate_scene(
    scene: &RenderedScene,
    params: &DecomposeParams,
    grid: &MusicGrid,
    include_direct: bool,
) -> Result<(ErrorReport, ErrorReport), AnalyzeError> {
    let fs = params.sample_rate;
    let sh = &scene.sh;
    let dec = decompose::run(&sh.mixture, params)?;
    let window = ErrorWindow::one_ms(fs);
    let all_toas: Vec<f64> = scene.events.iter().map(|e| e.toa).collect();
    let cut = temporal_cutout(&sh.mixture, &all_toas, fs, window.len);
    let band = music_band(scene, fs);
    let mut subdec = ErrorReport::default();
    let mut tempcut = ErrorReport::default();
    let skip = usize::from(!include_direct);
    for ev in scene.events.iter().skip(skip) {
        subdec.eps_dir.push(spatio_spectral_error(&dec.direct, &sh.direct, ev.toa, fs, window)?);
        subdec.eps_res.push(spatio_spectral_error(&dec.residual, &sh.residual, ev.toa, fs, window)?);
        tempcut.eps_dir.push(spatio_spectral_error(&cut, &sh.direct, ev.toa, fs, window)?);
        let start = window.start(ev.toa, fs) as usize;
        let doa = sh_music_doa(&band.slice_rows(start, window.len), 1, grid)?;
        let err = match_doa_errors(&doa, &[ev.doa])[0];
        subdec.doa_error_deg.push(err);
        tempcut.doa_error_deg.push(err);
    }
    Ok((subdec, tempcut))
}

fn music_band(scene: &RenderedScene, fs: f64) -> crate::numerics::DataMatrix {
    let f = aliasing_frequency(scene.sh_order, scene.geometry.radius, scene.speed_of_sound);
    lowpass(&scene.sh.mixture, f, fs)
}

/// Runs every (room, array, DNR) cell in parallel. Failed cells are
/// collected instead of aborting the sweep. Rows come out in
/// (room, array, DNR, method) order of the configuration.
pub fn run_simulation_study(config: &StudyConfig) -> Result<StudyOutcome, AnalyzeError> {
    let arrays = config.resolve_arrays()?;
    let mut grids: BTreeMap<usize, MusicGrid> = BTreeMap::new();
    for (_, a) in &arrays {
        grids.entry(a.default_sh_order()).or_insert_with_key(|&o| MusicGrid::new(o, config.music_resolution_deg));
    }
    let cells: Vec<(u64, &(String, ArraySpec), f64)> = config
        .room_seeds
        .iter()
        .flat_map(|&s| arrays.iter().flat_map(move |a| config.dnrs_db.iter().map(move |&d| (s, a, d))))
        .collect();
    let results: Vec<Result<Vec<StudyRow>, StudyFailure>> = cells
        .par_iter()
        .map(|&(seed, (id, array), dnr)| {
            let eval = || -> Result<(ErrorReport, ErrorReport), AnalyzeError> {
                let spec = random_scenario(seed)?.with_array(*array).with_dnr(dnr);
                let scene = render_scene(&spec.scene()?)?;
                let params = study_params(array, spec.sample_rate);
                evaluate_scene(&scene, &params, &grids[&scene.sh_order], config.include_direct)
            };
            let row = |method, report| StudyRow { room_seed: seed, array_id: id.clone(), dnr_db: dnr, method, report };
            eval().map(|(s, t)| vec![row(Method::SubDec, s), row(Method::TempCut, t)]).map_err(|e| StudyFailure {
                room_seed: seed,
                array_id: id.clone(),
                dnr_db: dnr,
                message: e.to_string(),
            })
        })
        .collect();
    let mut out = StudyOutcome::default();
    for r in results {
        match r {
            Ok(rows) => out.rows.extend(rows),
            Err(f) => {
                log::warn!("study cell seed {} {} {} dB failed: {}", f.room_seed, f.array_id, f.dnr_db, f.message);
                out.failures.push(f);
            }
        }
    }
    Ok(out)
}

pub fn write_study_csv<W: Write>(mut w: W, rows: &[StudyRow]) -> io::Result<()> {
    writeln!(w, "{STUDY_CSV_HEADER}")?;
    for r in rows {
        let (dm, ds) = r.report.eps_dir_stats();
        let (rm, rs) = r.report.eps_res_stats();
        writeln!(
            w,
            "{},{},{},{},{},{},{},{},{}",
            r.room_seed,
            r.array_id,
            r.dnr_db,
            r.method,
            sig9(dm),
            sig9(ds),
            sig9(rm),
            sig9(rs),
            sig9(r.report.doa_error_mean())
        )?;
    }
    Ok(())
}

pub const SUMMARY_CSV_HEADER: &str =
    "array_id,dnr_db,method,rooms,eps_dir_mean,eps_dir_std,eps_res_mean,eps_res_std,doa_err_mean_deg";

pub fn write_summary_csv<W: Write>(mut w: W, summary: &[StudySummary]) -> io::Result<()> {
    writeln!(w, "{SUMMARY_CSV_HEADER}")?;
    for s in summary {
        writeln!(
            w,
            "{},{},{},{},{},{},{},{},{}",
            s.array_id,
            s.dnr_db,
            s.method,
            s.rooms,
            sig9(s.eps_dir_mean),
            sig9(s.eps_dir_std),
            sig9(s.eps_res_mean),
            sig9(s.eps_res_std),
            sig9(s.doa_err_mean_deg)
        )?;
    }
    Ok(())
}

/// Per (array, DNR, method): mean and standard deviation over rooms of the
/// per-room average errors.
#[derive(Debug, Clone, PartialEq)]
pub struct StudySummary {
    pub array_id: String,
    pub dnr_db: f64,
    pub method: Method,
    pub rooms: usize,
    pub eps_dir_mean: f64,
    pub eps_dir_std: f64,
    pub eps_res_mean: f64,
    pub eps_res_std: f64,
    pub doa_err_mean_deg: f64,
}

/// Aggregates rows independently of their order; output is sorted by
/// array, DNR and method.
pub fn summarize(rows: &[StudyRow]) -> Vec<StudySummary> {
    let mut groups: BTreeMap<(String, i64, Method), Vec<&StudyRow>> = BTreeMap::new();
    for r in rows {
        groups.entry((r.array_id.clone(), (r.dnr_db * 1e6).round() as i64, r.method)).or_default().push(r);
    }
    groups
        .into_iter()
        .map(|((array_id, _, method), rs)| {
            let dir: Vec<f64> = rs.iter().map(|r| r.report.eps_dir_stats().0).collect();
            let res: Vec<f64> = rs.iter().map(|r| r.report.eps_res_stats().0).filter(|v| !v.is_nan()).collect();
            let doa: Vec<f64> = rs.iter().map(|r| r.report.doa_error_mean()).collect();
            let (eps_dir_mean, eps_dir_std) = mean_std(&dir);
            let (eps_res_mean, eps_res_std) = mean_std(&res);
            StudySummary {
                array_id,
                dnr_db: rs[0].dnr_db,
                method,
                rooms: rs.len(),
                eps_dir_mean,
                eps_dir_std,
                eps_res_mean,
                eps_res_std,
                doa_err_mean_deg: mean_std(&doa).0,
            }
        })
        .collect()
}

/// One repetition of the two-simultaneous-reflection experiment.
#[derive(Debug, Clone, PartialEq)]
pub struct TwoReflectionRow {
    pub tdoa_s: f64,
    pub seed: u64,
    pub eps_dir_subdec: f64,
    pub eps_res_subdec: f64,
    pub eps_dir_tempcut: f64,
    /// Mean of the two matched SH-MUSIC errors, degrees.
    pub doa_error_deg: f64,
}

/// Two equal-gain reflections `tdoa_s` apart on Array2 at 20 dB DNR.
///
/// All spectra are taken in a 1 ms window centred on the mean TOA, with the
/// sum of both reflections as ground truth. TempCut keeps the union of the
/// windows around both TOAs. SH-MUSIC looks for two sources in the same
/// window.
pub fn two_reflection_trial(tdoa_s: f64, seed: u64, grid: &MusicGrid) -> Result<TwoReflectionRow, AnalyzeError> {
    let scene = render_scene(&two_reflection_scene(tdoa_s, seed)?)?;
    let fs = 48_000.0;
    let params = study_params(&ArraySpec::ARRAY2, fs);
    let sh = &scene.sh;
    let dec = decompose::run(&sh.mixture, &params)?;
    let window = ErrorWindow::one_ms(fs);
    let toas: Vec<f64> = scene.events.iter().map(|e| e.toa).collect();
    let centre = toas.iter().sum::<f64>() / toas.len() as f64;
    let cut = temporal_cutout(&sh.mixture, &toas, fs, window.len);
    let start = window.start(centre, fs) as usize;
    let doas = sh_music_doa(&music_band(&scene, fs).slice_rows(start, window.len), 2, grid)?;
    let truth: Vec<_> = scene.events.iter().map(|e| e.doa).collect();
    let errs = match_doa_errors(&doas, &truth);
    Ok(TwoReflectionRow {
        tdoa_s,
        seed,
        eps_dir_subdec: spatio_spectral_error(&dec.direct, &sh.direct, centre, fs, window)?,
        eps_res_subdec: spatio_spectral_error(&dec.residual, &sh.residual, centre, fs, window)?,
        eps_dir_tempcut: spatio_spectral_error(&cut, &sh.direct, centre, fs, window)?,
        doa_error_deg: mean_std(&errs).0,
    })
}

/// Every TDOA × seed trial, in parallel, in input order.
pub fn run_two_reflection_study(tdoas_s: &[f64], seeds: &[u64]) -> Vec<Result<TwoReflectionRow, AnalyzeError>> {
    let grid = MusicGrid::new(4, default_resolution());
    let trials: Vec<(f64, u64)> = tdoas_s.iter().flat_map(|&t| seeds.iter().map(move |&s| (t, s))).collect();
    trials.par_iter().map(|&(t, s)| two_reflection_trial(t, s, &grid)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn row(seed: u64, dnr: f64, method: Method, dir: &[f64]) -> StudyRow {
        StudyRow {
            room_seed: seed,
            array_id: "array2".into(),
            dnr_db: dnr,
            method,
            report: ErrorReport { eps_dir: dir.to_vec(), eps_res: vec![], doa_error_deg: vec![1.0] },
        }
    }

    #[test]
    fn summary_is_order_independent() {
        let rows = vec![
            row(1, 10.0, Method::SubDec, &[0.2, 0.4]),
            row(2, 10.0, Method::SubDec, &[0.5]),
            row(1, 10.0, Method::TempCut, &[0.9]),
        ];
        let mut rev = rows.clone();
        rev.reverse();
        let a = summarize(&rows);
        assert_eq!(format!("{a:?}"), format!("{:?}", summarize(&rev)));
        assert_eq!(a.len(), 2);
        assert_eq!(a[0].method, Method::SubDec);
        assert!((a[0].eps_dir_mean - 0.4).abs() < 1e-15);
        assert_eq!(a[0].rooms, 2);
        assert!(a[1].eps_res_mean.is_nan());
    }

    #[test]
    fn csv_shape() {
        let rows = vec![row(3, 20.0, Method::TempCut, &[0.5, 0.5])];
        let mut out = Vec::new();
        write_study_csv(&mut out, &rows).unwrap();
        let s = String::from_utf8(out).unwrap();
        let lines: Vec<&str> = s.lines().collect();
        assert_eq!(lines[0], STUDY_CSV_HEADER);
        assert_eq!(lines[1], "3,array2,20,tempcut,5.00000000e-1,0.00000000e0,nan,nan,1.00000000e0");
    }

    #[test]
    fn config_parsing() {
        let c: StudyConfig = toml::from_str("room_seeds = [1, 2]\ndnrs_db = [10.0]").unwrap();
        assert_eq!(c.arrays, vec!["array2".to_string()]);
        assert!(c.include_direct);
        assert!(toml::from_str::<StudyConfig>("room_seeds = [1]\ndnrs_db = [10.0]\nfoo = 1").is_err());
        let bad = StudyConfig::new(vec![1], vec!["array9".into()], vec![10.0]);
        assert!(run_simulation_study(&bad).is_err());
    }

    #[test]
    fn study_params_per_array() {
        let p = study_params(&ArraySpec::ARRAY3, 48_000.0);
        assert_eq!((p.block_size, p.hop, p.residual_len, p.gsv_avg_len), (64, 8, 960, 32));
        assert_eq!(study_params(&ArraySpec::ARRAY1, 48_000.0).block_size, 32);
    }
}
