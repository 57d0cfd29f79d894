use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use srir_subspace::analyze::{
    rank_trace, run_simulation_study, spatio_spectral_error, summarize, write_study_csv, write_summary_csv,
    ErrorWindow, StudyConfig,
};
use srir_subspace::decompose::{self, write_trace_csv};
use srir_subspace::io::{
    format_geometry, read_events_csv, read_f64_sidecar, read_wav, write_atomic, write_events_csv, write_f64_sidecar,
    write_rank_csv, write_wav, AudioFile, BitDepth, Domain, RunConfig,
};
use srir_subspace::numerics::DataMatrix;
use srir_subspace::simulate::{random_scenario, render_scene, ArraySpec, ScenarioSpec};
use srir_subspace::sphere::{encode_sh, sh_count, ShTransform, SphereError};

use crate::error::CliError;
use crate::{DecomposeArgs, EvaluateArgs, RankArgs, SimulateArgs, SweepArgs};

fn out_dir(dir: &Path) -> Result<&Path, CliError> {
    fs::create_dir_all(dir).map_err(|e| CliError::new("io", format!("{}: {e}", dir.display())))?;
    Ok(dir)
}

fn write_text(path: &Path, text: &str) -> Result<(), CliError> {
    Ok(write_atomic(path, |w| w.write_all(text.as_bytes()))?)
}

/// Writes `name.wav` and, if asked, `name.f64`.
fn write_signal(
    dir: &Path,
    name: &str,
    rate: u32,
    x: &DataMatrix,
    depth: BitDepth,
    f64_too: bool,
) -> Result<(), CliError> {
    write_wav(&dir.join(format!("{name}.wav")), &AudioFile::new(rate, x.clone(), depth))?;
    if f64_too {
        write_f64_sidecar(&dir.join(format!("{name}.f64")), rate, x)?;
    }
    Ok(())
}

/// Prefers the float64 sidecar over the WAV when both exist.
fn read_signal(dir: &Path, name: &str) -> Result<(u32, DataMatrix), CliError> {
    let side = dir.join(format!("{name}.f64"));
    if side.exists() {
        return Ok(read_f64_sidecar(&side)?);
    }
    let a = read_wav(&dir.join(format!("{name}.wav")))?;
    Ok((a.sample_rate, a.samples))
}

fn max_order(mics: usize) -> usize {
    let mut n = 0;
    while sh_count(n + 1) <= mics {
        n += 1;
    }
    n
}

pub fn decompose(args: DecomposeArgs) -> Result<(), CliError> {
    let mut cfg = match &args.config {
        Some(p) => RunConfig::load(p)?,
        None => RunConfig::default(),
    };
    if let Some(g) = args.geometry {
        cfg.geometry = Some(g);
        cfg.array = None;
    }
    if let Some(d) = args.domain {
        cfg.domain = d;
    }
    if args.sh_order.is_some() {
        cfg.sh_order = args.sh_order;
    }
    if args.float64 {
        cfg.output.float64_sidecar = true;
    }
    if let Some(o) = args.out {
        cfg.output.dir = Some(o);
    }
    cfg.validate()?;

    let audio = read_wav(&args.input)?;
    let fs_hz = f64::from(audio.sample_rate);
    let mut x = cfg.apply_channel_order(&audio.samples)?;
    if let Some(geo) = cfg.resolve_geometry()? {
        if geo.mics() != x.cols() {
            return Err(SphereError::ChannelMismatch { signal: x.cols(), geometry: geo.mics() }.into());
        }
        if cfg.domain == Domain::Sh {
            let order = cfg.sh_order.unwrap_or_else(|| max_order(geo.mics()));
            let t = ShTransform::new(&geo, order, fs_hz, cfg.speed_of_sound, cfg.max_gain_db)?;
            x = encode_sh(&x, &geo, &t)?;
        }
    }
    let params = cfg.decompose_params(fs_hz);
    let result = decompose::run(&x, &params)?;
    log::info!("{} detected blocks", result.traces.iter().filter(|t| t.detected).count());

    let dir = out_dir(cfg.output.dir.as_deref().unwrap_or(Path::new(".")))?;
    let (depth, side) = (cfg.output.bit_depth, cfg.output.float64_sidecar);
    write_signal(dir, "direct", audio.sample_rate, &result.direct, depth, side)?;
    write_signal(dir, "residual", audio.sample_rate, &result.residual, depth, side)?;
    if side {
        write_f64_sidecar(&dir.join("input.f64"), audio.sample_rate, &x)?;
    }
    write_atomic(&dir.join("traces.csv"), |w| write_trace_csv(w, &result.traces, fs_hz))?;
    Ok(())
}

pub fn simulate(args: SimulateArgs) -> Result<(), CliError> {
    let mut spec: ScenarioSpec = match &args.scenario {
        Some(p) => {
            let text = fs::read_to_string(p).map_err(|e| CliError::new("io", format!("{}: {e}", p.display())))?;
            toml::from_str(&text).map_err(|e| CliError::new("config", format!("{}: {e}", p.display())))?
        }
        None => random_scenario(args.seed.unwrap_or(0))?,
    };
    if let Some(name) = &args.array {
        spec.array =
            ArraySpec::named(name).ok_or_else(|| CliError::new("config", format!("unknown array '{name}'")))?;
    }
    if let Some(d) = args.dnr_db {
        spec.dnr_db = d;
    }
    if args.sh_order.is_some() {
        spec.sh_order = args.sh_order;
    }
    let scene = render_scene(&spec.scene()?)?;
    let rate = spec.sample_rate.round() as u32;
    let mix = match args.domain {
        Domain::Raw => &scene.mic,
        Domain::Sh => &scene.sh,
    };
    let dir = out_dir(&args.out.out)?;
    let truth = dir.join("ground_truth");
    let truth = out_dir(&truth)?;
    write_signal(dir, "srir", rate, &mix.mixture, BitDepth::Float32, args.float64)?;
    write_signal(truth, "direct", rate, &mix.direct, BitDepth::Float32, args.float64)?;
    write_signal(truth, "residual", rate, &mix.residual, BitDepth::Float32, args.float64)?;
    write_atomic(&truth.join("events.csv"), |w| write_events_csv(w, &scene.events))?;
    let toml = toml::to_string(&spec).map_err(|e| CliError::new("config", e.to_string()))?;
    write_text(&dir.join("scenario.toml"), &toml)?;
    write_text(&dir.join("geometry.txt"), &format_geometry(&scene.geometry))?;
    Ok(())
}

pub fn rank(args: RankArgs) -> Result<(), CliError> {
    let audio = read_wav(&args.input)?;
    let trace = rank_trace(&audio.samples, args.window, args.hop, args.dr_db, f64::from(audio.sample_rate))?;
    let dir = out_dir(&args.out.out)?;
    write_atomic(&dir.join("rank_trace.csv"), |w| write_rank_csv(w, &trace))?;
    Ok(())
}

pub const ERRORS_CSV_HEADER: &str = "case,event,toa_s,eps_dir,eps_res";

pub fn evaluate(args: EvaluateArgs) -> Result<(), CliError> {
    if args.estimate.len() != args.truth.len() {
        return Err(CliError::new(
            "usage",
            format!("{} --estimate but {} --truth directories", args.estimate.len(), args.truth.len()),
        ));
    }
    let mut rows = Vec::new();
    for (case, (est, truth)) in args.estimate.iter().zip(&args.truth).enumerate() {
        let gt: PathBuf = truth.join("ground_truth");
        let (rate, gt_dir) = read_signal(&gt, "direct")?;
        let (_, gt_res) = read_signal(&gt, "residual")?;
        let (_, est_dir) = read_signal(est, "direct")?;
        let (_, est_res) = read_signal(est, "residual")?;
        let events = read_events_csv(&gt.join("events.csv"))?;
        let fs_hz = f64::from(rate);
        let window = ErrorWindow::one_ms(fs_hz);
        for (i, ev) in events.iter().enumerate() {
            let d = spatio_spectral_error(&est_dir, &gt_dir, ev.toa, fs_hz, window)?;
            let r = spatio_spectral_error(&est_res, &gt_res, ev.toa, fs_hz, window)?;
            rows.push(format!("{case},{i},{:e},{:.8e},{:.8e}", ev.toa, d, r));
        }
    }
    let dir = out_dir(&args.out.out)?;
    write_atomic(&dir.join("errors.csv"), |w| {
        writeln!(w, "{ERRORS_CSV_HEADER}")?;
        rows.iter().try_for_each(|r| writeln!(w, "{r}"))
    })?;
    Ok(())
}

pub fn sweep(args: SweepArgs) -> Result<(), CliError> {
    let text =
        fs::read_to_string(&args.config).map_err(|e| CliError::new("io", format!("{}: {e}", args.config.display())))?;
    let cfg: StudyConfig =
        toml::from_str(&text).map_err(|e| CliError::new("config", format!("{}: {e}", args.config.display())))?;
    let outcome = run_simulation_study(&cfg)?;
    let dir = out_dir(&args.out.out)?;
    write_atomic(&dir.join("study_results.csv"), |w| write_study_csv(w, &outcome.rows))?;
    write_atomic(&dir.join("study_summary.csv"), |w| write_summary_csv(w, &summarize(&outcome.rows)))?;
    if !outcome.failures.is_empty() {
        write_atomic(&dir.join("study_failures.csv"), |w| {
            writeln!(w, "room_seed,array_id,dnr_db,message")?;
            outcome.failures.iter().try_for_each(|f| {
                writeln!(w, "{},{},{},\"{}\"", f.room_seed, f.array_id, f.dnr_db, f.message.replace('"', "'"))
            })
        })?;
    }
    Ok(())
}
