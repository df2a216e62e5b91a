//! Command-line driver.
//!
//! Exit codes: 0 success, 1 numerical failure, 2 input error (unreadable or
//! inconsistent files, bad flags), 3 solver budget exhausted (outputs are
//! still written).

use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use log::{info, warn};
use ptzcap_core::camera::matrix_to_euler;
use ptzcap_core::energy::EnergyWeights;
use ptzcap_core::metrics::{evaluate, pck, EvaluationConfig};
use ptzcap_core::rotation_from_background::{estimate_rotation_deltas, PairStatus, RansacConfig, RotationDeltas};
use ptzcap_core::skeleton::SkeletonModel;
use ptzcap_core::solver::{solve, SolveError, SolverConfig, SolverMode};
use ptzcap_core::synth::{generate_scene_with, SynthConfig};

use crate::config::{ConfigFile, CONFIG_ENV};
use crate::error::CliError;
use crate::formats::cameras::{load_rig, save_rig};
use crate::formats::correspondences::{load_correspondences, save_correspondences};
use crate::formats::deltas::{load_deltas, save_deltas};
use crate::formats::observations::ObservationFile;
use crate::formats::trajectory::TrajectoryFile;
use crate::report::{write_energy_history, write_metric_series, MetricsDocument};
use crate::skeleton_file::{load_skeleton, save_skeleton};

#[derive(Debug, Parser)]
#[command(name = "ptzcap", version, about = "Motion capture from pan-tilt cameras with unknown orientation")]
pub struct Cli {
    /// More log output (-v info, -vv debug). RUST_LOG also works.
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    pub verbose: u8,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate a synthetic scene with ground truth.
    Synth(SynthArgs),
    /// Estimate inter-frame camera rotations from background correspondences.
    EstimateRotations(EstimateArgs),
    /// Reconstruct the 3D trajectory from 2D detections.
    Reconstruct(ReconstructArgs),
    /// Compare a reconstruction against ground truth.
    Metrics(MetricsArgs),
}

#[derive(Debug, Args)]
pub struct SynthArgs {
    /// Output directory; created if missing.
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long, default_value_t = 6)]
    pub cameras: usize,
    #[arg(long, default_value_t = 250)]
    pub frames: usize,
    #[arg(long, default_value_t = 50.0)]
    pub fps: f64,
    /// Athlete speed in m/s.
    #[arg(long, default_value_t = 17.0)]
    pub speed: f64,
    /// Gaussian noise on joint detections, in pixels.
    #[arg(long, default_value_t = 0.0)]
    pub noise: f64,
    #[arg(long, default_value_t = 0.0)]
    pub dropout: f64,
    #[arg(long, default_value_t = 0.0)]
    pub outliers: f64,
    #[arg(long, default_value_t = 40)]
    pub background_points: usize,
    #[arg(long, default_value_t = 0.0)]
    pub background_noise: f64,
    #[arg(long, default_value_t = 0.0)]
    pub background_outliers: f64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

#[derive(Debug, Args)]
pub struct EstimateArgs {
    #[arg(long)]
    pub correspondences: PathBuf,
    /// Camera file; only intrinsics are used.
    #[arg(long)]
    pub rig: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
    /// Write the raw per-pair deltas without median/Gaussian filtering.
    #[arg(long)]
    pub no_filter: bool,
    #[arg(long)]
    pub threshold_px: Option<f64>,
    #[arg(long)]
    pub max_iters: Option<usize>,
    #[arg(long)]
    pub confidence: Option<f64>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// TOML config; defaults to the file named by PTZCAP_CONFIG.
    #[arg(long)]
    pub config: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ModeArg {
    Calibrated,
    Uncalibrated,
}

#[derive(Debug, Args)]
pub struct ReconstructArgs {
    #[arg(long)]
    pub observations: PathBuf,
    #[arg(long)]
    pub rig: PathBuf,
    #[arg(long)]
    pub skeleton: PathBuf,
    /// Rotation deltas; enables the rotation-consistency term.
    #[arg(long)]
    pub deltas: Option<PathBuf>,
    /// Output trajectory file.
    #[arg(long)]
    pub out: PathBuf,
    /// Energy history CSV; defaults to the output path with `.energy.csv`.
    #[arg(long)]
    pub history: Option<PathBuf>,
    /// Comma-separated camera ids to use, e.g. `0,2,4`.
    #[arg(long, value_delimiter = ',')]
    pub cameras: Option<Vec<usize>>,
    /// Force a mode instead of inferring it from the inputs.
    #[arg(long, value_enum)]
    pub mode: Option<ModeArg>,
    /// Optimize per-frame values instead of cosine coefficients.
    #[arg(long)]
    pub direct: bool,
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub outer_iters: Option<usize>,
    #[arg(long)]
    pub max_inner_iters: Option<usize>,
    #[arg(long)]
    pub bootstrap_iters: Option<usize>,
    #[arg(long)]
    pub step_length: Option<f64>,
    #[arg(long)]
    pub init_spread: Option<f64>,
    #[arg(long)]
    pub pose_basis: Option<usize>,
    #[arg(long)]
    pub camera_basis: Option<usize>,
    #[arg(long)]
    pub lambda_rep: Option<f64>,
    #[arg(long)]
    pub lambda_limbs: Option<f64>,
    #[arg(long)]
    pub lambda_rot: Option<f64>,
    #[arg(long)]
    pub sigma_sq: Option<f64>,
}

#[derive(Debug, Args)]
pub struct MetricsArgs {
    #[arg(long)]
    pub pred: PathBuf,
    #[arg(long)]
    pub gt: PathBuf,
    #[arg(long)]
    pub skeleton: PathBuf,
    /// Summary JSON.
    #[arg(long)]
    pub out: PathBuf,
    /// Per-frame CSV.
    #[arg(long)]
    pub csv: Option<PathBuf>,
    #[arg(long)]
    pub fps: Option<f64>,
    /// Gaussian smoothing of both CoM series before speeds, in frames.
    #[arg(long)]
    pub speed_sigma: Option<f64>,
    /// PCK radius in head-neck distances.
    #[arg(long, default_value_t = 1.0)]
    pub pck_multiplier: f64,
    #[arg(long)]
    pub config: Option<PathBuf>,
}

pub fn init_logging(verbose: u8) {
    let level = match verbose {
        0 => log::LevelFilter::Warn,
        1 => log::LevelFilter::Info,
        _ => log::LevelFilter::Debug,
    };
    let _ = env_logger::Builder::new()
        .filter_level(level)
        .parse_default_env()
        .format_timestamp(None)
        .try_init();
}

pub fn run(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Synth(a) => synth(&a),
        Command::EstimateRotations(a) => estimate_rotations(&a),
        Command::Reconstruct(a) => reconstruct(&a),
        Command::Metrics(a) => metrics(&a),
    }
}

fn input_at(path: &Path) -> impl Fn(crate::error::FormatError) -> CliError + '_ {
    move |e| CliError::input(path.display(), e)
}

fn load_config(explicit: Option<&Path>) -> Result<ConfigFile, CliError> {
    ConfigFile::resolve(explicit).map_err(|e| {
        let src = explicit.map_or_else(|| format!("${CONFIG_ENV}"), |p| p.display().to_string());
        CliError::input(src, e)
    })
}

pub fn synth(a: &SynthArgs) -> Result<(), CliError> {
    let cfg = SynthConfig {
        n_cameras: a.cameras,
        n_frames: a.frames,
        fps: a.fps,
        speed_mps: a.speed,
        noise_px: a.noise,
        dropout_rate: a.dropout,
        outlier_rate: a.outliers,
        background_points: a.background_points,
        background_noise_px: a.background_noise,
        background_outlier_rate: a.background_outliers,
        seed: a.seed,
        ..SynthConfig::default()
    };
    let scene = generate_scene_with(&cfg).map_err(|e| CliError::Input(e.to_string()))?;
    std::fs::create_dir_all(&a.out).map_err(|e| CliError::input(a.out.display(), e))?;
    let joints = scene.skeleton.joint_names().to_vec();
    let out = |name: &str| a.out.join(name);
    let write = |name: &str, r: Result<(), crate::error::FormatError>| r.map_err(|e| CliError::input(out(name).display(), e));
    write(
        "observations.jsonl",
        ObservationFile::new(joints.clone(), scene.observations.clone()).save(&out("observations.jsonl")),
    )?;
    write("cameras.jsonl", save_rig(&scene.rig, &out("cameras.jsonl")))?;
    write(
        "cameras_uncalibrated.jsonl",
        save_rig(&scene.uncalibrated_rig(), &out("cameras_uncalibrated.jsonl")),
    )?;
    write(
        "correspondences.jsonl",
        save_correspondences(&scene.correspondences, &out("correspondences.jsonl")),
    )?;
    write("gt_deltas.jsonl", save_deltas(&scene.gt_deltas, &out("gt_deltas.jsonl")))?;
    let gt = TrajectoryFile {
        joints,
        trajectory: scene.gt_trajectory.clone(),
        rotations: Some(scene.gt_rotation_tracks.clone()),
    };
    write("ground_truth.jsonl", gt.save(&out("ground_truth.jsonl")))?;
    write("skeleton.toml", save_skeleton(&scene.skeleton, &out("skeleton.toml")))?;
    println!(
        "wrote {} cameras x {} frames ({} joints) to {}",
        cfg.n_cameras,
        cfg.n_frames,
        scene.skeleton.n_joints(),
        a.out.display()
    );
    Ok(())
}

fn median(mut v: Vec<f64>) -> f64 {
    if v.is_empty() {
        return f64::NAN;
    }
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

pub fn estimate_rotations(a: &EstimateArgs) -> Result<(), CliError> {
    let file_cfg = load_config(a.config.as_deref())?;
    let mut cfg = RansacConfig::default();
    file_cfg.ransac.apply(&mut cfg);
    cfg.threshold_px = a.threshold_px.unwrap_or(cfg.threshold_px);
    cfg.max_iters = a.max_iters.unwrap_or(cfg.max_iters);
    cfg.confidence = a.confidence.unwrap_or(cfg.confidence);
    cfg.seed = a.seed.unwrap_or(cfg.seed);

    let corr = load_correspondences(&a.correspondences).map_err(input_at(&a.correspondences))?;
    let rig = load_rig(&a.rig).map_err(input_at(&a.rig))?;
    if corr.n_cameras() != rig.n_cameras() || corr.n_frames() != rig.n_frames() {
        return Err(CliError::Input(format!(
            "correspondences cover {} cameras x {} frames, the rig {} x {}",
            corr.n_cameras(),
            corr.n_frames(),
            rig.n_cameras(),
            rig.n_frames()
        )));
    }
    let est = estimate_rotation_deltas(&corr, &rig, &cfg, !a.no_filter);
    let mut failed = 0;
    for r in &est.reports {
        if let PairStatus::Failed(e) = &r.status {
            failed += 1;
            warn!("camera {} frames {}-{}: {e}", r.camera, r.frame, r.frame + 1);
        }
    }
    let deltas = if a.no_filter { &est.raw } else { &est.deltas };
    save_deltas(deltas, &a.out).map_err(input_at(&a.out))?;

    for c in 0..rig.n_cameras() {
        let ratios = est
            .reports
            .iter()
            .filter(|r| r.camera == c && r.status == PairStatus::Ok)
            .map(|r| r.inlier_ratio())
            .collect();
        let angles: Vec<f64> = deltas.cameras[c]
            .iter()
            .filter(|e| e.valid)
            .map(|e| {
                let a = matrix_to_euler(&e.rotation).angles.to_array();
                a.iter().map(|v| v.abs()).sum::<f64>() / 3.0
            })
            .collect();
        let mean_deg = if angles.is_empty() {
            f64::NAN
        } else {
            angles.iter().sum::<f64>() / angles.len() as f64
        }
        .to_degrees();
        println!(
            "camera {c}: median inlier ratio {:.3}, mean |euler delta| {mean_deg:.4} deg, invalid {:.1}%",
            median(ratios),
            100.0 * deltas.invalid_fraction(c)
        );
    }
    if !est.reports.is_empty() && failed == est.reports.len() {
        return Err(CliError::Numerical(String::from(
            "rotation estimation failed for every frame pair",
        )));
    }
    Ok(())
}

fn check_joint_names(skel: &SkeletonModel, names: &[String], what: &str) -> Result<(), CliError> {
    if skel.joint_names() != names {
        return Err(CliError::Input(format!("{what} joints do not match the skeleton")));
    }
    Ok(())
}

fn solve_error(e: SolveError) -> CliError {
    match e {
        SolveError::NonFiniteInitialEnergy => CliError::Numerical(e.to_string()),
        _ => CliError::Input(e.to_string()),
    }
}

fn default_history_path(out: &Path) -> PathBuf {
    out.with_extension("energy.csv")
}

pub fn reconstruct(a: &ReconstructArgs) -> Result<(), CliError> {
    let file_cfg = load_config(a.config.as_deref())?;
    let obs_file = ObservationFile::load(&a.observations).map_err(input_at(&a.observations))?;
    for (c, f) in &obs_file.gaps {
        warn!("no detections for camera {c} frame {f}");
    }
    let mut rig = load_rig(&a.rig).map_err(input_at(&a.rig))?;
    let skel = load_skeleton(&a.skeleton).map_err(input_at(&a.skeleton))?;
    check_joint_names(&skel, &obs_file.joints, "observation")?;
    let mut deltas = match &a.deltas {
        Some(p) => Some(load_deltas(p).map_err(input_at(p))?),
        None => None,
    };
    let mut obs = obs_file.set;
    if obs.n_cameras() != rig.n_cameras() || obs.n_frames() != rig.n_frames() {
        return Err(CliError::Input(format!(
            "observations cover {} cameras x {} frames, the rig {} x {}",
            obs.n_cameras(),
            obs.n_frames(),
            rig.n_cameras(),
            rig.n_frames()
        )));
    }
    if let Some(d) = &deltas {
        let pairs = d.cameras.first().map_or(0, |c| c.len());
        if d.n_cameras() != rig.n_cameras() || pairs + 1 != rig.n_frames() {
            return Err(CliError::Input(String::from("deltas do not match the rig dimensions")));
        }
    }
    if let Some(sel) = &a.cameras {
        obs = obs.select_cameras(sel).map_err(|e| CliError::input("--cameras", e))?;
        rig = rig.select(sel).map_err(|e| CliError::input("--cameras", e))?;
        deltas = deltas.map(|d: RotationDeltas| d.select_cameras(sel));
    }

    let mode = match a.mode {
        Some(ModeArg::Calibrated) if !rig.has_rotations() => {
            return Err(CliError::Input(String::from(
                "calibrated mode needs an R track for every camera",
            )))
        }
        Some(ModeArg::Calibrated) => SolverMode::Calibrated,
        Some(ModeArg::Uncalibrated) => SolverMode::Uncalibrated,
        None if rig.has_rotations() => SolverMode::Calibrated,
        None => SolverMode::Uncalibrated,
    };
    if mode == SolverMode::Uncalibrated {
        rig = rig.without_rotations();
        if deltas.is_none() {
            warn!("no rotations and no deltas: camera rotations are optimized freely");
        }
    }
    let (mut cfg, mut weights) = match mode {
        SolverMode::Calibrated => (SolverConfig::calibrated(), EnergyWeights::calibrated()),
        _ => (SolverConfig::uncalibrated(), EnergyWeights::uncalibrated()),
    };
    file_cfg.solver.apply(&mut cfg);
    file_cfg.weights.apply(&mut weights);
    apply_flags(a, &mut cfg, &mut weights);
    if a.direct {
        cfg.mode = SolverMode::BaselineDirect;
    }
    info!("mode {:?}, {} cameras, {} frames", cfg.mode, rig.n_cameras(), rig.n_frames());

    let result = solve(&obs, &rig, &skel, deltas.as_ref(), &weights, &cfg).map_err(solve_error)?;
    for w in &result.warnings {
        warn!("{w}");
    }
    let rotations = (mode == SolverMode::Uncalibrated).then(|| result.rotation_tracks.clone());
    let traj = TrajectoryFile {
        joints: skel.joint_names().to_vec(),
        trajectory: result.trajectory.clone(),
        rotations,
    };
    traj.save(&a.out).map_err(input_at(&a.out))?;
    let history_path = a.history.clone().unwrap_or_else(|| default_history_path(&a.out));
    let file = std::fs::File::create(&history_path).map_err(|e| CliError::input(history_path.display(), e))?;
    write_energy_history(&result.energy_history, file).map_err(input_at(&history_path))?;

    let last = result.energy_history.last().copied();
    println!(
        "mode {:?}: {:?} after {} outer iterations, energy {}",
        cfg.mode,
        result.termination,
        result.outer_iterations,
        last.map_or(f64::NAN, |e| e.total)
    );
    if let Some(e) = last {
        println!("  e_rep {} e_limbs {} e_rot {}", e.e_rep, e.e_limbs, e.e_rot);
    }
    if !result.converged {
        return Err(CliError::NotConverged);
    }
    Ok(())
}

fn apply_flags(a: &ReconstructArgs, cfg: &mut SolverConfig, w: &mut EnergyWeights) {
    macro_rules! set {
        ($target:expr, $($flag:ident => $field:ident),*) => {
            $(if let Some(v) = a.$flag { $target.$field = v; })*
        };
    }
    set!(cfg, seed => seed, outer_iters => outer_iters, max_inner_iters => max_inner_iters,
        bootstrap_iters => bootstrap_iters, step_length => step_length, init_spread => init_spread_m,
        pose_basis => pose_basis, camera_basis => camera_basis);
    set!(w, lambda_rep => lambda_rep, lambda_limbs => lambda_limbs, lambda_rot => lambda_rot,
        sigma_sq => sigma_sq);
}

pub fn metrics(a: &MetricsArgs) -> Result<(), CliError> {
    let file_cfg = load_config(a.config.as_deref())?;
    let mut cfg = EvaluationConfig::default();
    file_cfg.metrics.apply(&mut cfg);
    cfg.fps = a.fps.unwrap_or(cfg.fps);
    cfg.speed_sigma = a.speed_sigma.unwrap_or(cfg.speed_sigma);

    let pred = TrajectoryFile::load(&a.pred).map_err(input_at(&a.pred))?;
    let gt = TrajectoryFile::load(&a.gt).map_err(input_at(&a.gt))?;
    let skel = load_skeleton(&a.skeleton).map_err(input_at(&a.skeleton))?;
    check_joint_names(&skel, &gt.joints, "ground-truth")?;
    check_joint_names(&skel, &pred.joints, "predicted")?;
    if pred.trajectory.n_frames() != gt.trajectory.n_frames() {
        return Err(CliError::Input(format!(
            "prediction has {} frames, ground truth {}",
            pred.trajectory.n_frames(),
            gt.trajectory.n_frames()
        )));
    }
    let eval = evaluate(&pred.trajectory, &gt.trajectory, &skel, &cfg).map_err(|e| CliError::Numerical(e.to_string()))?;
    let as_opt = |t: &TrajectoryFile| -> Vec<Vec<Option<nalgebra::Vector3<f64>>>> {
        t.trajectory.frames().map(|p| p.iter().copied().map(Some).collect()).collect()
    };
    let pck_result = match (skel.joint_index("head"), skel.joint_index("neck")) {
        (Some(h), Some(n)) => pck(&as_opt(&pred), &as_opt(&gt), h, n, a.pck_multiplier, None)
            .map_err(|e| CliError::Numerical(e.to_string()))?,
        _ => {
            warn!("skeleton has no head/neck joints; PCK is undefined");
            ptzcap_core::metrics::PckResult {
                percentage: f64::NAN,
                counted: 0,
                skipped_frames: gt.trajectory.n_frames(),
            }
        }
    };
    let doc = MetricsDocument::new(&eval, &pck_result, a.pck_multiplier);
    let file = std::fs::File::create(&a.out).map_err(|e| CliError::input(a.out.display(), e))?;
    doc.write(file).map_err(input_at(&a.out))?;
    if let Some(path) = &a.csv {
        let file = std::fs::File::create(path).map_err(|e| CliError::input(path.display(), e))?;
        write_metric_series(&eval, gt.trajectory.n_frames(), file).map_err(input_at(path))?;
    }
    for (key, r) in &eval.entries {
        println!("{key}: {:.4} ± {:.4} {}", r.mean, r.std, r.unit.symbol());
    }
    println!("PCK@{}: {:.2}%", a.pck_multiplier, pck_result.percentage);
    Ok(())
}
