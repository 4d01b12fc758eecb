//! `binaural-sim` command-line front end.
//!
//! Every subcommand reads and validates all inputs and computes its results
//! in memory before any output file is touched. Diagnostics go to stderr as
//! `key=value` lines. Exit codes: 0 success, 1 I/O or config problems,
//! 2 domain errors (no usable source estimate, room or acoustics failures,
//! non-mono audio).

use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use binaural_sim::acoustics::{compute_rir, fit_scene, sample_room, AcousticsError};
use binaural_sim::geometry::{GeometryError, Point3};
use binaural_sim::io::{
    load_config, read_boxes, read_depth_dir, read_intrinsics, read_pfm, read_poses, read_trajectory, read_wav,
    write_depth, write_trajectory, write_wav, IoError, SceneConfig, WavEncoding,
};
use binaural_sim::localization::{estimate_raw_source_points, filter_and_interpolate, FrameStatus, LocalizationError};
use binaural_sim::pipeline::render_scene;
use binaural_sim::renderer::RenderError;
use binaural_sim::toy::toy_scene;
use binaural_sim::{AudioBuffer, RoomCategory};
use clap::{Parser, Subcommand};

/// Environment variable holding the worker thread count.
const THREADS_ENV: &str = "BINAURAL_SIM_THREADS";

#[derive(Parser)]
#[command(name = "binaural-sim", version, about = "Binaural room rendering for a moving sound source")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Estimate the source trajectory from grounding boxes and depth maps.
    Localize {
        #[arg(long)]
        boxes: Option<PathBuf>,
        #[arg(long)]
        depth_dir: Option<PathBuf>,
        #[arg(long)]
        intrinsics: Option<PathBuf>,
        /// Odd patch size in pixels.
        #[arg(long)]
        patch_r: Option<usize>,
        #[arg(long)]
        eps: Option<f64>,
        #[arg(long)]
        min_pts: Option<usize>,
        /// Multiplier applied to every depth value.
        #[arg(long)]
        depth_scale: Option<f64>,
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Render a mono track to a binaural WAV.
    Render {
        #[arg(long)]
        audio: Option<PathBuf>,
        #[arg(long)]
        src_traj: Option<PathBuf>,
        #[arg(long)]
        poses: Option<PathBuf>,
        #[arg(long)]
        config: Option<PathBuf>,
        /// Overrides the config seed.
        #[arg(long)]
        seed: Option<u64>,
        /// Write 16-bit PCM instead of 32-bit float.
        #[arg(long)]
        pcm16: bool,
        #[arg(long)]
        out: PathBuf,
    },
    /// Write a single room impulse response as a mono WAV.
    Rir {
        #[arg(long, value_parser = parse_point)]
        src: Point3,
        #[arg(long, value_parser = parse_point)]
        mic: Point3,
        /// Microphone facing direction (only matters for cardioid).
        #[arg(long, value_parser = parse_point)]
        facing: Option<Point3>,
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Sample a room and fit source and receiver trajectories into it.
    Room {
        #[arg(long, default_value = "medium")]
        category: String,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        traj_src: PathBuf,
        #[arg(long)]
        traj_rsv: PathBuf,
        #[arg(long, default_value_t = 0.25)]
        margin: f64,
        /// Output directory for room.txt, src_fitted.csv and rsv_fitted.csv.
        #[arg(long)]
        out: PathBuf,
    },
    /// Write the bundled toy scene (audio, trajectory, poses, config).
    Toy {
        #[arg(long)]
        out: PathBuf,
    },
    /// Convert a PFM depth image to the native depth format.
    PfmToDepth {
        #[arg(long)]
        input: PathBuf,
        #[arg(long, default_value_t = 1.0)]
        scale: f32,
        #[arg(long)]
        out: PathBuf,
    },
}

enum CliError {
    /// Unreadable, unwritable or malformed input files.
    Io(String),
    /// Inputs parse but the problem has no valid answer.
    Domain(String),
}

impl CliError {
    fn code(&self) -> u8 {
        match self {
            Self::Io(_) => 1,
            Self::Domain(_) => 2,
        }
    }

    fn message(&self) -> &str {
        match self {
            Self::Io(m) | Self::Domain(m) => m,
        }
    }
}

impl From<IoError> for CliError {
    fn from(e: IoError) -> Self {
        Self::Io(e.to_string())
    }
}

impl From<AcousticsError> for CliError {
    fn from(e: AcousticsError) -> Self {
        Self::Domain(e.to_string())
    }
}

impl From<LocalizationError> for CliError {
    fn from(e: LocalizationError) -> Self {
        Self::Domain(e.to_string())
    }
}

impl From<GeometryError> for CliError {
    fn from(e: GeometryError) -> Self {
        Self::Domain(e.to_string())
    }
}

impl From<RenderError> for CliError {
    fn from(e: RenderError) -> Self {
        match e {
            RenderError::NotMono(n) => Self::Domain(format!("mono required, got {n} channels")),
            other => Self::Domain(other.to_string()),
        }
    }
}

type CliResult = Result<(), CliError>;

fn parse_point(s: &str) -> Result<Point3, String> {
    let v: Vec<f64> = s
        .split(',')
        .map(|f| f.trim().parse::<f64>().map_err(|_| format!("'{f}' is not a number")))
        .collect::<Result<_, _>>()?;
    match v.as_slice() {
        [x, y, z] if v.iter().all(|c| c.is_finite()) => Ok(Point3::new(*x, *y, *z)),
        _ => Err(format!("expected x,y,z, got '{s}'")),
    }
}

fn diag(pairs: &[(&str, String)]) {
    let line: Vec<String> = pairs.iter().map(|(k, v)| format!("{k}={v}")).collect();
    eprintln!("{}", line.join(" "));
}

fn fmt_point(p: &Point3) -> String {
    format!("{},{},{}", p.x, p.y, p.z)
}

/// Writes through a sibling temporary file and renames it into place, so a
/// failed write never leaves a partial artifact at `path`.
fn commit(path: &Path, write: impl FnOnce(&Path) -> Result<(), IoError>) -> CliResult {
    let mut name = path.file_name().map(|n| n.to_os_string()).unwrap_or_default();
    name.push(".partial");
    let tmp = path.with_file_name(name);
    if let Err(e) = write(&tmp) {
        let _ = std::fs::remove_file(&tmp);
        return Err(e.into());
    }
    std::fs::rename(&tmp, path).map_err(|e| {
        let _ = std::fs::remove_file(&tmp);
        CliError::Io(format!("{}: {e}", path.display()))
    })
}

fn ensure_dir(dir: &Path) -> CliResult {
    std::fs::create_dir_all(dir).map_err(|e| CliError::Io(format!("{}: {e}", dir.display())))
}

fn load_or_default(config: Option<&Path>) -> Result<SceneConfig, CliError> {
    match config {
        Some(p) => Ok(load_config(p)?),
        None => Ok(SceneConfig::default()),
    }
}

fn required(flag: Option<PathBuf>, fallback: &Option<PathBuf>, name: &str) -> Result<PathBuf, CliError> {
    flag.or_else(|| fallback.clone())
        .ok_or_else(|| CliError::Io(format!("no {name} given (flag --{} or config inputs.{name})", name.replace('_', "-"))))
}

#[allow(clippy::too_many_arguments)]
fn cmd_localize(
    boxes: Option<PathBuf>,
    depth_dir: Option<PathBuf>,
    intrinsics: Option<PathBuf>,
    patch_r: Option<usize>,
    eps: Option<f64>,
    min_pts: Option<usize>,
    depth_scale: Option<f64>,
    config: Option<PathBuf>,
    out: &Path,
) -> CliResult {
    let cfg = load_or_default(config.as_deref())?;
    let boxes_path = required(boxes, &cfg.inputs.boxes, "boxes")?;
    let depth_path = required(depth_dir, &cfg.inputs.depth_dir, "depth_dir")?;
    let k_path = required(intrinsics, &cfg.inputs.intrinsics, "intrinsics")?;
    let r = patch_r.unwrap_or(cfg.localization.patch_r);
    let eps = eps.or(cfg.localization.eps);
    let min_pts = min_pts.or(cfg.localization.min_pts);
    let scale = depth_scale.unwrap_or(cfg.localization.depth_scale);
    if r % 2 == 0 {
        return Err(CliError::Domain(format!("patch size must be odd, got {r}")));
    }
    if !(scale > 0.0 && scale.is_finite()) {
        return Err(CliError::Domain(format!("depth scale must be positive, got {scale}")));
    }

    let boxes = read_boxes(&boxes_path)?;
    let intrinsics = read_intrinsics(&k_path)?;
    let mut depth = read_depth_dir(&depth_path)?;
    for entry in &boxes {
        let f = entry.frame_index();
        if !depth.contains_key(&f) {
            let missing = depth_path.join(format!("{f}.depth"));
            return Err(CliError::Io(format!("missing depth file {}", missing.display())));
        }
    }
    depth.retain(|f, _| boxes.iter().any(|b| b.frame_index() == *f));
    if scale != 1.0 {
        for map in depth.values_mut() {
            *map = map.scaled(scale as f32);
        }
    }

    let raw = estimate_raw_source_points(&boxes, &depth, &intrinsics, r)?;
    let filtered = filter_and_interpolate(&raw, eps, min_pts)?;
    let count = |s: FrameStatus| filtered.frames.iter().filter(|(_, x)| *x == s).count();
    for (f, status) in &filtered.frames {
        if *status != FrameStatus::Kept {
            diag(&[("frame", f.to_string()), ("status", format!("{status:?}").to_lowercase())]);
        }
    }
    let interpolated: Vec<String> = filtered.interpolated_frames().iter().map(usize::to_string).collect();
    diag(&[
        ("frames", filtered.frames.len().to_string()),
        ("kept", count(FrameStatus::Kept).to_string()),
        ("noise", count(FrameStatus::Noise).to_string()),
        ("minor_cluster", count(FrameStatus::MinorCluster).to_string()),
        ("missing", count(FrameStatus::Missing).to_string()),
        ("eps", filtered.params.eps.to_string()),
        ("min_pts", filtered.params.min_pts.to_string()),
    ]);
    diag(&[("interpolated", interpolated.join(","))]);
    commit(out, |tmp| write_trajectory(tmp, &filtered.trajectory))?;
    diag(&[("wrote", out.display().to_string())]);
    Ok(())
}

#[allow(clippy::too_many_arguments)]
fn cmd_render(
    audio: Option<PathBuf>,
    src_traj: Option<PathBuf>,
    poses: Option<PathBuf>,
    config: Option<PathBuf>,
    seed: Option<u64>,
    pcm16: bool,
    out: &Path,
) -> CliResult {
    let mut cfg = load_or_default(config.as_deref())?;
    if let Some(s) = seed {
        cfg.seed = s;
    }
    let audio_path = required(audio, &cfg.inputs.audio, "audio")?;
    let traj_path = required(src_traj, &cfg.inputs.src_traj, "src_traj")?;
    let poses_path = required(poses, &cfg.inputs.poses, "poses")?;

    let mono = read_wav(&audio_path)?;
    let traj = read_trajectory(&traj_path)?;
    let pose_file = read_poses(&poses_path)?;
    if mono.channel_count() != 1 {
        return Err(RenderError::NotMono(mono.channel_count()).into());
    }
    if mono.sample_rate() != cfg.render.sample_rate {
        return Err(CliError::Domain(format!(
            "sample rate mismatch: audio at {} Hz, config at {} Hz",
            mono.sample_rate(),
            cfg.render.sample_rate
        )));
    }

    let outcome = render_scene(&mono, &traj, &pose_file.poses, &cfg)?;
    let room = &outcome.room;
    diag(&[
        ("room_category", room.category.to_string()),
        ("dims", format!("{},{},{}", room.dims[0], room.dims[1], room.dims[2])),
        ("t60", room.t60.to_string()),
        ("beta", room.beta[0].to_string()),
    ]);
    diag(&[("scale", outcome.fit.scale.to_string()), ("offset", fmt_point(&outcome.fit.offset))]);
    diag(&[
        ("samples", mono.len().to_string()),
        ("segment_len", outcome.segment_len.to_string()),
        ("segments", outcome.segments.to_string()),
        ("seed", cfg.seed.to_string()),
    ]);
    let encoding = if pcm16 { WavEncoding::Pcm16 } else { WavEncoding::Float32 };
    commit(out, |tmp| write_wav(tmp, &outcome.audio, encoding))?;
    diag(&[("wrote", out.display().to_string())]);
    Ok(())
}

fn cmd_rir(src: Point3, mic: Point3, facing: Option<Point3>, config: Option<PathBuf>, seed: Option<u64>, out: &Path) -> CliResult {
    let cfg = load_or_default(config.as_deref())?;
    let room = cfg.room.resolve(seed.unwrap_or(cfg.seed))?;
    let settings = cfg.render.rir_settings();
    let facing = facing.unwrap_or_else(Point3::z);
    let rir = compute_rir(&src, &mic, &facing, cfg.render.pattern, &room, &settings)?;
    let (peak_index, peak) = rir
        .samples
        .iter()
        .enumerate()
        .fold((0, 0.0f64), |best, (i, x)| if x.abs() > best.1 { (i, x.abs()) } else { best });
    diag(&[
        ("dims", format!("{},{},{}", room.dims[0], room.dims[1], room.dims[2])),
        ("t60", room.t60.to_string()),
        ("beta", room.beta[0].to_string()),
        ("orders", format!("{:?}", settings.reflection_orders(&room)).replace(' ', "")),
    ]);
    diag(&[
        ("samples", rir.len().to_string()),
        ("peak_index", peak_index.to_string()),
        ("peak", peak.to_string()),
        ("energy", rir.energy().to_string()),
    ]);
    let audio = AudioBuffer::mono(rir.samples, settings.sample_rate)?;
    commit(out, |tmp| write_wav(tmp, &audio, WavEncoding::Float32))?;
    diag(&[("wrote", out.display().to_string())]);
    Ok(())
}

fn cmd_room(category: &str, seed: u64, traj_src: &Path, traj_rsv: &Path, margin: f64, out: &Path) -> CliResult {
    let category: RoomCategory = category.parse()?;
    let src = read_trajectory(traj_src)?;
    let rsv = read_trajectory(traj_rsv)?;
    let room = sample_room(category, seed)?;
    let fit = fit_scene(&src, &rsv, &room, margin)?;
    let src_fit = fit.apply_trajectory(&src);
    let rsv_fit = fit.apply_trajectory(&rsv);

    let mut report = String::new();
    let _ = writeln!(report, "category={category}");
    let _ = writeln!(report, "seed={seed}");
    let _ = writeln!(report, "dims={},{},{}", room.dims[0], room.dims[1], room.dims[2]);
    let _ = writeln!(report, "t60={}", room.t60);
    let betas: Vec<String> = room.beta.iter().map(f64::to_string).collect();
    let _ = writeln!(report, "beta={}", betas.join(","));
    let _ = writeln!(report, "margin={margin}");
    let _ = writeln!(report, "scale={}", fit.scale);
    let _ = writeln!(report, "offset={}", fmt_point(&fit.offset));
    eprint!("{report}");

    ensure_dir(out)?;
    commit(&out.join("room.txt"), |tmp| {
        std::fs::write(tmp, report.as_bytes()).map_err(|e| IoError::Io {
            path: tmp.to_path_buf(),
            source: e,
        })
    })?;
    commit(&out.join("src_fitted.csv"), |tmp| write_trajectory(tmp, &src_fit))?;
    commit(&out.join("rsv_fitted.csv"), |tmp| write_trajectory(tmp, &rsv_fit))?;
    diag(&[("wrote", out.display().to_string())]);
    Ok(())
}

fn cmd_toy(out: &Path) -> CliResult {
    let scene = toy_scene();
    scene.write_to(out)?;
    diag(&[
        ("samples", scene.mono.len().to_string()),
        ("frames", scene.source.len().to_string()),
        ("wrote", out.display().to_string()),
    ]);
    Ok(())
}

fn cmd_pfm_to_depth(input: &Path, scale: f32, out: &Path) -> CliResult {
    if !(scale > 0.0 && scale.is_finite()) {
        return Err(CliError::Domain(format!("scale must be positive, got {scale}")));
    }
    let map = read_pfm(input)?.scaled(scale);
    diag(&[("width", map.width.to_string()), ("height", map.height.to_string())]);
    commit(out, |tmp| write_depth(tmp, &map))
}

fn configure_threads() -> CliResult {
    let Ok(value) = std::env::var(THREADS_ENV) else {
        return Ok(());
    };
    let requested: usize = value
        .trim()
        .parse()
        .ok()
        .filter(|n| *n > 0)
        .ok_or_else(|| CliError::Domain(format!("{THREADS_ENV} must be a positive integer, got '{value}'")))?;
    let available = std::thread::available_parallelism().map_or(1, |n| n.get());
    let threads = requested.min(available.max(1));
    rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build_global()
        .map_err(|e| CliError::Domain(e.to_string()))?;
    diag(&[("threads", threads.to_string())]);
    Ok(())
}

fn run(cli: Cli) -> CliResult {
    configure_threads()?;
    match cli.command {
        Command::Localize {
            boxes,
            depth_dir,
            intrinsics,
            patch_r,
            eps,
            min_pts,
            depth_scale,
            config,
            out,
        } => cmd_localize(boxes, depth_dir, intrinsics, patch_r, eps, min_pts, depth_scale, config, &out),
        Command::Render {
            audio,
            src_traj,
            poses,
            config,
            seed,
            pcm16,
            out,
        } => cmd_render(audio, src_traj, poses, config, seed, pcm16, &out),
        Command::Rir {
            src,
            mic,
            facing,
            config,
            seed,
            out,
        } => cmd_rir(src, mic, facing, config, seed, &out),
        Command::Room {
            category,
            seed,
            traj_src,
            traj_rsv,
            margin,
            out,
        } => cmd_room(&category, seed, &traj_src, &traj_rsv, margin, &out),
        Command::Toy { out } => cmd_toy(&out),
        Command::PfmToDepth { input, scale, out } => cmd_pfm_to_depth(&input, scale, &out),
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            diag(&[("error", format!("{:?}", e.message()))]);
            ExitCode::from(e.code())
        }
    }
}
