//! Scene configuration (TOML).
//!
//! ```toml
//! seed = 0
//!
//! [inputs]            # paths are relative to the config file
//! audio = "mono.wav"
//! src_traj = "source.csv"
//! poses = "poses.txt"
//! boxes = "boxes.csv"
//! depth_dir = "depth"
//! intrinsics = "intrinsics.toml"
//!
//! [render]
//! sample_rate = 44100
//! speed_of_sound = 343.0
//! ear_offset = 0.0875
//! pattern = "omni"         # or "cardioid"
//! segment_len = 1024       # default: one segment per frame
//! frame_rate = 30.0
//! crossfade = false
//! normalize = true
//! max_order_cap = 60
//! trajectory_points = 44100
//!
//! [room]
//! category = "medium"      # small | medium | large | outdoor | explicit
//! dims = [6.0, 5.0, 3.0]   # required for "explicit"
//! beta = [0.9, 0.9, 0.9, 0.9, 0.9, 0.9]
//! t60 = 0.45               # default: sampled from the seed
//! margin = 0.25
//! strict_paper_ranges = false
//! strict_absorption = false
//!
//! [localization]
//! patch_r = 5
//! eps = 0.2
//! min_pts = 3
//! depth_scale = 1.0
//! pose_convention = "world_to_camera"
//! ```

use std::path::{Path, PathBuf};

use serde::Deserialize;

use super::{read_text, IoError};
use crate::acoustics::{sample_room, AcousticsError, MicPattern, RoomCategory, RoomSpec, T60_RANGE};
use crate::geometry::PoseConvention;
use crate::renderer::RenderConfig;

const SCHEMA: &[(&str, &[&str])] = &[
    ("", &["seed", "inputs", "render", "room", "localization"]),
    ("inputs", &["audio", "src_traj", "poses", "boxes", "depth_dir", "intrinsics"]),
    (
        "render",
        &[
            "sample_rate",
            "speed_of_sound",
            "ear_offset",
            "pattern",
            "segment_len",
            "frame_rate",
            "crossfade",
            "normalize",
            "max_order_cap",
            "trajectory_points",
        ],
    ),
    (
        "room",
        &["category", "dims", "beta", "t60", "margin", "strict_paper_ranges", "strict_absorption"],
    ),
    ("localization", &["patch_r", "eps", "min_pts", "depth_scale", "pose_convention"]),
];

#[derive(Deserialize, Default)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    seed: Option<u64>,
    #[serde(default)]
    inputs: RawInputs,
    #[serde(default)]
    render: RawRender,
    #[serde(default)]
    room: RawRoom,
    #[serde(default)]
    localization: RawLocalization,
}

#[derive(Deserialize, Default)]
#[serde(deny_unknown_fields)]
struct RawInputs {
    audio: Option<PathBuf>,
    src_traj: Option<PathBuf>,
    poses: Option<PathBuf>,
    boxes: Option<PathBuf>,
    depth_dir: Option<PathBuf>,
    intrinsics: Option<PathBuf>,
}

#[derive(Deserialize, Default)]
#[serde(deny_unknown_fields)]
struct RawRender {
    sample_rate: Option<u32>,
    speed_of_sound: Option<f64>,
    ear_offset: Option<f64>,
    pattern: Option<String>,
    segment_len: Option<usize>,
    frame_rate: Option<f64>,
    crossfade: Option<bool>,
    normalize: Option<bool>,
    max_order_cap: Option<usize>,
    trajectory_points: Option<usize>,
}

#[derive(Deserialize, Default)]
#[serde(deny_unknown_fields)]
struct RawRoom {
    category: Option<String>,
    dims: Option<[f64; 3]>,
    beta: Option<[f64; 6]>,
    t60: Option<f64>,
    margin: Option<f64>,
    strict_paper_ranges: Option<bool>,
    strict_absorption: Option<bool>,
}

#[derive(Deserialize, Default)]
#[serde(deny_unknown_fields)]
struct RawLocalization {
    patch_r: Option<usize>,
    eps: Option<f64>,
    min_pts: Option<usize>,
    depth_scale: Option<f64>,
    pose_convention: Option<String>,
}

/// Input file locations, already resolved against the config directory.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct InputPaths {
    pub audio: Option<PathBuf>,
    pub src_traj: Option<PathBuf>,
    pub poses: Option<PathBuf>,
    pub boxes: Option<PathBuf>,
    pub depth_dir: Option<PathBuf>,
    pub intrinsics: Option<PathBuf>,
}

impl InputPaths {
    fn all(&self) -> [(&'static str, &Option<PathBuf>); 6] {
        [
            ("audio", &self.audio),
            ("src_traj", &self.src_traj),
            ("poses", &self.poses),
            ("boxes", &self.boxes),
            ("depth_dir", &self.depth_dir),
            ("intrinsics", &self.intrinsics),
        ]
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RoomConfig {
    pub category: RoomCategory,
    pub dims: Option<[f64; 3]>,
    pub beta: Option<[f64; 6]>,
    pub t60: Option<f64>,
    pub margin: f64,
    pub strict_paper_ranges: bool,
    pub strict_absorption: bool,
}

impl Default for RoomConfig {
    fn default() -> Self {
        Self {
            category: RoomCategory::Medium,
            dims: None,
            beta: None,
            t60: None,
            margin: 0.25,
            strict_paper_ranges: false,
            strict_absorption: false,
        }
    }
}

impl RoomConfig {
    /// Builds the room: sampled from `seed` unless dimensions are explicit,
    /// with explicit `t60` / `beta` overriding the sampled values.
    pub fn resolve(&self, seed: u64) -> Result<RoomSpec, AcousticsError> {
        let base = match (self.category, self.dims) {
            (RoomCategory::Explicit, None) => {
                return Err(AcousticsError::InvalidRoom("explicit room needs dims".into()));
            }
            (category, Some(dims)) => {
                let t60 = self.t60.unwrap_or_else(|| crate::acoustics::sample_t60(seed));
                let mut room = RoomSpec::new(category, dims, t60)?;
                if self.strict_absorption && self.beta.is_none() {
                    room = room.with_t60(t60, true)?;
                }
                room
            }
            (category, None) => {
                let room = sample_room(category, seed)?;
                match self.t60 {
                    Some(t60) => room.with_t60(t60, self.strict_absorption)?,
                    None if self.strict_absorption => room.with_t60(room.t60, true)?,
                    None => room,
                }
            }
        };
        match self.beta {
            Some(beta) => RoomSpec::with_beta(base.category, base.dims, beta, base.t60),
            None => Ok(base),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LocalizationConfig {
    pub patch_r: usize,
    pub eps: Option<f64>,
    pub min_pts: Option<usize>,
    pub depth_scale: f64,
    pub pose_convention: Option<PoseConvention>,
}

impl Default for LocalizationConfig {
    fn default() -> Self {
        Self {
            patch_r: 5,
            eps: None,
            min_pts: None,
            depth_scale: 1.0,
            pose_convention: None,
        }
    }
}

/// Fully defaulted and validated scene configuration.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct SceneConfig {
    pub seed: u64,
    pub inputs: InputPaths,
    pub render: RenderConfig,
    pub room: RoomConfig,
    pub localization: LocalizationConfig,
}

fn check_keys(value: &toml::Value) -> Result<(), IoError> {
    let allowed = |section: &str| SCHEMA.iter().find(|(s, _)| *s == section).map(|(_, k)| *k);
    let top = value
        .as_table()
        .ok_or_else(|| IoError::Config("top level must be a table".into()))?;
    for (key, v) in top {
        if !allowed("").unwrap_or_default().contains(&key.as_str()) {
            return Err(IoError::UnknownKey(key.clone()));
        }
        if let (Some(keys), Some(table)) = (allowed(key), v.as_table()) {
            for sub in table.keys() {
                if !keys.contains(&sub.as_str()) {
                    return Err(IoError::UnknownKey(format!("{key}.{sub}")));
                }
            }
        }
    }
    Ok(())
}

fn range(cond: bool, msg: impl FnOnce() -> String) -> Result<(), IoError> {
    if cond {
        Ok(())
    } else {
        Err(IoError::RangeViolation(msg()))
    }
}

impl SceneConfig {
    /// Parses and validates a config document. Relative input paths are
    /// joined onto `base_dir`. File existence is not checked here.
    pub fn from_toml_str(text: &str, base_dir: &Path) -> Result<Self, IoError> {
        let value: toml::Value = text.parse().map_err(|e: toml::de::Error| IoError::Config(e.to_string()))?;
        check_keys(&value)?;
        let raw: RawConfig = value.try_into().map_err(|e: toml::de::Error| IoError::Config(e.to_string()))?;
        let resolve = |p: Option<PathBuf>| p.map(|p| if p.is_absolute() { p } else { base_dir.join(p) });

        let defaults = RenderConfig::default();
        let pattern = match raw.render.pattern.as_deref() {
            None => defaults.pattern,
            Some(s) => s.parse::<MicPattern>().map_err(|e| IoError::RangeViolation(e.to_string()))?,
        };
        let render = RenderConfig {
            sample_rate: raw.render.sample_rate.unwrap_or(defaults.sample_rate),
            speed_of_sound: raw.render.speed_of_sound.unwrap_or(defaults.speed_of_sound),
            ear_offset: raw.render.ear_offset.unwrap_or(defaults.ear_offset),
            pattern,
            segment_len: raw.render.segment_len,
            frame_rate: raw.render.frame_rate.unwrap_or(defaults.frame_rate),
            crossfade: raw.render.crossfade.unwrap_or(defaults.crossfade),
            normalize: raw.render.normalize.unwrap_or(defaults.normalize),
            max_order_cap: raw.render.max_order_cap,
            trajectory_points: raw.render.trajectory_points,
        };
        render.validate().map_err(|e| IoError::RangeViolation(e.to_string()))?;

        let room_defaults = RoomConfig::default();
        let category = match raw.room.category.as_deref() {
            None => room_defaults.category,
            Some(s) => s.parse::<RoomCategory>().map_err(|e| IoError::RangeViolation(e.to_string()))?,
        };
        let room = RoomConfig {
            category,
            dims: raw.room.dims,
            beta: raw.room.beta,
            t60: raw.room.t60,
            margin: raw.room.margin.unwrap_or(room_defaults.margin),
            strict_paper_ranges: raw.room.strict_paper_ranges.unwrap_or(false),
            strict_absorption: raw.room.strict_absorption.unwrap_or(false),
        };
        if let Some(t60) = room.t60 {
            range(t60 > 0.0 && t60.is_finite(), || format!("room.t60 must be positive, got {t60}"))?;
            if room.strict_paper_ranges {
                let (lo, hi) = T60_RANGE;
                range(t60 > lo && t60 < hi, || format!("room.t60 = {t60} outside ({lo}, {hi})"))?;
            }
        }
        if let Some(dims) = room.dims {
            range(dims.iter().all(|d| *d > 0.0 && d.is_finite()), || {
                format!("room.dims must be positive, got {dims:?}")
            })?;
            if room.strict_paper_ranges {
                if let Some(r) = category.ranges() {
                    let inside = |v: f64, (lo, hi): (f64, f64)| v >= lo && v <= hi;
                    range(
                        inside(dims[0], r.horizontal) && inside(dims[1], r.horizontal) && inside(dims[2], r.height),
                        || format!("room.dims {dims:?} outside the {category} ranges"),
                    )?;
                }
            }
        }
        if category == RoomCategory::Explicit && room.dims.is_none() {
            return Err(IoError::RangeViolation("room.category = \"explicit\" needs room.dims".into()));
        }
        if let Some(beta) = room.beta {
            range(beta.iter().all(|b| (0.0..1.0).contains(b)), || {
                format!("room.beta must lie in [0, 1), got {beta:?}")
            })?;
        }
        range(room.margin >= 0.0 && room.margin.is_finite(), || {
            format!("room.margin must be non-negative, got {}", room.margin)
        })?;

        let loc_defaults = LocalizationConfig::default();
        let pose_convention = match raw.localization.pose_convention.as_deref() {
            None => None,
            Some("world_to_camera") => Some(PoseConvention::WorldToCamera),
            Some("camera_to_world") => Some(PoseConvention::CameraToWorld),
            Some(other) => {
                return Err(IoError::RangeViolation(format!(
                    "localization.pose_convention '{other}' is not world_to_camera or camera_to_world"
                )))
            }
        };
        let localization = LocalizationConfig {
            patch_r: raw.localization.patch_r.unwrap_or(loc_defaults.patch_r),
            eps: raw.localization.eps,
            min_pts: raw.localization.min_pts,
            depth_scale: raw.localization.depth_scale.unwrap_or(loc_defaults.depth_scale),
            pose_convention,
        };
        range(localization.patch_r % 2 == 1, || {
            format!("localization.patch_r must be odd and positive, got {}", localization.patch_r)
        })?;
        if let Some(eps) = localization.eps {
            range(eps > 0.0 && eps.is_finite(), || format!("localization.eps must be positive, got {eps}"))?;
        }
        if let Some(m) = localization.min_pts {
            range(m >= 1, || "localization.min_pts must be at least 1".into())?;
        }
        range(localization.depth_scale > 0.0 && localization.depth_scale.is_finite(), || {
            format!("localization.depth_scale must be positive, got {}", localization.depth_scale)
        })?;

        Ok(Self {
            seed: raw.seed.unwrap_or(0),
            inputs: InputPaths {
                audio: resolve(raw.inputs.audio),
                src_traj: resolve(raw.inputs.src_traj),
                poses: resolve(raw.inputs.poses),
                boxes: resolve(raw.inputs.boxes),
                depth_dir: resolve(raw.inputs.depth_dir),
                intrinsics: resolve(raw.inputs.intrinsics),
            },
            render,
            room,
            localization,
        })
    }

    /// Fails with `MissingInput` for any listed input that does not exist.
    pub fn check_inputs_exist(&self) -> Result<(), IoError> {
        for (name, path) in self.inputs.all() {
            if let Some(p) = path {
                if !p.exists() {
                    return Err(IoError::MissingInput(format!("inputs.{name}: {}", p.display())));
                }
            }
        }
        Ok(())
    }
}

/// Reads, defaults and validates a config file; referenced inputs must exist.
pub fn load_config(path: &Path) -> Result<SceneConfig, IoError> {
    let text = read_text(path)?;
    let base = path.parent().unwrap_or_else(|| Path::new("."));
    let cfg = SceneConfig::from_toml_str(&text, base)?;
    cfg.check_inputs_exist()?;
    Ok(cfg)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn parse(s: &str) -> Result<SceneConfig, IoError> {
        SceneConfig::from_toml_str(s, Path::new("/base"))
    }

    #[test]
    fn minimal_config_gets_defaults() {
        let cfg = parse("[inputs]\naudio = \"a.wav\"\n").unwrap();
        assert_eq!(cfg.seed, 0);
        assert_eq!(cfg.inputs.audio, Some(PathBuf::from("/base/a.wav")));
        assert_eq!(cfg.render, RenderConfig::default());
        assert_eq!(cfg.room, RoomConfig::default());
        assert_eq!(cfg.localization, LocalizationConfig::default());
    }

    #[test]
    fn unknown_keys_rejected() {
        assert!(matches!(parse("colour = 1"), Err(IoError::UnknownKey(k)) if k == "colour"));
        assert!(matches!(parse("[room]\nwidth = 3"), Err(IoError::UnknownKey(k)) if k == "room.width"));
    }

    #[test]
    fn t60_range_checks() {
        assert!(parse("[room]\nt60 = 0.9").is_ok());
        assert!(matches!(
            parse("[room]\nt60 = 0.9\nstrict_paper_ranges = true"),
            Err(IoError::RangeViolation(_))
        ));
        assert!(matches!(parse("[room]\nt60 = -1.0"), Err(IoError::RangeViolation(_))));
    }

    #[test]
    fn other_ranges() {
        assert!(matches!(parse("[render]\nsample_rate = 8000"), Err(IoError::RangeViolation(_))));
        assert!(matches!(parse("[render]\nsegment_len = 10"), Err(IoError::RangeViolation(_))));
        assert!(matches!(parse("[localization]\npatch_r = 4"), Err(IoError::RangeViolation(_))));
        assert!(matches!(parse("[room]\ncategory = \"explicit\""), Err(IoError::RangeViolation(_))));
        assert!(matches!(parse("[room]\ncategory = \"cave\""), Err(IoError::RangeViolation(_))));
        assert!(matches!(parse("[room]\nbeta = [1, 1, 1, 1, 1, 1]"), Err(IoError::RangeViolation(_))));
    }

    #[test]
    fn room_resolution() {
        let cfg = parse("seed = 3\n[room]\ncategory = \"small\"").unwrap();
        let a = cfg.room.resolve(cfg.seed).unwrap();
        assert_eq!(a, cfg.room.resolve(3).unwrap());
        assert!(a.dims[0] >= 3.0 && a.dims[0] <= 8.0);

        let cfg = parse("[room]\ncategory = \"explicit\"\ndims = [5.0, 4.0, 3.0]\nt60 = 0.5\nbeta = [0, 0, 0, 0, 0, 0]").unwrap();
        let r = cfg.room.resolve(0).unwrap();
        assert_eq!(r.dims, [5.0, 4.0, 3.0]);
        assert_eq!(r.beta, [0.0; 6]);
        assert_eq!(r.t60, 0.5);
    }
}
