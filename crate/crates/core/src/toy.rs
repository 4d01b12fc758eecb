//! A small self-contained scene for demos and regression checks: two
//! seconds of analytic mono audio with a source sweeping left to right in
//! front of a static camera.

use std::f64::consts::TAU;
use std::path::Path;

use crate::acoustics::RoomCategory;
use crate::geometry::{CameraPose, Point3};
use crate::io::{write_poses, write_trajectory, write_wav, IoError, SceneConfig, WavEncoding};
use crate::localization::Trajectory;
use crate::renderer::AudioBuffer;

pub const TOY_SAMPLE_RATE: u32 = 44100;
pub const TOY_SECONDS: f64 = 2.0;
pub const TOY_FRAME_RATE: f64 = 30.0;

#[derive(Debug, Clone)]
pub struct ToyScene {
    pub mono: AudioBuffer,
    pub source: Trajectory,
    pub poses: Vec<CameraPose>,
    pub config: SceneConfig,
}

fn toy_signal(n: usize, fs: f64) -> Vec<f64> {
    (0..n)
        .map(|i| {
            let t = i as f64 / fs;
            let envelope = 0.6 + 0.4 * (TAU * 3.0 * t).sin();
            let tone = 0.5 * (TAU * 220.0 * t).sin() + 0.25 * (TAU * 660.0 * t).sin() + 0.1 * (TAU * 1870.0 * t).sin();
            // short chirps every quarter second for clear onsets
            let phase = (t * 4.0).fract() / 4.0;
            let chirp = if phase < 0.02 {
                0.4 * (TAU * (2000.0 * phase + 60000.0 * phase * phase)).sin() * (1.0 - phase / 0.02)
            } else {
                0.0
            };
            envelope * tone + chirp
        })
        .collect()
}

pub fn toy_scene() -> ToyScene {
    let fs = TOY_SAMPLE_RATE;
    let n = (TOY_SECONDS * f64::from(fs)) as usize;
    let frames = (TOY_SECONDS * TOY_FRAME_RATE) as usize;
    let points = (0..frames)
        .map(|i| {
            let s = i as f64 / (frames - 1) as f64;
            Point3::new(-2.0 + 4.0 * s, 0.0, 3.0 - 0.5 * (std::f64::consts::PI * s).sin())
        })
        .collect();
    let mut config = SceneConfig::default();
    config.render.sample_rate = fs;
    config.render.frame_rate = TOY_FRAME_RATE;
    config.room.category = RoomCategory::Medium;
    config.room.margin = 0.5;
    ToyScene {
        mono: AudioBuffer::mono(toy_signal(n, f64::from(fs)), fs).expect("finite toy signal"),
        source: Trajectory::from_frames(points).expect("valid toy trajectory"),
        poses: vec![CameraPose::identity(); frames],
        config,
    }
}

impl ToyScene {
    /// Writes `mono.wav`, `source.csv`, `poses.txt` and `scene.toml` into `dir`.
    pub fn write_to(&self, dir: &Path) -> Result<(), IoError> {
        std::fs::create_dir_all(dir).map_err(|e| IoError::io(dir, e))?;
        write_wav(&dir.join("mono.wav"), &self.mono, WavEncoding::Float32)?;
        write_trajectory(&dir.join("source.csv"), &self.source)?;
        write_poses(&dir.join("poses.txt"), &self.poses)?;
        let toml = format!(
            "seed = {}\n\n[inputs]\naudio = \"mono.wav\"\nsrc_traj = \"source.csv\"\nposes = \"poses.txt\"\n\n\
             [render]\nsample_rate = {}\nframe_rate = {:?}\n\n[room]\ncategory = \"{}\"\nmargin = {:?}\n",
            self.config.seed,
            self.config.render.sample_rate,
            self.config.render.frame_rate,
            self.config.room.category,
            self.config.room.margin,
        );
        crate::io::write_file(&dir.join("scene.toml"), toml.as_bytes())
    }
}
