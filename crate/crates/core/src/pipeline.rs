//! End-to-end scene rendering: room, scene fit, binaural render.

use crate::acoustics::{fit_scene, RoomSpec, SceneFit};
use crate::geometry::CameraPose;
use crate::io::SceneConfig;
use crate::localization::{receiver_from_poses, Trajectory};
use crate::renderer::{plan_segments, render_binaural, AudioBuffer, RenderError};

/// Rendered audio and the scene parameters that produced it.
#[derive(Debug, Clone, PartialEq)]
pub struct RenderOutcome {
    pub audio: AudioBuffer,
    pub room: RoomSpec,
    pub fit: SceneFit,
    pub segment_len: usize,
    pub segments: usize,
}

/// Resolves the room from the config seed, fits both trajectories into it
/// and renders the binaural track.
pub fn render_scene(
    mono: &AudioBuffer,
    traj_src: &Trajectory,
    poses: &[CameraPose],
    cfg: &SceneConfig,
) -> Result<RenderOutcome, RenderError> {
    if mono.channel_count() != 1 {
        return Err(RenderError::NotMono(mono.channel_count()));
    }
    let room = cfg.room.resolve(cfg.seed)?;
    let receivers = receiver_from_poses(poses)?;
    let fit = fit_scene(traj_src, &receivers, &room, cfg.room.margin)?;
    let src = fit.apply_trajectory(traj_src);
    let fitted_poses: Vec<CameraPose> = poses.iter().map(|p| fit.apply_pose(p)).collect();
    let audio = render_binaural(mono, &src, &fitted_poses, &room, &cfg.render)?;
    let segment_len = cfg.render.effective_segment_len();
    let segments = plan_segments(mono.len(), segment_len)?.segment_count();
    Ok(RenderOutcome {
        audio,
        room,
        fit,
        segment_len,
        segments,
    })
}
