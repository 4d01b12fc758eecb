//! Moving-source binaural rendering.
//!
//! The mono track is cut into segments over which source and receiver are
//! held still. Each segment is convolved with the left and right impulse
//! responses for its midpoint geometry and the results are overlap-added at
//! the segment offset; tails run past the segment end.

mod convolve;

use rayon::prelude::*;
use rustfft::num_complex::Complex64;
use thiserror::Error;

pub use convolve::{block_convolve_add, convolve, FftConvolver};

use crate::acoustics::{compute_rir, AcousticsError, MicPattern, RirSettings, RoomSpec, SPEED_OF_SOUND};
use crate::geometry::{CameraPose, Point3};
use crate::localization::{
    mics_along_axis, receiver_from_poses, resample_trajectory, LocalizationError, Trajectory, DEFAULT_EAR_OFFSET,
};

/// Sample rates accepted end to end.
pub const SUPPORTED_SAMPLE_RATES: [u32; 3] = [16000, 44100, 48000];

/// Shortest allowed segment, in samples.
pub const MIN_SEGMENT_LEN: usize = 64;

/// Segments processed per parallel batch.
const BATCH: usize = 64;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum RenderError {
    #[error("sample rate mismatch: audio at {audio} Hz, config at {config} Hz")]
    SampleRateMismatch { audio: u32, config: u32 },
    #[error("input audio is empty")]
    EmptyAudio,
    #[error("mono required, got {0} channels")]
    NotMono(usize),
    #[error("accumulator holds {have} samples, {need} needed")]
    AccumulatorTooShort { need: usize, have: usize },
    #[error("invalid render config: {0}")]
    InvalidConfig(String),
    #[error("invalid audio: {0}")]
    InvalidAudio(String),
    #[error(transparent)]
    Acoustics(#[from] AcousticsError),
    #[error(transparent)]
    Localization(#[from] LocalizationError),
}

/// One or two equally long channels of samples.
#[derive(Debug, Clone, PartialEq)]
pub struct AudioBuffer {
    channels: Vec<Vec<f64>>,
    sample_rate: u32,
}

impl AudioBuffer {
    pub fn new(channels: Vec<Vec<f64>>, sample_rate: u32) -> Result<Self, RenderError> {
        if channels.is_empty() || channels.len() > 2 {
            return Err(RenderError::InvalidAudio(format!(
                "expected 1 or 2 channels, got {}",
                channels.len()
            )));
        }
        if channels.iter().any(|c| c.len() != channels[0].len()) {
            return Err(RenderError::InvalidAudio("channels differ in length".into()));
        }
        if channels.iter().flatten().any(|x| !x.is_finite()) {
            return Err(RenderError::InvalidAudio("non-finite sample".into()));
        }
        Ok(Self { channels, sample_rate })
    }

    pub fn mono(samples: Vec<f64>, sample_rate: u32) -> Result<Self, RenderError> {
        Self::new(vec![samples], sample_rate)
    }

    pub fn stereo(left: Vec<f64>, right: Vec<f64>, sample_rate: u32) -> Result<Self, RenderError> {
        Self::new(vec![left, right], sample_rate)
    }

    pub fn channel_count(&self) -> usize {
        self.channels.len()
    }

    pub fn channel(&self, i: usize) -> &[f64] {
        &self.channels[i]
    }

    pub fn channels(&self) -> &[Vec<f64>] {
        &self.channels
    }

    pub fn sample_rate(&self) -> u32 {
        self.sample_rate
    }

    /// Samples per channel.
    pub fn len(&self) -> usize {
        self.channels[0].len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Largest absolute sample over all channels.
    pub fn peak(&self) -> f64 {
        self.channels.iter().flatten().fold(0.0, |m, x| m.max(x.abs()))
    }

    pub fn scaled(&self, gain: f64) -> Self {
        Self {
            channels: self.channels.iter().map(|c| c.iter().map(|x| x * gain).collect()).collect(),
            sample_rate: self.sample_rate,
        }
    }
}

/// Divides every channel by the joint peak. Silent input is returned as is.
pub fn normalize(audio: &AudioBuffer) -> AudioBuffer {
    let peak = audio.peak();
    if peak == 0.0 {
        return audio.clone();
    }
    AudioBuffer {
        channels: audio.channels.iter().map(|c| c.iter().map(|x| x / peak).collect()).collect(),
        sample_rate: audio.sample_rate,
    }
}

/// Segment boundaries `0 = n₀ < n₁ < … < n_M = N`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SegmentPlan {
    boundaries: Vec<usize>,
}

impl SegmentPlan {
    pub fn boundaries(&self) -> &[usize] {
        &self.boundaries
    }

    pub fn segment_count(&self) -> usize {
        self.boundaries.len() - 1
    }

    pub fn total_samples(&self) -> usize {
        self.boundaries[self.boundaries.len() - 1]
    }

    pub fn segments(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.boundaries.windows(2).map(|w| (w[0], w[1]))
    }

    pub fn max_segment_len(&self) -> usize {
        self.segments().map(|(a, b)| b - a).max().unwrap_or(0)
    }
}

/// Boundaries at multiples of `segment_len`; the last segment may be shorter.
pub fn plan_segments(total_samples: usize, segment_len: usize) -> Result<SegmentPlan, RenderError> {
    if total_samples == 0 {
        return Err(RenderError::EmptyAudio);
    }
    if segment_len == 0 {
        return Err(RenderError::InvalidConfig("segment length must be positive".into()));
    }
    let mut boundaries: Vec<usize> = (0..total_samples).step_by(segment_len).collect();
    boundaries.push(total_samples);
    Ok(SegmentPlan { boundaries })
}

/// Trajectory position at each segment midpoint, with the sample axis
/// `[0, N]` mapped linearly onto the trajectory's time span.
pub fn segment_positions(traj: &Trajectory, plan: &SegmentPlan) -> Vec<Point3> {
    let total = plan.total_samples() as f64;
    plan.segments()
        .map(|(a, b)| traj.position_at_fraction((a + b) as f64 / 2.0 / total))
        .collect()
}

/// Rendering parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct RenderConfig {
    pub sample_rate: u32,
    pub speed_of_sound: f64,
    pub ear_offset: f64,
    pub pattern: MicPattern,
    /// Samples per segment; `None` means one segment per video frame.
    pub segment_len: Option<usize>,
    pub frame_rate: f64,
    /// Linear input crossfade between consecutive segment responses.
    pub crossfade: bool,
    pub normalize: bool,
    pub max_order_cap: Option<usize>,
    /// Resample both trajectories to this many points before segmenting.
    pub trajectory_points: Option<usize>,
}

impl Default for RenderConfig {
    fn default() -> Self {
        Self {
            sample_rate: 44100,
            speed_of_sound: SPEED_OF_SOUND,
            ear_offset: DEFAULT_EAR_OFFSET,
            pattern: MicPattern::Omni,
            segment_len: None,
            frame_rate: 30.0,
            crossfade: false,
            normalize: true,
            max_order_cap: None,
            trajectory_points: None,
        }
    }
}

impl RenderConfig {
    pub fn effective_segment_len(&self) -> usize {
        self.segment_len
            .unwrap_or_else(|| (f64::from(self.sample_rate) / self.frame_rate).round() as usize)
    }

    pub fn rir_settings(&self) -> RirSettings {
        RirSettings {
            sample_rate: self.sample_rate,
            speed_of_sound: self.speed_of_sound,
            max_order_cap: self.max_order_cap,
        }
    }

    pub fn validate(&self) -> Result<(), RenderError> {
        let bad = |m: String| Err(RenderError::InvalidConfig(m));
        if !SUPPORTED_SAMPLE_RATES.contains(&self.sample_rate) {
            return bad(format!("sample rate {} not in {SUPPORTED_SAMPLE_RATES:?}", self.sample_rate));
        }
        if !(self.speed_of_sound > 0.0) || !self.speed_of_sound.is_finite() {
            return bad(format!("speed of sound must be positive, got {}", self.speed_of_sound));
        }
        if !(self.ear_offset > 0.0) || !self.ear_offset.is_finite() {
            return bad(format!("ear offset must be positive, got {}", self.ear_offset));
        }
        if !(self.frame_rate > 0.0) || !self.frame_rate.is_finite() {
            return bad(format!("frame rate must be positive, got {}", self.frame_rate));
        }
        let seg = self.effective_segment_len();
        if seg < MIN_SEGMENT_LEN {
            return bad(format!("segment length {seg} is below {MIN_SEGMENT_LEN} samples"));
        }
        if matches!(self.trajectory_points, Some(n) if n < 2) {
            return bad("trajectory_points must be at least 2".into());
        }
        Ok(())
    }
}

/// Per-segment geometry: source position plus both microphones.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SegmentGeometry {
    pub source: Point3,
    pub receiver: Point3,
    pub left: Point3,
    pub right: Point3,
    pub left_facing: Point3,
    pub right_facing: Point3,
}

/// Source and microphone placement for every segment of `plan`.
///
/// Camera centers are interpolated linearly; the right axis is
/// interpolated linearly and renormalized.
pub fn segment_geometry(
    traj_src: &Trajectory,
    poses: &[CameraPose],
    plan: &SegmentPlan,
    cfg: &RenderConfig,
) -> Result<Vec<SegmentGeometry>, RenderError> {
    let receivers = receiver_from_poses(poses)?;
    let axes = Trajectory::new(
        receivers.times().to_vec(),
        poses.iter().map(CameraPose::right_axis).collect(),
    )?;
    let (src, rsv, axes) = match cfg.trajectory_points {
        Some(n) => (
            resample_trajectory(traj_src, n)?,
            resample_trajectory(&receivers, n)?,
            resample_trajectory(&axes, n)?,
        ),
        None => (traj_src.clone(), receivers, axes),
    };
    let sources = segment_positions(&src, plan);
    let centers = segment_positions(&rsv, plan);
    let rights = segment_positions(&axes, plan);
    sources
        .into_iter()
        .zip(centers)
        .zip(rights)
        .map(|((source, receiver), right)| {
            let mics = mics_along_axis(&receiver, &right, cfg.ear_offset)?;
            Ok(SegmentGeometry {
                source,
                receiver,
                left: mics.left,
                right: mics.right,
                left_facing: mics.left_facing,
                right_facing: mics.right_facing,
            })
        })
        .collect()
}

/// Renders `mono` to two channels for a moving source and listener.
///
/// The output has the input's length; convolution tails past the end are
/// dropped. Results do not depend on the number of worker threads.
pub fn render_binaural(
    mono: &AudioBuffer,
    traj_src: &Trajectory,
    poses: &[CameraPose],
    room: &RoomSpec,
    cfg: &RenderConfig,
) -> Result<AudioBuffer, RenderError> {
    cfg.validate()?;
    if mono.channel_count() != 1 {
        return Err(RenderError::NotMono(mono.channel_count()));
    }
    if mono.sample_rate() != cfg.sample_rate {
        return Err(RenderError::SampleRateMismatch {
            audio: mono.sample_rate(),
            config: cfg.sample_rate,
        });
    }
    if mono.is_empty() {
        return Err(RenderError::EmptyAudio);
    }
    room.validate()?;

    let input = mono.channel(0);
    let n = input.len();
    let plan = plan_segments(n, cfg.effective_segment_len())?;
    let geometry = segment_geometry(traj_src, poses, &plan, cfg)?;
    let settings = cfg.rir_settings();
    let rir_len = settings.rir_len(room);
    let block_max = plan.max_segment_len();
    let fft = FftConvolver::new((block_max + rir_len - 1).next_power_of_two());

    let mut out_left = vec![0.0; n + rir_len - 1];
    let mut out_right = vec![0.0; n + rir_len - 1];
    let segments: Vec<(usize, usize)> = plan.segments().collect();
    let mut previous: Option<Vec<Complex64>> = None;

    for (batch_idx, batch) in segments.chunks(BATCH).enumerate() {
        let first = batch_idx * BATCH;
        let spectra: Vec<Vec<Complex64>> = geometry[first..first + batch.len()]
            .par_iter()
            .map(|g| {
                let left = compute_rir(&g.source, &g.left, &g.left_facing, cfg.pattern, room, &settings)?;
                let right = compute_rir(&g.source, &g.right, &g.right_facing, cfg.pattern, room, &settings)?;
                Ok(fft.pair_spectrum(&left.samples, &right.samples))
            })
            .collect::<Result<_, RenderError>>()?;

        let rendered: Vec<(Vec<f64>, Vec<f64>)> = batch
            .par_iter()
            .enumerate()
            .map(|(j, &(start, end))| {
                let block = &input[start..end];
                let len = block.len() + rir_len - 1;
                let mut l = vec![0.0; len];
                let mut r = vec![0.0; len];
                let prev = if j > 0 { Some(&spectra[j - 1]) } else { previous.as_ref() };
                match (cfg.crossfade, prev) {
                    (true, Some(prev)) => {
                        let width = block.len() as f64;
                        let fade_in: Vec<f64> = block.iter().enumerate().map(|(k, x)| x * (k as f64 / width)).collect();
                        let fade_out: Vec<f64> = block.iter().zip(&fade_in).map(|(x, y)| x - y).collect();
                        fft.convolve_pair_into(&fade_out, prev, &mut l, &mut r);
                        fft.convolve_pair_into(&fade_in, &spectra[j], &mut l, &mut r);
                    }
                    _ => fft.convolve_pair_into(block, &spectra[j], &mut l, &mut r),
                }
                (l, r)
            })
            .collect();

        for (&(start, _), (l, r)) in batch.iter().zip(rendered) {
            for (acc, y) in out_left[start..].iter_mut().zip(&l) {
                *acc += y;
            }
            for (acc, y) in out_right[start..].iter_mut().zip(&r) {
                *acc += y;
            }
        }
        previous = spectra.into_iter().last();
    }

    out_left.truncate(n);
    out_right.truncate(n);
    let audio = AudioBuffer::stereo(out_left, out_right, cfg.sample_rate)?;
    Ok(if cfg.normalize { normalize(&audio) } else { audio })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::acoustics::RoomCategory;

    #[test]
    fn plans() {
        assert_eq!(plan_segments(10, 10).unwrap().boundaries(), &[0, 10]);
        assert_eq!(plan_segments(10, 4).unwrap().boundaries(), &[0, 4, 8, 10]);
        let p = plan_segments(44100, 1024).unwrap();
        assert_eq!(p.segment_count(), 44);
        assert_eq!(p.boundaries()[44] - p.boundaries()[43], 68);
        assert_eq!(plan_segments(5, 100).unwrap().boundaries(), &[0, 5]);
        assert!(plan_segments(0, 4).is_err());
    }

    #[test]
    fn midpoint_positions() {
        let t = Trajectory::from_frames(vec![Point3::zeros(), Point3::new(1.0, 0.0, 0.0)]).unwrap();
        let p = plan_segments(1000, 500).unwrap();
        let pos = segment_positions(&t, &p);
        assert_eq!(pos, vec![Point3::new(0.25, 0.0, 0.0), Point3::new(0.75, 0.0, 0.0)]);

        let s = Trajectory::stationary(Point3::new(1.0, 2.0, 3.0), 5).unwrap();
        let pos = segment_positions(&s, &plan_segments(1000, 64).unwrap());
        assert!(pos.iter().all(|q| *q == Point3::new(1.0, 2.0, 3.0)));
    }

    #[test]
    fn normalization() {
        let a = AudioBuffer::stereo(vec![0.5, -0.1], vec![0.25, 0.2], 16000).unwrap();
        let n = normalize(&a);
        assert_eq!(n.channel(0), &[1.0, -0.2]);
        assert_eq!(n.channel(1), &[0.5, 0.4]);
        let z = AudioBuffer::stereo(vec![0.0; 3], vec![0.0; 3], 16000).unwrap();
        assert_eq!(normalize(&z), z);
    }

    #[test]
    fn audio_buffer_invariants() {
        assert!(AudioBuffer::stereo(vec![0.0; 3], vec![0.0; 2], 16000).is_err());
        assert!(AudioBuffer::mono(vec![f64::NAN], 16000).is_err());
        assert!(AudioBuffer::new(vec![], 16000).is_err());
    }

    #[test]
    fn config_validation() {
        assert!(RenderConfig::default().validate().is_ok());
        let c = RenderConfig { segment_len: Some(32), ..Default::default() };
        assert!(c.validate().is_err());
        let c = RenderConfig { sample_rate: 22050, ..Default::default() };
        assert!(c.validate().is_err());
        assert_eq!(RenderConfig::default().effective_segment_len(), 1470);
    }

    fn small_room() -> RoomSpec {
        RoomSpec::new(RoomCategory::Explicit, [6.0, 3.0, 6.0], 0.3).unwrap()
    }

    #[test]
    fn render_rejects_bad_input() {
        let room = small_room();
        let src = Trajectory::stationary(Point3::new(3.0, 1.5, 4.0), 2).unwrap();
        let poses = [CameraPose::identity().with_center(Point3::new(3.0, 1.5, 2.0))];
        let cfg = RenderConfig { sample_rate: 16000, segment_len: Some(256), ..Default::default() };
        let stereo = AudioBuffer::stereo(vec![0.0; 10], vec![0.0; 10], 16000).unwrap();
        assert_eq!(render_binaural(&stereo, &src, &poses, &room, &cfg), Err(RenderError::NotMono(2)));
        let wrong_rate = AudioBuffer::mono(vec![0.0; 10], 44100).unwrap();
        assert!(matches!(
            render_binaural(&wrong_rate, &src, &poses, &room, &cfg),
            Err(RenderError::SampleRateMismatch { .. })
        ));
        let empty = AudioBuffer::mono(vec![], 16000).unwrap();
        assert_eq!(render_binaural(&empty, &src, &poses, &room, &cfg), Err(RenderError::EmptyAudio));
    }

    #[test]
    fn on_axis_source_gives_identical_channels() {
        let room = small_room();
        let src = Trajectory::stationary(Point3::new(3.0, 1.5, 4.0), 2).unwrap();
        let poses = [CameraPose::identity().with_center(Point3::new(3.0, 1.5, 2.0))];
        let cfg = RenderConfig { sample_rate: 16000, segment_len: Some(256), ..Default::default() };
        let mono = AudioBuffer::mono((0..2000).map(|i| ((i * 7919) % 201) as f64 / 100.0 - 1.0).collect(), 16000).unwrap();
        let out = render_binaural(&mono, &src, &poses, &room, &cfg).unwrap();
        assert_eq!(out.len(), 2000);
        // mirror-symmetric about x = 3, equal up to summation rounding
        for (l, r) in out.channel(0).iter().zip(out.channel(1)) {
            assert!((l - r).abs() < 1e-9);
        }
        assert_eq!(out.peak(), 1.0);
    }

    #[test]
    fn crossfade_is_exact_for_static_scenes() {
        let room = small_room();
        let src = Trajectory::stationary(Point3::new(2.0, 1.0, 4.0), 2).unwrap();
        let poses = [CameraPose::identity().with_center(Point3::new(3.0, 1.5, 2.0))];
        let base = RenderConfig { sample_rate: 16000, segment_len: Some(300), normalize: false, ..Default::default() };
        let mono = AudioBuffer::mono((0..3000).map(|i| (i as f64 * 0.05).sin()).collect(), 16000).unwrap();
        let plain = render_binaural(&mono, &src, &poses, &room, &base).unwrap();
        let faded = render_binaural(&mono, &src, &poses, &room, &RenderConfig { crossfade: true, ..base }).unwrap();
        for c in 0..2 {
            for (a, b) in plain.channel(c).iter().zip(faded.channel(c)) {
                assert!((a - b).abs() < 1e-9);
            }
        }
    }
}
