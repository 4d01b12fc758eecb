//! Source and receiver trajectories.
//!
//! Grounding boxes and depth rasters are turned into a per-frame source
//! trajectory (box center, patch back-projection, DBSCAN outlier rejection,
//! linear gap filling). Camera poses give the receiver trajectory and the
//! binaural microphone placement.

mod dbscan;

use std::collections::BTreeMap;

use rayon::prelude::*;
use thiserror::Error;

pub use dbscan::{dbscan, DbscanParams, LabeledPoints, NOISE};

use crate::geometry::{patch_average_3d, CameraIntrinsics, CameraPose, GeometryError, PixelPoint, Point3};
use crate::io::DepthMap;

/// Orthonormality tolerance for poses fed to the receiver path.
pub const ROTATION_TOLERANCE: f64 = 1e-4;

/// Default half head width in meters.
pub const DEFAULT_EAR_OFFSET: f64 = 0.0875;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum LocalizationError {
    #[error("frame sets differ: {0}")]
    FrameMismatch(String),
    #[error("every source estimate was rejected as noise or missing")]
    AllNoise,
    #[error(transparent)]
    Geometry(#[from] GeometryError),
    #[error("camera right axis is degenerate")]
    DegenerateRotation,
    #[error("invalid trajectory: {0}")]
    InvalidTrajectory(String),
    #[error("invalid grounding box: {0}")]
    InvalidBox(String),
    #[error("ear offset must be positive, got {0}")]
    InvalidEarOffset(f64),
}

/// Normalized grounding box `[x0, y0, x1, y1]` for one frame.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GroundingBox {
    pub frame_index: usize,
    pub x0: f64,
    pub y0: f64,
    pub x1: f64,
    pub y1: f64,
}

impl GroundingBox {
    pub fn new(frame_index: usize, x0: f64, y0: f64, x1: f64, y1: f64) -> Result<Self, LocalizationError> {
        let in_unit = |v: f64| (0.0..=1.0).contains(&v);
        if !(in_unit(x0) && in_unit(y0) && in_unit(x1) && in_unit(y1)) {
            return Err(LocalizationError::InvalidBox(format!(
                "coordinates must lie in [0, 1]: [{x0}, {y0}, {x1}, {y1}]"
            )));
        }
        if x0 > x1 || y0 > y1 {
            return Err(LocalizationError::InvalidBox(format!(
                "corners out of order: [{x0}, {y0}, {x1}, {y1}]"
            )));
        }
        Ok(Self {
            frame_index,
            x0,
            y0,
            x1,
            y1,
        })
    }
}

/// One line of a box file: a detection or an explicit gap.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum BoxEntry {
    Present(GroundingBox),
    Missing { frame_index: usize },
}

impl BoxEntry {
    pub fn frame_index(&self) -> usize {
        match self {
            Self::Present(b) => b.frame_index,
            Self::Missing { frame_index } => *frame_index,
        }
    }
}

/// Timestamped 3D path. Timestamps are in frame units and strictly increasing.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    times: Vec<f64>,
    points: Vec<Point3>,
}

impl Trajectory {
    pub fn new(times: Vec<f64>, points: Vec<Point3>) -> Result<Self, LocalizationError> {
        if times.is_empty() {
            return Err(LocalizationError::InvalidTrajectory("no points".into()));
        }
        if times.len() != points.len() {
            return Err(LocalizationError::InvalidTrajectory(format!(
                "{} timestamps but {} points",
                times.len(),
                points.len()
            )));
        }
        if let Some(i) = times.windows(2).position(|w| !(w[1] > w[0])) {
            return Err(LocalizationError::InvalidTrajectory(format!(
                "timestamps not strictly increasing at index {}",
                i + 1
            )));
        }
        if times.iter().any(|t| !t.is_finite()) || points.iter().any(|p| p.iter().any(|c| !c.is_finite())) {
            return Err(LocalizationError::InvalidTrajectory("non-finite value".into()));
        }
        Ok(Self { times, points })
    }

    /// Trajectory with timestamps `0, 1, …, n−1`.
    pub fn from_frames(points: Vec<Point3>) -> Result<Self, LocalizationError> {
        let times = (0..points.len()).map(|i| i as f64).collect();
        Self::new(times, points)
    }

    /// A single point held for `frames` frames.
    pub fn stationary(point: Point3, frames: usize) -> Result<Self, LocalizationError> {
        Self::from_frames(vec![point; frames.max(1)])
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn points(&self) -> &[Point3] {
        &self.points
    }

    pub fn start(&self) -> f64 {
        self.times[0]
    }

    pub fn end(&self) -> f64 {
        self.times[self.times.len() - 1]
    }

    /// Piecewise-linear position at `t`, held constant outside the time span.
    pub fn position_at(&self, t: f64) -> Point3 {
        let n = self.times.len();
        if t <= self.times[0] {
            return self.points[0];
        }
        if t >= self.times[n - 1] {
            return self.points[n - 1];
        }
        // first index with time > t; t is strictly inside so 1 <= hi <= n-1
        let hi = self.times.partition_point(|&x| x <= t);
        let lo = hi - 1;
        lerp(
            &self.points[lo],
            &self.points[hi],
            (t - self.times[lo]) / (self.times[hi] - self.times[lo]),
        )
    }

    /// Position at a fraction `f ∈ [0, 1]` of the time span.
    pub fn position_at_fraction(&self, f: f64) -> Point3 {
        self.position_at(self.start() + f * (self.end() - self.start()))
    }

    /// Applies `f` to every point.
    pub fn map_points(&self, f: impl Fn(&Point3) -> Point3) -> Self {
        Self {
            times: self.times.clone(),
            points: self.points.iter().map(f).collect(),
        }
    }
}

pub(crate) fn lerp(a: &Point3, b: &Point3, w: f64) -> Point3 {
    if a == b {
        return *a;
    }
    a + (b - a) * w
}

/// Pixel at the center of a normalized box, clamped to the image.
pub fn bbox_center(bbox: &GroundingBox, width: usize, height: usize) -> PixelPoint {
    let u = ((bbox.x0 + bbox.x1) / 2.0 * width as f64).floor() as usize;
    let v = ((bbox.y0 + bbox.y1) / 2.0 * height as f64).floor() as usize;
    PixelPoint::new(u.min(width.saturating_sub(1)), v.min(height.saturating_sub(1)))
}

/// Per-frame source estimate before filtering.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RawSourcePoint {
    pub frame_index: usize,
    pub point: Option<Point3>,
}

/// Patch-averaged 3D source position for every frame.
///
/// A frame without a box, or whose patch has no valid depth, yields `None`.
pub fn estimate_raw_source_points(
    boxes: &[BoxEntry],
    depth_maps: &BTreeMap<usize, DepthMap>,
    intrinsics: &CameraIntrinsics,
    r: usize,
) -> Result<Vec<RawSourcePoint>, LocalizationError> {
    let box_frames: Vec<usize> = boxes.iter().map(BoxEntry::frame_index).collect();
    let depth_frames: Vec<usize> = depth_maps.keys().copied().collect();
    {
        let mut sorted = box_frames.clone();
        sorted.sort_unstable();
        sorted.dedup();
        if sorted.len() != box_frames.len() {
            return Err(LocalizationError::FrameMismatch("duplicate frame in boxes".into()));
        }
        if sorted != depth_frames {
            let only_boxes: Vec<_> = sorted.iter().filter(|f| !depth_maps.contains_key(f)).collect();
            let only_depth: Vec<_> = depth_frames.iter().filter(|f| sorted.binary_search(f).is_err()).collect();
            return Err(LocalizationError::FrameMismatch(format!(
                "frames without depth {only_boxes:?}, frames without box entry {only_depth:?}"
            )));
        }
    }
    if r == 0 || r % 2 == 0 {
        return Err(GeometryError::InvalidPatchSize(r).into());
    }

    boxes
        .par_iter()
        .map(|entry| {
            let frame_index = entry.frame_index();
            let depth = &depth_maps[&frame_index];
            if depth.width != intrinsics.width || depth.height != intrinsics.height {
                return Err(LocalizationError::FrameMismatch(format!(
                    "frame {frame_index}: depth raster {}x{} but intrinsics {}x{}",
                    depth.width, depth.height, intrinsics.width, intrinsics.height
                )));
            }
            let point = match entry {
                BoxEntry::Missing { .. } => None,
                BoxEntry::Present(b) => {
                    let center = bbox_center(b, depth.width, depth.height);
                    match patch_average_3d(center, depth, intrinsics, r) {
                        Ok(p) => Some(p),
                        Err(GeometryError::EmptyPatch { .. }) => None,
                        Err(e) => return Err(e.into()),
                    }
                }
            };
            Ok(RawSourcePoint { frame_index, point })
        })
        .collect()
}

/// Why a frame's output position was (or was not) taken from its own estimate.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FrameStatus {
    Kept,
    Noise,
    MinorCluster,
    Missing,
}

/// Filtered trajectory plus per-frame bookkeeping.
#[derive(Debug, Clone, PartialEq)]
pub struct FilteredTrajectory {
    pub trajectory: Trajectory,
    pub frames: Vec<(usize, FrameStatus)>,
    pub params: DbscanParams,
}

impl FilteredTrajectory {
    pub fn interpolated_frames(&self) -> Vec<usize> {
        self.frames
            .iter()
            .filter(|(_, s)| *s != FrameStatus::Kept)
            .map(|(f, _)| *f)
            .collect()
    }
}

/// DBSCAN-filters the raw estimates and fills every rejected or missing frame.
///
/// Only the largest cluster survives. Gaps are filled by linear
/// interpolation in frame index between the nearest survivors; frames before
/// the first or after the last survivor copy it.
pub fn filter_and_interpolate(
    raw: &[RawSourcePoint],
    eps: Option<f64>,
    min_pts: Option<usize>,
) -> Result<FilteredTrajectory, LocalizationError> {
    let mut order: Vec<usize> = (0..raw.len()).collect();
    order.sort_by_key(|&i| raw[i].frame_index);
    let raw: Vec<RawSourcePoint> = order.iter().map(|&i| raw[i]).collect();
    if raw.windows(2).any(|w| w[0].frame_index == w[1].frame_index) {
        return Err(LocalizationError::FrameMismatch("duplicate frame index".into()));
    }

    let present: Vec<(usize, Point3)> = raw
        .iter()
        .enumerate()
        .filter_map(|(i, r)| r.point.map(|p| (i, p)))
        .collect();
    let pts: Vec<Point3> = present.iter().map(|(_, p)| *p).collect();
    let params = DbscanParams::resolve(&pts, eps, min_pts);
    let labeled = dbscan(&pts, params.eps, params.min_pts);
    let keep = labeled.largest_cluster().ok_or(LocalizationError::AllNoise)?;

    let mut status = vec![FrameStatus::Missing; raw.len()];
    for ((i, _), &label) in present.iter().zip(&labeled.labels) {
        status[*i] = if label == keep {
            FrameStatus::Kept
        } else if label == NOISE {
            FrameStatus::Noise
        } else {
            FrameStatus::MinorCluster
        };
    }
    let survivors: Vec<(f64, Point3)> = present
        .iter()
        .filter(|(i, _)| status[*i] == FrameStatus::Kept)
        .map(|(i, p)| (raw[*i].frame_index as f64, *p))
        .collect();
    let anchor = Trajectory::new(
        survivors.iter().map(|s| s.0).collect(),
        survivors.iter().map(|s| s.1).collect(),
    )?;

    let points = raw
        .iter()
        .zip(&status)
        .map(|(r, s)| match (s, r.point) {
            (FrameStatus::Kept, Some(p)) => p,
            _ => anchor.position_at(r.frame_index as f64),
        })
        .collect();
    let trajectory = Trajectory::new(raw.iter().map(|r| r.frame_index as f64).collect(), points)?;

    Ok(FilteredTrajectory {
        trajectory,
        frames: raw.iter().map(|r| r.frame_index).zip(status).collect(),
        params,
    })
}

/// Receiver (camera center) position for every pose, timestamped by frame.
pub fn receiver_from_poses(poses: &[CameraPose]) -> Result<Trajectory, LocalizationError> {
    if poses.is_empty() {
        return Err(LocalizationError::InvalidTrajectory("no poses".into()));
    }
    for pose in poses {
        pose.check_rotation(ROTATION_TOLERANCE)?;
    }
    Trajectory::from_frames(poses.iter().map(CameraPose::center).collect())
}

/// Left/right microphone positions and their outward facings.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MicPair {
    pub left: Point3,
    pub right: Point3,
    pub left_facing: Point3,
    pub right_facing: Point3,
}

/// Places two microphones `ear_offset` to either side of `receiver_pos`
/// along the camera's right axis.
pub fn binaural_mics(pose: &CameraPose, receiver_pos: &Point3, ear_offset: f64) -> Result<MicPair, LocalizationError> {
    mics_along_axis(receiver_pos, &pose.right_axis(), ear_offset)
}

/// [`binaural_mics`] with an explicit right axis (world coordinates).
pub fn mics_along_axis(center: &Point3, right_axis: &Point3, ear_offset: f64) -> Result<MicPair, LocalizationError> {
    if !(ear_offset > 0.0) {
        return Err(LocalizationError::InvalidEarOffset(ear_offset));
    }
    let norm = right_axis.norm();
    if !(norm >= 1e-9) {
        return Err(LocalizationError::DegenerateRotation);
    }
    let r = right_axis / norm;
    Ok(MicPair {
        left: center - r * ear_offset,
        right: center + r * ear_offset,
        left_facing: -r,
        right_facing: r,
    })
}

/// Uniform piecewise-linear resampling to `n` points over the same time span.
pub fn resample_trajectory(traj: &Trajectory, n: usize) -> Result<Trajectory, LocalizationError> {
    if n < 2 {
        return Err(LocalizationError::InvalidTrajectory(format!(
            "resampling needs at least 2 points, got {n}"
        )));
    }
    if traj.len() == 1 {
        let t0 = traj.start();
        return Trajectory::new((0..n).map(|j| t0 + j as f64).collect(), vec![traj.points[0]; n]);
    }
    let (t0, t1) = (traj.start(), traj.end());
    let step = (t1 - t0) / (n - 1) as f64;
    let mut times: Vec<f64> = (0..n).map(|j| t0 + j as f64 * step).collect();
    times[n - 1] = t1;
    let mut points: Vec<Point3> = times.iter().map(|&t| traj.position_at(t)).collect();
    points[0] = traj.points[0];
    points[n - 1] = traj.points[traj.len() - 1];
    Trajectory::new(times, points)
}
