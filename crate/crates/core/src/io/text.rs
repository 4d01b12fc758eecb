//! Line-oriented text formats: grounding boxes, camera poses, trajectories
//! and camera intrinsics.

use std::fmt::Write as _;
use std::path::Path;

use nalgebra::{Matrix3, Vector3};
use serde::Deserialize;

use super::{read_text, write_file, IoError};
use crate::geometry::{CameraIntrinsics, CameraPose, Point3, PoseConvention};
use crate::localization::{BoxEntry, GroundingBox, Trajectory, ROTATION_TOLERANCE};

const BOTTOM_ROW_TOLERANCE: f64 = 1e-6;

fn malformed(line: usize, message: impl Into<String>) -> IoError {
    IoError::MalformedLine {
        line,
        message: message.into(),
    }
}

fn parse_f64(field: &str, line: usize) -> Result<f64, IoError> {
    let v: f64 = field
        .trim()
        .parse()
        .map_err(|_| malformed(line, format!("'{}' is not a number", field.trim())))?;
    if !v.is_finite() {
        return Err(malformed(line, format!("non-finite value '{}'", field.trim())));
    }
    Ok(v)
}

fn parse_index(field: &str, line: usize) -> Result<usize, IoError> {
    field
        .trim()
        .parse()
        .map_err(|_| malformed(line, format!("'{}' is not a frame index", field.trim())))
}

/// Full-precision float: 17 significant digits.
fn fmt_f64(v: f64) -> String {
    format!("{v:.16e}")
}

/// Parses `frame_index,x0,y0,x1,y1` lines. A blank line is a missing
/// detection for the frame after the previous line's.
pub fn parse_boxes(text: &str) -> Result<Vec<BoxEntry>, IoError> {
    let mut out: Vec<BoxEntry> = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        let next = out.last().map_or(0, |e| e.frame_index() + 1);
        if raw.trim().is_empty() {
            out.push(BoxEntry::Missing { frame_index: next });
            continue;
        }
        let fields: Vec<&str> = raw.split(',').collect();
        if fields.len() != 5 {
            return Err(malformed(line, format!("expected 5 fields, found {}", fields.len())));
        }
        let frame = parse_index(fields[0], line)?;
        if frame < next && !out.is_empty() {
            return Err(malformed(line, format!("frame {frame} does not follow frame {}", next - 1)));
        }
        let c: Vec<f64> = fields[1..].iter().map(|f| parse_f64(f, line)).collect::<Result<_, _>>()?;
        let b = GroundingBox::new(frame, c[0], c[1], c[2], c[3]).map_err(|e| malformed(line, e.to_string()))?;
        out.push(BoxEntry::Present(b));
    }
    Ok(out)
}

pub fn read_boxes(path: &Path) -> Result<Vec<BoxEntry>, IoError> {
    parse_boxes(&read_text(path)?)
}

/// Writes boxes; a missing entry becomes a blank line, so frame indices
/// must be consecutive around gaps.
pub fn write_boxes(path: &Path, boxes: &[BoxEntry]) -> Result<(), IoError> {
    let mut s = String::new();
    for e in boxes {
        match e {
            BoxEntry::Present(b) => {
                let _ = writeln!(
                    s,
                    "{},{},{},{},{}",
                    b.frame_index,
                    fmt_f64(b.x0),
                    fmt_f64(b.y0),
                    fmt_f64(b.x1),
                    fmt_f64(b.y1)
                );
            }
            BoxEntry::Missing { .. } => s.push('\n'),
        }
    }
    write_file(path, s.as_bytes())
}

/// Poses file contents.
#[derive(Debug, Clone, PartialEq)]
pub struct PoseFile {
    pub convention: PoseConvention,
    pub poses: Vec<CameraPose>,
}

/// Parses a convention header (`world_to_camera` or `camera_to_world`)
/// followed by one row-major 4×4 matrix (16 numbers) per line.
pub fn parse_poses(text: &str) -> Result<PoseFile, IoError> {
    let mut lines = text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty());
    let (hline, header) = lines.next().ok_or_else(|| malformed(1, "missing convention header"))?;
    let convention = match header.trim() {
        "world_to_camera" => PoseConvention::WorldToCamera,
        "camera_to_world" => PoseConvention::CameraToWorld,
        other => {
            return Err(malformed(
                hline + 1,
                format!("expected 'world_to_camera' or 'camera_to_world', found '{other}'"),
            ))
        }
    };
    let mut poses = Vec::new();
    for (i, raw) in lines {
        let line = i + 1;
        let m: Vec<f64> = raw.split_whitespace().map(|f| parse_f64(f, line)).collect::<Result<_, _>>()?;
        if m.len() != 16 {
            return Err(malformed(line, format!("expected 16 numbers, found {}", m.len())));
        }
        let bottom = [m[12], m[13], m[14], m[15] - 1.0];
        if bottom.iter().any(|x| x.abs() > BOTTOM_ROW_TOLERANCE) {
            return Err(IoError::BadBottomRow { line });
        }
        let rotation = Matrix3::new(m[0], m[1], m[2], m[4], m[5], m[6], m[8], m[9], m[10]);
        let pose = CameraPose::new(rotation, Vector3::new(m[3], m[7], m[11]), convention);
        pose.check_rotation(ROTATION_TOLERANCE).map_err(|e| IoError::InvalidRotation {
            line,
            message: e.to_string(),
        })?;
        poses.push(pose);
    }
    if poses.is_empty() {
        return Err(malformed(hline + 1, "no poses after header"));
    }
    Ok(PoseFile { convention, poses })
}

pub fn read_poses(path: &Path) -> Result<PoseFile, IoError> {
    parse_poses(&read_text(path)?)
}

pub fn write_poses(path: &Path, poses: &[CameraPose]) -> Result<(), IoError> {
    let convention = poses.first().map_or(PoseConvention::WorldToCamera, |p| p.convention);
    let mut s = String::from(match convention {
        PoseConvention::WorldToCamera => "world_to_camera\n",
        PoseConvention::CameraToWorld => "camera_to_world\n",
    });
    for p in poses {
        if p.convention != convention {
            return Err(IoError::RangeViolation("poses mix conventions".into()));
        }
        let r = &p.rotation;
        let t = &p.translation;
        let row = [
            r[(0, 0)], r[(0, 1)], r[(0, 2)], t.x,
            r[(1, 0)], r[(1, 1)], r[(1, 2)], t.y,
            r[(2, 0)], r[(2, 1)], r[(2, 2)], t.z,
            0.0, 0.0, 0.0, 1.0,
        ];
        let fields: Vec<String> = row.iter().map(|v| fmt_f64(*v)).collect();
        s.push_str(&fields.join(" "));
        s.push('\n');
    }
    write_file(path, s.as_bytes())
}

/// Parses `frame_index,x,y,z` lines with strictly increasing frame indices.
/// Fractional indices (resampled trajectories) are accepted.
pub fn parse_trajectory(text: &str) -> Result<Trajectory, IoError> {
    let mut times = Vec::new();
    let mut points = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        if raw.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = raw.split(',').collect();
        if fields.len() != 4 {
            return Err(malformed(line, format!("expected 4 fields, found {}", fields.len())));
        }
        let v: Vec<f64> = fields.iter().map(|f| parse_f64(f, line)).collect::<Result<_, _>>()?;
        if let Some(&last) = times.last() {
            if !(v[0] > last) {
                return Err(IoError::NonMonotoneIndex { line });
            }
        }
        times.push(v[0]);
        points.push(Point3::new(v[1], v[2], v[3]));
    }
    if times.is_empty() {
        return Err(malformed(1, "empty trajectory"));
    }
    Trajectory::new(times, points).map_err(|e| malformed(1, e.to_string()))
}

pub fn read_trajectory(path: &Path) -> Result<Trajectory, IoError> {
    parse_trajectory(&read_text(path)?)
}

pub fn write_trajectory(path: &Path, traj: &Trajectory) -> Result<(), IoError> {
    let mut s = String::new();
    for (t, p) in traj.times().iter().zip(traj.points()) {
        let index = if t.fract() == 0.0 && t.abs() < 9.0e15 {
            format!("{}", *t as i64)
        } else {
            fmt_f64(*t)
        };
        let _ = writeln!(s, "{index},{},{},{}", fmt_f64(p.x), fmt_f64(p.y), fmt_f64(p.z));
    }
    write_file(path, s.as_bytes())
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawIntrinsics {
    fx: f64,
    fy: f64,
    cx: f64,
    cy: f64,
    width: usize,
    height: usize,
}

/// Intrinsics as a small TOML table: `fx`, `fy`, `cx`, `cy`, `width`, `height`.
pub fn parse_intrinsics(text: &str) -> Result<CameraIntrinsics, IoError> {
    let raw: RawIntrinsics = toml::from_str(text).map_err(|e| IoError::Config(e.to_string()))?;
    CameraIntrinsics::new(raw.fx, raw.fy, raw.cx, raw.cy, raw.width, raw.height)
        .map_err(|e| IoError::RangeViolation(e.to_string()))
}

pub fn read_intrinsics(path: &Path) -> Result<CameraIntrinsics, IoError> {
    parse_intrinsics(&read_text(path)?)
}
