//! Pinhole camera math: projection, back-projection and depth-patch averaging.
//!
//! Convention: `+z` forward, `+x` right, `+y` down. A world→camera pose maps
//! `X_cam = R · X_world + t`.

use nalgebra::{Matrix3, Vector3};
use thiserror::Error;

use crate::io::DepthMap;

/// A 3D point or direction in meters.
pub type Point3 = Vector3<f64>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum GeometryError {
    #[error("depth must be positive, got {0}")]
    NonPositiveDepth(f64),
    #[error("pixel ({u}, {v}) outside {width}x{height} image")]
    OutOfBounds {
        u: i64,
        v: i64,
        width: usize,
        height: usize,
    },
    #[error("point is behind the camera (z = {0})")]
    BehindCamera(f64),
    #[error("no pixel with valid depth in the {r}x{r} patch around ({u}, {v})")]
    EmptyPatch { u: usize, v: usize, r: usize },
    #[error("patch size must be odd and positive, got {0}")]
    InvalidPatchSize(usize),
    #[error("invalid intrinsics: {0}")]
    InvalidIntrinsics(String),
    #[error("invalid rotation: {0}")]
    InvalidRotation(String),
}

/// Pinhole intrinsics in pixels.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CameraIntrinsics {
    pub fx: f64,
    pub fy: f64,
    pub cx: f64,
    pub cy: f64,
    pub width: usize,
    pub height: usize,
}

impl CameraIntrinsics {
    pub fn new(
        fx: f64,
        fy: f64,
        cx: f64,
        cy: f64,
        width: usize,
        height: usize,
    ) -> Result<Self, GeometryError> {
        let k = Self {
            fx,
            fy,
            cx,
            cy,
            width,
            height,
        };
        k.validate()?;
        Ok(k)
    }

    pub fn validate(&self) -> Result<(), GeometryError> {
        if !(self.fx > 0.0 && self.fy > 0.0) || !self.fx.is_finite() || !self.fy.is_finite() {
            return Err(GeometryError::InvalidIntrinsics(format!(
                "focal lengths must be positive (fx={}, fy={})",
                self.fx, self.fy
            )));
        }
        if !(0.0..self.width as f64).contains(&self.cx)
            || !(0.0..self.height as f64).contains(&self.cy)
        {
            return Err(GeometryError::InvalidIntrinsics(format!(
                "principal point ({}, {}) outside {}x{} image",
                self.cx, self.cy, self.width, self.height
            )));
        }
        Ok(())
    }

    pub fn contains(&self, pixel: PixelPoint) -> bool {
        pixel.u < self.width && pixel.v < self.height
    }
}

/// Integer pixel coordinates.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct PixelPoint {
    pub u: usize,
    pub v: usize,
}

impl PixelPoint {
    pub const fn new(u: usize, v: usize) -> Self {
        Self { u, v }
    }
}

/// Result of [`project`]: the integer pixel plus the sub-pixel remainder.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Projection {
    /// Continuous image coordinates.
    pub u: f64,
    pub v: f64,
}

impl Projection {
    /// Floors to the containing pixel, or `None` if it falls outside the image.
    pub fn pixel(&self, intrinsics: &CameraIntrinsics) -> Option<PixelPoint> {
        let (u, v) = (self.u.floor(), self.v.floor());
        if u < 0.0 || v < 0.0 {
            return None;
        }
        let p = PixelPoint::new(u as usize, v as usize);
        intrinsics.contains(p).then_some(p)
    }

    pub fn remainder(&self) -> (f64, f64) {
        (self.u - self.u.floor(), self.v - self.v.floor())
    }
}

/// Whether a pose matrix maps world points into the camera frame or the reverse.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum PoseConvention {
    #[default]
    WorldToCamera,
    CameraToWorld,
}

/// Rigid camera pose `[R | t]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CameraPose {
    pub rotation: Matrix3<f64>,
    pub translation: Vector3<f64>,
    pub convention: PoseConvention,
}

impl CameraPose {
    pub fn identity() -> Self {
        Self {
            rotation: Matrix3::identity(),
            translation: Vector3::zeros(),
            convention: PoseConvention::WorldToCamera,
        }
    }

    pub fn new(
        rotation: Matrix3<f64>,
        translation: Vector3<f64>,
        convention: PoseConvention,
    ) -> Self {
        Self {
            rotation,
            translation,
            convention,
        }
    }

    /// Checks `RᵀR = I` and `det R = +1` within `tol`.
    pub fn check_rotation(&self, tol: f64) -> Result<(), GeometryError> {
        let r = &self.rotation;
        if r.iter().any(|x| !x.is_finite()) || self.translation.iter().any(|x| !x.is_finite()) {
            return Err(GeometryError::InvalidRotation("non-finite entry".into()));
        }
        let err = (r.transpose() * r - Matrix3::identity()).abs().max();
        if err > tol {
            return Err(GeometryError::InvalidRotation(format!(
                "RᵀR deviates from identity by {err:.3e}"
            )));
        }
        let det = r.determinant();
        if (det - 1.0).abs() > tol {
            return Err(GeometryError::InvalidRotation(format!(
                "determinant {det} is not +1"
            )));
        }
        Ok(())
    }

    /// Rotation taking camera-frame directions into the world frame.
    pub fn camera_to_world_rotation(&self) -> Matrix3<f64> {
        match self.convention {
            PoseConvention::WorldToCamera => self.rotation.transpose(),
            PoseConvention::CameraToWorld => self.rotation,
        }
    }

    /// Camera center in world coordinates.
    pub fn center(&self) -> Point3 {
        match self.convention {
            PoseConvention::WorldToCamera => -(self.rotation.transpose() * self.translation),
            PoseConvention::CameraToWorld => self.translation,
        }
    }

    /// Camera `+x` axis expressed in world coordinates (not normalized).
    pub fn right_axis(&self) -> Vector3<f64> {
        self.camera_to_world_rotation().column(0).into_owned()
    }

    /// Camera `+z` (viewing) axis in world coordinates.
    pub fn forward_axis(&self) -> Vector3<f64> {
        self.camera_to_world_rotation().column(2).into_owned()
    }

    /// Same pose with the camera center moved to `center`, orientation kept.
    pub fn with_center(&self, center: Point3) -> Self {
        let translation = match self.convention {
            PoseConvention::WorldToCamera => -(self.rotation * center),
            PoseConvention::CameraToWorld => center,
        };
        Self {
            translation,
            ..*self
        }
    }
}

/// Lifts a pixel with known depth into camera coordinates.
pub fn back_project(
    pixel: PixelPoint,
    depth: f64,
    intrinsics: &CameraIntrinsics,
) -> Result<Point3, GeometryError> {
    if !intrinsics.contains(pixel) {
        return Err(GeometryError::OutOfBounds {
            u: pixel.u as i64,
            v: pixel.v as i64,
            width: intrinsics.width,
            height: intrinsics.height,
        });
    }
    if !(depth > 0.0) || !depth.is_finite() {
        return Err(GeometryError::NonPositiveDepth(depth));
    }
    Ok(lift(pixel.u as f64, pixel.v as f64, depth, intrinsics))
}

#[inline]
fn lift(u: f64, v: f64, depth: f64, k: &CameraIntrinsics) -> Point3 {
    Point3::new((u - k.cx) / k.fx * depth, (v - k.cy) / k.fy * depth, depth)
}

/// Projects a camera-frame point onto the image plane.
pub fn project(point: &Point3, intrinsics: &CameraIntrinsics) -> Result<Projection, GeometryError> {
    if !(point.z > 0.0) {
        return Err(GeometryError::BehindCamera(point.z));
    }
    Ok(Projection {
        u: intrinsics.fx * point.x / point.z + intrinsics.cx,
        v: intrinsics.fy * point.y / point.z + intrinsics.cy,
    })
}

/// Continuous-coordinate inverse of [`project`], used for roundtrip checks.
pub fn back_project_continuous(
    u: f64,
    v: f64,
    depth: f64,
    intrinsics: &CameraIntrinsics,
) -> Result<Point3, GeometryError> {
    if !(depth > 0.0) || !depth.is_finite() {
        return Err(GeometryError::NonPositiveDepth(depth));
    }
    Ok(lift(u, v, depth, intrinsics))
}

/// Mean back-projection over the `r × r` patch centered on `center`.
///
/// The patch is clipped at the image border. Pixels whose depth is not a
/// positive finite number are skipped.
pub fn patch_average_3d(
    center: PixelPoint,
    depth_map: &DepthMap,
    intrinsics: &CameraIntrinsics,
    r: usize,
) -> Result<Point3, GeometryError> {
    if r == 0 || r % 2 == 0 {
        return Err(GeometryError::InvalidPatchSize(r));
    }
    let width = depth_map.width.min(intrinsics.width);
    let height = depth_map.height.min(intrinsics.height);
    if center.u >= width || center.v >= height {
        return Err(GeometryError::OutOfBounds {
            u: center.u as i64,
            v: center.v as i64,
            width,
            height,
        });
    }
    let half = (r - 1) / 2;
    let (u0, u1) = (center.u.saturating_sub(half), (center.u + half).min(width - 1));
    let (v0, v1) = (center.v.saturating_sub(half), (center.v + half).min(height - 1));

    let mut sum = Point3::zeros();
    let mut count = 0usize;
    for v in v0..=v1 {
        for u in u0..=u1 {
            let d = depth_map.get(u, v) as f64;
            if d > 0.0 && d.is_finite() {
                sum += lift(u as f64, v as f64, d, intrinsics);
                count += 1;
            }
        }
    }
    if count == 0 {
        return Err(GeometryError::EmptyPatch {
            u: center.u,
            v: center.v,
            r,
        });
    }
    Ok(sum / count as f64)
}
