//! Shoebox rooms: category sampling, Sabine absorption and trajectory fitting.

use std::fmt;
use std::str::FromStr;

use rand::Rng;

use super::AcousticsError;
use crate::geometry::{CameraPose, Point3};
use crate::localization::Trajectory;
use crate::seed::{derive_seed, rng, stream};

/// Reverberation times are drawn from this open interval (seconds).
pub const T60_RANGE: (f64, f64) = (0.3, 0.6);

/// Upper clamp on the Sabine absorption coefficient.
pub const MAX_ALPHA: f64 = 0.9999;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum RoomCategory {
    Small,
    Medium,
    Large,
    Outdoor,
    Explicit,
}

/// Dimension ranges in meters: `(length/width range, height range)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CategoryRanges {
    pub horizontal: (f64, f64),
    pub height: (f64, f64),
}

impl RoomCategory {
    pub const SAMPLED: [RoomCategory; 4] = [Self::Small, Self::Medium, Self::Large, Self::Outdoor];

    pub fn ranges(self) -> Option<CategoryRanges> {
        let (horizontal, height) = match self {
            Self::Small => ((3.0, 8.0), (2.5, 4.0)),
            Self::Medium => ((8.0, 15.0), (3.0, 6.0)),
            Self::Large => ((15.0, 30.0), (5.0, 10.0)),
            Self::Outdoor => ((100.0, 200.0), (50.0, 100.0)),
            Self::Explicit => return None,
        };
        Some(CategoryRanges { horizontal, height })
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Self::Small => "small",
            Self::Medium => "medium",
            Self::Large => "large",
            Self::Outdoor => "outdoor",
            Self::Explicit => "explicit",
        }
    }
}

impl fmt::Display for RoomCategory {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for RoomCategory {
    type Err = AcousticsError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "small" => Ok(Self::Small),
            "medium" => Ok(Self::Medium),
            "large" => Ok(Self::Large),
            "outdoor" => Ok(Self::Outdoor),
            "explicit" => Ok(Self::Explicit),
            other => Err(AcousticsError::InvalidCategory(other.to_string())),
        }
    }
}

/// Axis-aligned shoebox room spanning `origin .. origin + dims`.
///
/// `beta` holds the wall reflection coefficients in the order
/// `x=0, x=lx, y=0, y=ly, z=0, z=lz`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RoomSpec {
    pub dims: [f64; 3],
    pub beta: [f64; 6],
    pub t60: f64,
    pub category: RoomCategory,
    pub origin: Point3,
}

impl RoomSpec {
    /// Room with Sabine reflection coefficients for `t60` (clamped absorption).
    pub fn new(category: RoomCategory, dims: [f64; 3], t60: f64) -> Result<Self, AcousticsError> {
        let mut room = Self {
            dims,
            beta: [0.0; 6],
            t60,
            category,
            origin: Point3::zeros(),
        };
        room.validate_shape()?;
        room.beta = beta_from_t60(&room, false)?;
        Ok(room)
    }

    /// Room with explicit reflection coefficients; `t60` only sets the RIR length.
    pub fn with_beta(category: RoomCategory, dims: [f64; 3], beta: [f64; 6], t60: f64) -> Result<Self, AcousticsError> {
        let room = Self {
            dims,
            beta,
            t60,
            category,
            origin: Point3::zeros(),
        };
        room.validate()?;
        Ok(room)
    }

    fn validate_shape(&self) -> Result<(), AcousticsError> {
        if self.dims.iter().any(|d| !(*d > 0.0) || !d.is_finite()) {
            return Err(AcousticsError::InvalidRoom(format!("dimensions must be positive: {:?}", self.dims)));
        }
        if !(self.t60 > 0.0) || !self.t60.is_finite() {
            return Err(AcousticsError::InvalidRoom(format!("t60 must be positive, got {}", self.t60)));
        }
        if self.origin.iter().any(|c| !c.is_finite()) {
            return Err(AcousticsError::InvalidRoom("non-finite origin".into()));
        }
        Ok(())
    }

    pub fn validate(&self) -> Result<(), AcousticsError> {
        self.validate_shape()?;
        if self.beta.iter().any(|b| !(0.0..1.0).contains(b)) {
            return Err(AcousticsError::InvalidRoom(format!(
                "reflection coefficients must lie in [0, 1): {:?}",
                self.beta
            )));
        }
        Ok(())
    }

    pub fn volume(&self) -> f64 {
        self.dims.iter().product()
    }

    pub fn surface(&self) -> f64 {
        let [x, y, z] = self.dims;
        2.0 * (x * y + x * z + y * z)
    }

    pub fn center(&self) -> Point3 {
        self.origin + Point3::new(self.dims[0], self.dims[1], self.dims[2]) / 2.0
    }

    /// Strictly inside the walls.
    pub fn contains(&self, p: &Point3) -> bool {
        (0..3).all(|k| {
            let local = p[k] - self.origin[k];
            local > 0.0 && local < self.dims[k]
        })
    }

    /// Same room recomputed for a new reverberation time.
    pub fn with_t60(&self, t60: f64, strict: bool) -> Result<Self, AcousticsError> {
        let mut room = Self { t60, ..*self };
        room.validate_shape()?;
        room.beta = beta_from_t60(&room, strict)?;
        Ok(room)
    }
}

/// Uniform room dimensions for a category, plus a reverberation time drawn
/// from an independent stream of the same seed.
pub fn sample_room(category: RoomCategory, seed: u64) -> Result<RoomSpec, AcousticsError> {
    let ranges = category
        .ranges()
        .ok_or_else(|| AcousticsError::InvalidCategory(category.to_string()))?;
    let mut rng = rng(derive_seed(seed, stream::ROOM));
    let (h0, h1) = ranges.horizontal;
    let (v0, v1) = ranges.height;
    let lx = rng.gen_range(h0..=h1);
    let ly = rng.gen_range(h0..=h1);
    let lz = rng.gen_range(v0..=v1);
    RoomSpec::new(category, [lx, ly, lz], sample_t60(seed))
}

/// Reverberation time uniform on the open interval `(0.3, 0.6)` seconds.
pub fn sample_t60(seed: u64) -> f64 {
    let mut rng = rng(derive_seed(seed, stream::T60));
    let (lo, hi) = T60_RANGE;
    loop {
        let t = rng.gen_range(lo..hi);
        if t > lo {
            return t;
        }
    }
}

/// Uniform wall reflection coefficient from Sabine's formula.
///
/// With `strict`, an absorption above 1 is an error; otherwise it is clamped
/// to `(0, 0.9999]`.
pub fn beta_from_t60(room: &RoomSpec, strict: bool) -> Result<[f64; 6], AcousticsError> {
    if !(room.t60 > 0.0) {
        return Err(AcousticsError::InvalidRoom(format!("t60 must be positive, got {}", room.t60)));
    }
    let alpha = 0.161 * room.volume() / (room.surface() * room.t60);
    if strict && alpha > 1.0 {
        return Err(AcousticsError::UnreachableT60 { alpha, t60: room.t60 });
    }
    let alpha = alpha.clamp(f64::MIN_POSITIVE, MAX_ALPHA);
    Ok([(1.0 - alpha).sqrt(); 6])
}

/// Uniform scale about the origin followed by a translation: `p ↦ s·p + offset`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SceneFit {
    pub scale: f64,
    pub offset: Point3,
}

impl SceneFit {
    pub fn identity() -> Self {
        Self {
            scale: 1.0,
            offset: Point3::zeros(),
        }
    }

    pub fn apply(&self, p: &Point3) -> Point3 {
        p * self.scale + self.offset
    }

    pub fn apply_trajectory(&self, traj: &Trajectory) -> Trajectory {
        traj.map_points(|p| self.apply(p))
    }

    /// Moves the camera center; orientation is unchanged.
    pub fn apply_pose(&self, pose: &CameraPose) -> CameraPose {
        pose.with_center(self.apply(&pose.center()))
    }
}

/// Centers the joint bounding cuboid of both trajectories in the room and
/// shrinks it uniformly if it does not fit inside the walls minus `margin`.
pub fn fit_scene(
    traj_src: &Trajectory,
    traj_rsv: &Trajectory,
    room: &RoomSpec,
    margin: f64,
) -> Result<SceneFit, AcousticsError> {
    let min_dim = room.dims.iter().copied().fold(f64::INFINITY, f64::min);
    if !(margin >= 0.0) || !(2.0 * margin < min_dim) {
        return Err(AcousticsError::DegenerateRoom(format!(
            "margin {margin} leaves no space in a {:?} room",
            room.dims
        )));
    }
    let mut lo = Point3::repeat(f64::INFINITY);
    let mut hi = Point3::repeat(f64::NEG_INFINITY);
    for p in traj_src.points().iter().chain(traj_rsv.points()) {
        lo = lo.inf(p);
        hi = hi.sup(p);
    }
    let center = (lo + hi) / 2.0;
    let extent = hi - lo;

    let mut scale = 1.0f64;
    for k in 0..3 {
        let room_space = room.dims[k] - 2.0 * margin;
        if extent[k] > room_space {
            scale = scale.min(room_space / extent[k]);
        }
    }
    Ok(SceneFit {
        scale,
        offset: room.center() - center * scale,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sabine_reference_room() {
        let room = RoomSpec::new(RoomCategory::Explicit, [5.0, 4.0, 3.0], 0.5).unwrap();
        let alpha: f64 = 0.161 * 60.0 / (94.0 * 0.5);
        assert!((alpha - 0.205_531_914_893_617).abs() < 1e-12);
        for b in room.beta {
            assert!((b - (1.0 - alpha).sqrt()).abs() < 1e-15);
            assert!((b - 0.891_329_4).abs() < 1e-6);
        }
    }

    #[test]
    fn absorption_clamp_and_strict_mode() {
        let tiny = RoomSpec::new(RoomCategory::Explicit, [0.5, 0.5, 0.5], 0.01).unwrap();
        assert!(tiny.beta.iter().all(|&b| b == (1.0f64 - 0.9999).sqrt()));
        assert!(matches!(
            tiny.with_t60(0.01, true),
            Err(AcousticsError::UnreachableT60 { .. })
        ));
    }

    #[test]
    fn sampling_is_deterministic() {
        let a = sample_room(RoomCategory::Small, 7).unwrap();
        let b = sample_room(RoomCategory::Small, 7).unwrap();
        assert_eq!(a, b);
        assert_ne!(a, sample_room(RoomCategory::Small, 8).unwrap());
        assert_eq!(sample_t60(3), sample_t60(3));
        assert!(sample_room(RoomCategory::Explicit, 0).is_err());
    }

    #[test]
    fn category_parse() {
        assert_eq!("Medium".parse::<RoomCategory>().unwrap(), RoomCategory::Medium);
        assert!("cave".parse::<RoomCategory>().is_err());
    }

    #[test]
    fn fit_point_scene() {
        let room = RoomSpec::new(RoomCategory::Explicit, [10.0, 10.0, 4.0], 0.4).unwrap();
        let t = Trajectory::from_frames(vec![Point3::zeros()]).unwrap();
        let fit = fit_scene(&t, &t, &room, 0.1).unwrap();
        assert_eq!(fit.scale, 1.0);
        assert_eq!(fit.offset, Point3::new(5.0, 5.0, 2.0));
        assert!(fit_scene(&t, &t, &room, 2.0).is_err());
        assert!(fit_scene(&t, &t, &room, -0.1).is_err());
    }

    #[test]
    fn fit_oversized_scene() {
        let room = RoomSpec::new(RoomCategory::Explicit, [10.0, 10.0, 4.0], 0.4).unwrap();
        let src = Trajectory::from_frames(vec![Point3::new(-10.0, 0.0, 0.0), Point3::new(10.0, 2.0, 1.0)]).unwrap();
        let rsv = Trajectory::from_frames(vec![Point3::new(0.0, -1.0, 5.0)]).unwrap();
        let fit = fit_scene(&src, &rsv, &room, 0.5).unwrap();
        let want = (9.0f64 / 20.0).min(9.0 / 3.0).min(3.0 / 5.0);
        assert_eq!(fit.scale, want);
        for p in src.points().iter().chain(rsv.points()) {
            let q = fit.apply(p);
            for k in 0..3 {
                assert!(q[k] >= 0.5 - 1e-9 && q[k] <= room.dims[k] - 0.5 + 1e-9);
            }
        }
    }
}
