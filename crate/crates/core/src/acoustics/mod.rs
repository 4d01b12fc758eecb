//! Room acoustics: shoebox rooms, scene fitting and image-source impulse responses.

mod ism;
mod room;

use thiserror::Error;

use crate::geometry::Point3;

pub use ism::{
    compute_rir, deposit_fractional_impulse, image_sources, image_sources_per_axis, polar_gain, ImageSource,
    ImpulseResponse, MicPattern, RirSettings, KERNEL_TAPS, MIN_SOURCE_DISTANCE,
};
pub use room::{
    beta_from_t60, fit_scene, sample_room, sample_t60, CategoryRanges, RoomCategory, RoomSpec, SceneFit, MAX_ALPHA,
    T60_RANGE,
};

/// Speed of sound in m/s.
pub const SPEED_OF_SOUND: f64 = 343.0;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum AcousticsError {
    #[error("source {0:?} is not strictly inside the room")]
    SourceOutsideRoom(Point3),
    #[error("microphone {0:?} is not strictly inside the room")]
    MicOutsideRoom(Point3),
    #[error("source and microphone coincide (distance {0:e} m)")]
    SourceAtMic(f64),
    #[error("degenerate room: {0}")]
    DegenerateRoom(String),
    #[error("t60 of {t60} s needs absorption {alpha:.4} > 1 in this room")]
    UnreachableT60 { alpha: f64, t60: f64 },
    #[error("invalid room: {0}")]
    InvalidRoom(String),
    #[error("room category '{0}' cannot be sampled")]
    InvalidCategory(String),
    #[error("{0}")]
    InvalidParameter(String),
}
