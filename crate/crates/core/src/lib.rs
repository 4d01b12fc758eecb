//! Binaural rendering of a mono track for a moving sound source and a
//! moving listener.
//!
//! The pipeline has two halves:
//!
//! * [`localization`] lifts per-frame grounding boxes through depth maps
//!   into a filtered 3D source trajectory, and turns camera poses into a
//!   receiver trajectory with two ear microphones.
//! * [`acoustics`] and [`renderer`] simulate a shoebox room with the image
//!   source method and convolve the audio segment by segment with the left
//!   and right impulse responses.
//!
//! [`io`] holds every file format and [`pipeline`] ties the stages together.

pub mod acoustics;
pub mod geometry;
pub mod io;
pub mod localization;
pub mod pipeline;
pub mod renderer;
pub mod seed;
pub mod toy;

pub use acoustics::{MicPattern, RoomCategory, RoomSpec, SceneFit};
pub use geometry::{CameraIntrinsics, CameraPose, PixelPoint, Point3, PoseConvention};
pub use io::{DepthMap, SceneConfig};
pub use localization::Trajectory;
pub use renderer::{AudioBuffer, RenderConfig};
