//! Image source method for shoebox rooms.

use std::f64::consts::PI;

use super::{AcousticsError, RoomSpec};
use crate::geometry::Point3;

/// Fractional-delay kernel length in taps.
pub const KERNEL_TAPS: i64 = 16;
const KERNEL_HALF: i64 = KERNEL_TAPS / 2;

/// Closest the source may get to a microphone, in meters.
pub const MIN_SOURCE_DISTANCE: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum MicPattern {
    #[default]
    Omni,
    Cardioid,
}

impl std::str::FromStr for MicPattern {
    type Err = AcousticsError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "omni" => Ok(Self::Omni),
            "cardioid" | "card" => Ok(Self::Cardioid),
            other => Err(AcousticsError::InvalidParameter(format!("unknown polar pattern '{other}'"))),
        }
    }
}

/// Directional gain of a microphone facing `facing` for sound arriving from
/// `direction` (unit vector from the microphone toward the image).
pub fn polar_gain(pattern: MicPattern, facing: &Point3, direction: &Point3) -> f64 {
    match pattern {
        MicPattern::Omni => 1.0,
        MicPattern::Cardioid => ((1.0 + facing.dot(direction)) / 2.0).clamp(0.0, 1.0),
    }
}

/// One virtual source. `index` is the signed reflection index per axis; its
/// absolute value is the number of wall bounces along that axis.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ImageSource {
    pub position: Point3,
    pub coefficient: f64,
    pub index: [i32; 3],
}

/// Coordinate (relative to the room origin) and reflection gain of image `i`
/// along one axis of length `len`, for a source at local coordinate `s`.
#[inline]
fn axis_image(i: i32, s: f64, len: f64, beta_low: f64, beta_high: f64) -> (f64, f64) {
    let x = if i % 2 == 0 {
        f64::from(i) * len + s
    } else {
        f64::from(i + 1) * len - s
    };
    let n = i.unsigned_abs();
    let (low, high) = if i >= 0 { (n / 2, n - n / 2) } else { (n - n / 2, n / 2) };
    (x, pow(beta_low, low) * pow(beta_high, high))
}

#[inline]
fn pow(b: f64, n: u32) -> f64 {
    (0..n).fold(1.0, |acc, _| acc * b)
}

struct AxisImages {
    coords: Vec<f64>,
    gains: Vec<f64>,
    indices: Vec<i32>,
}

fn axis_images(s: f64, len: f64, beta_low: f64, beta_high: f64, order: i32) -> AxisImages {
    let mut out = AxisImages {
        coords: Vec::with_capacity((2 * order + 1) as usize),
        gains: Vec::with_capacity((2 * order + 1) as usize),
        indices: Vec::with_capacity((2 * order + 1) as usize),
    };
    for i in -order..=order {
        let (x, g) = axis_image(i, s, len, beta_low, beta_high);
        out.coords.push(x);
        out.gains.push(g);
        out.indices.push(i);
    }
    out
}

fn check_inside(room: &RoomSpec, p: &Point3, what: &'static str) -> Result<(), AcousticsError> {
    if room.contains(p) {
        Ok(())
    } else if what == "source" {
        Err(AcousticsError::SourceOutsideRoom(*p))
    } else {
        Err(AcousticsError::MicOutsideRoom(*p))
    }
}

/// All images with at most `max_order` bounces along each axis:
/// `(2·max_order + 1)³` of them, ordered by `(ix, iy, iz)`.
pub fn image_sources(src: &Point3, room: &RoomSpec, max_order: usize) -> Result<Vec<ImageSource>, AcousticsError> {
    image_sources_per_axis(src, room, [max_order; 3])
}

/// [`image_sources`] with an independent order bound per axis.
pub fn image_sources_per_axis(
    src: &Point3,
    room: &RoomSpec,
    max_order: [usize; 3],
) -> Result<Vec<ImageSource>, AcousticsError> {
    room.validate()?;
    check_inside(room, src, "source")?;
    let local = src - room.origin;
    let axes: Vec<AxisImages> = (0..3)
        .map(|k| {
            axis_images(
                local[k],
                room.dims[k],
                room.beta[2 * k],
                room.beta[2 * k + 1],
                max_order[k] as i32,
            )
        })
        .collect();
    let mut out = Vec::with_capacity(axes.iter().map(|a| a.coords.len()).product());
    for a in 0..axes[0].coords.len() {
        for b in 0..axes[1].coords.len() {
            for c in 0..axes[2].coords.len() {
                out.push(ImageSource {
                    position: room.origin + Point3::new(axes[0].coords[a], axes[1].coords[b], axes[2].coords[c]),
                    coefficient: axes[0].gains[a] * axes[1].gains[b] * axes[2].gains[c],
                    index: [axes[0].indices[a], axes[1].indices[b], axes[2].indices[c]],
                });
            }
        }
    }
    Ok(out)
}

/// Sampled room impulse response.
#[derive(Debug, Clone, PartialEq)]
pub struct ImpulseResponse {
    pub samples: Vec<f64>,
    pub sample_rate: u32,
}

impl ImpulseResponse {
    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn energy(&self) -> f64 {
        self.samples.iter().map(|x| x * x).sum()
    }
}

/// Sampling and propagation parameters for [`compute_rir`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RirSettings {
    pub sample_rate: u32,
    pub speed_of_sound: f64,
    /// Upper bound on the per-axis reflection order.
    pub max_order_cap: Option<usize>,
}

impl RirSettings {
    pub fn new(sample_rate: u32) -> Self {
        Self {
            sample_rate,
            speed_of_sound: super::SPEED_OF_SOUND,
            max_order_cap: None,
        }
    }

    /// Number of output samples for a room: `⌈t60 · fs⌉`.
    pub fn rir_len(&self, room: &RoomSpec) -> usize {
        (room.t60 * f64::from(self.sample_rate)).ceil() as usize
    }

    /// Per-axis reflection order covering every image that can arrive
    /// within `t60`: `⌈c·t60 / L⌉ + 1`, optionally capped.
    pub fn reflection_orders(&self, room: &RoomSpec) -> [usize; 3] {
        let reach = self.speed_of_sound * room.t60;
        room.dims.map(|len| {
            let n = (reach / len).ceil() as usize + 1;
            self.max_order_cap.map_or(n, |cap| n.min(cap))
        })
    }
}

/// Adds a band-limited impulse of amplitude `amp` at fractional sample
/// position `delay`, using a Hann-windowed sinc. Taps outside the buffer are
/// dropped.
#[inline]
pub fn deposit_fractional_impulse(buf: &mut [f64], delay: f64, amp: f64) {
    let i0 = delay.floor() as i64;
    let nearest = delay.round();
    // sin(π(n − delay)) = −(−1)^(n − nearest) · sin(π·r) with small |r|
    let r = delay - nearest;
    let s = (PI * r).sin();
    let nearest = nearest as i64;
    let len = buf.len() as i64;
    for n in (i0 + 1 - KERNEL_HALF)..=(i0 + KERNEL_HALF) {
        if n < 0 || n >= len {
            continue;
        }
        let x = n as f64 - delay;
        let weight = if n == nearest && r == 0.0 {
            1.0
        } else {
            if x.abs() >= KERNEL_HALF as f64 {
                continue;
            }
            let sign = if (n - nearest) % 2 == 0 { -1.0 } else { 1.0 };
            let sinc = sign * s / (PI * x);
            let window = 0.5 * (1.0 + (PI * x / KERNEL_HALF as f64).cos());
            sinc * window
        };
        buf[n as usize] += amp * weight;
    }
}

/// Impulse response from `src` to a microphone at `mic`.
///
/// Each image contributes `coefficient · gain / d` at delay `d / c`; the
/// amplitude is 1 at 1 m. Arrivals at or beyond `⌈t60 · fs⌉` samples are
/// dropped.
pub fn compute_rir(
    src: &Point3,
    mic: &Point3,
    facing: &Point3,
    pattern: MicPattern,
    room: &RoomSpec,
    settings: &RirSettings,
) -> Result<ImpulseResponse, AcousticsError> {
    room.validate()?;
    if settings.sample_rate == 0 || !(settings.speed_of_sound > 0.0) {
        return Err(AcousticsError::InvalidParameter(format!(
            "sample rate {} / speed of sound {} must be positive",
            settings.sample_rate, settings.speed_of_sound
        )));
    }
    check_inside(room, src, "source")?;
    check_inside(room, mic, "mic")?;
    let direct = (src - mic).norm();
    if direct < MIN_SOURCE_DISTANCE {
        return Err(AcousticsError::SourceAtMic(direct));
    }

    let n = settings.rir_len(room);
    let mut samples = vec![0.0; n];
    let fs = f64::from(settings.sample_rate);
    let c = settings.speed_of_sound;
    let samples_per_meter = fs / c;
    let max_dist = n as f64 / samples_per_meter;

    let src_local = src - room.origin;
    let mic_local = mic - room.origin;
    let orders = settings.reflection_orders(room);
    let axes: Vec<AxisImages> = (0..3)
        .map(|k| {
            let mut a = axis_images(
                src_local[k],
                room.dims[k],
                room.beta[2 * k],
                room.beta[2 * k + 1],
                orders[k] as i32,
            );
            // store offsets from the microphone
            a.coords.iter_mut().for_each(|x| *x -= mic_local[k]);
            a
        })
        .collect();

    for a in 0..axes[0].coords.len() {
        let (dx, gx) = (axes[0].coords[a], axes[0].gains[a]);
        if gx == 0.0 || dx.abs() >= max_dist {
            continue;
        }
        for b in 0..axes[1].coords.len() {
            let (dy, gy) = (axes[1].coords[b], axes[1].gains[b]);
            let gxy = gx * gy;
            if gxy == 0.0 || dx * dx + dy * dy >= max_dist * max_dist {
                continue;
            }
            for cc in 0..axes[2].coords.len() {
                let (dz, gz) = (axes[2].coords[cc], axes[2].gains[cc]);
                let coef = gxy * gz;
                if coef == 0.0 {
                    continue;
                }
                let d = (dx * dx + dy * dy + dz * dz).sqrt();
                let delay = d * samples_per_meter;
                if delay >= n as f64 {
                    continue;
                }
                let gain = match pattern {
                    MicPattern::Omni => 1.0,
                    MicPattern::Cardioid => polar_gain(pattern, facing, &(Point3::new(dx, dy, dz) / d)),
                };
                deposit_fractional_impulse(&mut samples, delay, coef * gain / d);
            }
        }
    }

    Ok(ImpulseResponse {
        samples,
        sample_rate: settings.sample_rate,
    })
}
