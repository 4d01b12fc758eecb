//! Depth rasters: `DEPTH <width> <height>\n` followed by row-major
//! little-endian `f32` values, top-left origin.

use std::collections::BTreeMap;
use std::path::Path;

use super::{read_file, write_file, IoError};

/// Metric depth per pixel, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct DepthMap {
    pub width: usize,
    pub height: usize,
    pub values: Vec<f32>,
}

impl DepthMap {
    pub fn new(width: usize, height: usize, values: Vec<f32>) -> Result<Self, IoError> {
        if values.len() != width * height {
            return Err(IoError::HeaderMismatch(format!(
                "{width}x{height} raster needs {} values, got {}",
                width * height,
                values.len()
            )));
        }
        Ok(Self { width, height, values })
    }

    pub fn filled(width: usize, height: usize, depth: f32) -> Self {
        Self {
            width,
            height,
            values: vec![depth; width * height],
        }
    }

    /// Builds a raster from `f(u, v)`.
    pub fn from_fn(width: usize, height: usize, f: impl Fn(usize, usize) -> f32) -> Self {
        let values = (0..height).flat_map(|v| (0..width).map(move |u| (u, v))).map(|(u, v)| f(u, v)).collect();
        Self { width, height, values }
    }

    #[inline]
    pub fn get(&self, u: usize, v: usize) -> f32 {
        self.values[v * self.width + u]
    }

    pub fn set(&mut self, u: usize, v: usize, depth: f32) {
        self.values[v * self.width + u] = depth;
    }

    pub fn scaled(&self, factor: f32) -> Self {
        Self {
            values: self.values.iter().map(|d| d * factor).collect(),
            ..self.clone()
        }
    }
}

pub fn encode_depth(map: &DepthMap) -> Vec<u8> {
    let mut out = format!("DEPTH {} {}\n", map.width, map.height).into_bytes();
    out.reserve(map.values.len() * 4);
    for v in &map.values {
        out.extend_from_slice(&v.to_le_bytes());
    }
    out
}

pub fn decode_depth(bytes: &[u8]) -> Result<DepthMap, IoError> {
    let nl = bytes
        .iter()
        .take(64)
        .position(|&b| b == b'\n')
        .ok_or_else(|| IoError::HeaderMismatch("no header line".into()))?;
    let header = std::str::from_utf8(&bytes[..nl]).map_err(|_| IoError::HeaderMismatch("header is not ASCII".into()))?;
    let fields: Vec<&str> = header.split(' ').collect();
    let (width, height) = match fields.as_slice() {
        ["DEPTH", w, h] => (
            w.parse::<usize>()
                .map_err(|_| IoError::HeaderMismatch(format!("bad width '{w}'")))?,
            h.parse::<usize>()
                .map_err(|_| IoError::HeaderMismatch(format!("bad height '{h}'")))?,
        ),
        _ => return Err(IoError::HeaderMismatch(format!("expected 'DEPTH <width> <height>', got '{header}'"))),
    };
    let payload = &bytes[nl + 1..];
    let expected = width
        .checked_mul(height)
        .and_then(|n| n.checked_mul(4))
        .ok_or_else(|| IoError::HeaderMismatch("raster size overflows".into()))?;
    if payload.len() < expected {
        return Err(IoError::TruncatedPayload {
            expected,
            found: payload.len(),
        });
    }
    if payload.len() > expected {
        return Err(IoError::HeaderMismatch(format!(
            "{} trailing bytes after a {width}x{height} payload",
            payload.len() - expected
        )));
    }
    let values = payload
        .chunks_exact(4)
        .map(|c| f32::from_le_bytes([c[0], c[1], c[2], c[3]]))
        .collect();
    Ok(DepthMap { width, height, values })
}

pub fn read_depth(path: &Path) -> Result<DepthMap, IoError> {
    decode_depth(&read_file(path)?)
}

pub fn write_depth(path: &Path, map: &DepthMap) -> Result<(), IoError> {
    write_file(path, &encode_depth(map))
}

/// Loads every `<frame>.depth` file in `dir`, keyed by the numeric file stem.
pub fn read_depth_dir(dir: &Path) -> Result<BTreeMap<usize, DepthMap>, IoError> {
    let entries = std::fs::read_dir(dir).map_err(|e| IoError::io(dir, e))?;
    let mut out = BTreeMap::new();
    for entry in entries {
        let path = entry.map_err(|e| IoError::io(dir, e))?.path();
        if path.extension().and_then(|e| e.to_str()) != Some("depth") {
            continue;
        }
        let Some(frame) = path.file_stem().and_then(|s| s.to_str()).and_then(|s| s.parse::<usize>().ok()) else {
            continue;
        };
        if out.insert(frame, read_depth(&path)?).is_some() {
            return Err(IoError::HeaderMismatch(format!("duplicate depth file for frame {frame} in {}", dir.display())));
        }
    }
    Ok(out)
}

/// Grayscale PFM (`Pf`) to a depth raster. PFM stores rows bottom-up.
pub fn decode_pfm(bytes: &[u8]) -> Result<DepthMap, IoError> {
    let mut pos = 0;
    let mut token = || -> Result<String, IoError> {
        while pos < bytes.len() && bytes[pos].is_ascii_whitespace() {
            pos += 1;
        }
        let start = pos;
        while pos < bytes.len() && !bytes[pos].is_ascii_whitespace() {
            pos += 1;
        }
        if start == pos {
            return Err(IoError::HeaderMismatch("truncated PFM header".into()));
        }
        Ok(String::from_utf8_lossy(&bytes[start..pos]).into_owned())
    };
    let magic = token()?;
    if magic != "Pf" {
        return Err(IoError::HeaderMismatch(format!("expected grayscale PFM 'Pf', got '{magic}'")));
    }
    let parse = |s: String| s.parse::<usize>().map_err(|_| IoError::HeaderMismatch(format!("bad PFM size '{s}'")));
    let width = parse(token()?)?;
    let height = parse(token()?)?;
    let scale_tok = token()?;
    let scale: f64 = scale_tok
        .parse()
        .map_err(|_| IoError::HeaderMismatch(format!("bad PFM scale '{scale_tok}'")))?;
    // exactly one whitespace byte separates the header from the payload
    let payload = &bytes[(pos + 1).min(bytes.len())..];
    let expected = width * height * 4;
    if payload.len() < expected {
        return Err(IoError::TruncatedPayload {
            expected,
            found: payload.len(),
        });
    }
    let little = scale < 0.0;
    let mut values = vec![0.0f32; width * height];
    for (i, c) in payload[..expected].chunks_exact(4).enumerate() {
        let raw = [c[0], c[1], c[2], c[3]];
        let v = if little { f32::from_le_bytes(raw) } else { f32::from_be_bytes(raw) };
        let (row, col) = (i / width, i % width);
        values[(height - 1 - row) * width + col] = v;
    }
    Ok(DepthMap { width, height, values })
}

pub fn read_pfm(path: &Path) -> Result<DepthMap, IoError> {
    decode_pfm(&read_file(path)?)
}
