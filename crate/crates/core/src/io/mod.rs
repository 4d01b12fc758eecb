//! Readers and writers for every on-disk artifact.

mod config;
mod depth;
mod text;
mod wav;

use std::path::{Path, PathBuf};

use thiserror::Error;

pub use config::{load_config, InputPaths, LocalizationConfig, RoomConfig, SceneConfig};
pub use depth::{decode_depth, decode_pfm, encode_depth, read_depth, read_depth_dir, read_pfm, write_depth, DepthMap};
pub use text::{
    parse_boxes, parse_intrinsics, parse_poses, parse_trajectory, read_boxes, read_intrinsics, read_poses,
    read_trajectory, write_boxes, write_poses, write_trajectory, PoseFile,
};
pub use wav::{read_wav, write_wav, WavEncoding};

#[derive(Debug, Error)]
pub enum IoError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{0}: unsupported encoding: {1}")]
    UnsupportedEncoding(PathBuf, String),
    #[error("{0}: corrupt header: {1}")]
    CorruptHeader(PathBuf, String),
    #[error("depth header mismatch: {0}")]
    HeaderMismatch(String),
    #[error("depth payload truncated: expected {expected} bytes, found {found}")]
    TruncatedPayload { expected: usize, found: usize },
    #[error("line {line}: {message}")]
    MalformedLine { line: usize, message: String },
    #[error("line {line}: invalid rotation: {message}")]
    InvalidRotation { line: usize, message: String },
    #[error("line {line}: bottom row must be [0, 0, 0, 1]")]
    BadBottomRow { line: usize },
    #[error("line {line}: frame index does not increase")]
    NonMonotoneIndex { line: usize },
    #[error("unknown config key '{0}'")]
    UnknownKey(String),
    #[error("config value out of range: {0}")]
    RangeViolation(String),
    #[error("missing input: {0}")]
    MissingInput(String),
    #[error("config parse error: {0}")]
    Config(String),
}

impl IoError {
    pub(crate) fn io(path: &Path, source: std::io::Error) -> Self {
        Self::Io {
            path: path.to_path_buf(),
            source,
        }
    }
}

pub(crate) fn read_file(path: &Path) -> Result<Vec<u8>, IoError> {
    std::fs::read(path).map_err(|e| IoError::io(path, e))
}

pub(crate) fn read_text(path: &Path) -> Result<String, IoError> {
    std::fs::read_to_string(path).map_err(|e| IoError::io(path, e))
}

pub(crate) fn write_file(path: &Path, bytes: &[u8]) -> Result<(), IoError> {
    std::fs::write(path, bytes).map_err(|e| IoError::io(path, e))
}
