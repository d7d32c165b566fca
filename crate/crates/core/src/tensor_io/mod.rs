//! Readers and writers for every on-disk artifact the pipeline touches.
//!
//! All binary formats are little-endian and versioned:
//!
//! | file     | layout |
//! |----------|--------|
//! | `.igft`  | `"IGFT"`, u32 version = 1, u32 dtype (1 = f32), u32 ndim, ndim × u64 dims, row-major payload |
//! | `.igl`   | `"IGLB"`, u32 version = 1, u64 count, u32 ignore id, count × u32 labels |
//! | `.ppm`   | binary portable pixmap (`P6`, maxval 255) |
//! | `.poses` | text, one line per scan, 12 reals: row-major 3×4 `[R | t]` |

mod feature;
mod image;
mod labels;
mod pose;

pub use feature::{read_feature_matrix, write_feature_matrix, FeatureMatrix, IGFT_MAGIC, IGFT_VERSION};
pub use image::{read_image, write_image, RgbImage};
pub use labels::{read_labels, read_labels_checked, write_labels, LabelArray, IGL_MAGIC, IGL_VERSION};
pub use pose::{format_poses, parse_poses, read_poses, write_poses, PoseSE3, POSE_TOLERANCE};

use std::path::Path;

use crate::error::{Error, Result};

/// Decoding failures. Offsets are byte positions in the file being decoded.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum FormatError {
    #[error("bad magic {found:?} at offset 0, expected {expected:?}")]
    BadMagic { found: Vec<u8>, expected: &'static str },
    #[error("unsupported version {found} at offset {offset}")]
    UnsupportedVersion { offset: u64, found: u32 },
    #[error("unsupported dtype tag {found} at offset {offset}")]
    UnsupportedDtype { offset: u64, found: u32 },
    #[error("unsupported rank {found} at offset {offset}, expected 2")]
    UnsupportedRank { offset: u64, found: u32 },
    #[error("truncated header: needed {needed} bytes at offset {offset}, file has {len}")]
    Truncated { offset: u64, needed: u64, len: u64 },
    #[error("shape/payload mismatch: header declares {expected} payload bytes at offset {offset}, found {found}")]
    ShapeMismatch { offset: u64, expected: u64, found: u64 },
    #[error("non-finite value at row {row}, col {col} (offset {offset})")]
    NonFinite { offset: u64, row: usize, col: usize },
    #[error("label {label} at index {index} (offset {offset}) out of range for {num_classes} classes")]
    LabelOutOfRange { offset: u64, index: usize, label: u32, num_classes: usize },
    #[error("unsupported image: {0}")]
    UnsupportedImage(String),
    #[error("truncated pixel data: needed {needed} bytes at offset {offset}, found {found}")]
    TruncatedPixels { offset: u64, needed: u64, found: u64 },
    #[error("line {line}: {message}")]
    PoseSyntax { line: usize, message: String },
    #[error("line {line}: rotation is not proper orthonormal (deviation {deviation:e})")]
    PoseNotRigid { line: usize, deviation: f64 },
    #[error("invalid shape: {0}")]
    InvalidShape(String),
}

pub(crate) fn read_file(path: &Path) -> Result<Vec<u8>> {
    std::fs::read(path).map_err(|e| Error::io(path, e))
}

pub(crate) fn write_file(path: &Path, bytes: &[u8]) -> Result<()> {
    std::fs::write(path, bytes).map_err(|e| Error::io(path, e))
}

/// Little-endian cursor over a byte slice that reports offsets on failure.
pub(crate) struct Reader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    pub(crate) fn new(bytes: &'a [u8]) -> Self {
        Reader { bytes, pos: 0 }
    }

    pub(crate) fn offset(&self) -> u64 {
        self.pos as u64
    }

    pub(crate) fn remaining(&self) -> &'a [u8] {
        &self.bytes[self.pos..]
    }

    pub(crate) fn take(&mut self, n: usize) -> Result<&'a [u8], FormatError> {
        if self.bytes.len() - self.pos < n {
            return Err(FormatError::Truncated {
                offset: self.pos as u64,
                needed: n as u64,
                len: self.bytes.len() as u64,
            });
        }
        let out = &self.bytes[self.pos..self.pos + n];
        self.pos += n;
        Ok(out)
    }

    pub(crate) fn u32(&mut self) -> Result<u32, FormatError> {
        let b = self.take(4)?;
        Ok(u32::from_le_bytes([b[0], b[1], b[2], b[3]]))
    }

    pub(crate) fn u64(&mut self) -> Result<u64, FormatError> {
        let b = self.take(8)?;
        let mut buf = [0u8; 8];
        buf.copy_from_slice(b);
        Ok(u64::from_le_bytes(buf))
    }

    pub(crate) fn magic(&mut self, expected: &'static str) -> Result<(), FormatError> {
        let found = self.take(4).map_err(|_| FormatError::BadMagic {
            found: self.bytes.to_vec(),
            expected,
        })?;
        if found != expected.as_bytes() {
            return Err(FormatError::BadMagic {
                found: found.to_vec(),
                expected,
            });
        }
        Ok(())
    }
}
