use std::path::Path;

use super::{read_file, write_file, FormatError, Reader};
use crate::error::{Error, Result};

pub const IGFT_MAGIC: &str = "IGFT";
pub const IGFT_VERSION: u32 = 1;
const DTYPE_F32: u32 = 1;
const HEADER_LEN: usize = 16 + 2 * 8;

/// Dense row-major `rows × dims` matrix of finite `f32` values.
///
/// Carries point features, patch grids and prototype stacks alike.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureMatrix {
    rows: usize,
    dims: usize,
    data: Vec<f32>,
}

impl FeatureMatrix {
    pub fn new(rows: usize, dims: usize, data: Vec<f32>) -> Result<Self, FormatError> {
        let expected = rows.checked_mul(dims).ok_or_else(|| {
            FormatError::InvalidShape(format!("{rows} x {dims} overflows"))
        })?;
        if data.len() != expected {
            return Err(FormatError::InvalidShape(format!(
                "{rows} x {dims} matrix needs {expected} values, got {}",
                data.len()
            )));
        }
        if let Some(i) = data.iter().position(|v| !v.is_finite()) {
            return Err(FormatError::NonFinite {
                offset: (HEADER_LEN + 4 * i) as u64,
                row: i / dims.max(1),
                col: i % dims.max(1),
            });
        }
        Ok(FeatureMatrix { rows, dims, data })
    }

    pub fn zeros(rows: usize, dims: usize) -> Self {
        FeatureMatrix {
            rows,
            dims,
            data: vec![0.0; rows * dims],
        }
    }

    /// Stacks equally sized rows. An empty iterator gives a `0 × dims` matrix.
    pub fn from_rows<R: AsRef<[f32]>>(dims: usize, rows: impl IntoIterator<Item = R>) -> Result<Self, FormatError> {
        let mut data = Vec::new();
        let mut n = 0;
        for row in rows {
            let row = row.as_ref();
            if row.len() != dims {
                return Err(FormatError::InvalidShape(format!(
                    "row {n} has {} values, expected {dims}",
                    row.len()
                )));
            }
            data.extend_from_slice(row);
            n += 1;
        }
        FeatureMatrix::new(n, dims, data)
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn dims(&self) -> usize {
        self.dims
    }

    pub fn as_slice(&self) -> &[f32] {
        &self.data
    }

    pub fn into_vec(self) -> Vec<f32> {
        self.data
    }

    pub fn row(&self, i: usize) -> &[f32] {
        &self.data[i * self.dims..(i + 1) * self.dims]
    }

    pub fn iter_rows(&self) -> impl ExactSizeIterator<Item = &[f32]> + '_ {
        // chunks_exact panics on zero width
        (0..self.rows).map(move |i| self.row(i))
    }

    /// Selects rows by index, in the given order.
    pub fn select_rows(&self, indices: &[usize]) -> FeatureMatrix {
        let mut data = Vec::with_capacity(indices.len() * self.dims);
        for &i in indices {
            data.extend_from_slice(self.row(i));
        }
        FeatureMatrix {
            rows: indices.len(),
            dims: self.dims,
            data,
        }
    }

    /// Encodes the canonical `.igft` byte layout.
    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(HEADER_LEN + 4 * self.data.len());
        out.extend_from_slice(IGFT_MAGIC.as_bytes());
        out.extend_from_slice(&IGFT_VERSION.to_le_bytes());
        out.extend_from_slice(&DTYPE_F32.to_le_bytes());
        out.extend_from_slice(&2u32.to_le_bytes());
        out.extend_from_slice(&(self.rows as u64).to_le_bytes());
        out.extend_from_slice(&(self.dims as u64).to_le_bytes());
        for v in &self.data {
            out.extend_from_slice(&v.to_le_bytes());
        }
        out
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self, FormatError> {
        let mut r = Reader::new(bytes);
        r.magic(IGFT_MAGIC)?;
        let off = r.offset();
        let version = r.u32()?;
        if version != IGFT_VERSION {
            return Err(FormatError::UnsupportedVersion { offset: off, found: version });
        }
        let off = r.offset();
        let dtype = r.u32()?;
        if dtype != DTYPE_F32 {
            return Err(FormatError::UnsupportedDtype { offset: off, found: dtype });
        }
        let off = r.offset();
        let ndim = r.u32()?;
        if ndim != 2 {
            return Err(FormatError::UnsupportedRank { offset: off, found: ndim });
        }
        let rows = r.u64()?;
        let dims = r.u64()?;
        let payload_offset = r.offset();
        let payload = r.remaining();
        let expected = rows
            .checked_mul(dims)
            .and_then(|n| n.checked_mul(4))
            .filter(|&n| usize::try_from(n).is_ok());
        let found = payload.len() as u64;
        let Some(expected) = expected else {
            return Err(FormatError::ShapeMismatch { offset: payload_offset, expected: u64::MAX, found });
        };
        if expected != found {
            return Err(FormatError::ShapeMismatch { offset: payload_offset, expected, found });
        }
        let (rows, dims) = (rows as usize, dims as usize);
        let mut data = Vec::with_capacity(rows * dims);
        for (i, c) in payload.chunks_exact(4).enumerate() {
            let v = f32::from_le_bytes([c[0], c[1], c[2], c[3]]);
            if !v.is_finite() {
                return Err(FormatError::NonFinite {
                    offset: payload_offset + 4 * i as u64,
                    row: i / dims,
                    col: i % dims,
                });
            }
            data.push(v);
        }
        Ok(FeatureMatrix { rows, dims, data })
    }
}

pub fn read_feature_matrix(path: impl AsRef<Path>) -> Result<FeatureMatrix> {
    let path = path.as_ref();
    let bytes = read_file(path)?;
    FeatureMatrix::from_bytes(&bytes).map_err(|e| Error::format(path, e))
}

pub fn write_feature_matrix(matrix: &FeatureMatrix, path: impl AsRef<Path>) -> Result<()> {
    write_file(path.as_ref(), &matrix.to_bytes())
}
