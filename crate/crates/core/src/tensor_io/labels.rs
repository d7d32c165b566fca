use std::path::Path;

use super::{read_file, write_file, FormatError, Reader};
use crate::error::{Error, Result};

pub const IGL_MAGIC: &str = "IGLB";
pub const IGL_VERSION: u32 = 1;
const HEADER_LEN: u64 = 4 + 4 + 8 + 4;

/// Per-point class ids plus the id that marks unlabeled points.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LabelArray {
    pub labels: Vec<u32>,
    pub ignore_id: u32,
}

impl LabelArray {
    pub fn new(labels: Vec<u32>, ignore_id: u32) -> Self {
        LabelArray { labels, ignore_id }
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn is_ignored(&self, i: usize) -> bool {
        self.labels[i] == self.ignore_id
    }

    /// Checks every non-ignore label against the declared class count.
    pub fn validate(&self, num_classes: usize) -> Result<(), FormatError> {
        for (index, &label) in self.labels.iter().enumerate() {
            if label != self.ignore_id && label as usize >= num_classes {
                return Err(FormatError::LabelOutOfRange {
                    offset: HEADER_LEN + 4 * index as u64,
                    index,
                    label,
                    num_classes,
                });
            }
        }
        Ok(())
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(HEADER_LEN as usize + 4 * self.labels.len());
        out.extend_from_slice(IGL_MAGIC.as_bytes());
        out.extend_from_slice(&IGL_VERSION.to_le_bytes());
        out.extend_from_slice(&(self.labels.len() as u64).to_le_bytes());
        out.extend_from_slice(&self.ignore_id.to_le_bytes());
        for l in &self.labels {
            out.extend_from_slice(&l.to_le_bytes());
        }
        out
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self, FormatError> {
        let mut r = Reader::new(bytes);
        r.magic(IGL_MAGIC)?;
        let off = r.offset();
        let version = r.u32()?;
        if version != IGL_VERSION {
            return Err(FormatError::UnsupportedVersion { offset: off, found: version });
        }
        let count = r.u64()?;
        let ignore_id = r.u32()?;
        let payload_offset = r.offset();
        let payload = r.remaining();
        let found = payload.len() as u64;
        match count.checked_mul(4) {
            Some(expected) if expected == found => {}
            expected => {
                return Err(FormatError::ShapeMismatch {
                    offset: payload_offset,
                    expected: expected.unwrap_or(u64::MAX),
                    found,
                })
            }
        }
        let labels = payload
            .chunks_exact(4)
            .map(|c| u32::from_le_bytes([c[0], c[1], c[2], c[3]]))
            .collect();
        Ok(LabelArray { labels, ignore_id })
    }
}

/// Reads an `.igl` file; the ignore id comes from the file header.
pub fn read_labels(path: impl AsRef<Path>) -> Result<LabelArray> {
    let path = path.as_ref();
    let bytes = read_file(path)?;
    LabelArray::from_bytes(&bytes).map_err(|e| Error::format(path, e))
}

/// Reads an `.igl` file and validates labels against `num_classes`.
pub fn read_labels_checked(path: impl AsRef<Path>, num_classes: usize) -> Result<LabelArray> {
    let path = path.as_ref();
    let labels = read_labels(path)?;
    labels.validate(num_classes).map_err(|e| Error::format(path, e))?;
    Ok(labels)
}

pub fn write_labels(labels: &LabelArray, path: impl AsRef<Path>) -> Result<()> {
    write_file(path.as_ref(), &labels.to_bytes())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip_with_ignore() {
        let l = LabelArray::new(vec![0, 1, 2, u32::MAX], u32::MAX);
        let b = l.to_bytes();
        assert_eq!(b.len(), 20 + 16);
        assert_eq!(LabelArray::from_bytes(&b).unwrap(), l);
        assert!(l.validate(3).is_ok());
    }

    #[test]
    fn out_of_range() {
        let l = LabelArray::new(vec![3, 99], 255);
        assert_eq!(
            l.validate(16),
            Err(FormatError::LabelOutOfRange { offset: 24, index: 1, label: 99, num_classes: 16 })
        );
    }

    #[test]
    fn empty() {
        let l = LabelArray::new(vec![], 7);
        let b = l.to_bytes();
        assert_eq!(b.len(), 20);
        assert_eq!(LabelArray::from_bytes(&b).unwrap(), l);
    }

    #[test]
    fn truncated_payload() {
        let mut b = LabelArray::new(vec![1, 2], 9).to_bytes();
        b.pop();
        assert!(matches!(LabelArray::from_bytes(&b), Err(FormatError::ShapeMismatch { offset: 20, .. })));
        assert!(matches!(LabelArray::from_bytes(&b[..10]), Err(FormatError::Truncated { .. })));
    }
}
