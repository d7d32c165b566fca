//! Prototype construction: from generated images (or their patch-feature
//! grids) to a bank of unit-norm prototype vectors tagged with subclass and
//! class.

mod bank;
mod crop;
mod manifest;

pub use bank::{build_bank, build_bank_from_grids, merge_banks, PrototypeBank, UNIT_NORM_TOLERANCE};
pub use crop::{tight_crop, DEFAULT_WHITE_THRESHOLD};
pub use manifest::{ClassRef, PromptManifest, PromptTemplate, SubclassEntry, SubclassKind};

use crate::tensor_io::FeatureMatrix;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum BankError {
    #[error("no patch selected")]
    EmptySelection,
    #[error("mask has {found} entries for {expected} patches")]
    MaskLength { expected: usize, found: usize },
    #[error("patch row {row} has zero norm")]
    ZeroNormPatch { row: usize },
    #[error("normalized patch features cancel out (average norm {norm:e})")]
    ZeroNormAverage { norm: f64 },
    #[error("subclass {subclass:?}, image {image}: {source}")]
    Prototype {
        subclass: String,
        image: usize,
        #[source]
        source: Box<BankError>,
    },
    #[error("subclass {subclass:?} has no patch-feature files")]
    MissingFeatures { subclass: String },
    #[error("dimension mismatch in {context}: expected {expected}, found {found}")]
    DimensionMismatch { context: String, expected: usize, found: usize },
    #[error("banks disagree on the subclass/class map")]
    ClassMapMismatch,
    #[error("prototype row {row} has norm {norm}, expected 1")]
    NotUnitNorm { row: usize, norm: f64 },
    #[error("invalid manifest: {0}")]
    Manifest(String),
    #[error("invalid bank: {0}")]
    Invalid(String),
}

impl BankError {
    /// True for failures caused by degenerate feature values rather than malformed input.
    pub fn is_numeric(&self) -> bool {
        match self {
            BankError::ZeroNormPatch { .. } | BankError::ZeroNormAverage { .. } => true,
            BankError::Prototype { source, .. } => source.is_numeric(),
            _ => false,
        }
    }
}

/// Below this norm an averaged direction is considered cancelled out.
const MIN_AVERAGE_NORM: f64 = 1e-9;

/// Normalizes each selected patch row, averages them and normalizes the mean.
///
/// `mask` selects patches (e.g. a foreground mask); `None` uses every row.
/// Arithmetic is carried out in `f64`.
pub fn prototype_from_patches(patch_grid: &FeatureMatrix, mask: Option<&[bool]>) -> Result<Vec<f32>, BankError> {
    if let Some(m) = mask {
        if m.len() != patch_grid.rows() {
            return Err(BankError::MaskLength {
                expected: patch_grid.rows(),
                found: m.len(),
            });
        }
    }
    let mut sum = vec![0.0f64; patch_grid.dims()];
    let mut count = 0usize;
    for (row, patch) in patch_grid.iter_rows().enumerate() {
        if mask.is_some_and(|m| !m[row]) {
            continue;
        }
        let norm = patch.iter().map(|&v| (v as f64) * (v as f64)).sum::<f64>().sqrt();
        if norm <= 0.0 {
            return Err(BankError::ZeroNormPatch { row });
        }
        for (s, &v) in sum.iter_mut().zip(patch) {
            *s += v as f64 / norm;
        }
        count += 1;
    }
    if count == 0 {
        return Err(BankError::EmptySelection);
    }
    for s in &mut sum {
        *s /= count as f64;
    }
    let norm = sum.iter().map(|v| v * v).sum::<f64>().sqrt();
    if norm < MIN_AVERAGE_NORM {
        return Err(BankError::ZeroNormAverage { norm });
    }
    Ok(sum.iter().map(|v| (v / norm) as f32).collect())
}
