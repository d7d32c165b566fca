//! Zero-shot open-vocabulary labeling of lidar point clouds from precomputed
//! foundation-model features.
//!
//! The pipeline consumes two aligned feature spaces produced elsewhere:
//! patch features of generated prototype images (2D) and per-point features
//! of a distilled 3D backbone. From these it builds a bank of unit-norm
//! prototypes, assigns labels by threshold retrieval, nearest prototype or a
//! logistic-regression probe fitted at query time, enforces voxel-level label
//! consistency across a posed scan sequence, and scores predictions with
//! per-class IoU.
//!
//! Modules:
//! - [`tensor_io`]: binary feature tensors (`.igft`), labels (`.igl`), PPM images, pose files.
//! - [`prototype_bank`]: prompt manifests, cropping, patch averaging, banks.
//! - [`classify`]: nearest prototype, threshold retrieval, logistic regression, feature concatenation.
//! - [`consistency`]: scan aggregation, voxel majority voting, pseudo-label export.
//! - [`eval`]: confusion matrices, IoU reports, comparison tables.
//! - [`synth`]: seeded synthetic scenes and scan sequences.

pub mod classify;
pub mod consistency;
pub mod error;
pub mod eval;
pub mod prototype_bank;
pub mod synth;
pub mod tensor_io;

pub use classify::{LinearClassifier, ScoredLabels};
pub use consistency::{LabeledScan, VoxelVoteTable};
pub use error::{Error, ErrorCategory, Result};
pub use eval::{ConfusionMatrix, IoUReport};
pub use prototype_bank::{PromptManifest, PrototypeBank};
pub use tensor_io::{FeatureMatrix, LabelArray, PoseSE3, RgbImage};

/// Label id reserved for "no label" unless a manifest says otherwise.
pub const DEFAULT_IGNORE_ID: u32 = u32::MAX;
