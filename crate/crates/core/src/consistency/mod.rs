//! Label consistency over a posed scan sequence: points of all scans are
//! moved into the world frame, every labeled point votes for its label in a
//! cubic voxel, and each point is relabeled with its voxel's majority. The
//! relabeled scans are exported as pseudo-labels for later self-training.

mod scan;
mod voxel;

pub use scan::{load_sequence, transform_to_world, LabeledScan, ScanEntry, SequenceManifest};
pub use voxel::{
    export_pseudolabels, propagate, relabel_sequence, vote, voxel_key, ClassVote, VotePolicy, VoxelKey,
    VoxelVoteTable, DEFAULT_VOXEL_SIZE,
};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ConsistencyError {
    #[error("voxel size must be positive and finite, got {0}")]
    InvalidVoxelSize(f64),
    #[error("vote table was built with voxel size {table}, propagate called with {requested}")]
    VoxelSizeMismatch { table: f64, requested: f64 },
    #[error("scan {scan:?}: {points} points but {labels} labels")]
    LengthMismatch { scan: String, points: usize, labels: usize },
    #[error("scan {scan:?}: position matrix has {dims} columns, expected 3")]
    BadPositions { scan: String, dims: usize },
    #[error("scan {scan:?}: pose index {index} out of range ({available} poses)")]
    PoseIndex { scan: String, index: usize, available: usize },
    #[error("scan {scan:?}: pose is not a rigid transform")]
    NonRigidPose { scan: String },
    #[error("invalid scan id {0:?}")]
    InvalidScanId(String),
    #[error("duplicate scan id {0:?}")]
    DuplicateScanId(String),
}
