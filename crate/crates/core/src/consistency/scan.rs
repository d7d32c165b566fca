use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::ConsistencyError;
use crate::error::{Error, Result};
use crate::tensor_io::{read_feature_matrix, read_labels, read_poses, LabelArray, PoseSE3};
use crate::DEFAULT_IGNORE_ID;

/// One lidar sweep: sensor-frame positions in meters, per-point labels
/// (optionally with confidences) and the sensor-to-world pose.
#[derive(Debug, Clone, PartialEq)]
pub struct LabeledScan {
    pub id: String,
    pub positions: Vec<[f64; 3]>,
    pub labels: LabelArray,
    pub confidence: Option<Vec<f32>>,
    pub pose: PoseSE3,
}

impl LabeledScan {
    pub fn new(id: impl Into<String>, positions: Vec<[f64; 3]>, labels: LabelArray, pose: PoseSE3) -> Result<Self, ConsistencyError> {
        let id = id.into();
        if positions.len() != labels.len() {
            return Err(ConsistencyError::LengthMismatch {
                scan: id,
                points: positions.len(),
                labels: labels.len(),
            });
        }
        if !pose.is_rigid() {
            return Err(ConsistencyError::NonRigidPose { scan: id });
        }
        Ok(LabeledScan {
            id,
            positions,
            labels,
            confidence: None,
            pose,
        })
    }

    pub fn len(&self) -> usize {
        self.positions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.positions.is_empty()
    }
}

/// World-frame positions `R·x + t` of every point.
pub fn transform_to_world(scan: &LabeledScan) -> Vec<[f64; 3]> {
    scan.positions.iter().map(|&p| scan.pose.apply(p)).collect()
}

/// JSON description of a scan sequence. Paths are relative to the manifest.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SequenceManifest {
    pub poses: PathBuf,
    #[serde(default = "default_ignore_id")]
    pub ignore_id: u32,
    pub scans: Vec<ScanEntry>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScanEntry {
    pub id: String,
    /// `N × 3` `.igft` of sensor-frame positions.
    pub points: PathBuf,
    pub labels: PathBuf,
    /// Line index into the pose file.
    pub pose: usize,
    /// Optional `N × 1` `.igft` of per-point confidences.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub confidence: Option<PathBuf>,
}

fn default_ignore_id() -> u32 {
    DEFAULT_IGNORE_ID
}

/// Loads every scan listed in a sequence manifest.
pub fn load_sequence(path: impl AsRef<Path>) -> Result<(SequenceManifest, Vec<LabeledScan>)> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let manifest: SequenceManifest = serde_json::from_str(&text).map_err(|source| Error::Json {
        path: path.to_path_buf(),
        source,
    })?;
    let base = path.parent().unwrap_or(Path::new(""));
    let poses = read_poses(base.join(&manifest.poses))?;
    let mut scans = Vec::with_capacity(manifest.scans.len());
    for entry in &manifest.scans {
        let points = read_feature_matrix(base.join(&entry.points))?;
        if points.dims() != 3 {
            return Err(ConsistencyError::BadPositions { scan: entry.id.clone(), dims: points.dims() }.into());
        }
        let labels = read_labels(base.join(&entry.labels))?;
        let pose = *poses.get(entry.pose).ok_or_else(|| ConsistencyError::PoseIndex {
            scan: entry.id.clone(),
            index: entry.pose,
            available: poses.len(),
        })?;
        let positions = points.iter_rows().map(|r| [r[0] as f64, r[1] as f64, r[2] as f64]).collect();
        let mut scan = LabeledScan::new(entry.id.clone(), positions, labels, pose)?;
        if let Some(conf) = &entry.confidence {
            let c = read_feature_matrix(base.join(conf))?;
            if c.rows() != scan.len() || c.dims() != 1 {
                return Err(ConsistencyError::LengthMismatch {
                    scan: entry.id.clone(),
                    points: scan.len(),
                    labels: c.rows(),
                }
                .into());
            }
            scan.confidence = Some(c.into_vec());
        }
        scans.push(scan);
    }
    Ok((manifest, scans))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn scan(positions: Vec<[f64; 3]>, pose: PoseSE3) -> LabeledScan {
        let n = positions.len();
        LabeledScan::new("s", positions, LabelArray::new(vec![0; n], u32::MAX), pose).unwrap()
    }

    #[test]
    fn identity_and_translation() {
        let pts = vec![[0.0, 0.0, 0.0], [1.5, -2.0, 0.25]];
        assert_eq!(transform_to_world(&scan(pts.clone(), PoseSE3::identity())), pts);
        let moved = transform_to_world(&scan(vec![[0.0; 3]], PoseSE3::from_translation([1.0, 2.0, 3.0])));
        assert_eq!(moved, vec![[1.0, 2.0, 3.0]]);
    }

    #[test]
    fn rotated_pose_matches_scalar_loop() {
        let pose = PoseSE3::from_axis_angle([0.2, 0.9, -0.4], 2.3, [10.0, -4.0, 0.5]);
        let pts: Vec<[f64; 3]> = (0..100)
            .map(|i| {
                let f = i as f64;
                [f.sin() * 20.0, (f * 0.37).cos() * 15.0, f * 0.01]
            })
            .collect();
        let world = transform_to_world(&scan(pts.clone(), pose));
        for (p, w) in pts.iter().zip(&world) {
            for row in 0..3 {
                let mut expect = pose.translation[row];
                for col in 0..3 {
                    expect += pose.rotation[row][col] * p[col];
                }
                assert!((expect - w[row]).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn rejects_mismatched_lengths() {
        let err = LabeledScan::new("a", vec![[0.0; 3]], LabelArray::new(vec![], 0), PoseSE3::identity());
        assert!(matches!(err, Err(ConsistencyError::LengthMismatch { .. })));
    }
}
