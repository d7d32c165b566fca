use std::collections::HashMap;
use std::path::{Path, PathBuf};

use rayon::prelude::*;

use super::scan::LabeledScan;
use super::ConsistencyError;
use crate::error::{Error, Result};
use crate::tensor_io::{write_labels, LabelArray};

/// Voxel edge length in meters used unless configured otherwise.
pub const DEFAULT_VOXEL_SIZE: f64 = 0.10;

pub type VoxelKey = [i64; 3];

/// Lattice cell of a world position: componentwise `floor(x / size)`.
///
/// Quotients within a few ulps of an integer `k` map to `k`, so a coordinate
/// written as `k · size` lands in voxel `k` even when the division rounds
/// just below it.
pub fn voxel_key(p: [f64; 3], voxel_size: f64) -> VoxelKey {
    p.map(|x| {
        let q = x / voxel_size;
        let r = q.round();
        let snapped = if (q - r).abs() <= 4.0 * f64::EPSILON * q.abs().max(1.0) { r } else { q.floor() };
        snapped as i64
    })
}

/// How a voxel's winner is chosen from its votes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum VotePolicy {
    /// One point, one vote.
    #[default]
    Majority,
    /// Votes weighted by per-point confidence (1 where a scan has none).
    ConfidenceWeighted,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ClassVote {
    pub class: u32,
    pub count: u64,
    pub weight: f64,
}

/// Per-voxel vote counts. Entries within a voxel are sorted by class id and
/// every stored count is positive.
#[derive(Debug, Clone, PartialEq)]
pub struct VoxelVoteTable {
    voxel_size: f64,
    votes: HashMap<VoxelKey, Vec<ClassVote>>,
}

impl VoxelVoteTable {
    pub fn new(voxel_size: f64) -> Result<Self, ConsistencyError> {
        if !(voxel_size > 0.0 && voxel_size.is_finite()) {
            return Err(ConsistencyError::InvalidVoxelSize(voxel_size));
        }
        Ok(VoxelVoteTable {
            voxel_size,
            votes: HashMap::new(),
        })
    }

    pub fn voxel_size(&self) -> f64 {
        self.voxel_size
    }

    pub fn num_voxels(&self) -> usize {
        self.votes.len()
    }

    pub fn votes(&self, key: &VoxelKey) -> Option<&[ClassVote]> {
        self.votes.get(key).map(Vec::as_slice)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&VoxelKey, &[ClassVote])> {
        self.votes.iter().map(|(k, v)| (k, v.as_slice()))
    }

    pub fn total_votes(&self) -> u64 {
        self.votes.values().flatten().map(|v| v.count).sum()
    }

    pub fn add(&mut self, key: VoxelKey, class: u32, weight: f64) {
        let entry = self.votes.entry(key).or_default();
        match entry.binary_search_by_key(&class, |v| v.class) {
            Ok(i) => {
                entry[i].count += 1;
                entry[i].weight += weight;
            }
            Err(i) => entry.insert(i, ClassVote { class, count: 1, weight }),
        }
    }

    /// Adds another table's votes into this one.
    pub fn merge(&mut self, other: &VoxelVoteTable) -> Result<(), ConsistencyError> {
        if other.voxel_size != self.voxel_size {
            return Err(ConsistencyError::VoxelSizeMismatch {
                table: self.voxel_size,
                requested: other.voxel_size,
            });
        }
        // sorted keys keep floating-point weight sums independent of hash order
        let mut keys: Vec<&VoxelKey> = other.votes.keys().collect();
        keys.sort_unstable();
        for key in keys {
            let entry = self.votes.entry(*key).or_default();
            for v in &other.votes[key] {
                match entry.binary_search_by_key(&v.class, |e| e.class) {
                    Ok(i) => {
                        entry[i].count += v.count;
                        entry[i].weight += v.weight;
                    }
                    Err(i) => entry.insert(i, *v),
                }
            }
        }
        Ok(())
    }

    /// Winning class of a voxel; ties go to the lowest class id.
    pub fn winner(&self, key: &VoxelKey, policy: VotePolicy) -> Option<u32> {
        let votes = self.votes.get(key)?;
        let mut best = &votes[0];
        for v in &votes[1..] {
            let better = match policy {
                VotePolicy::Majority => v.count > best.count,
                VotePolicy::ConfidenceWeighted => v.weight > best.weight,
            };
            if better {
                best = v;
            }
        }
        Some(best.class)
    }
}

fn scan_table(scan: &LabeledScan, voxel_size: f64, ignore_id: u32) -> VoxelVoteTable {
    let mut table = VoxelVoteTable {
        voxel_size,
        votes: HashMap::new(),
    };
    for (i, &p) in scan.positions.iter().enumerate() {
        let label = scan.labels.labels[i];
        if label == ignore_id {
            continue;
        }
        let weight = scan.confidence.as_ref().map_or(1.0, |c| c[i] as f64);
        table.add(voxel_key(scan.pose.apply(p), voxel_size), label, weight);
    }
    table
}

/// Counts one vote per non-ignore point in its world-frame voxel. Scans are
/// tallied in parallel and merged in sequence order.
pub fn vote(scans: &[LabeledScan], voxel_size: f64, ignore_id: u32) -> Result<VoxelVoteTable, ConsistencyError> {
    let mut table = VoxelVoteTable::new(voxel_size)?;
    let partial: Vec<VoxelVoteTable> = scans.par_iter().map(|s| scan_table(s, voxel_size, ignore_id)).collect();
    for t in &partial {
        table.merge(t)?;
    }
    log::debug!("{} votes in {} voxels of {} m", table.total_votes(), table.num_voxels(), voxel_size);
    Ok(table)
}

/// Relabels every point with the winner of its voxel. Points in voxels
/// without votes get `ignore_id`.
pub fn propagate(
    scans: &[LabeledScan],
    table: &VoxelVoteTable,
    voxel_size: f64,
    ignore_id: u32,
    policy: VotePolicy,
) -> Result<Vec<LabeledScan>, ConsistencyError> {
    if voxel_size != table.voxel_size {
        return Err(ConsistencyError::VoxelSizeMismatch {
            table: table.voxel_size,
            requested: voxel_size,
        });
    }
    Ok(scans
        .par_iter()
        .map(|scan| {
            let labels = scan
                .positions
                .iter()
                .map(|&p| {
                    table
                        .winner(&voxel_key(scan.pose.apply(p), voxel_size), policy)
                        .unwrap_or(ignore_id)
                })
                .collect();
            LabeledScan {
                labels: LabelArray::new(labels, ignore_id),
                ..scan.clone()
            }
        })
        .collect())
}

/// `vote` followed by `propagate`.
pub fn relabel_sequence(
    scans: &[LabeledScan],
    voxel_size: f64,
    ignore_id: u32,
    policy: VotePolicy,
) -> Result<Vec<LabeledScan>, ConsistencyError> {
    let table = vote(scans, voxel_size, ignore_id)?;
    propagate(scans, &table, voxel_size, ignore_id, policy)
}

/// Writes `<out_dir>/<scan id>.igl` for every scan and returns the paths.
pub fn export_pseudolabels(scans: &[LabeledScan], out_dir: impl AsRef<Path>) -> Result<Vec<PathBuf>> {
    let out_dir = out_dir.as_ref();
    let mut seen = std::collections::HashSet::new();
    for scan in scans {
        let id = scan.id.as_str();
        if id.is_empty() || id == "." || id == ".." || id.contains(['/', '\\']) {
            return Err(ConsistencyError::InvalidScanId(scan.id.clone()).into());
        }
        if !seen.insert(id) {
            return Err(ConsistencyError::DuplicateScanId(scan.id.clone()).into());
        }
    }
    std::fs::create_dir_all(out_dir).map_err(|e| Error::io(out_dir, e))?;
    let mut paths = Vec::with_capacity(scans.len());
    for scan in scans {
        let path = out_dir.join(format!("{}.igl", scan.id));
        write_labels(&scan.labels, &path)?;
        paths.push(path);
    }
    Ok(paths)
}
