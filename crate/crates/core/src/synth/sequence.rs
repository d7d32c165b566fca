use std::collections::HashSet;

use super::{SynthConfig, SynthError, Xorshift64Star};
use crate::consistency::{LabeledScan, VoxelKey};
use crate::tensor_io::{LabelArray, PoseSE3};
use crate::DEFAULT_IGNORE_ID;

/// Distinct stream for sequences so that adding a sequence to a config does
/// not perturb its feature scene.
const SEQUENCE_STREAM: u64 = 0x5EC0_0E5C_A115_0000;

/// Posed scans that revisit the same lattice voxels, with ground truth.
#[derive(Debug, Clone, PartialEq)]
pub struct SynthSequence {
    pub scans: Vec<LabeledScan>,
    /// Lattice voxel of every generated world point.
    pub voxels: Vec<VoxelKey>,
    /// Clean class of each lattice voxel.
    pub voxel_labels: Vec<u32>,
    /// `voxel_of_point[s][i]` indexes `voxels` for point `i` of scan `s`.
    pub voxel_of_point: Vec<Vec<usize>>,
    /// Per-scan clean labels, aligned with the scan points.
    pub clean: Vec<LabelArray>,
}

impl SynthSequence {
    /// Whether point `i` of scan `s` carries a corrupted label.
    pub fn is_flipped(&self, s: usize, i: usize) -> bool {
        self.scans[s].labels.labels[i] != self.clean[s].labels[i]
    }
}

/// Emits `config.scans` scans. Each scan sees every one of the
/// `points_per_scan` lattice voxels once, in its own shuffled order, at a
/// jittered position (at most a quarter voxel from the center per axis),
/// expressed in the sensor frame of a random yaw-and-translation pose.
/// Each observed label is replaced, with probability `flip_rate`, by a
/// uniformly chosen different class.
pub fn generate_sequence(config: &SynthConfig) -> Result<SynthSequence, SynthError> {
    config.validate()?;
    let mut rng = Xorshift64Star::new(config.seed ^ SEQUENCE_STREAM);
    let k = config.classes as u64;
    let side = (config.extent / config.voxel_size).floor() as i64;
    let capacity = (side.max(0) as u128).pow(3);
    if side < 1 || capacity < config.points_per_scan as u128 {
        return Err(SynthError::InvalidConfig(format!(
            "extent {} m holds {capacity} voxels of {} m, fewer than points_per_scan = {}",
            config.extent, config.voxel_size, config.points_per_scan
        )));
    }

    let half = side / 2;
    let mut seen = HashSet::new();
    let mut voxels = Vec::with_capacity(config.points_per_scan);
    while voxels.len() < config.points_per_scan {
        let key: VoxelKey = [0; 3].map(|_| rng.below(side as u64) as i64 - half);
        if seen.insert(key) {
            voxels.push(key);
        }
    }
    let voxel_labels: Vec<u32> = voxels.iter().map(|_| rng.below(k) as u32).collect();

    let mut scans = Vec::with_capacity(config.scans);
    let mut voxel_of_point = Vec::with_capacity(config.scans);
    let mut clean = Vec::with_capacity(config.scans);
    let width = config.scans.saturating_sub(1).to_string().len().max(3);
    for s in 0..config.scans {
        let yaw = rng.uniform(-std::f64::consts::PI, std::f64::consts::PI);
        let h = config.extent / 2.0;
        let t = [rng.uniform(-h, h), rng.uniform(-h, h), rng.uniform(-1.0, 1.0)];
        let (sin, cos) = (libm::sin(yaw), libm::cos(yaw));
        let pose = PoseSE3::from_row_major([cos, -sin, 0.0, t[0], sin, cos, 0.0, t[1], 0.0, 0.0, 1.0, t[2]]);

        let mut order: Vec<usize> = (0..voxels.len()).collect();
        for i in (1..order.len()).rev() {
            let j = rng.below(i as u64 + 1) as usize;
            order.swap(i, j);
        }

        let mut positions = Vec::with_capacity(order.len());
        let mut labels = Vec::with_capacity(order.len());
        let mut truth = Vec::with_capacity(order.len());
        for &v in &order {
            let key = voxels[v];
            let world = [0, 1, 2].map(|a| (key[a] as f64 + 0.5 + rng.uniform(-0.25, 0.25)) * config.voxel_size);
            positions.push(pose.apply_inverse(world));
            let c = voxel_labels[v];
            let flip = rng.next_f64() < config.flip_rate && k > 1;
            labels.push(if flip { ((c as u64 + 1 + rng.below(k - 1)) % k) as u32 } else { c });
            truth.push(c);
        }
        let scan = LabeledScan::new(format!("{s:0width$}"), positions, LabelArray::new(labels, DEFAULT_IGNORE_ID), pose)
            .map_err(|e| SynthError::InvalidConfig(e.to_string()))?;
        scans.push(scan);
        voxel_of_point.push(order);
        clean.push(LabelArray::new(truth, DEFAULT_IGNORE_ID));
    }

    Ok(SynthSequence {
        scans,
        voxels,
        voxel_labels,
        voxel_of_point,
        clean,
    })
}
