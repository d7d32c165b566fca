//! Deterministic fixtures shared by the integration and acceptance tests.
#![allow(dead_code)]

use protoseg_core::consistency::LabeledScan;
use protoseg_core::synth::Xorshift64Star;
use protoseg_core::{FeatureMatrix, LabelArray, PoseSE3, PrototypeBank};

fn igft_header(magic: &[u8; 4], version: u32, dtype: u32, ndim: u32, rows: u64, cols: u64) -> Vec<u8> {
    let mut b = magic.to_vec();
    for v in [version, dtype, ndim] {
        b.extend(v.to_le_bytes());
    }
    b.extend(rows.to_le_bytes());
    b.extend(cols.to_le_bytes());
    b
}

fn igl_header(magic: &[u8; 4], version: u32, count: u64, ignore: u32) -> Vec<u8> {
    let mut b = magic.to_vec();
    b.extend(version.to_le_bytes());
    b.extend(count.to_le_bytes());
    b.extend(ignore.to_le_bytes());
    b
}

/// Malformed files as `(name, extension, bytes)`; every one must be rejected
/// as a format error.
pub fn corrupt_fixtures() -> Vec<(&'static str, &'static str, Vec<u8>)> {
    let payload: Vec<u8> = [1.0f32, 2.0].iter().flat_map(|v| v.to_le_bytes()).collect();
    let with = |mut h: Vec<u8>, p: &[u8]| {
        h.extend_from_slice(p);
        h
    };
    let nan: Vec<u8> = [1.0f32, f32::NAN].iter().flat_map(|v| v.to_le_bytes()).collect();
    let labels: Vec<u8> = [0u32, 1].iter().flat_map(|v| v.to_le_bytes()).collect();
    vec![
        ("igft-bad-magic", "igft", with(igft_header(b"IGFX", 1, 1, 2, 1, 2), &payload)),
        ("igft-bad-version", "igft", with(igft_header(b"IGFT", 2, 1, 2, 1, 2), &payload)),
        ("igft-bad-dtype", "igft", with(igft_header(b"IGFT", 1, 7, 2, 1, 2), &payload)),
        ("igft-bad-rank", "igft", with(igft_header(b"IGFT", 1, 1, 3, 1, 2), &payload)),
        ("igft-truncated-header", "igft", igft_header(b"IGFT", 1, 1, 2, 1, 2)[..17].to_vec()),
        ("igft-short-payload", "igft", with(igft_header(b"IGFT", 1, 1, 2, 2, 2), &payload)),
        ("igft-long-payload", "igft", with(igft_header(b"IGFT", 1, 1, 2, 1, 1), &payload)),
        ("igft-nan", "igft", with(igft_header(b"IGFT", 1, 1, 2, 1, 2), &nan)),
        ("igft-empty", "igft", Vec::new()),
        ("igl-bad-magic", "igl", with(igl_header(b"IGLX", 1, 2, u32::MAX), &labels)),
        ("igl-bad-version", "igl", with(igl_header(b"IGLB", 9, 2, u32::MAX), &labels)),
        ("igl-truncated-header", "igl", igl_header(b"IGLB", 1, 2, u32::MAX)[..11].to_vec()),
        ("igl-count-mismatch", "igl", with(igl_header(b"IGLB", 1, 3, u32::MAX), &labels)),
        ("poses-short-line", "poses", b"1 0 0 0 0 1 0 0 0 0 1\n".to_vec()),
        ("poses-not-a-number", "poses", b"1 0 0 0 0 1 0 0 0 0 x 0\n".to_vec()),
        ("poses-not-rigid", "poses", b"2 0 0 0 0 1 0 0 0 0 1 0\n".to_vec()),
    ]
}

pub fn random_matrix(rng: &mut Xorshift64Star) -> FeatureMatrix {
    let rows = rng.below(40) as usize;
    let dims = 1 + rng.below(40) as usize;
    let data = (0..rows * dims)
        .map(|_| match rng.below(20) {
            0 => 0.0,
            1 => -0.0,
            2 => f32::MIN_POSITIVE / 4.0,
            3 => f32::MAX,
            _ => (rng.gaussian() * 100.0) as f32,
        })
        .collect();
    FeatureMatrix::new(rows, dims, data).unwrap()
}

pub fn random_labels(rng: &mut Xorshift64Star) -> LabelArray {
    let n = rng.below(500) as usize;
    let ignore = if rng.below(2) == 0 { u32::MAX } else { 255 };
    LabelArray::new((0..n).map(|_| if rng.below(10) == 0 { ignore } else { rng.below(20) as u32 }).collect(), ignore)
}

pub fn random_poses(rng: &mut Xorshift64Star) -> Vec<PoseSE3> {
    (0..rng.below(20))
        .map(|_| {
            let axis = [rng.gaussian(), rng.gaussian(), rng.gaussian()];
            let t = [0; 3].map(|_| rng.gaussian() * 1e3);
            PoseSE3::from_axis_angle(axis, rng.uniform(-4.0, 4.0), t)
        })
        .collect()
}

fn unit_rows(rng: &mut Xorshift64Star, n: usize, d: usize) -> Vec<f32> {
    let mut data = Vec::with_capacity(n * d);
    for _ in 0..n {
        let v: Vec<f64> = (0..d).map(|_| rng.gaussian()).collect();
        let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        data.extend(v.iter().map(|x| (x / norm) as f32));
    }
    data
}

/// Random bank of `p` rows in `d` dims over `max(p/2, 2)` subclasses, with
/// three rows overwritten by copies of others, and `n` points of which every
/// second one is an exact copy of a bank row. Duplicates force exact ties.
pub fn nn_tie_scene(rng: &mut Xorshift64Star, n: usize, p: usize, d: usize) -> (FeatureMatrix, PrototypeBank) {
    let mut protos = unit_rows(rng, p, d);
    for _ in 0..3 {
        let src = rng.below(p as u64) as usize;
        let dst = rng.below(p as u64) as usize;
        let row = protos[src * d..(src + 1) * d].to_vec();
        protos[dst * d..(dst + 1) * d].copy_from_slice(&row);
    }
    let subclasses = (p / 2).max(2);
    let classes = subclasses.div_ceil(2);
    let subclass_of: Vec<usize> = (0..p)
        .map(|r| if r < subclasses { r } else { rng.below(subclasses as u64) as usize })
        .collect();
    let mut pts = unit_rows(rng, n, d);
    for i in (0..n).step_by(2) {
        let r = rng.below(p as u64) as usize;
        pts[i * d..(i + 1) * d].copy_from_slice(&protos[r * d..(r + 1) * d]);
    }
    let bank = PrototypeBank::new(
        FeatureMatrix::new(p, d, protos).unwrap(),
        subclass_of,
        vec!["fixture".into(); p],
        (0..subclasses).map(|s| format!("s{s}")).collect(),
        (0..subclasses).map(|s| s % classes).collect(),
        (0..classes).map(|c| format!("c{c}")).collect(),
        u32::MAX,
    )
    .unwrap();
    (FeatureMatrix::new(n, d, pts).unwrap(), bank)
}

/// `total` points split over `scans` randomly posed scans, uniform in a cube
/// of half-side `extent`, about 10% unlabeled.
pub fn random_scans(rng: &mut Xorshift64Star, total: usize, scans: usize, extent: f64, classes: u64) -> Vec<LabeledScan> {
    let per = total / scans;
    (0..scans)
        .map(|s| {
            let n = if s + 1 == scans { total - per * (scans - 1) } else { per };
            let axis = [rng.gaussian(), rng.gaussian(), rng.gaussian()];
            let t = [rng.uniform(-2.0, 2.0), rng.uniform(-2.0, 2.0), rng.uniform(-0.5, 0.5)];
            let pose = PoseSE3::from_axis_angle(axis, rng.uniform(-3.0, 3.0), t);
            let positions = (0..n).map(|_| [0; 3].map(|_| rng.uniform(-extent, extent))).collect();
            let labels = (0..n)
                .map(|_| if rng.next_f64() < 0.1 { u32::MAX } else { rng.below(classes) as u32 })
                .collect();
            LabeledScan::new(format!("{s:03}"), positions, LabelArray::new(labels, u32::MAX), pose).unwrap()
        })
        .collect()
}
