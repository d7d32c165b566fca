//! Reference implementations written without reusing library internals.
//! Shared by the core integration tests and the acceptance suite.
#![allow(dead_code)]

use std::collections::HashMap;

use protoseg_core::consistency::LabeledScan;
use protoseg_core::synth::{SynthSequence, Xorshift64Star};
use protoseg_core::{FeatureMatrix, PrototypeBank};

/// `n × d` matrix of unit rows with Gaussian directions.
pub fn random_unit_rows(rng: &mut Xorshift64Star, n: usize, d: usize) -> FeatureMatrix {
    let mut data = Vec::with_capacity(n * d);
    for _ in 0..n {
        let v: Vec<f64> = (0..d).map(|_| rng.gaussian()).collect();
        let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        data.extend(v.iter().map(|x| (x / norm) as f32));
    }
    FeatureMatrix::new(n, d, data).unwrap()
}

/// Plain full-batch gradient descent on
/// `½‖w‖² + C Σ log(1 + exp(−y_r w·[x_r, B]))`, fixed step `1/L` with
/// `L = 1 + C/4 · Σ ‖[x_r, B]‖²`, until the gradient sup-norm is at most `tol`.
/// Returns the augmented weights `[w, w_B]`.
pub fn lr_gradient_descent(rows: &[Vec<f64>], y: &[f64], c: f64, bias_scale: f64, tol: f64) -> Vec<f64> {
    let aug: Vec<Vec<f64>> = rows
        .iter()
        .map(|r| {
            let mut a = r.clone();
            a.push(bias_scale);
            a
        })
        .collect();
    let d1 = aug[0].len();
    let lipschitz = 1.0 + 0.25 * c * aug.iter().map(|a| a.iter().map(|v| v * v).sum::<f64>()).sum::<f64>();
    let mut w = vec![0.0; d1];
    for _ in 0..50_000_000u64 {
        let mut g = w.clone();
        for (a, &yr) in aug.iter().zip(y) {
            let z: f64 = a.iter().zip(&w).map(|(p, q)| p * q).sum();
            // d/dz log(1 + e^{-y z}) = -y / (1 + e^{y z})
            let coef = -c * yr / (1.0 + (yr * z).exp());
            for (gi, ai) in g.iter_mut().zip(a) {
                *gi += coef * ai;
            }
        }
        if g.iter().fold(0.0f64, |m, v| m.max(v.abs())) <= tol {
            return w;
        }
        for (wi, gi) in w.iter_mut().zip(&g) {
            *wi -= gi / lipschitz;
        }
    }
    panic!("gradient descent oracle did not converge");
}

/// One-vs-rest oracle for every subclass of a bank: `(weights, biases)` with
/// `bias = B · w_B`.
pub fn lr_oracle(bank: &PrototypeBank, c: f64, bias_scale: f64, tol: f64) -> Vec<(Vec<f64>, f64)> {
    let rows: Vec<Vec<f64>> = bank
        .prototypes()
        .iter_rows()
        .map(|r| r.iter().map(|&v| v as f64).collect())
        .collect();
    (0..bank.num_subclasses())
        .map(|s| {
            let y: Vec<f64> = bank.subclass_of().iter().map(|&t| if t == s { 1.0 } else { -1.0 }).collect();
            let mut w = lr_gradient_descent(&rows, &y, c, bias_scale, tol);
            let wb = w.pop().unwrap();
            (w, wb * bias_scale)
        })
        .collect()
}

/// Subclass with the largest `w·x + b`; first wins on ties.
pub fn linear_argmax(models: &[(Vec<f64>, f64)], x: &[f32]) -> usize {
    let mut best = (0, f64::NEG_INFINITY);
    for (s, (w, b)) in models.iter().enumerate() {
        let mut v = *b;
        for (wi, xi) in w.iter().zip(x) {
            v += wi * *xi as f64;
        }
        if v > best.1 {
            best = (s, v);
        }
    }
    best.0
}

/// Exhaustive nearest prototype: every dot product in `f64`, lowest row on ties.
/// Returns `(subclass, class)` per point.
pub fn nn_exhaustive(points: &FeatureMatrix, bank: &PrototypeBank) -> Vec<(u32, u32)> {
    points
        .iter_rows()
        .map(|p| {
            let dots: Vec<f64> = bank
                .prototypes()
                .iter_rows()
                .map(|q| p.iter().zip(q).fold(0.0f64, |acc, (a, b)| acc + *a as f64 * *b as f64))
                .collect();
            let max = dots.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            let row = dots.iter().position(|&d| d == max).unwrap();
            let sub = bank.subclass_of()[row];
            (sub as u32, bank.class_of_subclass()[sub] as u32)
        })
        .collect()
}

fn world_key(scan: &LabeledScan, i: usize, voxel: f64) -> [i64; 3] {
    let p = scan.positions[i];
    let r = scan.pose.rotation;
    let t = scan.pose.translation;
    let mut key = [0i64; 3];
    for a in 0..3 {
        let w = r[a][0] * p[0] + r[a][1] * p[1] + r[a][2] * p[2] + t[a];
        key[a] = (w / voxel).floor() as i64;
    }
    key
}

/// Quadratic group-argmax: for every point, scan all points of all scans,
/// count the labels of those sharing its voxel and take the most frequent,
/// lowest class on ties, `ignore` when none are labeled.
pub fn voxel_group_argmax(scans: &[LabeledScan], voxel: f64, ignore: u32) -> Vec<Vec<u32>> {
    let keyed: Vec<([i64; 3], u32)> = scans
        .iter()
        .flat_map(|s| (0..s.len()).map(move |i| (world_key(s, i, voxel), s.labels.labels[i])))
        .collect();
    let mut out = Vec::with_capacity(scans.len());
    let mut flat = 0;
    for s in scans {
        let mut labels = Vec::with_capacity(s.len());
        for _ in 0..s.len() {
            let key = keyed[flat].0;
            flat += 1;
            let mut counts: Vec<(u32, u64)> = Vec::new();
            for (k, l) in &keyed {
                if *k == key && *l != ignore {
                    match counts.iter_mut().find(|(c, _)| c == l) {
                        Some(e) => e.1 += 1,
                        None => counts.push((*l, 1)),
                    }
                }
            }
            let best = counts
                .iter()
                .fold(None::<(u32, u64)>, |acc, &(c, n)| match acc {
                    Some((bc, bn)) if bn > n || (bn == n && bc < c) => Some((bc, bn)),
                    _ => Some((c, n)),
                });
            labels.push(best.map_or(ignore, |(c, _)| c));
        }
        out.push(labels);
    }
    out
}

/// Per-voxel count over the realized corruption: point `i` of scan `s` is
/// recovered iff the clean class of its lattice voxel has strictly more
/// observations than every other class, or ties the maximum and is the
/// lowest tied class. Uses generation bookkeeping, not geometry.
pub fn recovered_by_count(seq: &SynthSequence) -> Vec<Vec<bool>> {
    let mut counts: HashMap<usize, HashMap<u32, u64>> = HashMap::new();
    for (s, scan) in seq.scans.iter().enumerate() {
        for (i, &l) in scan.labels.labels.iter().enumerate() {
            *counts.entry(seq.voxel_of_point[s][i]).or_default().entry(l).or_default() += 1;
        }
    }
    let wins = |v: usize| -> bool {
        let clean = seq.voxel_labels[v];
        let c = &counts[&v];
        let mine = c.get(&clean).copied().unwrap_or(0);
        c.iter().all(|(&other, &n)| other == clean || n < mine || (n == mine && clean < other))
    };
    seq.voxel_of_point
        .iter()
        .map(|order| order.iter().map(|&v| wins(v)).collect())
        .collect()
}

/// Probability that the clean label keeps a strict majority of `n`
/// observations flipped independently with probability `p`; a lower bound on
/// the expected recovery rate.
pub fn strict_majority_probability(n: u64, p: f64) -> f64 {
    let choose = |n: u64, k: u64| -> f64 { (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64) };
    (n / 2 + 1..=n)
        .map(|k| choose(n, k) * (1.0 - p).powi(k as i32) * p.powi((n - k) as i32))
        .sum()
}
