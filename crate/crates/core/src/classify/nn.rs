use rayon::prelude::*;

use super::{dot, ClassifyError, ScoredLabels};
use crate::prototype_bank::PrototypeBank;
use crate::tensor_io::FeatureMatrix;

fn check_dims(points: &FeatureMatrix, dims: usize) -> Result<(), ClassifyError> {
    if points.dims() != dims {
        return Err(ClassifyError::DimensionMismatch {
            expected: dims,
            found: points.dims(),
        });
    }
    Ok(())
}

/// Index and value of the largest dot product with a bank row; first wins on ties.
fn best_row(point: &[f32], prototypes: &FeatureMatrix) -> (usize, f64) {
    let mut best = (0, f64::NEG_INFINITY);
    for (r, proto) in prototypes.iter_rows().enumerate() {
        let d = dot(point, proto);
        if d > best.1 {
            best = (r, d);
        }
    }
    best
}

/// Assigns each point the subclass of its most similar prototype.
///
/// Points are treated as if L2-normalized: the argmax runs on raw dot
/// products (identical ranking) and the reported score is divided by the
/// point norm, so it is the cosine similarity. Zero points score 0.
pub fn nn_classify(points: &FeatureMatrix, bank: &PrototypeBank) -> Result<ScoredLabels, ClassifyError> {
    if bank.is_empty() {
        return Err(ClassifyError::EmptyBank);
    }
    check_dims(points, bank.dims())?;
    let protos = bank.prototypes();
    let subclass_of = bank.subclass_of();
    let winners: Vec<(usize, f64)> = (0..points.rows())
        .into_par_iter()
        .map(|i| {
            let p = points.row(i);
            let (row, d) = best_row(p, protos);
            let norm = dot(p, p).sqrt();
            let score = if norm > 0.0 { d / norm } else { 0.0 };
            (subclass_of[row], score)
        })
        .collect();
    Ok(ScoredLabels::from_winners(winners, bank.class_of_subclass()))
}

/// Binary retrieval mask: `dot(point, prototype) >= tau`.
pub fn threshold_retrieve(points: &FeatureMatrix, prototype: &[f32], tau: f64) -> Result<Vec<bool>, ClassifyError> {
    check_dims(points, prototype.len())?;
    Ok((0..points.rows())
        .into_par_iter()
        .map(|i| dot(points.row(i), prototype) >= tau)
        .collect())
}

/// Nearest-prototype labels, but points whose best cosine is below `tau`
/// are left unlabeled (`ignore_id` as both class and subclass).
pub fn threshold_classify(
    points: &FeatureMatrix,
    bank: &PrototypeBank,
    tau: f64,
    ignore_id: u32,
) -> Result<ScoredLabels, ClassifyError> {
    let mut out = nn_classify(points, bank)?;
    for i in 0..out.len() {
        if !(out.scores[i] >= tau) {
            out.classes[i] = ignore_id;
            out.subclasses[i] = ignore_id;
        }
    }
    Ok(out)
}
