//! Label assignment from point features: threshold retrieval, nearest
//! prototype, a logistic-regression probe fitted on the prototype bank, and
//! feature-space concatenation for combining aligned model pairs.
//!
//! Every strategy predicts a *subclass* first and maps it to its class
//! afterwards. Ties always resolve to the lowest index.

mod ensemble;
mod linalg;
mod logistic;
mod nn;

pub use ensemble::{concat_banks, concat_features, cosine_rows};
pub use logistic::{
    fit_lr, fit_lr_with, lr_classify, FitReport, LinearClassifier, LrObjective, LrOptions, SolverTrace,
    DEFAULT_BIAS_SCALE, DEFAULT_C,
};
pub use nn::{nn_classify, threshold_classify, threshold_retrieve};

use crate::tensor_io::LabelArray;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ClassifyError {
    #[error("feature dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("row count mismatch: {left} vs {right}")]
    RowCountMismatch { left: usize, right: usize },
    #[error("prototype bank is empty")]
    EmptyBank,
    #[error("logistic regression needs at least two subclasses, bank has {0}")]
    SingleSubclass(usize),
    #[error("subclass {0} has no prototype rows")]
    EmptySubclass(usize),
    #[error("regularization C must be positive and finite, got {0}")]
    InvalidRegularization(f64),
    #[error("{problem}: no convergence after {iterations} iterations (gradient sup-norm {grad_norm:e})")]
    NotConverged { problem: String, iterations: usize, grad_norm: f64 },
    #[error("invalid model: {0}")]
    InvalidModel(String),
}

impl ClassifyError {
    pub fn is_numeric(&self) -> bool {
        matches!(self, ClassifyError::NotConverged { .. })
    }
}

/// Per-point prediction: subclass, its class, and the winning score (cosine
/// for prototype matching, decision value for the linear probe).
#[derive(Debug, Clone, PartialEq)]
pub struct ScoredLabels {
    pub classes: Vec<u32>,
    pub subclasses: Vec<u32>,
    pub scores: Vec<f64>,
}

impl ScoredLabels {
    pub fn len(&self) -> usize {
        self.classes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.classes.is_empty()
    }

    pub fn class_labels(&self, ignore_id: u32) -> LabelArray {
        LabelArray::new(self.classes.clone(), ignore_id)
    }

    pub fn subclass_labels(&self, ignore_id: u32) -> LabelArray {
        LabelArray::new(self.subclasses.clone(), ignore_id)
    }

    pub(crate) fn from_winners(winners: Vec<(usize, f64)>, class_of_subclass: &[usize]) -> Self {
        let mut out = ScoredLabels {
            classes: Vec::with_capacity(winners.len()),
            subclasses: Vec::with_capacity(winners.len()),
            scores: Vec::with_capacity(winners.len()),
        };
        for (sub, score) in winners {
            out.subclasses.push(sub as u32);
            out.classes.push(class_of_subclass[sub] as u32);
            out.scores.push(score);
        }
        out
    }
}

/// Sequential `f64` dot product of two `f32` rows.
#[inline]
pub(crate) fn dot(a: &[f32], b: &[f32]) -> f64 {
    let mut acc = 0.0f64;
    for (x, y) in a.iter().zip(b) {
        acc += (*x as f64) * (*y as f64);
    }
    acc
}
