//! Class-level segmentation metrics: confusion matrix, per-class IoU and mIoU,
//! and side-by-side comparison tables.
//!
//! Ground-truth points carrying the ignore id are skipped. A prediction of
//! the ignore id on a labeled point counts as a miss (false negative) for the
//! ground-truth class. Classes that appear in neither ground truth nor
//! prediction have no IoU and are left out of the mean.

use std::fmt::Write as _;

use rayon::prelude::*;

use crate::tensor_io::LabelArray;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum EvalError {
    #[error("ground truth has {gt} labels, prediction has {pred}")]
    LengthMismatch { gt: usize, pred: usize },
    #[error("{which} label {label} at index {index} out of range for {num_classes} classes")]
    LabelOutOfRange { which: &'static str, index: usize, label: u32, num_classes: usize },
    #[error("no class has a defined IoU")]
    AllUndefined,
    #[error("reports disagree on the class list")]
    ClassListMismatch,
    #[error("{0}")]
    Invalid(String),
}

/// `K × K` counts, rows = ground truth, columns = prediction, plus one
/// "void prediction" count per ground-truth class.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConfusionMatrix {
    num_classes: usize,
    counts: Vec<u64>,
    void: Vec<u64>,
}

impl ConfusionMatrix {
    pub fn new(num_classes: usize) -> Self {
        ConfusionMatrix {
            num_classes,
            counts: vec![0; num_classes * num_classes],
            void: vec![0; num_classes],
        }
    }

    /// Builds a matrix from explicit rows (ground truth × prediction).
    pub fn from_counts(rows: &[Vec<u64>]) -> Result<Self, EvalError> {
        let k = rows.len();
        if rows.iter().any(|r| r.len() != k) {
            return Err(EvalError::Invalid("confusion rows must form a square matrix".into()));
        }
        Ok(ConfusionMatrix {
            num_classes: k,
            counts: rows.concat(),
            void: vec![0; k],
        })
    }

    pub fn num_classes(&self) -> usize {
        self.num_classes
    }

    pub fn get(&self, gt: usize, pred: usize) -> u64 {
        self.counts[gt * self.num_classes + pred]
    }

    pub fn void(&self, gt: usize) -> u64 {
        self.void[gt]
    }

    /// Number of evaluated (labeled ground-truth) points.
    pub fn total(&self) -> u64 {
        self.counts.iter().sum::<u64>() + self.void.iter().sum::<u64>()
    }

    pub fn merge(&mut self, other: &ConfusionMatrix) {
        assert_eq!(self.num_classes, other.num_classes, "merging matrices of different class counts");
        for (a, b) in self.counts.iter_mut().zip(&other.counts) {
            *a += b;
        }
        for (a, b) in self.void.iter_mut().zip(&other.void) {
            *a += b;
        }
    }

    pub fn true_positives(&self, k: usize) -> u64 {
        self.get(k, k)
    }

    pub fn false_positives(&self, k: usize) -> u64 {
        (0..self.num_classes).filter(|&g| g != k).map(|g| self.get(g, k)).sum()
    }

    pub fn false_negatives(&self, k: usize) -> u64 {
        (0..self.num_classes).filter(|&p| p != k).map(|p| self.get(k, p)).sum::<u64>() + self.void[k]
    }
}

const CHUNK: usize = 1 << 16;

/// Accumulates a confusion matrix over `K` classes.
pub fn confusion(gt: &LabelArray, pred: &LabelArray, num_classes: usize) -> Result<ConfusionMatrix, EvalError> {
    if gt.len() != pred.len() {
        return Err(EvalError::LengthMismatch { gt: gt.len(), pred: pred.len() });
    }
    let check = |which: &'static str, arr: &LabelArray| {
        arr.labels
            .iter()
            .enumerate()
            .find(|&(_, &l)| l != arr.ignore_id && l as usize >= num_classes)
            .map_or(Ok(()), |(index, &label)| {
                Err(EvalError::LabelOutOfRange { which, index, label, num_classes })
            })
    };
    check("ground-truth", gt)?;
    check("predicted", pred)?;

    let k = num_classes;
    Ok(gt
        .labels
        .par_chunks(CHUNK)
        .zip(pred.labels.par_chunks(CHUNK))
        .map(|(g, p)| {
            let mut m = ConfusionMatrix::new(k);
            for (&gl, &pl) in g.iter().zip(p) {
                if gl == gt.ignore_id {
                    continue;
                }
                if pl == pred.ignore_id {
                    m.void[gl as usize] += 1;
                } else {
                    m.counts[gl as usize * k + pl as usize] += 1;
                }
            }
            m
        })
        .reduce(
            || ConfusionMatrix::new(k),
            |mut a, b| {
                a.merge(&b);
                a
            },
        ))
}

/// Per-class IoU (`None` where undefined) and their mean.
#[derive(Debug, Clone, PartialEq)]
pub struct IoUReport {
    pub class_names: Vec<String>,
    pub iou: Vec<Option<f64>>,
    pub miou: f64,
}

/// `IoU_k = TP / (TP + FP + FN)`; mIoU averages the defined classes.
pub fn iou(conf: &ConfusionMatrix, class_names: Option<&[String]>) -> Result<IoUReport, EvalError> {
    let k = conf.num_classes();
    let class_names = match class_names {
        Some(n) if n.len() == k => n.to_vec(),
        Some(n) => {
            return Err(EvalError::Invalid(format!("{} class names for {k} classes", n.len())));
        }
        None => (0..k).map(|i| format!("class_{i}")).collect(),
    };
    let iou: Vec<Option<f64>> = (0..k)
        .map(|c| {
            let tp = conf.true_positives(c);
            let denom = tp + conf.false_positives(c) + conf.false_negatives(c);
            (denom > 0).then(|| tp as f64 / denom as f64)
        })
        .collect();
    let defined: Vec<f64> = iou.iter().flatten().copied().collect();
    if defined.is_empty() {
        return Err(EvalError::AllUndefined);
    }
    let miou = defined.iter().sum::<f64>() / defined.len() as f64;
    Ok(IoUReport { class_names, iou, miou })
}

/// Side-by-side IoU table of several named reports over the same classes.
#[derive(Debug, Clone, PartialEq)]
pub struct Comparison {
    pub names: Vec<String>,
    pub class_names: Vec<String>,
    /// `columns[report][class]`
    pub columns: Vec<Vec<Option<f64>>>,
    pub miou: Vec<f64>,
}

pub fn compare(reports: &[(String, IoUReport)]) -> Result<Comparison, EvalError> {
    let Some((_, first)) = reports.first() else {
        return Err(EvalError::Invalid("nothing to compare".into()));
    };
    if reports.iter().any(|(_, r)| r.class_names != first.class_names) {
        return Err(EvalError::ClassListMismatch);
    }
    Ok(Comparison {
        names: reports.iter().map(|(n, _)| n.clone()).collect(),
        class_names: first.class_names.clone(),
        columns: reports.iter().map(|(_, r)| r.iou.clone()).collect(),
        miou: reports.iter().map(|(_, r)| r.miou).collect(),
    })
}

/// Marker for undefined IoU in CSV output.
pub const UNDEFINED: &str = "NA";

impl Comparison {
    /// CSV with a `class` column, one column per report and a final `mIoU`
    /// row. Values are IoU fractions printed with round-trip precision.
    pub fn to_csv(&self) -> String {
        let mut w = csv::Writer::from_writer(Vec::new());
        let header = std::iter::once("class".to_string()).chain(self.names.iter().cloned());
        w.write_record(header).expect("in-memory write");
        let fmt = |v: &Option<f64>| v.map_or_else(|| UNDEFINED.to_string(), |x| format!("{x:?}"));
        for (c, name) in self.class_names.iter().enumerate() {
            let row = std::iter::once(name.clone()).chain(self.columns.iter().map(|col| fmt(&col[c])));
            w.write_record(row).expect("in-memory write");
        }
        let last = std::iter::once("mIoU".to_string()).chain(self.miou.iter().map(|m| format!("{m:?}")));
        w.write_record(last).expect("in-memory write");
        String::from_utf8(w.into_inner().expect("in-memory flush")).expect("utf-8 csv")
    }

    /// Human-readable table in IoU percent with two decimals.
    pub fn to_text(&self) -> String {
        let pct = |v: Option<f64>| v.map_or_else(|| "-".to_string(), |x| format!("{:.2}", 100.0 * x));
        let mut rows: Vec<Vec<String>> = vec![std::iter::once("class".to_string()).chain(self.names.iter().cloned()).collect()];
        for (c, name) in self.class_names.iter().enumerate() {
            rows.push(std::iter::once(name.clone()).chain(self.columns.iter().map(|col| pct(col[c]))).collect());
        }
        rows.push(std::iter::once("mIoU".to_string()).chain(self.miou.iter().map(|&m| pct(Some(m)))).collect());
        let ncol = rows[0].len();
        let widths: Vec<usize> = (0..ncol).map(|j| rows.iter().map(|r| r[j].chars().count()).max().unwrap_or(0)).collect();
        let mut out = String::new();
        for row in &rows {
            for (j, cell) in row.iter().enumerate() {
                if j == 0 {
                    write!(out, "{cell:<w$}", w = widths[j]).unwrap();
                } else {
                    write!(out, "  {cell:>w$}", w = widths[j]).unwrap();
                }
            }
            out.push('\n');
        }
        out
    }
}
