use super::{dot, ClassifyError};
use crate::error::Result;
use crate::prototype_bank::{BankError, PrototypeBank};
use crate::tensor_io::FeatureMatrix;

/// Cosine similarity of two rows (0 if either is zero).
pub fn cosine_rows(a: &[f32], b: &[f32]) -> f64 {
    let n = (dot(a, a) * dot(b, b)).sqrt();
    if n > 0.0 {
        dot(a, b) / n
    } else {
        0.0
    }
}

/// Row-wise concatenation `[a_i | b_i]`. With `renormalize`, every output row
/// is scaled to unit length (a factor of `1/√2` for unit inputs).
pub fn concat_features(a: &FeatureMatrix, b: &FeatureMatrix, renormalize: bool) -> Result<FeatureMatrix, ClassifyError> {
    if a.rows() != b.rows() {
        return Err(ClassifyError::RowCountMismatch {
            left: a.rows(),
            right: b.rows(),
        });
    }
    let dims = a.dims() + b.dims();
    let mut data = Vec::with_capacity(a.rows() * dims);
    for (ra, rb) in a.iter_rows().zip(b.iter_rows()) {
        if renormalize {
            let norm = (dot(ra, ra) + dot(rb, rb)).sqrt();
            let scale = if norm > 0.0 { 1.0 / norm } else { 0.0 };
            data.extend(ra.iter().chain(rb).map(|&v| (v as f64 * scale) as f32));
        } else {
            data.extend_from_slice(ra);
            data.extend_from_slice(rb);
        }
    }
    Ok(FeatureMatrix::new(a.rows(), dims, data).expect("concatenation of finite rows"))
}

/// Concatenates the prototype rows of two banks built from the same prompts
/// (row `r` of both banks must describe the same image). Rows are
/// renormalized so the result is again a valid bank.
pub fn concat_banks(a: &PrototypeBank, b: &PrototypeBank) -> Result<PrototypeBank> {
    if a.subclass_of() != b.subclass_of()
        || a.class_of_subclass() != b.class_of_subclass()
        || a.class_names() != b.class_names()
    {
        return Err(BankError::ClassMapMismatch.into());
    }
    let prototypes = concat_features(a.prototypes(), b.prototypes(), true)?;
    let mut bank = a.with_prototypes(prototypes)?;
    let sources: Vec<String> = a.sources().iter().zip(b.sources()).map(|(x, y)| format!("{x}+{y}")).collect();
    bank = PrototypeBank::new(
        bank.prototypes().clone(),
        bank.subclass_of().to_vec(),
        sources,
        bank.subclass_names().to_vec(),
        bank.class_of_subclass().to_vec(),
        bank.class_names().to_vec(),
        bank.ignore_id(),
    )?;
    Ok(bank)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn unit_rows_concatenate_to_sqrt2() {
        let a = FeatureMatrix::from_rows(2, [[0.6f32, 0.8]]).unwrap();
        let b = FeatureMatrix::from_rows(3, [[0.0f32, 1.0, 0.0]]).unwrap();
        let ab = concat_features(&a, &b, false).unwrap();
        assert_eq!(ab.dims(), 5);
        assert!((dot(ab.row(0), ab.row(0)).sqrt() - 2f64.sqrt()).abs() < 1e-7);
        let abn = concat_features(&a, &b, true).unwrap();
        assert!((dot(abn.row(0), abn.row(0)).sqrt() - 1.0).abs() < 1e-7);
        assert!((abn.row(0)[1] as f64 - 0.8 / 2f64.sqrt()).abs() < 1e-7);
    }

    #[test]
    fn row_count_mismatch() {
        let a = FeatureMatrix::zeros(2, 2);
        let b = FeatureMatrix::zeros(3, 2);
        assert_eq!(
            concat_features(&a, &b, false),
            Err(ClassifyError::RowCountMismatch { left: 2, right: 3 })
        );
    }
}
