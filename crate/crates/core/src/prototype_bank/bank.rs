use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{prototype_from_patches, BankError, PromptManifest};
use crate::error::{Error, Result};
use crate::tensor_io::{read_feature_matrix, write_feature_matrix, FeatureMatrix};

/// Allowed deviation of a prototype row's L2 norm from 1.
pub const UNIT_NORM_TOLERANCE: f64 = 1e-5;

/// Stack of unit-norm prototypes, one row per prototype image.
///
/// Row `r` belongs to subclass `subclass_of[r]`; subclass `s` belongs to
/// class `class_of_subclass[s]`. Several rows may share a subclass.
#[derive(Debug, Clone, PartialEq)]
pub struct PrototypeBank {
    prototypes: FeatureMatrix,
    subclass_of: Vec<usize>,
    class_of_subclass: Vec<usize>,
    sources: Vec<String>,
    subclass_names: Vec<String>,
    class_names: Vec<String>,
    ignore_id: u32,
}

impl PrototypeBank {
    /// Assembles a bank and checks every invariant: row tags in range, unit
    /// rows, class map in range.
    pub fn new(
        prototypes: FeatureMatrix,
        subclass_of: Vec<usize>,
        sources: Vec<String>,
        subclass_names: Vec<String>,
        class_of_subclass: Vec<usize>,
        class_names: Vec<String>,
        ignore_id: u32,
    ) -> Result<Self, BankError> {
        let rows = prototypes.rows();
        if subclass_of.len() != rows || sources.len() != rows {
            return Err(BankError::Invalid(format!(
                "{rows} prototype rows but {} subclass tags and {} source tags",
                subclass_of.len(),
                sources.len()
            )));
        }
        if subclass_names.len() != class_of_subclass.len() {
            return Err(BankError::Invalid("subclass names and class map differ in length".into()));
        }
        if let Some(&s) = subclass_of.iter().find(|&&s| s >= class_of_subclass.len()) {
            return Err(BankError::Invalid(format!("row tagged with unknown subclass {s}")));
        }
        if let Some(&c) = class_of_subclass.iter().find(|&&c| c >= class_names.len()) {
            return Err(BankError::Invalid(format!("subclass mapped to unknown class {c}")));
        }
        for (row, r) in prototypes.iter_rows().enumerate() {
            let norm = r.iter().map(|&v| (v as f64) * (v as f64)).sum::<f64>().sqrt();
            if (norm - 1.0).abs() >= UNIT_NORM_TOLERANCE {
                return Err(BankError::NotUnitNorm { row, norm });
            }
        }
        Ok(PrototypeBank {
            prototypes,
            subclass_of,
            class_of_subclass,
            sources,
            subclass_names,
            class_names,
            ignore_id,
        })
    }

    pub fn prototypes(&self) -> &FeatureMatrix {
        &self.prototypes
    }

    pub fn len(&self) -> usize {
        self.prototypes.rows()
    }

    pub fn is_empty(&self) -> bool {
        self.prototypes.rows() == 0
    }

    pub fn dims(&self) -> usize {
        self.prototypes.dims()
    }

    pub fn subclass_of(&self) -> &[usize] {
        &self.subclass_of
    }

    pub fn class_of_subclass(&self) -> &[usize] {
        &self.class_of_subclass
    }

    pub fn sources(&self) -> &[String] {
        &self.sources
    }

    pub fn subclass_names(&self) -> &[String] {
        &self.subclass_names
    }

    pub fn class_names(&self) -> &[String] {
        &self.class_names
    }

    pub fn num_subclasses(&self) -> usize {
        self.class_of_subclass.len()
    }

    pub fn num_classes(&self) -> usize {
        self.class_names.len()
    }

    pub fn ignore_id(&self) -> u32 {
        self.ignore_id
    }

    /// Same labels and names with a different prototype matrix (e.g. after
    /// concatenating feature spaces).
    pub fn with_prototypes(&self, prototypes: FeatureMatrix) -> Result<Self, BankError> {
        PrototypeBank::new(
            prototypes,
            self.subclass_of.clone(),
            self.sources.clone(),
            self.subclass_names.clone(),
            self.class_of_subclass.clone(),
            self.class_names.clone(),
            self.ignore_id,
        )
    }

    /// Writes `<path>` (JSON metadata) and a sibling `.igft` holding the prototype rows.
    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let features = path.with_extension("igft");
        let file_name = features.file_name().map(PathBuf::from).unwrap_or_else(|| features.clone());
        write_feature_matrix(&self.prototypes, &features)?;
        let meta = BankFile {
            format: BANK_FORMAT.into(),
            version: 1,
            features: file_name,
            dims: self.dims(),
            classes: self.class_names.clone(),
            ignore_id: self.ignore_id,
            subclasses: self
                .subclass_names
                .iter()
                .zip(&self.class_of_subclass)
                .map(|(name, &class)| BankSubclass { name: name.clone(), class })
                .collect(),
            rows: self
                .subclass_of
                .iter()
                .zip(&self.sources)
                .map(|(&subclass, source)| BankRow { subclass, source: source.clone() })
                .collect(),
        };
        let text = serde_json::to_string_pretty(&meta).expect("bank metadata serializes") + "\n";
        std::fs::write(path, text).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let meta: BankFile = serde_json::from_str(&text).map_err(|source| Error::Json {
            path: path.to_path_buf(),
            source,
        })?;
        if meta.format != BANK_FORMAT || meta.version != 1 {
            return Err(BankError::Invalid(format!("unsupported bank format {} v{}", meta.format, meta.version)).into());
        }
        let features = path.parent().unwrap_or(Path::new("")).join(&meta.features);
        let prototypes = read_feature_matrix(&features)?;
        if prototypes.dims() != meta.dims {
            return Err(BankError::DimensionMismatch {
                context: features.display().to_string(),
                expected: meta.dims,
                found: prototypes.dims(),
            }
            .into());
        }
        let (subclass_of, sources) = meta.rows.into_iter().map(|r| (r.subclass, r.source)).unzip();
        let (subclass_names, class_of_subclass) = meta.subclasses.into_iter().map(|s| (s.name, s.class)).unzip();
        Ok(PrototypeBank::new(
            prototypes,
            subclass_of,
            sources,
            subclass_names,
            class_of_subclass,
            meta.classes,
            meta.ignore_id,
        )?)
    }
}

const BANK_FORMAT: &str = "protoseg-bank";

#[derive(Serialize, Deserialize)]
struct BankFile {
    format: String,
    version: u32,
    features: PathBuf,
    dims: usize,
    classes: Vec<String>,
    ignore_id: u32,
    subclasses: Vec<BankSubclass>,
    rows: Vec<BankRow>,
}

#[derive(Serialize, Deserialize)]
struct BankSubclass {
    name: String,
    class: usize,
}

#[derive(Serialize, Deserialize)]
struct BankRow {
    subclass: usize,
    source: String,
}

/// Builds a bank from in-memory patch grids: `grids[s][j]` is the grid of
/// image `j` of subclass `s`. Every image yields its own row.
pub fn build_bank_from_grids(manifest: &PromptManifest, grids: &[Vec<FeatureMatrix>]) -> Result<PrototypeBank, BankError> {
    let class_of_subclass = manifest.class_of_subclass()?;
    if grids.len() != manifest.num_subclasses() {
        return Err(BankError::Invalid(format!(
            "{} grid lists for {} subclasses",
            grids.len(),
            manifest.num_subclasses()
        )));
    }
    let dims = grids.iter().flatten().map(|g| g.dims()).next().unwrap_or(0);
    for (sub, list) in manifest.subclasses.iter().zip(grids) {
        if list.is_empty() {
            return Err(BankError::MissingFeatures { subclass: sub.name.clone() });
        }
        if let Some(g) = list.iter().find(|g| g.dims() != dims) {
            return Err(BankError::DimensionMismatch {
                context: format!("subclass {:?}", sub.name),
                expected: dims,
                found: g.dims(),
            });
        }
    }

    let per_subclass: Vec<Vec<Vec<f32>>> = manifest
        .subclasses
        .par_iter()
        .zip(grids.par_iter())
        .map(|(sub, list)| {
            list.iter()
                .enumerate()
                .map(|(image, grid)| {
                    prototype_from_patches(grid, None).map_err(|e| BankError::Prototype {
                        subclass: sub.name.clone(),
                        image,
                        source: Box::new(e),
                    })
                })
                .collect::<Result<Vec<_>, _>>()
        })
        .collect::<Result<_, _>>()?;

    let mut data = Vec::new();
    let mut subclass_of = Vec::new();
    let mut sources = Vec::new();
    for (s, (protos, sub)) in per_subclass.into_iter().zip(&manifest.subclasses).enumerate() {
        let source = sub
            .source
            .clone()
            .or_else(|| manifest.source.clone())
            .unwrap_or_else(|| "unspecified".to_string());
        for p in protos {
            data.extend(p);
            subclass_of.push(s);
            sources.push(source.clone());
        }
    }
    let rows = subclass_of.len();
    let prototypes = FeatureMatrix::new(rows, dims, data).map_err(|e| BankError::Invalid(e.to_string()))?;
    PrototypeBank::new(
        prototypes,
        subclass_of,
        sources,
        manifest.subclasses.iter().map(|s| s.name.clone()).collect(),
        class_of_subclass,
        manifest.classes.clone(),
        manifest.ignore_id,
    )
}

/// Reads every subclass's patch-feature files and builds the bank. Paths are
/// used as stored in the manifest (see [`PromptManifest::load`]).
pub fn build_bank(manifest: &PromptManifest) -> Result<PrototypeBank> {
    manifest.validate()?;
    let grids = manifest
        .subclasses
        .par_iter()
        .map(|sub| {
            if sub.features.is_empty() {
                return Err(Error::from(BankError::MissingFeatures { subclass: sub.name.clone() }));
            }
            sub.features.iter().map(read_feature_matrix).collect::<Result<Vec<_>>>()
        })
        .collect::<Result<Vec<_>>>()?;
    let bank = build_bank_from_grids(manifest, &grids)?;
    log::debug!("bank: {} prototypes, {} subclasses, {} classes", bank.len(), bank.num_subclasses(), bank.num_classes());
    Ok(bank)
}

/// Row-wise union of two banks over the same subclass/class map.
pub fn merge_banks(a: &PrototypeBank, b: &PrototypeBank) -> Result<PrototypeBank, BankError> {
    if a.dims() != b.dims() {
        return Err(BankError::DimensionMismatch {
            context: "merge".into(),
            expected: a.dims(),
            found: b.dims(),
        });
    }
    if a.class_of_subclass != b.class_of_subclass
        || a.subclass_names != b.subclass_names
        || a.class_names != b.class_names
    {
        return Err(BankError::ClassMapMismatch);
    }
    let mut data = a.prototypes.as_slice().to_vec();
    data.extend_from_slice(b.prototypes.as_slice());
    let prototypes = FeatureMatrix::new(a.len() + b.len(), a.dims(), data).map_err(|e| BankError::Invalid(e.to_string()))?;
    PrototypeBank::new(
        prototypes,
        a.subclass_of.iter().chain(&b.subclass_of).copied().collect(),
        a.sources.iter().chain(&b.sources).cloned().collect(),
        a.subclass_names.clone(),
        a.class_of_subclass.clone(),
        a.class_names.clone(),
        a.ignore_id,
    )
}
