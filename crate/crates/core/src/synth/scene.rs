use serde::{Deserialize, Serialize};

use super::{SynthError, Xorshift64Star};
use crate::prototype_bank::{PromptManifest, PrototypeBank, SubclassEntry, SubclassKind};
use crate::tensor_io::{FeatureMatrix, LabelArray};
use crate::DEFAULT_IGNORE_ID;

/// Resampling budget per centroid before the config is declared infeasible.
pub const MAX_CENTROID_ATTEMPTS: usize = 10_000;

/// Per-class, per-dimension scaling applied to point features only.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Anisotropy {
    #[default]
    None,
    /// Each factor drawn uniformly from `[min, max]`.
    Uniform { min: f64, max: f64 },
    /// `K` rows of `D` factors.
    Explicit { factors: Vec<Vec<f64>> },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SynthConfig {
    pub seed: u64,
    pub classes: usize,
    #[serde(default = "one")]
    pub subclasses_per_class: usize,
    pub dims: usize,
    #[serde(default = "one")]
    pub prototypes_per_subclass: usize,
    pub points_per_class: usize,
    /// Noise norm is about `noise` radians: each component has std `noise/√D`.
    #[serde(default)]
    pub noise: f64,
    /// Prototype noise scale; defaults to `noise`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub prototype_noise: Option<f64>,
    #[serde(default)]
    pub anisotropy: Anisotropy,
    /// Minimum pairwise angle between subclass centroids, radians.
    #[serde(default = "default_min_angle")]
    pub min_centroid_angle: f64,
    /// Side of the cube holding the sequence lattice, meters.
    #[serde(default = "default_extent")]
    pub extent: f64,
    #[serde(default = "default_points_per_scan")]
    pub points_per_scan: usize,
    #[serde(default = "default_scans")]
    pub scans: usize,
    #[serde(default)]
    pub flip_rate: f64,
    #[serde(default = "default_voxel_size")]
    pub voxel_size: f64,
}

fn one() -> usize {
    1
}
fn default_min_angle() -> f64 {
    0.5
}
fn default_extent() -> f64 {
    20.0
}
fn default_points_per_scan() -> usize {
    1000
}
fn default_scans() -> usize {
    5
}
fn default_voxel_size() -> f64 {
    crate::consistency::DEFAULT_VOXEL_SIZE
}

impl SynthConfig {
    /// A config with the given shape and every optional field at its default.
    pub fn new(seed: u64, classes: usize, dims: usize, points_per_class: usize) -> Self {
        SynthConfig {
            seed,
            classes,
            subclasses_per_class: 1,
            dims,
            prototypes_per_subclass: 1,
            points_per_class,
            noise: 0.0,
            prototype_noise: None,
            anisotropy: Anisotropy::None,
            min_centroid_angle: default_min_angle(),
            extent: default_extent(),
            points_per_scan: default_points_per_scan(),
            scans: default_scans(),
            flip_rate: 0.0,
            voxel_size: default_voxel_size(),
        }
    }

    pub fn num_subclasses(&self) -> usize {
        self.classes * self.subclasses_per_class
    }

    pub fn validate(&self) -> Result<(), SynthError> {
        let bad = |m: String| Err(SynthError::InvalidConfig(m));
        for (name, v) in [
            ("classes", self.classes),
            ("subclasses_per_class", self.subclasses_per_class),
            ("dims", self.dims),
            ("prototypes_per_subclass", self.prototypes_per_subclass),
            ("points_per_class", self.points_per_class),
            ("points_per_scan", self.points_per_scan),
            ("scans", self.scans),
        ] {
            if v == 0 {
                return bad(format!("{name} must be at least 1"));
            }
        }
        if !(self.noise.is_finite() && self.noise >= 0.0) {
            return bad(format!("noise must be finite and >= 0, got {}", self.noise));
        }
        if let Some(p) = self.prototype_noise {
            if !(p.is_finite() && p >= 0.0) {
                return bad(format!("prototype_noise must be finite and >= 0, got {p}"));
            }
        }
        if !(self.min_centroid_angle.is_finite() && (0.0..=std::f64::consts::PI).contains(&self.min_centroid_angle)) {
            return bad(format!("min_centroid_angle must lie in [0, pi], got {}", self.min_centroid_angle));
        }
        if !(self.extent.is_finite() && self.extent > 0.0) {
            return bad(format!("extent must be positive, got {}", self.extent));
        }
        if !(self.voxel_size.is_finite() && self.voxel_size > 0.0) {
            return bad(format!("voxel_size must be positive, got {}", self.voxel_size));
        }
        if !(0.0..=1.0).contains(&self.flip_rate) {
            return bad(format!("flip_rate must lie in [0, 1], got {}", self.flip_rate));
        }
        let positive = |f: f64| f.is_finite() && f > 0.0;
        match &self.anisotropy {
            Anisotropy::None => {}
            Anisotropy::Uniform { min, max } => {
                if !(positive(*min) && positive(*max) && min <= max) {
                    return bad(format!("anisotropy range [{min}, {max}] must be positive and ordered"));
                }
            }
            Anisotropy::Explicit { factors } => {
                if factors.len() != self.classes || factors.iter().any(|r| r.len() != self.dims) {
                    return bad(format!("explicit anisotropy must be {} x {}", self.classes, self.dims));
                }
                if factors.iter().flatten().any(|&f| !positive(f)) {
                    return bad("anisotropy factors must be positive".into());
                }
            }
        }
        Ok(())
    }
}

/// Generated features with their ground truth.
#[derive(Debug, Clone, PartialEq)]
pub struct SynthScene {
    /// Class and subclass names; carries no feature paths.
    pub manifest: PromptManifest,
    pub bank: PrototypeBank,
    pub points: FeatureMatrix,
    pub gt: LabelArray,
    pub gt_subclass: Vec<u32>,
    /// Unit-norm subclass centroids.
    pub centroids: Vec<Vec<f64>>,
    /// `K × D` factors actually applied (all ones when disabled).
    pub anisotropy: Vec<Vec<f64>>,
}

fn unit_gaussian(rng: &mut Xorshift64Star, dims: usize) -> Vec<f64> {
    loop {
        let v: Vec<f64> = (0..dims).map(|_| rng.gaussian()).collect();
        let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        if norm > 1e-12 {
            return v.into_iter().map(|x| x / norm).collect();
        }
    }
}

fn normalized_f32(v: &[f64]) -> Vec<f32> {
    let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    v.iter().map(|x| (x / norm) as f32).collect()
}

/// `centroid + noise·g/√D`, optionally scaled componentwise, as f32 after
/// renormalization. Redraws in the measure-zero event of a zero vector.
fn perturbed(rng: &mut Xorshift64Star, centroid: &[f64], noise: f64, scale: Option<&[f64]>) -> Vec<f32> {
    let std = noise / (centroid.len() as f64).sqrt();
    loop {
        let mut v: Vec<f64> = centroid.iter().map(|&c| c + std * rng.gaussian()).collect();
        if let Some(a) = scale {
            v.iter_mut().zip(a).for_each(|(x, f)| *x *= f);
        }
        if v.iter().map(|x| x * x).sum::<f64>().sqrt() > 1e-12 {
            return normalized_f32(&v);
        }
    }
}

/// Draws a scene. The order of draws is: centroids (rejection sampled),
/// anisotropy factors, prototypes (subclass-major), points (class-major,
/// subclass `c·spc + i mod spc` for the `i`-th point of class `c`).
pub fn generate(config: &SynthConfig) -> Result<SynthScene, SynthError> {
    config.validate()?;
    let mut rng = Xorshift64Star::new(config.seed);
    let (k, spc, d) = (config.classes, config.subclasses_per_class, config.dims);
    let s_total = config.num_subclasses();

    let max_cos = libm::cos(config.min_centroid_angle);
    let mut centroids: Vec<Vec<f64>> = Vec::with_capacity(s_total);
    for index in 0..s_total {
        let mut attempts = 0;
        let c = loop {
            if attempts == MAX_CENTROID_ATTEMPTS {
                return Err(SynthError::Infeasible {
                    index,
                    min_angle: config.min_centroid_angle,
                    attempts,
                });
            }
            attempts += 1;
            let c = unit_gaussian(&mut rng, d);
            let ok = centroids
                .iter()
                .all(|o| o.iter().zip(&c).map(|(a, b)| a * b).sum::<f64>() <= max_cos);
            if ok {
                break c;
            }
        };
        centroids.push(c);
    }

    let anisotropy: Vec<Vec<f64>> = match &config.anisotropy {
        Anisotropy::None => vec![vec![1.0; d]; k],
        Anisotropy::Uniform { min, max } => (0..k).map(|_| (0..d).map(|_| rng.uniform(*min, *max)).collect()).collect(),
        Anisotropy::Explicit { factors } => factors.clone(),
    };
    let scaled = !matches!(config.anisotropy, Anisotropy::None);

    let proto_noise = config.prototype_noise.unwrap_or(config.noise);
    let mut proto_rows = Vec::with_capacity(s_total * config.prototypes_per_subclass);
    let mut subclass_of = Vec::with_capacity(proto_rows.capacity());
    for (s, c) in centroids.iter().enumerate() {
        for _ in 0..config.prototypes_per_subclass {
            proto_rows.push(perturbed(&mut rng, c, proto_noise, None));
            subclass_of.push(s);
        }
    }

    let n = k * config.points_per_class;
    let mut data = Vec::with_capacity(n * d);
    let mut gt = Vec::with_capacity(n);
    let mut gt_subclass = Vec::with_capacity(n);
    for class in 0..k {
        let scale = scaled.then(|| anisotropy[class].as_slice());
        for i in 0..config.points_per_class {
            let s = class * spc + i % spc;
            data.extend(perturbed(&mut rng, &centroids[s], config.noise, scale));
            gt.push(class as u32);
            gt_subclass.push(s as u32);
        }
    }

    let class_names: Vec<String> = (0..k).map(|c| format!("class{c:02}")).collect();
    let subclass_names: Vec<String> = (0..s_total).map(|s| format!("class{:02}_sub{}", s / spc, s % spc)).collect();
    let class_of_subclass: Vec<usize> = (0..s_total).map(|s| s / spc).collect();
    let manifest = PromptManifest {
        classes: class_names.clone(),
        ignore_id: DEFAULT_IGNORE_ID,
        source: Some("synth".into()),
        subclasses: subclass_names
            .iter()
            .zip(&class_of_subclass)
            .map(|(name, &c)| SubclassEntry::new(name.clone(), c, SubclassKind::Thing))
            .collect(),
    };
    let prototypes = FeatureMatrix::from_rows(d, &proto_rows).map_err(|e| SynthError::InvalidConfig(e.to_string()))?;
    let rows = prototypes.rows();
    let bank = PrototypeBank::new(
        prototypes,
        subclass_of,
        vec!["synth".to_string(); rows],
        subclass_names,
        class_of_subclass,
        class_names,
        DEFAULT_IGNORE_ID,
    )
    .map_err(|e| SynthError::InvalidConfig(e.to_string()))?;
    let points = FeatureMatrix::new(n, d, data).map_err(|e| SynthError::InvalidConfig(e.to_string()))?;

    Ok(SynthScene {
        manifest,
        bank,
        points,
        gt: LabelArray::new(gt, DEFAULT_IGNORE_ID),
        gt_subclass,
        centroids,
        anisotropy,
    })
}
