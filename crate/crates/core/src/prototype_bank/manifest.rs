use std::collections::HashSet;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::BankError;
use crate::error::{Error, Result};
use crate::DEFAULT_IGNORE_ID;

fn default_ignore_id() -> u32 {
    DEFAULT_IGNORE_ID
}

/// Whether the generator is asked for an isolated object or a full-frame texture.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SubclassKind {
    #[default]
    Thing,
    Stuff,
}

/// Text templates for prompting an image generator.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PromptTemplate {
    Object,
    Stuff,
    ObjectDrive,
    StuffDrive,
}

impl PromptTemplate {
    pub fn default_for(kind: SubclassKind) -> Self {
        match kind {
            SubclassKind::Thing => PromptTemplate::Object,
            SubclassKind::Stuff => PromptTemplate::Stuff,
        }
    }

    pub fn render(self, name: &str) -> String {
        let object = || format!("generate an image of {name} with white background");
        let stuff = || format!("generate an image of {name} covering the whole image");
        let drive = |p: String| format!("{p}, similar to what you see along roadsides and in cities");
        match self {
            PromptTemplate::Object => object(),
            PromptTemplate::Stuff => stuff(),
            PromptTemplate::ObjectDrive => drive(object()),
            PromptTemplate::StuffDrive => drive(stuff()),
        }
    }
}

/// Parent class, given either by position in `classes` or by name.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ClassRef {
    Index(usize),
    Name(String),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SubclassEntry {
    pub name: String,
    pub class: ClassRef,
    #[serde(default)]
    pub kind: SubclassKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub template: Option<PromptTemplate>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub prompt: Option<String>,
    /// Patch-feature grids (`.igft`), one per prototype image.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub features: Vec<PathBuf>,
    /// Prototype images (`.ppm`), consumed by cropping before external feature extraction.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub images: Vec<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub source: Option<String>,
}

impl SubclassEntry {
    pub fn new(name: impl Into<String>, class: usize, kind: SubclassKind) -> Self {
        SubclassEntry {
            name: name.into(),
            class: ClassRef::Index(class),
            kind,
            template: None,
            prompt: None,
            features: Vec::new(),
            images: Vec::new(),
            source: None,
        }
    }

    pub fn template(&self) -> PromptTemplate {
        self.template.unwrap_or_else(|| PromptTemplate::default_for(self.kind))
    }

    /// Explicit prompt if present, otherwise the rendered template.
    pub fn prompt_text(&self) -> String {
        self.prompt.clone().unwrap_or_else(|| self.template().render(&self.name))
    }
}

/// Class list and the named subclasses that define each class.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PromptManifest {
    pub classes: Vec<String>,
    #[serde(default = "default_ignore_id")]
    pub ignore_id: u32,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub source: Option<String>,
    pub subclasses: Vec<SubclassEntry>,
}

impl PromptManifest {
    pub fn num_classes(&self) -> usize {
        self.classes.len()
    }

    pub fn num_subclasses(&self) -> usize {
        self.subclasses.len()
    }

    /// Resolves every subclass to its parent class index and checks the manifest invariants.
    pub fn class_of_subclass(&self) -> Result<Vec<usize>, BankError> {
        let mut seen = HashSet::new();
        let mut map = Vec::with_capacity(self.subclasses.len());
        for sub in &self.subclasses {
            if !seen.insert(sub.name.as_str()) {
                return Err(BankError::Manifest(format!("duplicate subclass name {:?}", sub.name)));
            }
            let class = match &sub.class {
                ClassRef::Index(i) if *i < self.classes.len() => *i,
                ClassRef::Index(i) => {
                    return Err(BankError::Manifest(format!(
                        "subclass {:?} refers to class index {i}, only {} classes",
                        sub.name,
                        self.classes.len()
                    )))
                }
                ClassRef::Name(n) => self.classes.iter().position(|c| c == n).ok_or_else(|| {
                    BankError::Manifest(format!("subclass {:?} refers to unknown class {n:?}", sub.name))
                })?,
            };
            map.push(class);
        }
        for (i, class) in self.classes.iter().enumerate() {
            if !map.contains(&i) {
                return Err(BankError::Manifest(format!("class {class:?} has no subclass")));
            }
        }
        Ok(map)
    }

    pub fn validate(&self) -> Result<(), BankError> {
        self.class_of_subclass().map(|_| ())
    }

    pub fn from_json(text: &str) -> serde_json::Result<Self> {
        serde_json::from_str(text)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("manifest serializes")
    }

    /// Loads and validates a manifest. Relative file references are resolved
    /// against the manifest's directory.
    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let mut manifest = Self::from_json(&text).map_err(|source| Error::Json {
            path: path.to_path_buf(),
            source,
        })?;
        manifest.validate()?;
        let base = path.parent().unwrap_or(Path::new(""));
        for sub in &mut manifest.subclasses {
            for p in sub.features.iter_mut().chain(sub.images.iter_mut()) {
                if p.is_relative() {
                    *p = base.join(&*p);
                }
            }
        }
        Ok(manifest)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        std::fs::write(path, self.to_json() + "\n").map_err(|e| Error::io(path, e))
    }

    /// The 16 nuScenes evaluation classes and their 34 prompted subclasses,
    /// without any image or feature references.
    pub fn nuscenes() -> Self {
        use PromptTemplate::*;
        let table: &[(&str, &[(&str, PromptTemplate)])] = &[
            ("pedestrian", &[("pedestrian", Object)]),
            ("bicycle", &[("bicycle", Object)]),
            ("bus", &[("bus", Object)]),
            ("car", &[("car", Object), ("van", Object)]),
            ("construction vehicle", &[("construction vehicle", Object)]),
            ("motorcycle", &[("motorcycle", Object)]),
            ("trailer", &[("trailer", Object)]),
            (
                "truck",
                &[
                    ("truck", Object),
                    ("lorry with open cargo cab", Object),
                    ("lorry with closed cargo cab", Object),
                    ("lorry with open high cargo cab", Object),
                ],
            ),
            ("barrier", &[("concrete barrier", Object)]),
            ("traffic cone", &[("traffic cone", Object)]),
            ("driveable surface", &[("road", Stuff)]),
            ("other flat", &[("traffic island", Object)]),
            ("sidewalk", &[("sidewalk without objects on it", Stuff)]),
            (
                "terrain",
                &[
                    ("green terrain", StuffDrive),
                    ("less green and soil terrain", StuffDrive),
                    ("soil terrain", StuffDrive),
                ],
            ),
            (
                "manmade",
                &[
                    ("wall", Stuff),
                    ("concrete stairs", ObjectDrive),
                    ("traffic light", ObjectDrive),
                    ("traffic sign", ObjectDrive),
                    ("pole", ObjectDrive),
                    ("fire hydrant", ObjectDrive),
                    ("2-3 skyscrapers close to each other", ObjectDrive),
                    ("house", ObjectDrive),
                    ("apartments", ObjectDrive),
                ],
            ),
            (
                "vegetation",
                &[
                    ("bush", ObjectDrive),
                    ("shrub", ObjectDrive),
                    ("horizontal vegetation that includes shrub and bushes", ObjectDrive),
                    ("woods", ObjectDrive),
                    ("tree trunk", Object),
                ],
            ),
        ];
        let mut classes = Vec::new();
        let mut subclasses = Vec::new();
        for (ci, (class, subs)) in table.iter().enumerate() {
            classes.push(class.to_string());
            for &(name, template) in subs.iter() {
                let kind = match template {
                    Stuff | StuffDrive => SubclassKind::Stuff,
                    Object | ObjectDrive => SubclassKind::Thing,
                };
                let mut entry = SubclassEntry::new(name, ci, kind);
                entry.template = Some(template);
                subclasses.push(entry);
            }
        }
        PromptManifest {
            classes,
            ignore_id: DEFAULT_IGNORE_ID,
            source: None,
            subclasses,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn nuscenes_shape() {
        let m = PromptManifest::nuscenes();
        assert_eq!(m.num_classes(), 16);
        assert_eq!(m.num_subclasses(), 34);
        let map = m.class_of_subclass().unwrap();
        assert_eq!(map.iter().filter(|&&c| c == 14).count(), 9);
        let hydrant = m.subclasses.iter().find(|s| s.name == "fire hydrant").unwrap();
        assert_eq!(
            hydrant.prompt_text(),
            "generate an image of fire hydrant with white background, similar to what you see along roadsides and in cities"
        );
        let road = &m.subclasses[map.iter().position(|&c| c == 10).unwrap()];
        assert_eq!(road.prompt_text(), "generate an image of road covering the whole image");
    }

    #[test]
    fn parses_schema_with_names_and_indices() {
        let text = r#"{
            "classes": ["car", "vegetation"],
            "subclasses": [
                {"name": "car", "class": 0, "kind": "thing", "prompt": "a car", "features": ["car0.igft"]},
                {"name": "bush", "class": "vegetation", "kind": "stuff", "images": ["bush.ppm"]}
            ]
        }"#;
        let m = PromptManifest::from_json(text).unwrap();
        assert_eq!(m.ignore_id, u32::MAX);
        assert_eq!(m.class_of_subclass().unwrap(), vec![0, 1]);
        assert_eq!(m.subclasses[1].kind, SubclassKind::Stuff);
        let back = PromptManifest::from_json(&m.to_json()).unwrap();
        assert_eq!(back, m);
    }

    #[test]
    fn invariant_violations() {
        let mut m = PromptManifest::nuscenes();
        m.subclasses[1].name = m.subclasses[0].name.clone();
        assert!(m.validate().is_err());

        let mut m = PromptManifest::nuscenes();
        m.subclasses[0].class = ClassRef::Index(16);
        assert!(m.validate().is_err());

        let mut m = PromptManifest::nuscenes();
        m.classes.push("orphan".into());
        assert!(m.validate().is_err());
    }
}
