use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::label::ClassLabel;
use crate::error::{Error, Result};
use crate::pca::PcaClassModel;

pub const FORMAT_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelRecord {
    pub phase: u8,
    pub format_version: u32,
    #[serde(flatten)]
    pub model: PcaClassModel,
}

/// Trained class models keyed by phase.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelBundle {
    pub format_version: u32,
    pub phases: BTreeMap<String, Vec<ModelRecord>>,
}

impl Default for ModelBundle {
    fn default() -> Self {
        Self {
            format_version: FORMAT_VERSION,
            phases: BTreeMap::new(),
        }
    }
}

impl ModelBundle {
    pub fn new() -> Self {
        Self::default()
    }

    /// Adds or replaces the model for its class.
    pub fn insert(&mut self, model: PcaClassModel) -> Result<()> {
        let label: ClassLabel = model.class_label.parse()?;
        if model.n != label.dimension() {
            return Err(Error::Schema(format!(
                "class {label} needs dimension {}, model has {}",
                label.dimension(),
                model.n
            )));
        }
        let phase = label.phase();
        let list = self.phases.entry(phase.to_string()).or_default();
        list.retain(|r| r.model.class_label != model.class_label);
        list.push(ModelRecord {
            phase,
            format_version: FORMAT_VERSION,
            model,
        });
        list.sort_by_key(|r| r.model.class_label.parse::<ClassLabel>().map(|c| c.ordinal()).unwrap_or(usize::MAX));
        Ok(())
    }

    pub fn merge(&mut self, other: ModelBundle) -> Result<()> {
        for r in other.phases.into_values().flatten() {
            self.insert(r.model)?;
        }
        Ok(())
    }

    pub fn get(&self, label: ClassLabel) -> Option<&PcaClassModel> {
        let name = label.to_string();
        self.phases
            .get(&label.phase().to_string())?
            .iter()
            .map(|r| &r.model)
            .find(|m| m.class_label == name)
    }

    /// Models for `labels`, in that order.
    pub fn require(&self, labels: &[ClassLabel]) -> Result<Vec<&PcaClassModel>> {
        labels
            .iter()
            .map(|&l| {
                self.get(l)
                    .ok_or_else(|| Error::Configuration(format!("model bundle has no model for class {l}")))
            })
            .collect()
    }

    pub fn require_phase(&self, phase: u8) -> Result<Vec<&PcaClassModel>> {
        self.require(&ClassLabel::enumerate(phase)?)
    }

    pub fn models(&self) -> impl Iterator<Item = &PcaClassModel> {
        self.phases.values().flatten().map(|r| &r.model)
    }

    pub fn len(&self) -> usize {
        self.phases.values().map(Vec::len).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn is_complete(&self) -> bool {
        ClassLabel::all().into_iter().all(|l| self.get(l).is_some())
    }

    pub fn validate(&self) -> Result<()> {
        if self.format_version != FORMAT_VERSION {
            return Err(Error::Schema(format!(
                "bundle format_version {} is not supported (expected {FORMAT_VERSION})",
                self.format_version
            )));
        }
        for (key, records) in &self.phases {
            for r in records {
                if r.format_version != FORMAT_VERSION {
                    return Err(Error::Schema(format!(
                        "class {}: record format_version {} is not supported",
                        r.model.class_label, r.format_version
                    )));
                }
                let label: ClassLabel = r
                    .model
                    .class_label
                    .parse()
                    .map_err(|e: Error| Error::Schema(e.to_string()))?;
                if key != &r.phase.to_string() || label.phase() != r.phase {
                    return Err(Error::Schema(format!(
                        "class {label} is filed under phase {key} but belongs to phase {}",
                        label.phase()
                    )));
                }
                if r.model.n != label.dimension() {
                    return Err(Error::Schema(format!("class {label}: dimension {} is wrong", r.model.n)));
                }
                r.model.validate()?;
            }
        }
        Ok(())
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let b: ModelBundle =
            serde_json::from_str(text).map_err(|e| Error::Schema(format!("model bundle: {e}")))?;
        b.validate()?;
        Ok(b)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_json()?)
            .map_err(|e| Error::from(e).context(format!("writing {}", path.display())))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::from(e).context(format!("reading {}", path.display())))?;
        Self::from_json(&text).map_err(|e| e.context(format!("loading {}", path.display())))
    }
}
