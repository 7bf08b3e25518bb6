use std::path::{Path, PathBuf};

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::detector::{ClassLabel, Verdict};
use crate::error::{Error, Result};
use crate::netmodel::{parse_breakage_set, BreakageSpec, SectionModel, SoilKind};
use crate::signal::DEFAULT_DEGREE;

pub const DEFAULT_SNR_LIST_DB: [f64; 5] = [-10.0, -3.0, 0.0, 3.0, 10.0];
pub const DEFAULT_TRIALS_PER_SNR: usize = 100;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SuiteKind {
    /// One row per trial in the class's own injection mode.
    #[default]
    Training,
    /// Three rows per trial (independent track 1, track 2, joint) sharing a
    /// scenario id, labelled with the expected outcome.
    Detection,
}

/// Base section: a path to a `SectionModel` JSON file (relative to the
/// suite file) or the model inline.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ModelRef {
    Path(PathBuf),
    Inline(Box<SectionModel>),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioSuite {
    #[serde(default)]
    pub kind: SuiteKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub model: Option<ModelRef>,
    /// Class labels, breakage sets (`R1e2/4+R2i1/4`), `healthy`, or the
    /// groups `phase1`, `phase2`, `phase3`, `all`.
    pub classes: Vec<String>,
    #[serde(default = "default_snrs", with = "snr_list")]
    pub snr_list_db: Vec<f64>,
    #[serde(default = "default_trials")]
    pub trials_per_snr: usize,
    #[serde(default = "default_soils")]
    pub soils: Vec<SoilKind>,
    #[serde(default)]
    pub seed_base: u64,
    #[serde(default = "default_degree")]
    pub code_degree: u32,
}

fn default_snrs() -> Vec<f64> {
    DEFAULT_SNR_LIST_DB.to_vec()
}

fn default_trials() -> usize {
    DEFAULT_TRIALS_PER_SNR
}

fn default_soils() -> Vec<SoilKind> {
    vec![SoilKind::Dry]
}

fn default_degree() -> u32 {
    DEFAULT_DEGREE
}

/// One entry of the suite after group expansion.
#[derive(Debug, Clone, PartialEq)]
pub struct SuiteClass {
    pub name: String,
    /// Breakage sets cycled through across trials.
    pub scenarios: Vec<Vec<BreakageSpec>>,
    pub label: Option<ClassLabel>,
}

impl ScenarioSuite {
    pub fn new(kind: SuiteKind, classes: impl IntoIterator<Item = impl Into<String>>) -> Self {
        Self {
            kind,
            model: None,
            classes: classes.into_iter().map(Into::into).collect(),
            snr_list_db: default_snrs(),
            trials_per_snr: DEFAULT_TRIALS_PER_SNR,
            soils: default_soils(),
            seed_base: 0,
            code_degree: DEFAULT_DEGREE,
        }
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let s: Self = serde_json::from_str(text).map_err(|e| Error::Configuration(format!("suite: {e}")))?;
        s.validate()?;
        Ok(s)
    }

    /// Reads a suite file and resolves a relative model path against it.
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::from(e).context(format!("reading {}", path.display())))?;
        let mut s = Self::from_json(&text).map_err(|e| e.context(format!("loading {}", path.display())))?;
        if let Some(ModelRef::Path(p)) = &s.model {
            let full = if p.is_relative() {
                path.parent().unwrap_or(Path::new(".")).join(p)
            } else {
                p.clone()
            };
            let text = std::fs::read_to_string(&full)
                .map_err(|e| Error::from(e).context(format!("reading model {}", full.display())))?;
            let model: SectionModel = serde_json::from_str(&text)
                .map_err(|e| Error::Configuration(format!("model {}: {e}", full.display())))?;
            s.model = Some(ModelRef::Inline(Box::new(model)));
        }
        Ok(s)
    }

    pub fn base_model(&self) -> Result<SectionModel> {
        let m = match &self.model {
            None => SectionModel::default(),
            Some(ModelRef::Inline(m)) => (**m).clone(),
            Some(ModelRef::Path(p)) => {
                return Err(Error::Configuration(format!(
                    "model path {} was not resolved; load the suite from a file",
                    p.display()
                )))
            }
        };
        m.validate()?;
        Ok(m)
    }

    pub fn validate(&self) -> Result<()> {
        if self.trials_per_snr < 1 {
            return Err(Error::Configuration("trials_per_snr must be at least 1".into()));
        }
        if self.snr_list_db.is_empty() || self.snr_list_db.iter().any(|s| s.is_nan() || *s == f64::NEG_INFINITY) {
            return Err(Error::Configuration("snr_list_db must be a non-empty list of SNRs".into()));
        }
        if self.soils.is_empty() {
            return Err(Error::Configuration("soils must not be empty".into()));
        }
        if !(4..=16).contains(&self.code_degree) || !self.code_degree.is_multiple_of(2) {
            return Err(Error::Configuration(format!("code_degree must be even in 4..=16, got {}", self.code_degree)));
        }
        self.expand_classes()?;
        Ok(())
    }

    pub fn expand_classes(&self) -> Result<Vec<SuiteClass>> {
        if self.classes.is_empty() {
            return Err(Error::Configuration("suite lists no classes".into()));
        }
        let mut out: Vec<SuiteClass> = Vec::new();
        for name in &self.classes {
            let labels = match name.trim() {
                "all" => Some(ClassLabel::all()),
                "phase1" => Some(ClassLabel::enumerate(1)?),
                "phase2" => Some(ClassLabel::enumerate(2)?),
                "phase3" => Some(ClassLabel::enumerate(3)?),
                _ => None,
            };
            let entries: Vec<SuiteClass> = match labels {
                Some(ls) => ls.into_iter().map(SuiteClass::from_label).collect(),
                None => vec![self.parse_entry(name)?],
            };
            for e in entries {
                if out.iter().any(|o| o.name == e.name) {
                    return Err(Error::Configuration(format!("class {} listed twice", e.name)));
                }
                out.push(e);
            }
        }
        Ok(out)
    }

    fn parse_entry(&self, name: &str) -> Result<SuiteClass> {
        let bad = |e: Error| Error::Configuration(format!("invalid class name '{name}': {e}"));
        if let Ok(label) = name.parse::<ClassLabel>() {
            return Ok(SuiteClass::from_label(label));
        }
        if self.kind == SuiteKind::Training {
            return Err(bad(Error::param("training suites take class labels such as 1OK, 2ie or R1e3/4")));
        }
        let set = parse_breakage_set(name).map_err(bad)?;
        Verdict::expected(&set).map_err(bad)?;
        Ok(SuiteClass {
            name: crate::netmodel::breakage_set_label(&set),
            scenarios: vec![set],
            label: None,
        })
    }

    /// Rows `simulate` will produce.
    pub fn row_count(&self) -> Result<usize> {
        let per_trial = match self.kind {
            SuiteKind::Training => 1,
            SuiteKind::Detection => 3,
        };
        Ok(self.expand_classes()?.len() * self.soils.len() * self.snr_list_db.len() * self.trials_per_snr * per_trial)
    }
}

impl SuiteClass {
    fn from_label(label: ClassLabel) -> Self {
        Self {
            name: label.to_string(),
            scenarios: label.scenarios(),
            label: Some(label),
        }
    }
}

fn splitmix64(z: u64) -> u64 {
    let z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    let z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    let z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

fn fnv1a(s: &str) -> u64 {
    s.bytes()
        .fold(0xcbf2_9ce4_8422_2325, |h, b| (h ^ u64::from(b)).wrapping_mul(0x0100_0000_01b3))
}

/// Counter-based seed for one trial. The class enters by name so a class
/// keeps its seeds when the suite's class list changes.
pub fn trial_seed(seed_base: u64, class: &str, snr_index: usize, trial: usize) -> u64 {
    [fnv1a(class), snr_index as u64, trial as u64]
        .into_iter()
        .fold(splitmix64(seed_base), |h, w| splitmix64(h ^ w))
}

/// Seeds of the three measurements of one detection trial: independent
/// track 1, independent track 2, joint.
pub fn detection_seeds(seed: u64) -> [u64; 3] {
    [splitmix64(seed ^ 1), splitmix64(seed ^ 2), seed]
}

mod snr_list {
    use super::*;

    #[derive(Deserialize)]
    #[serde(untagged)]
    enum Value {
        Num(f64),
        Text(String),
    }

    pub fn serialize<S: Serializer>(v: &[f64], s: S) -> std::result::Result<S::Ok, S::Error> {
        use serde::ser::SerializeSeq;
        let mut seq = s.serialize_seq(Some(v.len()))?;
        for x in v {
            if x.is_finite() {
                seq.serialize_element(x)?;
            } else {
                seq.serialize_element(&x.to_string())?;
            }
        }
        seq.end()
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> std::result::Result<Vec<f64>, D::Error> {
        Vec::<Value>::deserialize(d)?
            .into_iter()
            .map(|v| match v {
                Value::Num(x) => Ok(x),
                Value::Text(t) => t
                    .trim()
                    .trim_start_matches('+')
                    .parse::<f64>()
                    .map_err(|_| serde::de::Error::custom(format!("bad SNR '{t}' (use a number or \"inf\")"))),
            })
            .collect()
    }
}
