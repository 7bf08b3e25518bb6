use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use super::dataset::DatasetRow;
use super::map_ordered;
use crate::detector::{ClassLabel, ModelBundle};
use crate::error::{Error, Result};
use crate::netmodel::SoilKind;
use crate::pca::{train_with, PcaClassModel, Provenance, TrainOptions, TrainingSet};

/// Per-class outcome printed by the train command.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainedClass {
    pub class: String,
    pub k: usize,
    pub m: usize,
    pub rmse_at_m: f64,
    pub flagged: bool,
}

impl From<&PcaClassModel> for TrainedClass {
    fn from(m: &PcaClassModel) -> Self {
        Self {
            class: m.class_label.clone(),
            k: m.k,
            m: m.m,
            rmse_at_m: m.rmse_at_m,
            flagged: m.flagged,
        }
    }
}

/// Soil of the rows, which must agree unless `soil` picks one.
pub fn dataset_soil(rows: &[DatasetRow], soil: Option<SoilKind>) -> Result<SoilKind> {
    if let Some(s) = soil {
        return Ok(s);
    }
    let soils: BTreeSet<SoilKind> = rows.iter().map(|r| r.soil).collect();
    match soils.len() {
        0 => Err(Error::Configuration("dataset is empty".into())),
        1 => Ok(*soils.iter().next().unwrap()),
        _ => Err(Error::Configuration(
            "dataset mixes soil presets; choose one (models are trained per soil)".into(),
        )),
    }
}

/// Gathers the training set of one class from the rows of one soil.
pub fn training_set(rows: &[DatasetRow], label: ClassLabel, soil: SoilKind) -> Result<TrainingSet> {
    let name = label.to_string();
    let mut set = TrainingSet::new(name.clone(), Vec::new());
    for r in rows.iter().filter(|r| r.soil == soil && r.class == name) {
        if r.features.len() != label.dimension() {
            return Err(Error::Schema(format!(
                "row {}: class {name} needs {} features, got {}",
                r.scenario_id,
                label.dimension(),
                r.features.len()
            )));
        }
        set.vectors.push(r.features.clone());
        set.provenance.push(Provenance {
            snr_db: r.snr_db,
            soil: soil.to_string(),
            seed: r.seed,
        });
    }
    if set.vectors.is_empty() {
        return Err(Error::Configuration(format!("dataset has no {soil} rows for class {name}")));
    }
    Ok(set)
}

/// Trains every class of the requested phases. Classes are trained
/// independently and may run in parallel; the bundle is assembled in
/// enumeration order.
pub fn train_bundle(
    rows: &[DatasetRow],
    phases: &[u8],
    soil: Option<SoilKind>,
    opts: &TrainOptions,
) -> Result<(ModelBundle, Vec<TrainedClass>)> {
    let soil = dataset_soil(rows, soil)?;
    let mut labels = Vec::new();
    for &p in phases {
        labels.extend(ClassLabel::enumerate(p)?);
    }
    if labels.is_empty() {
        return Err(Error::Configuration("no phases requested".into()));
    }
    let sets = labels
        .iter()
        .map(|&l| training_set(rows, l, soil))
        .collect::<Result<Vec<_>>>()?;
    let models = map_ordered(&sets, |s| train_with(s, opts));
    let mut bundle = ModelBundle::new();
    let mut report = Vec::new();
    for m in models {
        let m = m?;
        report.push(TrainedClass::from(&m));
        bundle.insert(m)?;
    }
    Ok((bundle, report))
}

/// Phases for which the dataset has at least one labelled row.
pub fn phases_present(rows: &[DatasetRow]) -> Vec<u8> {
    let set: BTreeSet<u8> = rows
        .iter()
        .filter_map(|r| r.class.parse::<ClassLabel>().ok())
        .map(|l| l.phase())
        .collect();
    set.into_iter().collect()
}
