use std::collections::HashMap;

use super::dataset::DatasetRow;
use super::map_ordered;
use super::suite::{detection_seeds, trial_seed, ScenarioSuite, SuiteClass, SuiteKind};
use crate::detector::{ClassLabel, Measurements, Verdict};
use crate::error::Result;
use crate::features::{FeatureVector, InjectionMode};
use crate::netmodel::{solve_currents, BreakageSpec, SectionModel, SoilKind, Track};
use crate::signal::{kasami_code, measure_features, point_magnitudes, KasamiCode};

type CacheKey = (SoilKind, Vec<BreakageSpec>, InjectionMode);

/// Noise-free measurement amplitudes, solved once per (soil, breakage set,
/// injection mode).
pub struct AmplitudeCache {
    base: SectionModel,
    map: HashMap<CacheKey, Vec<f64>>,
}

impl AmplitudeCache {
    pub fn new(base: SectionModel) -> Self {
        Self {
            base,
            map: HashMap::new(),
        }
    }

    fn key(soil: SoilKind, breakages: &[BreakageSpec], mode: InjectionMode) -> CacheKey {
        let mut b = breakages.to_vec();
        b.sort();
        (soil, b, mode)
    }

    /// Solves every missing key.
    pub fn fill(&mut self, keys: impl IntoIterator<Item = (SoilKind, Vec<BreakageSpec>, InjectionMode)>) -> Result<()> {
        let mut todo: Vec<CacheKey> = keys
            .into_iter()
            .map(|(s, b, m)| Self::key(s, &b, m))
            .filter(|k| !self.map.contains_key(k))
            .collect();
        todo.sort();
        todo.dedup();
        let base = &self.base;
        let solved = map_ordered(&todo, |(soil, b, mode)| -> Result<Vec<f64>> {
            let model = base.apply_soil(&soil.preset()).with_breakages(b.iter().copied());
            Ok(point_magnitudes(&solve_currents(&model, *mode)?, *mode))
        });
        for (k, v) in todo.into_iter().zip(solved) {
            self.map.insert(k, v?);
        }
        Ok(())
    }

    pub fn get(&mut self, soil: SoilKind, breakages: &[BreakageSpec], mode: InjectionMode) -> Result<&[f64]> {
        let k = Self::key(soil, breakages, mode);
        if !self.map.contains_key(&k) {
            self.fill([k.clone()])?;
        }
        Ok(&self.map[&k])
    }

    fn lookup(&self, soil: SoilKind, breakages: &[BreakageSpec], mode: InjectionMode) -> &[f64] {
        &self.map[&Self::key(soil, breakages, mode)]
    }
}

fn training_mode(class: &SuiteClass) -> InjectionMode {
    match class.label {
        Some(l @ ClassLabel::Status { .. }) => InjectionMode::Independent(l.track()),
        _ => InjectionMode::Joint,
    }
}

struct Item<'a> {
    soil: SoilKind,
    class: &'a SuiteClass,
    snr_index: usize,
    trial: usize,
}

/// Generates the suite's dataset. Rows come out in canonical order (soil,
/// class, SNR, trial) regardless of how the work is scheduled.
pub fn simulate(suite: &ScenarioSuite) -> Result<Vec<DatasetRow>> {
    suite.validate()?;
    let base = suite.base_model()?;
    let classes = suite.expand_classes()?;
    let code = kasami_code(suite.code_degree, 0)?;

    let mut cache = AmplitudeCache::new(base);
    let mut keys = Vec::new();
    for &soil in &suite.soils {
        for c in &classes {
            for s in &c.scenarios {
                match suite.kind {
                    SuiteKind::Training => keys.push((soil, s.clone(), training_mode(c))),
                    SuiteKind::Detection => {
                        for mode in [
                            InjectionMode::Independent(Track::One),
                            InjectionMode::Independent(Track::Two),
                            InjectionMode::Joint,
                        ] {
                            keys.push((soil, s.clone(), mode));
                        }
                    }
                }
            }
        }
    }
    cache.fill(keys)?;

    let mut items = Vec::new();
    for &soil in &suite.soils {
        for c in &classes {
            for snr_index in 0..suite.snr_list_db.len() {
                for trial in 0..suite.trials_per_snr {
                    items.push(Item {
                        soil,
                        class: c,
                        snr_index,
                        trial,
                    });
                }
            }
        }
    }
    let rows = map_ordered(&items, |it| trial_rows(suite, &cache, &code, it));
    Ok(rows.into_iter().collect::<Result<Vec<_>>>()?.into_iter().flatten().collect())
}

fn trial_rows(suite: &ScenarioSuite, cache: &AmplitudeCache, code: &KasamiCode, it: &Item<'_>) -> Result<Vec<DatasetRow>> {
    let c = it.class;
    let counter = it.snr_index * suite.trials_per_snr + it.trial;
    let breakages = &c.scenarios[counter % c.scenarios.len()];
    let snr = suite.snr_list_db[it.snr_index];
    let seed = trial_seed(suite.seed_base, &c.name, it.snr_index, it.trial);
    let scenario_id = format!("{}/{}/{}/{}", it.soil, c.name, it.snr_index, it.trial);
    let row = |class: String, phase: u8, mode: InjectionMode, seed: u64| -> Result<DatasetRow> {
        let f = measure_features(mode, cache.lookup(it.soil, breakages, mode), code, snr, seed)?;
        Ok(DatasetRow {
            scenario_id: scenario_id.clone(),
            class,
            phase,
            soil: it.soil,
            snr_db: snr,
            seed,
            features: f.components,
        })
    };
    match suite.kind {
        SuiteKind::Training => {
            let label = c.label.expect("training classes are labels");
            Ok(vec![row(c.name.clone(), label.phase(), training_mode(c), seed)?])
        }
        SuiteKind::Detection => {
            let truth = Verdict::expected(breakages)?;
            let seeds = detection_seeds(seed);
            let mut rows = Vec::with_capacity(3);
            for (k, track) in Track::ALL.into_iter().enumerate() {
                let status = ClassLabel::Status {
                    track,
                    broken: breakages.iter().any(|b| b.track == track),
                };
                rows.push(row(status.to_string(), 1, InjectionMode::Independent(track), seeds[k])?);
            }
            rows.push(row(truth.to_string(), truth.terminal_phase(), InjectionMode::Joint, seeds[2])?);
            Ok(rows)
        }
    }
}

/// The three measurements of one detection trial, using the same seed
/// derivation as detection datasets.
pub fn scenario_measurements(
    cache: &mut AmplitudeCache,
    soil: SoilKind,
    breakages: &[BreakageSpec],
    code: &KasamiCode,
    snr_db: f64,
    seed: u64,
) -> Result<Measurements> {
    let seeds = detection_seeds(seed);
    let mut measure = |mode: InjectionMode, seed: u64| -> Result<FeatureVector> {
        let amps = cache.get(soil, breakages, mode)?.to_vec();
        measure_features(mode, &amps, code, snr_db, seed)
    };
    let x1 = measure(InjectionMode::Independent(Track::One), seeds[0])?;
    let x2 = measure(InjectionMode::Independent(Track::Two), seeds[1])?;
    let joint = measure(InjectionMode::Joint, seeds[2])?;
    Ok(Measurements {
        independent: [x1, x2],
        joint,
    })
}
