//! wasm-bindgen bindings for the static demo page in `www/`.
//!
//! Everything crosses the boundary as JSON strings so the page needs no
//! bundler or generated typings beyond the wasm-bindgen glue.

use railpca::detector::{detect, ModelBundle};
use railpca::features::symbol_map;
use railpca::harness::{scenario_measurements, simulate, sweep_rmse, train_bundle, AmplitudeCache, ScenarioSuite, SuiteKind};
use railpca::netmodel::{parse_breakage_set, SectionModel, SoilKind};
use railpca::pca::TrainOptions;
use railpca::signal::{kasami_code, KasamiCode};
use serde::Serialize;
use wasm_bindgen::prelude::*;

/// Short code so training and detection stay interactive in the browser.
pub const DEMO_DEGREE: u32 = 10;
const DEMO_TRIALS: usize = 40;
const DEMO_SNRS: [f64; 3] = [-5.0, 0.0, 5.0];

fn js(e: railpca::Error) -> JsError {
    JsError::new(&e.to_string())
}

fn to_json<T: Serialize>(v: &T) -> Result<String, JsError> {
    serde_json::to_string(v).map_err(|e| JsError::new(&e.to_string()))
}

/// A detector trained in the page for one soil preset.
#[wasm_bindgen]
pub struct Demo {
    soil: SoilKind,
    code: KasamiCode,
    cache: AmplitudeCache,
    bundle: ModelBundle,
}

#[derive(Serialize)]
struct Currents<'a> {
    mode: String,
    symbols: Vec<&'a str>,
    values: &'a [f64],
}

#[wasm_bindgen]
impl Demo {
    /// Simulates a training suite for every class and fits the bundle.
    #[wasm_bindgen(constructor)]
    pub fn new(soil: &str) -> Result<Demo, JsError> {
        let soil: SoilKind = soil.parse().map_err(js)?;
        let mut suite = ScenarioSuite::new(SuiteKind::Training, ["all"]);
        suite.snr_list_db = DEMO_SNRS.to_vec();
        suite.trials_per_snr = DEMO_TRIALS;
        suite.soils = vec![soil];
        suite.seed_base = 1;
        suite.code_degree = DEMO_DEGREE;
        let rows = simulate(&suite).map_err(js)?;
        let (bundle, _) = train_bundle(&rows, &[1, 2, 3], Some(soil), &TrainOptions::default()).map_err(js)?;
        Ok(Demo {
            soil,
            code: kasami_code(DEMO_DEGREE, 0).map_err(js)?,
            cache: AmplitudeCache::new(SectionModel::default()),
            bundle,
        })
    }

    /// Per-class order and RMSE at that order, as JSON.
    pub fn models(&self) -> Result<String, JsError> {
        #[derive(Serialize)]
        struct Row<'a> {
            class: &'a str,
            m: usize,
            rmse: f64,
        }
        let rows: Vec<Row> = self
            .bundle
            .models()
            .map(|m| Row {
                class: &m.class_label,
                m: m.m,
                rmse: m.rmse_at_m,
            })
            .collect();
        to_json(&rows)
    }

    /// Measured feature vectors of the three injections for a breakage set
    /// such as `R1e3/4`, `R1i2/4+R2e1/4` or `healthy`.
    pub fn simulate(&mut self, scenario: &str, snr_db: f64, seed: u64) -> Result<String, JsError> {
        let breakages = parse_breakage_set(scenario).map_err(js)?;
        let m = scenario_measurements(&mut self.cache, self.soil, &breakages, &self.code, snr_db, seed).map_err(js)?;
        let all = [&m.independent[0], &m.independent[1], &m.joint];
        let out: Vec<Currents> = all
            .iter()
            .map(|fv| Currents {
                mode: fv.mode.to_string(),
                symbols: symbol_map(fv.mode).into_iter().map(|e| e.symbol).collect(),
                values: &fv.components,
            })
            .collect();
        to_json(&out)
    }

    /// Runs the three-phase detector; returns `{"report": .., "text": ..}`.
    pub fn classify(&mut self, scenario: &str, snr_db: f64, seed: u64) -> Result<String, JsError> {
        let breakages = parse_breakage_set(scenario).map_err(js)?;
        let m = scenario_measurements(&mut self.cache, self.soil, &breakages, &self.code, snr_db, seed).map_err(js)?;
        let report = detect(&self.bundle, &m).map_err(js)?;
        to_json(&serde_json::json!({
            "report": report,
            "text": report.render_text(),
            "exit_code": report.exit_code(),
        }))
    }
}

/// RMSE(m) for m = 0..=n of one class at one SNR, as `[{"m":..,"rmse":..}]`.
#[wasm_bindgen]
pub fn rmse_curve(class: &str, soil: &str, snr_db: f64, trials: usize) -> Result<String, JsError> {
    let mut suite = ScenarioSuite::new(SuiteKind::Training, [class]);
    suite.snr_list_db = vec![snr_db];
    suite.trials_per_snr = trials;
    suite.soils = vec![soil.parse().map_err(js)?];
    suite.code_degree = DEMO_DEGREE;
    let rows = sweep_rmse(&suite).map_err(js)?;
    let pts: Vec<_> = rows.iter().map(|r| serde_json::json!({"m": r.m, "rmse": r.rmse})).collect();
    to_json(&pts)
}
