use std::collections::{BTreeMap, BTreeSet, HashSet};

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::dataset::DatasetRow;
use super::map_ordered;
use crate::detector::{
    decide_phase2, decide_phase3, detect, select_class, ClassLabel, DetectionReport, Measurements, ModelBundle,
    Verdict, HIGH_CONFIDENCE_MARGIN,
};
use crate::error::{Error, Result};
use crate::features::FeatureVector;
use crate::netmodel::{Rail, Track};
use crate::pca::{dispersion_stats, score, ClassScore, PcaClassModel};

/// Default seed of the label permutation used by the shuffled-label sanity run.
pub const SHUFFLE_SEED: u64 = 0x5EED;

const MARGIN_BINS: [f64; 7] = [1e-4, 1e-3, 1e-2, 0.05, 0.1, 0.5, 1.0];

/// Outcome of one test case: a detection scenario (three rows) or a
/// single row classified within its own phase.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CaseResult {
    pub scenario_id: String,
    pub truth: String,
    pub predicted: String,
    pub snr_db: f64,
    pub phase: u8,
    pub margin: f64,
    /// T² of the true class's own model exceeded its threshold.
    pub t2_outlier: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HistogramBin {
    pub upper: f64,
    pub count: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MarginStats {
    pub threshold: f64,
    /// Share of cases whose margin is below the threshold.
    pub below_threshold: f64,
    pub median: f64,
    pub max: f64,
    pub histogram: Vec<HistogramBin>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DispersionEntry {
    pub class: String,
    pub feature: usize,
    pub sigma: f64,
    pub mu: f64,
    pub d: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvaluationSummary {
    pub cases: usize,
    pub labels: Vec<String>,
    /// Rows are true labels, columns predicted labels, both in `labels` order.
    pub confusion: Vec<Vec<usize>>,
    pub success_rate: f64,
    pub success_by_snr: BTreeMap<String, f64>,
    pub margins: MarginStats,
    pub t2_outlier_rate: BTreeMap<String, f64>,
    pub dispersion: Vec<DispersionEntry>,
    /// Success rate after randomly permuting the true labels.
    pub shuffled_success_rate: f64,
}

impl EvaluationSummary {
    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }
}

/// Refuses test rows that share a (class, snr, seed) triple with any
/// training vector recorded in the bundle.
pub fn check_disjoint(bundle: &ModelBundle, rows: &[DatasetRow]) -> Result<()> {
    let train: HashSet<(&str, u64, u64)> = bundle
        .models()
        .flat_map(|m| {
            m.provenance
                .iter()
                .map(move |p| (m.class_label.as_str(), p.snr_db.to_bits(), p.seed))
        })
        .collect();
    let shared = rows
        .iter()
        .filter(|r| train.contains(&(r.class.as_str(), r.snr_db.to_bits(), r.seed)))
        .count();
    if shared > 0 {
        return Err(Error::Configuration(format!(
            "test data shares {shared} (class, snr, seed) triples with the training data; use a different seed_base"
        )));
    }
    Ok(())
}

fn group(rows: &[DatasetRow]) -> Vec<Vec<&DatasetRow>> {
    let mut order: Vec<&str> = Vec::new();
    let mut map: BTreeMap<&str, Vec<&DatasetRow>> = BTreeMap::new();
    for r in rows {
        let e = map.entry(&r.scenario_id).or_default();
        if e.is_empty() {
            order.push(&r.scenario_id);
        }
        e.push(r);
    }
    order.into_iter().map(|k| map.remove(k).unwrap()).collect()
}

fn own_t2(model: Option<&PcaClassModel>, x: &FeatureVector) -> Result<bool> {
    Ok(match model {
        Some(m) => score(m, x.as_slice())?.exceeds_t2(),
        None => false,
    })
}

fn detection_case(bundle: &ModelBundle, rows: &[&DatasetRow]) -> Result<(CaseResult, DetectionReport)> {
    let bad = || {
        Error::Schema(format!(
            "scenario {} needs rows for independent track 1, track 2 and joint injection",
            rows[0].scenario_id
        ))
    };
    let mut ind: [Option<FeatureVector>; 2] = [None, None];
    let mut joint = None;
    let mut joint_row = None;
    for r in rows {
        let x = r.feature_vector()?;
        match x.mode {
            crate::features::InjectionMode::Independent(t) => ind[t.number() as usize - 1] = Some(x),
            crate::features::InjectionMode::Joint => {
                joint = Some(x);
                joint_row = Some(*r);
            }
        }
    }
    let [Some(x1), Some(x2)] = ind else { return Err(bad()) };
    let (Some(joint), Some(jr)) = (joint, joint_row) else { return Err(bad()) };
    let truth: Verdict = jr
        .class
        .parse()
        .map_err(|e: Error| Error::Configuration(format!("scenario {}: {e}", jr.scenario_id)))?;
    let input = Measurements {
        independent: [x1, x2],
        joint,
    };
    let report = detect(bundle, &input)?;
    let t2_outlier = match truth {
        Verdict::Healthy | Verdict::BothTracks => {
            let broken = truth == Verdict::BothTracks;
            let mut any = false;
            for (t, x) in Track::ALL.iter().zip(&input.independent) {
                any |= own_t2(bundle.get(ClassLabel::Status { track: *t, broken }), x)?;
            }
            any
        }
        Verdict::Class(l) => own_t2(bundle.get(l), &input.joint)?,
    };
    Ok((
        CaseResult {
            scenario_id: jr.scenario_id.clone(),
            truth: truth.to_string(),
            predicted: report.verdict.to_string(),
            snr_db: jr.snr_db,
            phase: truth.terminal_phase(),
            margin: report.confidence_margin,
            t2_outlier,
        },
        report,
    ))
}

fn scores(models: &[&PcaClassModel], x: &[f64]) -> Result<Vec<ClassScore>> {
    models.iter().map(|m| score(m, x)).collect()
}

fn phase_case(bundle: &ModelBundle, row: &DatasetRow) -> Result<CaseResult> {
    let label: ClassLabel = row
        .class
        .parse()
        .map_err(|e: Error| Error::Configuration(format!("row {}: {e}", row.scenario_id)))?;
    let x = row.feature_vector()?;
    let track = label.track();
    let (predicted, margin) = match label {
        ClassLabel::Status { .. } => {
            let pair = [ClassLabel::Status { track, broken: false }, ClassLabel::Status { track, broken: true }];
            let s = select_class(&scores(&bundle.require(&pair)?, x.as_slice())?)?;
            (s.winner, s.margin)
        }
        ClassLabel::Rails { .. } => {
            let d = decide_phase2(&scores(&bundle.require_phase(2)?, x.as_slice())?, track)?;
            (d.decision, d.margin)
        }
        ClassLabel::Zone(b) => {
            let prior: (Track, Rail) = (b.track, b.rail);
            let (d, _) = decide_phase3(&scores(&bundle.require_phase(3)?, x.as_slice())?, prior)?;
            (d.decision, d.margin)
        }
    };
    Ok(CaseResult {
        scenario_id: row.scenario_id.clone(),
        truth: row.class.clone(),
        predicted: predicted.to_string(),
        snr_db: row.snr_db,
        phase: label.phase(),
        margin,
        t2_outlier: own_t2(bundle.get(label), &x)?,
    })
}

/// Classifies every case of a labelled dataset.
pub fn run_cases(bundle: &ModelBundle, rows: &[DatasetRow]) -> Result<Vec<CaseResult>> {
    let groups = group(rows);
    let results = map_ordered(&groups, |g| -> Result<CaseResult> {
        match g.len() {
            1 => phase_case(bundle, g[0]),
            3 => detection_case(bundle, g).map(|(c, _)| c),
            n => Err(Error::Schema(format!("scenario {} has {n} rows (expected 1 or 3)", g[0].scenario_id))),
        }
    });
    results.into_iter().collect()
}

fn median(v: &mut [f64]) -> f64 {
    if v.is_empty() {
        return 0.0;
    }
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

/// Per class and feature σ, μ and D over the dataset rows.
pub fn dispersion_table(rows: &[DatasetRow]) -> Vec<DispersionEntry> {
    let mut by_class: BTreeMap<(&str, usize), Vec<&DatasetRow>> = BTreeMap::new();
    for r in rows {
        by_class.entry((&r.class, r.features.len())).or_default().push(r);
    }
    let mut out = Vec::new();
    for ((class, n), rs) in by_class {
        for f in 0..n {
            let vals: Vec<f64> = rs.iter().map(|r| r.features[f]).collect();
            if let Ok((sigma, mu, d)) = dispersion_stats(&vals) {
                out.push(DispersionEntry {
                    class: class.to_string(),
                    feature: f + 1,
                    sigma,
                    mu,
                    d,
                });
            }
        }
    }
    out
}

pub fn summarize(cases: &[CaseResult], rows: &[DatasetRow], shuffle_seed: u64) -> EvaluationSummary {
    let labels: Vec<String> = cases
        .iter()
        .flat_map(|c| [c.truth.clone(), c.predicted.clone()])
        .collect::<BTreeSet<_>>()
        .into_iter()
        .collect();
    let idx = |s: &str| labels.iter().position(|l| l == s).unwrap();
    let mut confusion = vec![vec![0usize; labels.len()]; labels.len()];
    for c in cases {
        confusion[idx(&c.truth)][idx(&c.predicted)] += 1;
    }
    let rate = |hits: usize, n: usize| if n == 0 { 0.0 } else { hits as f64 / n as f64 };
    let hits = cases.iter().filter(|c| c.truth == c.predicted).count();

    let mut by_snr: BTreeMap<String, (usize, usize)> = BTreeMap::new();
    for c in cases {
        let e = by_snr.entry(c.snr_db.to_string()).or_default();
        e.0 += usize::from(c.truth == c.predicted);
        e.1 += 1;
    }

    let mut margins: Vec<f64> = cases.iter().map(|c| c.margin).collect();
    let histogram = MARGIN_BINS
        .iter()
        .enumerate()
        .map(|(i, &upper)| {
            let lower = if i == 0 { f64::NEG_INFINITY } else { MARGIN_BINS[i - 1] };
            HistogramBin {
                upper,
                count: margins.iter().filter(|&&m| m > lower && m <= upper).count(),
            }
        })
        .collect();
    let below = margins.iter().filter(|&&m| m < HIGH_CONFIDENCE_MARGIN).count();
    let max = margins.iter().copied().fold(0.0, f64::max);

    let mut t2: BTreeMap<String, (usize, usize)> = BTreeMap::new();
    for c in cases {
        let e = t2.entry(c.truth.clone()).or_default();
        e.0 += usize::from(c.t2_outlier);
        e.1 += 1;
    }

    let mut shuffled: Vec<&str> = cases.iter().map(|c| c.truth.as_str()).collect();
    shuffled.shuffle(&mut ChaCha8Rng::seed_from_u64(shuffle_seed));
    let shuffled_hits = cases.iter().zip(&shuffled).filter(|(c, t)| c.predicted == **t).count();

    EvaluationSummary {
        cases: cases.len(),
        confusion,
        success_rate: rate(hits, cases.len()),
        success_by_snr: by_snr.into_iter().map(|(k, (h, n))| (k, rate(h, n))).collect(),
        margins: MarginStats {
            threshold: HIGH_CONFIDENCE_MARGIN,
            below_threshold: rate(below, cases.len()),
            median: median(&mut margins),
            max,
            histogram,
        },
        t2_outlier_rate: t2.into_iter().map(|(k, (h, n))| (k, rate(h, n))).collect(),
        dispersion: dispersion_table(rows),
        shuffled_success_rate: rate(shuffled_hits, cases.len()),
        labels,
    }
}

/// Classifies a held-out dataset and summarizes the results.
pub fn evaluate(bundle: &ModelBundle, rows: &[DatasetRow]) -> Result<(EvaluationSummary, Vec<CaseResult>)> {
    evaluate_seeded(bundle, rows, SHUFFLE_SEED)
}

pub fn evaluate_seeded(
    bundle: &ModelBundle,
    rows: &[DatasetRow],
    shuffle_seed: u64,
) -> Result<(EvaluationSummary, Vec<CaseResult>)> {
    if rows.is_empty() {
        return Err(Error::Configuration("test dataset is empty".into()));
    }
    check_disjoint(bundle, rows)?;
    let cases = run_cases(bundle, rows)?;
    Ok((summarize(&cases, rows, shuffle_seed), cases))
}
