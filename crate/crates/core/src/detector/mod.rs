//! Three-phase detection: track status from independent injection, broken
//! rail from joint injection, then the breakage zone.

mod bundle;
mod label;
mod report;

pub use bundle::{ModelBundle, ModelRecord, FORMAT_VERSION};
pub use label::{ClassLabel, RailSet, Verdict};
pub use report::{DetectionReport, Measurements, PhaseDecision, PhaseOne, PhaseOneOutcome, TrackStatus};

use crate::error::{Error, Result};
use crate::features::{FeatureVector, InjectionMode};
use crate::netmodel::{Rail, Track};
use crate::pca::{score, ClassScore, PcaClassModel};

/// A decision counts as confident when the winner's error is below this
/// fraction of the runner-up's.
pub const HIGH_CONFIDENCE_MARGIN: f64 = 0.05;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Selection {
    pub winner: ClassLabel,
    /// Position of the winner in the input list.
    pub index: usize,
    /// Winner ε over the smallest loser ε.
    pub margin: f64,
    /// Another class had exactly the winning error.
    pub tie: bool,
}

fn labels_of(scores: &[ClassScore]) -> Result<Vec<ClassLabel>> {
    scores.iter().map(|s| s.class_label.parse()).collect()
}

/// Minimum reconstruction error wins; exact ties go to the class that comes
/// first in enumeration order.
pub fn select_class(scores: &[ClassScore]) -> Result<Selection> {
    if scores.len() < 2 {
        return Err(Error::param(format!("need at least two class scores, got {}", scores.len())));
    }
    let labels = labels_of(scores)?;
    if let Some(s) = scores.iter().find(|s| !(s.reconstruction_error >= 0.0)) {
        return Err(Error::param(format!("class {}: invalid error {}", s.class_label, s.reconstruction_error)));
    }
    let key = |i: usize| (labels[i].phase(), labels[i].ordinal());
    let mut best = 0;
    for i in 1..scores.len() {
        let (a, b) = (scores[i].reconstruction_error, scores[best].reconstruction_error);
        if a < b || (a == b && key(i) < key(best)) {
            best = i;
        }
    }
    let eps = scores[best].reconstruction_error;
    let second = scores
        .iter()
        .enumerate()
        .filter(|&(i, _)| i != best)
        .map(|(_, s)| s.reconstruction_error)
        .fold(f64::INFINITY, f64::min);
    let margin = if second == 0.0 { 1.0 } else { eps / second };
    Ok(Selection {
        winner: labels[best],
        index: best,
        margin,
        tie: second == eps,
    })
}

fn decision(scores: Vec<ClassScore>, candidates: &[usize]) -> Result<PhaseDecision> {
    let subset: Vec<ClassScore> = candidates.iter().map(|&i| scores[i].clone()).collect();
    let sel = select_class(&subset)?;
    let t2_exceeded = subset[sel.index].exceeds_t2();
    Ok(PhaseDecision {
        candidates: subset.iter().map(|s| s.class_label.parse()).collect::<Result<_>>()?,
        scores,
        decision: sel.winner,
        margin: sel.margin,
        tie: sel.tie,
        t2_exceeded,
    })
}

fn expect_order(scores: &[ClassScore], phase: u8) -> Result<()> {
    let want = ClassLabel::enumerate(phase)?;
    let got = labels_of(scores)?;
    if got != want {
        return Err(Error::Configuration(format!(
            "phase {phase} needs scores for {} in order, got {}",
            want.iter().map(ToString::to_string).collect::<Vec<_>>().join(", "),
            got.iter().map(ToString::to_string).collect::<Vec<_>>().join(", ")
        )));
    }
    Ok(())
}

/// Phase-1 rule on the four scores (1OK, 1BR, 2OK, 2BR). Each track is
/// decided on its own pair.
pub fn decide_phase1(scores: &[ClassScore]) -> Result<PhaseOne> {
    expect_order(scores, 1)?;
    let tracks = Track::ALL
        .iter()
        .map(|&track| {
            let base = 2 * (track.number() as usize - 1);
            let d = decision(scores[base..base + 2].to_vec(), &[0, 1])?;
            let broken = matches!(d.decision, ClassLabel::Status { broken: true, .. });
            Ok(TrackStatus { track, broken, decision: d })
        })
        .collect::<Result<Vec<_>>>()?;
    let outcome = match (tracks[0].broken, tracks[1].broken) {
        (false, false) => PhaseOneOutcome::NoBreakage,
        (true, true) => PhaseOneOutcome::BothBroken,
        (true, false) => PhaseOneOutcome::TrackBroken(Track::One),
        (false, true) => PhaseOneOutcome::TrackBroken(Track::Two),
    };
    Ok(PhaseOne { tracks, outcome })
}

/// Phase-2 rule on the six scores in table order. Only the broken track's
/// three classes compete; the others are kept for the report.
pub fn decide_phase2(scores: &[ClassScore], broken_track: Track) -> Result<PhaseDecision> {
    expect_order(scores, 2)?;
    let base = 3 * (broken_track.number() as usize - 1);
    decision(scores.to_vec(), &[base, base + 1, base + 2])
}

/// Phase-3 rule: global argmin over the twelve zone classes, in any order.
/// Returns the decision and whether it agrees with the (track, rail) prior.
pub fn decide_phase3(scores: &[ClassScore], prior: (Track, Rail)) -> Result<(PhaseDecision, bool)> {
    let labels = labels_of(scores)?;
    let mut want = ClassLabel::enumerate(3)?;
    let mut got = labels.clone();
    let key = |c: &ClassLabel| c.ordinal();
    want.sort_by_key(key);
    got.sort_by_key(key);
    if got != want {
        return Err(Error::Configuration("phase 3 needs exactly one score per zone class".into()));
    }
    let all: Vec<usize> = (0..scores.len()).collect();
    let d = decision(scores.to_vec(), &all)?;
    let consistent = match d.decision {
        ClassLabel::Zone(b) => (b.track, b.rail) == prior,
        _ => false,
    };
    Ok((d, consistent))
}

fn score_all(models: &[&PcaClassModel], x: &FeatureVector) -> Result<Vec<ClassScore>> {
    models.iter().map(|m| score(m, x.as_slice())).collect()
}

fn expect_mode(x: &FeatureVector, mode: InjectionMode, what: &str) -> Result<()> {
    if x.mode != mode {
        return Err(Error::param(format!("{what}: expected a {mode} feature vector, got {}", x.mode)));
    }
    Ok(())
}

pub fn run_phase1(models: &ModelBundle, x1: &FeatureVector, x2: &FeatureVector) -> Result<PhaseOne> {
    expect_mode(x1, InjectionMode::Independent(Track::One), "phase 1")?;
    expect_mode(x2, InjectionMode::Independent(Track::Two), "phase 1")?;
    let labels = ClassLabel::enumerate(1)?;
    let set = models.require(&labels)?;
    let mut scores = score_all(&set[..2], x1)?;
    scores.extend(score_all(&set[2..], x2)?);
    decide_phase1(&scores)
}

pub fn run_phase2(models: &ModelBundle, x: &FeatureVector, broken_track: Track) -> Result<PhaseDecision> {
    expect_mode(x, InjectionMode::Joint, "phase 2")?;
    let set = models.require_phase(2)?;
    decide_phase2(&score_all(&set, x)?, broken_track)
}

pub fn run_phase3(models: &ModelBundle, x: &FeatureVector, prior: (Track, Rail)) -> Result<(PhaseDecision, bool)> {
    expect_mode(x, InjectionMode::Joint, "phase 3")?;
    let set = models.require_phase(3)?;
    decide_phase3(&score_all(&set, x)?, prior)
}

/// Runs the phases in order, stopping at the first terminal rule.
pub fn detect(bundle: &ModelBundle, input: &Measurements) -> Result<DetectionReport> {
    let [x1, x2] = &input.independent;
    let phase1 = run_phase1(bundle, x1, x2).map_err(|e| e.context("phase 1"))?;
    let mut phase2 = None;
    let mut phase3 = None;
    let mut consistency = true;
    let verdict = match phase1.outcome {
        PhaseOneOutcome::NoBreakage => Verdict::Healthy,
        PhaseOneOutcome::BothBroken => Verdict::BothTracks,
        PhaseOneOutcome::TrackBroken(track) => {
            let d2 = run_phase2(bundle, &input.joint, track).map_err(|e| e.context("phase 2"))?;
            let rails = match d2.decision {
                ClassLabel::Rails { rails, .. } => rails,
                _ => unreachable!("phase 2 decides a rail class"),
            };
            let v = match rails.single() {
                None => Verdict::Class(d2.decision),
                Some(rail) => {
                    let (d3, ok) = run_phase3(bundle, &input.joint, (track, rail)).map_err(|e| e.context("phase 3"))?;
                    consistency = ok;
                    let v = Verdict::Class(d3.decision);
                    phase3 = Some(d3);
                    v
                }
            };
            phase2 = Some(d2);
            v
        }
    };
    Ok(DetectionReport::assemble(phase1, phase2, phase3, verdict, consistency))
}
