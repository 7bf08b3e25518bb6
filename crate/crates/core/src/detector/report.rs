use std::fmt::{self, Write as _};

use serde::{Deserialize, Serialize};

use super::label::{ClassLabel, Verdict};
use super::HIGH_CONFIDENCE_MARGIN;
use crate::error::{Error, Result};
use crate::features::{FeatureVector, InjectionMode};
use crate::netmodel::Track;
use crate::pca::ClassScore;

/// The three feature vectors one detection run consumes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Measurements {
    /// Independent injection on track 1, then track 2.
    pub independent: [FeatureVector; 2],
    pub joint: FeatureVector,
}

impl Measurements {
    pub fn validate(&self) -> Result<()> {
        for (x, t) in self.independent.iter().zip(Track::ALL) {
            if x.mode != InjectionMode::Independent(t) {
                return Err(Error::param(format!("independent[{}] must come from track {}", t.number() - 1, t.number())));
            }
        }
        if self.joint.mode != InjectionMode::Joint {
            return Err(Error::param("joint measurement must use joint injection"));
        }
        Ok(())
    }
}

/// Scores and decision of one phase (or one track in phase 1).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PhaseDecision {
    /// Every computed score, in table order.
    pub scores: Vec<ClassScore>,
    /// Classes that competed for the decision.
    pub candidates: Vec<ClassLabel>,
    pub decision: ClassLabel,
    pub margin: f64,
    pub tie: bool,
    /// The winner's T² exceeded its threshold.
    pub t2_exceeded: bool,
}

impl PhaseDecision {
    pub fn winning_score(&self) -> &ClassScore {
        let name = self.decision.to_string();
        self.scores.iter().find(|s| s.class_label == name).expect("winner is scored")
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrackStatus {
    pub track: Track,
    pub broken: bool,
    #[serde(flatten)]
    pub decision: PhaseDecision,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PhaseOneOutcome {
    NoBreakage,
    BothBroken,
    TrackBroken(Track),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PhaseOne {
    pub tracks: Vec<TrackStatus>,
    pub outcome: PhaseOneOutcome,
}

impl PhaseOne {
    pub fn broken_tracks(&self) -> Vec<Track> {
        self.tracks.iter().filter(|t| t.broken).map(|t| t.track).collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DetectionReport {
    pub phase1: PhaseOne,
    pub phase2: Option<PhaseDecision>,
    pub phase3: Option<PhaseDecision>,
    pub verdict: Verdict,
    pub terminal_phase: u8,
    /// Best over second-best error at the terminal phase; for a phase-1
    /// stop, the weaker of the two track decisions.
    pub confidence_margin: f64,
    pub high_confidence: bool,
    /// Winning classes whose T² exceeded the threshold.
    pub t2_flags: Vec<ClassLabel>,
    /// Phase-3 winner agrees with the phase-1/2 track and rail.
    pub consistency: bool,
    pub ties: bool,
}

impl DetectionReport {
    pub(super) fn assemble(
        phase1: PhaseOne,
        phase2: Option<PhaseDecision>,
        phase3: Option<PhaseDecision>,
        verdict: Verdict,
        consistency: bool,
    ) -> Self {
        let decisions: Vec<&PhaseDecision> = phase1
            .tracks
            .iter()
            .map(|t| &t.decision)
            .chain(phase2.as_ref())
            .chain(phase3.as_ref())
            .collect();
        let t2_flags = decisions.iter().filter(|d| d.t2_exceeded).map(|d| d.decision).collect();
        let ties = decisions.iter().any(|d| d.tie);
        let (terminal_phase, confidence_margin) = match (&phase2, &phase3) {
            (_, Some(d)) => (3, d.margin),
            (Some(d), None) => (2, d.margin),
            _ => (1, phase1.tracks.iter().map(|t| t.decision.margin).fold(0.0, f64::max)),
        };
        DetectionReport {
            phase1,
            phase2,
            phase3,
            verdict,
            terminal_phase,
            confidence_margin,
            high_confidence: confidence_margin < HIGH_CONFIDENCE_MARGIN,
            t2_flags,
            consistency,
            ties,
        }
    }

    /// 0 no breakage, 1 breakage classified, 2 classified with a low-confidence
    /// or inconsistency flag.
    pub fn exit_code(&self) -> i32 {
        match self.verdict {
            Verdict::Healthy => 0,
            _ if self.high_confidence && self.consistency => 1,
            _ => 2,
        }
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    /// Plain-text tables, one per phase reached.
    pub fn render_text(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "Phase 1 (independent injection)");
        let p1: Vec<ClassScore> = self.phase1.tracks.iter().flat_map(|t| t.decision.scores.clone()).collect();
        table(&mut out, &p1, &[]);
        for t in &self.phase1.tracks {
            let _ = writeln!(
                out,
                "  track {}: {} (margin {})",
                t.track.number(),
                if t.broken { "broken" } else { "not broken" },
                num(t.decision.margin)
            );
        }
        if let Some(d) = &self.phase2 {
            let _ = writeln!(out, "\nPhase 2 (joint injection, rail)");
            table(&mut out, &d.scores, &d.candidates);
            let _ = writeln!(out, "  decision: {} (margin {})", d.decision, num(d.margin));
        }
        if let Some(d) = &self.phase3 {
            let _ = writeln!(out, "\nPhase 3 (joint injection, zone)");
            table(&mut out, &d.scores, &[]);
            let _ = writeln!(out, "  decision: {} (margin {})", d.decision, num(d.margin));
        }
        let mut flags = Vec::new();
        if !self.high_confidence {
            flags.push("low confidence".to_string());
        }
        if !self.consistency {
            flags.push("inconsistent with phase 2".to_string());
        }
        if self.ties {
            flags.push("tie".to_string());
        }
        if !self.t2_flags.is_empty() {
            let names: Vec<String> = self.t2_flags.iter().map(ToString::to_string).collect();
            flags.push(format!("T2 exceeded: {}", names.join(", ")));
        }
        let _ = writeln!(
            out,
            "\nResult: {} at phase {}, margin {}{}",
            self.verdict,
            self.terminal_phase,
            num(self.confidence_margin),
            if flags.is_empty() { String::new() } else { format!(" [{}]", flags.join("; ")) }
        );
        out
    }
}

impl fmt::Display for DetectionReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.render_text())
    }
}

fn num(v: f64) -> String {
    if v == 0.0 || (1e-2..1e7).contains(&v.abs()) {
        format!("{v:.2}")
    } else {
        format!("{v:.3e}")
    }
}

fn table(out: &mut String, scores: &[ClassScore], candidates: &[ClassLabel]) {
    let _ = writeln!(out, "  {:>4}  {:<8} {:>14} {:>12} {:>10}", "j", "class", "error", "T2", "T2 limit");
    for (j, s) in scores.iter().enumerate() {
        let excluded = !candidates.is_empty() && !candidates.iter().any(|c| c.to_string() == s.class_label);
        let _ = writeln!(
            out,
            "  {:>4}  {:<8} {:>14} {:>12} {:>10}{}{}",
            j + 1,
            s.class_label,
            num(s.reconstruction_error),
            num(s.t_squared),
            num(s.t_squared_threshold),
            if s.exceeds_t2() { " *" } else { "" },
            if excluded { " (not considered)" } else { "" }
        );
    }
}
