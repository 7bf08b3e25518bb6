use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};
use crate::netmodel::{BreakageSpec, Conductor, Quarter, Rail, Track};

/// Which rails of a track a phase-2 class covers.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum RailSet {
    Internal,
    External,
    Both,
}

impl RailSet {
    /// Phase-2 enumeration order within a track.
    pub const ALL: [RailSet; 3] = [RailSet::Internal, RailSet::External, RailSet::Both];

    pub fn symbol(self) -> &'static str {
        match self {
            RailSet::Internal => "i",
            RailSet::External => "e",
            RailSet::Both => "ie",
        }
    }

    pub fn single(self) -> Option<Rail> {
        match self {
            RailSet::Internal => Some(Rail::Internal),
            RailSet::External => Some(Rail::External),
            RailSet::Both => None,
        }
    }
}

impl From<Rail> for RailSet {
    fn from(r: Rail) -> Self {
        match r {
            Rail::Internal => RailSet::Internal,
            Rail::External => RailSet::External,
        }
    }
}

/// Breakage class at one of the three detection phases.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ClassLabel {
    /// Track status from independent injection.
    Status { track: Track, broken: bool },
    /// Broken rail(s) of one track from joint injection.
    Rails { track: Track, rails: RailSet },
    /// Single breakage located to a zone.
    Zone(BreakageSpec),
}

impl ClassLabel {
    pub fn phase(&self) -> u8 {
        match self {
            ClassLabel::Status { .. } => 1,
            ClassLabel::Rails { .. } => 2,
            ClassLabel::Zone(_) => 3,
        }
    }

    pub fn track(&self) -> Track {
        match *self {
            ClassLabel::Status { track, .. } | ClassLabel::Rails { track, .. } => track,
            ClassLabel::Zone(b) => b.track,
        }
    }

    /// Feature dimension the class is trained on.
    pub fn dimension(&self) -> usize {
        if self.phase() == 1 {
            4
        } else {
            8
        }
    }

    /// Classes of one phase in table order.
    pub fn enumerate(phase: u8) -> Result<Vec<ClassLabel>> {
        Ok(match phase {
            1 => Track::ALL
                .iter()
                .flat_map(|&track| [false, true].map(|broken| ClassLabel::Status { track, broken }))
                .collect(),
            2 => Track::ALL
                .iter()
                .flat_map(|&track| RailSet::ALL.map(|rails| ClassLabel::Rails { track, rails }))
                .collect(),
            3 => Quarter::ALL
                .iter()
                .flat_map(|&q| Conductor::ALL.map(|c| ClassLabel::Zone(BreakageSpec::new(c.track, c.rail, q))))
                .collect(),
            p => return Err(Error::param(format!("phase must be 1, 2 or 3, got {p}"))),
        })
    }

    /// All 22 classes, phase by phase.
    pub fn all() -> Vec<ClassLabel> {
        (1..=3).flat_map(|p| Self::enumerate(p).unwrap()).collect()
    }

    /// Zero-based position within its phase's enumeration.
    pub fn ordinal(&self) -> usize {
        Self::enumerate(self.phase())
            .unwrap()
            .iter()
            .position(|c| c == self)
            .expect("every label is enumerated")
    }

    /// Breakage sets that make up the class when simulated. Phase-1 OK
    /// classes include breakages on the other track, which leave this
    /// track intact.
    pub fn scenarios(&self) -> Vec<Vec<BreakageSpec>> {
        let singles = |t: Track, rails: &[Rail]| -> Vec<Vec<BreakageSpec>> {
            rails
                .iter()
                .flat_map(|&r| Quarter::ALL.map(|q| vec![BreakageSpec::new(t, r, q)]))
                .collect()
        };
        let both = [Rail::Internal, Rail::External];
        match *self {
            ClassLabel::Status { track, broken: false } => {
                let mut v = vec![Vec::new()];
                v.extend(singles(track.other(), &both));
                v
            }
            ClassLabel::Status { track, broken: true } => singles(track, &both),
            ClassLabel::Rails { track, rails } => match rails.single() {
                Some(r) => singles(track, &[r]),
                None => Quarter::ALL
                    .iter()
                    .flat_map(|&qi| {
                        Quarter::ALL.map(|qe| {
                            vec![
                                BreakageSpec::new(track, Rail::Internal, qi),
                                BreakageSpec::new(track, Rail::External, qe),
                            ]
                        })
                    })
                    .collect(),
            },
            ClassLabel::Zone(b) => vec![vec![b]],
        }
    }
}

impl fmt::Display for ClassLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ClassLabel::Status { track, broken } => {
                write!(f, "{}{}", track.number(), if *broken { "BR" } else { "OK" })
            }
            ClassLabel::Rails { track, rails } => write!(f, "{}{}", track.number(), rails.symbol()),
            ClassLabel::Zone(b) => write!(f, "{b}"),
        }
    }
}

impl FromStr for ClassLabel {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        if s.starts_with('R') {
            return Ok(ClassLabel::Zone(s.parse()?));
        }
        let bad = || Error::param(format!("unknown class label '{s}'"));
        let mut chars = s.chars();
        let t = chars.next().and_then(|c| c.to_digit(10)).ok_or_else(bad)?;
        let track = Track::try_from(t as u8).map_err(|_| bad())?;
        Ok(match chars.as_str() {
            "OK" => ClassLabel::Status { track, broken: false },
            "BR" => ClassLabel::Status { track, broken: true },
            "i" => ClassLabel::Rails { track, rails: RailSet::Internal },
            "e" => ClassLabel::Rails { track, rails: RailSet::External },
            "ie" | "ei" => ClassLabel::Rails { track, rails: RailSet::Both },
            _ => return Err(bad()),
        })
    }
}

impl Serialize for ClassLabel {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for ClassLabel {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// Terminal outcome of the whole procedure.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Verdict {
    Healthy,
    BothTracks,
    Class(ClassLabel),
}

impl Verdict {
    /// What a perfect detector reports for a breakage set.
    pub fn expected(breakages: &[BreakageSpec]) -> Result<Self> {
        let on = |t: Track| breakages.iter().filter(|b| b.track == t).collect::<Vec<_>>();
        let (one, two) = (on(Track::One), on(Track::Two));
        for rails in [&one, &two] {
            if rails.len() == 2 && rails[0].rail == rails[1].rail || rails.len() > 2 {
                return Err(Error::param(format!(
                    "at most one breakage per rail: {}",
                    crate::netmodel::breakage_set_label(breakages)
                )));
            }
        }
        Ok(match (one.len(), two.len()) {
            (0, 0) => Verdict::Healthy,
            (a, b) if a > 0 && b > 0 => Verdict::BothTracks,
            _ => {
                let rails = if one.is_empty() { two } else { one };
                if rails.len() == 2 {
                    Verdict::Class(ClassLabel::Rails {
                        track: rails[0].track,
                        rails: RailSet::Both,
                    })
                } else {
                    Verdict::Class(ClassLabel::Zone(*rails[0]))
                }
            }
        })
    }

    pub fn terminal_phase(&self) -> u8 {
        match self {
            Verdict::Healthy | Verdict::BothTracks => 1,
            Verdict::Class(c) => c.phase(),
        }
    }
}

impl fmt::Display for Verdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Verdict::Healthy => f.write_str("healthy"),
            Verdict::BothTracks => f.write_str("both-tracks"),
            Verdict::Class(c) => c.fmt(f),
        }
    }
}

impl FromStr for Verdict {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "healthy" => Ok(Verdict::Healthy),
            "both-tracks" => Ok(Verdict::BothTracks),
            other => Ok(Verdict::Class(other.parse()?)),
        }
    }
}

impl Serialize for Verdict {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for Verdict {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}
