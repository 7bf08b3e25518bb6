use std::fmt;
use std::str::FromStr;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::params::{SegmentParams, SoilPreset};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(try_from = "u8", into = "u8")]
pub enum Track {
    One,
    Two,
}

impl Track {
    pub const ALL: [Track; 2] = [Track::One, Track::Two];

    pub fn number(self) -> u8 {
        match self {
            Track::One => 1,
            Track::Two => 2,
        }
    }

    pub fn other(self) -> Track {
        match self {
            Track::One => Track::Two,
            Track::Two => Track::One,
        }
    }
}

impl TryFrom<u8> for Track {
    type Error = Error;

    fn try_from(n: u8) -> Result<Self> {
        match n {
            1 => Ok(Track::One),
            2 => Ok(Track::Two),
            other => Err(Error::param(format!("track must be 1 or 2, got {other}"))),
        }
    }
}

impl From<Track> for u8 {
    fn from(t: Track) -> u8 {
        t.number()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Rail {
    #[serde(rename = "e")]
    External,
    #[serde(rename = "i")]
    Internal,
}

impl Rail {
    pub fn symbol(self) -> char {
        match self {
            Rail::External => 'e',
            Rail::Internal => 'i',
        }
    }
}

impl TryFrom<char> for Rail {
    type Error = Error;

    fn try_from(c: char) -> Result<Self> {
        match c {
            'e' => Ok(Rail::External),
            'i' => Ok(Rail::Internal),
            other => Err(Error::param(format!("rail must be 'e' or 'i', got '{other}'"))),
        }
    }
}

/// One of the four rails. Index order is the geometric order across the
/// double track, which is also the feature-vector order: [1e, 1i, 2i, 2e].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Conductor {
    pub track: Track,
    pub rail: Rail,
}

impl Conductor {
    pub const ALL: [Conductor; 4] = [
        Conductor::new(Track::One, Rail::External),
        Conductor::new(Track::One, Rail::Internal),
        Conductor::new(Track::Two, Rail::Internal),
        Conductor::new(Track::Two, Rail::External),
    ];

    pub const fn new(track: Track, rail: Rail) -> Self {
        Self { track, rail }
    }

    pub fn index(self) -> usize {
        match (self.track, self.rail) {
            (Track::One, Rail::External) => 0,
            (Track::One, Rail::Internal) => 1,
            (Track::Two, Rail::Internal) => 2,
            (Track::Two, Rail::External) => 3,
        }
    }

    /// Track-mirror image (1e ↔ 2e, 1i ↔ 2i).
    pub fn mirrored(self) -> Self {
        Self::new(self.track.other(), self.rail)
    }
}

impl fmt::Display for Conductor {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}{}", self.track.number(), self.rail.symbol())
    }
}

/// Breakage switch position: 1 → 2 km, 2 → 4 km, 3 → 6 km from the emitter.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(try_from = "u8", into = "u8")]
pub struct Quarter(u8);

impl Quarter {
    pub const ALL: [Quarter; 3] = [Quarter(1), Quarter(2), Quarter(3)];

    pub fn new(q: u8) -> Result<Self> {
        if (1..=3).contains(&q) {
            Ok(Quarter(q))
        } else {
            Err(Error::param(format!("breakage quarter must be 1, 2 or 3, got {q}")))
        }
    }

    pub fn get(self) -> u8 {
        self.0
    }

    pub fn fraction(self) -> f64 {
        f64::from(self.0) / 4.0
    }
}

impl TryFrom<u8> for Quarter {
    type Error = Error;
    fn try_from(q: u8) -> Result<Self> {
        Quarter::new(q)
    }
}

impl From<Quarter> for u8 {
    fn from(q: Quarter) -> u8 {
        q.0
    }
}

/// Open-circuit breakage of one rail at a quarter point.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct BreakageSpec {
    pub track: Track,
    pub rail: Rail,
    pub quarter: Quarter,
}

impl BreakageSpec {
    pub fn new(track: Track, rail: Rail, quarter: Quarter) -> Self {
        Self { track, rail, quarter }
    }

    pub fn conductor(&self) -> Conductor {
        Conductor::new(self.track, self.rail)
    }

    pub fn mirrored(&self) -> Self {
        Self::new(self.track.other(), self.rail, self.quarter)
    }

    /// Switch label, e.g. `R1e3/4`.
    pub fn label(&self) -> String {
        self.to_string()
    }
}

impl fmt::Display for BreakageSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "R{}{}{}/4",
            self.track.number(),
            self.rail.symbol(),
            self.quarter.get()
        )
    }
}

impl FromStr for BreakageSpec {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let compact: String = s.chars().filter(|c| !c.is_whitespace()).collect();
        let bad = || Error::param(format!("malformed breakage label '{s}' (expected e.g. R1e3/4)"));
        let rest = compact.strip_prefix('R').ok_or_else(bad)?;
        let rest = rest.strip_suffix("/4").ok_or_else(bad)?;
        let mut chars = rest.chars();
        let (t, r, q) = match (chars.next(), chars.next(), chars.next(), chars.next()) {
            (Some(t), Some(r), Some(q), None) => (t, r, q),
            _ => return Err(bad()),
        };
        let track = Track::try_from(t.to_digit(10).ok_or_else(bad)? as u8)?;
        let rail = Rail::try_from(r)?;
        let quarter = Quarter::new(q.to_digit(10).ok_or_else(bad)? as u8)?;
        Ok(Self::new(track, rail, quarter))
    }
}

/// Renders a breakage set as `healthy` or `R1i2/4+R1e2/4` (sorted).
pub fn breakage_set_label(breakages: &[BreakageSpec]) -> String {
    if breakages.is_empty() {
        return "healthy".to_string();
    }
    let mut v = breakages.to_vec();
    v.sort();
    v.iter().map(|b| b.label()).collect::<Vec<_>>().join("+")
}

pub fn parse_breakage_set(s: &str) -> Result<Vec<BreakageSpec>> {
    let s = s.trim();
    if s.is_empty() || s == "healthy" {
        return Ok(Vec::new());
    }
    s.split('+').map(str::parse).collect()
}

/// Emitter source: balanced (centre-tapped, grounded midpoint) ideal voltage
/// source behind a series impedance on every rail connection.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SourceSpec {
    pub emf_volts: f64,
    pub impedance_ohm: Complex64,
}

impl Default for SourceSpec {
    fn default() -> Self {
        Self {
            emf_volts: 1.0,
            impedance_ohm: Complex64::new(10.0, 0.0),
        }
    }
}

/// Electrical description of one emitter–receiver cell.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SectionModel {
    pub segments: Vec<SegmentParams>,
    /// π-sections per segment (1 = one lumped module per segment).
    #[serde(default = "one")]
    pub sections_per_segment: usize,
    #[serde(default)]
    pub breakages: Vec<BreakageSpec>,
    #[serde(default = "default_frequency")]
    pub frequency_hz: f64,
    #[serde(default)]
    pub source: SourceSpec,
    /// Receiver impedance on each measured rail branch.
    #[serde(default = "default_termination")]
    pub termination_ohm: Complex64,
    /// Impedance from each receiver bus to ground; `None` leaves it floating.
    #[serde(default = "default_receiver_ground")]
    pub receiver_ground_ohm: Option<Complex64>,
}

fn one() -> usize {
    1
}

fn default_frequency() -> f64 {
    800.0
}

fn default_termination() -> Complex64 {
    Complex64::new(10.0, 0.0)
}

fn default_receiver_ground() -> Option<Complex64> {
    Some(Complex64::new(0.0, 0.0))
}

pub const SECTION_LENGTH_KM: f64 = 8.0;
pub const SEGMENT_COUNT: usize = 4;

impl Default for SectionModel {
    fn default() -> Self {
        Self::standard(SegmentParams::default())
    }
}

impl SectionModel {
    /// Four identical 2 km modules forming the 8 km cell.
    pub fn standard(params: SegmentParams) -> Self {
        Self::uniform(params.with_length(SECTION_LENGTH_KM / SEGMENT_COUNT as f64), SEGMENT_COUNT)
    }

    pub fn uniform(params: SegmentParams, count: usize) -> Self {
        Self {
            segments: vec![params; count],
            sections_per_segment: 1,
            breakages: Vec::new(),
            frequency_hz: default_frequency(),
            source: SourceSpec::default(),
            termination_ohm: default_termination(),
            receiver_ground_ohm: default_receiver_ground(),
        }
    }

    pub fn with_breakages(mut self, breakages: impl IntoIterator<Item = BreakageSpec>) -> Self {
        self.breakages = breakages.into_iter().collect();
        self
    }

    pub fn total_length_km(&self) -> f64 {
        self.segments.iter().map(|s| s.length_km).sum()
    }

    pub fn omega(&self) -> f64 {
        2.0 * std::f64::consts::PI * self.frequency_hz
    }

    /// True for the four-module 8 km layout the breakage switches assume.
    pub fn is_standard_layout(&self) -> bool {
        self.segments.len() == SEGMENT_COUNT
            && (self.total_length_km() - SECTION_LENGTH_KM).abs() < 1e-9
    }

    /// Returns a copy whose shunt conductances are scaled by the preset.
    pub fn apply_soil(&self, preset: &SoilPreset) -> Self {
        let mut out = self.clone();
        for s in &mut out.segments {
            s.g_rail_rail_per_km *= preset.g_scale;
            s.g_rail_gnd_per_km *= preset.g_scale;
        }
        out
    }

    /// Mirror image across the centre line: every breakage moves to the
    /// corresponding rail of the other track.
    pub fn mirrored(&self) -> Self {
        let mut out = self.clone();
        out.breakages = self.breakages.iter().map(BreakageSpec::mirrored).collect();
        out
    }

    pub fn validate(&self) -> Result<()> {
        if self.segments.is_empty() {
            return Err(Error::param("section needs at least one segment"));
        }
        for (i, s) in self.segments.iter().enumerate() {
            s.validate().map_err(|e| e.context(format!("segment {i}")))?;
        }
        if self.sections_per_segment == 0 {
            return Err(Error::param("sections_per_segment must be at least 1"));
        }
        if !(self.frequency_hz > 0.0) || !self.frequency_hz.is_finite() {
            return Err(Error::param("frequency must be positive"));
        }
        if !self.source.emf_volts.is_finite() {
            return Err(Error::param("source emf must be finite"));
        }
        let finite = |z: Complex64| z.re.is_finite() && z.im.is_finite();
        if !finite(self.source.impedance_ohm) || !finite(self.termination_ohm) {
            return Err(Error::param("source and termination impedances must be finite"));
        }
        for (i, a) in self.breakages.iter().enumerate() {
            if self.breakages[..i].iter().any(|b| b.conductor() == a.conductor()) {
                return Err(Error::param(format!(
                    "more than one breakage on rail {}",
                    a.conductor()
                )));
            }
            self.breakage_boundary(a)?;
        }
        Ok(())
    }

    /// Positions (km) of every π-section boundary, emitter first.
    pub fn boundary_positions(&self) -> Vec<f64> {
        let mut out = vec![0.0];
        let mut x = 0.0;
        for s in &self.segments {
            let step = s.length_km / self.sections_per_segment as f64;
            for _ in 0..self.sections_per_segment {
                x += step;
                out.push(x);
            }
        }
        out
    }

    /// Index of the interior boundary holding the breakage switch.
    pub fn breakage_boundary(&self, b: &BreakageSpec) -> Result<usize> {
        let target = b.quarter.fraction() * self.total_length_km();
        let positions = self.boundary_positions();
        let last = positions.len() - 1;
        positions
            .iter()
            .enumerate()
            .find(|&(k, &x)| k > 0 && k < last && (x - target).abs() < 1e-9 * self.total_length_km().max(1.0))
            .map(|(k, _)| k)
            .ok_or_else(|| {
                Error::param(format!(
                    "breakage {b} at {target} km does not fall on an interior section boundary"
                ))
            })
    }
}
