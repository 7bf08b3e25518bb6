//! Injection modes and feature-vector assembly.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::netmodel::{track_conductors, Conductor, End, RailCurrents, Track};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum InjectionMode {
    /// Only this track is driven; its four currents are measured.
    Independent(Track),
    /// Both tracks driven through one connection; all eight currents measured.
    Joint,
}

impl InjectionMode {
    pub fn independent(track: u8) -> Result<Self> {
        Ok(InjectionMode::Independent(Track::try_from(track)?))
    }

    pub fn dimension(self) -> usize {
        match self {
            InjectionMode::Independent(_) => 4,
            InjectionMode::Joint => 8,
        }
    }

    pub fn validate(self) -> Result<()> {
        Ok(())
    }

    /// Measurement points in feature order.
    pub fn points(self) -> Vec<(End, Conductor)> {
        match self {
            InjectionMode::Joint => Conductor::ALL
                .iter()
                .map(|&c| (End::Emitter, c))
                .chain(Conductor::ALL.iter().map(|&c| (End::Receiver, c)))
                .collect(),
            InjectionMode::Independent(t) => {
                let [e, i] = track_conductors(t);
                vec![(End::Emitter, e), (End::Emitter, i), (End::Receiver, i), (End::Receiver, e)]
            }
        }
    }

    /// Component symbols in feature order, e.g. `I_1e^(e)`.
    pub fn symbols(self) -> Vec<&'static str> {
        self.points().into_iter().map(|(end, c)| symbol(end, c)).collect()
    }
}

impl fmt::Display for InjectionMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            InjectionMode::Independent(t) => write!(f, "independent(track {})", t.number()),
            InjectionMode::Joint => f.write_str("joint"),
        }
    }
}

pub fn symbol(end: End, c: Conductor) -> &'static str {
    const E: [&str; 4] = ["I_1e^(e)", "I_1i^(e)", "I_2i^(e)", "I_2e^(e)"];
    const R: [&str; 4] = ["I_1e^(r)", "I_1i^(r)", "I_2i^(r)", "I_2e^(r)"];
    match end {
        End::Emitter => E[c.index()],
        End::Receiver => R[c.index()],
    }
}

/// Per-point current magnitudes (or correlation values) keyed by conductor
/// index. Points that were not measured are `None`.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct MeasuredCurrents {
    pub emitter: [Option<f64>; 4],
    pub receiver: [Option<f64>; 4],
}

impl MeasuredCurrents {
    pub fn get(&self, end: End, c: Conductor) -> Option<f64> {
        match end {
            End::Emitter => self.emitter[c.index()],
            End::Receiver => self.receiver[c.index()],
        }
    }

    pub fn set(&mut self, end: End, c: Conductor, v: f64) {
        match end {
            End::Emitter => self.emitter[c.index()] = Some(v),
            End::Receiver => self.receiver[c.index()] = Some(v),
        }
    }

    pub fn from_magnitudes(currents: &RailCurrents) -> Self {
        let mut out = Self::default();
        for c in Conductor::ALL {
            out.set(End::Emitter, c, currents.emitter[c.index()].norm());
            out.set(End::Receiver, c, currents.receiver[c.index()].norm());
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureVector {
    pub mode: InjectionMode,
    pub components: Vec<f64>,
}

impl FeatureVector {
    /// Builds a vector, checking dimension and that every component is a
    /// finite magnitude.
    pub fn new(mode: InjectionMode, components: Vec<f64>) -> Result<Self> {
        if components.len() != mode.dimension() {
            return Err(Error::param(format!(
                "{mode} feature vector needs {} components, got {}",
                mode.dimension(),
                components.len()
            )));
        }
        if let Some((i, v)) = components.iter().enumerate().find(|(_, v)| !v.is_finite() || **v < 0.0) {
            return Err(Error::param(format!("feature component {i} must be a finite magnitude, got {v}")));
        }
        Ok(Self { mode, components })
    }

    pub fn dimension(&self) -> usize {
        self.components.len()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.components
    }
}

fn assemble(mode: InjectionMode, m: &MeasuredCurrents) -> Result<FeatureVector> {
    let mut out = Vec::with_capacity(mode.dimension());
    for (index, (end, c)) in mode.points().into_iter().enumerate() {
        let v = m.get(end, c).ok_or(Error::MissingComponent {
            index,
            symbol: symbol(end, c),
        })?;
        out.push(v.abs());
    }
    FeatureVector::new(mode, out)
}

/// Eight-component vector: emitter currents then receiver currents, each in
/// order 1e, 1i, 2i, 2e.
pub fn assemble_joint(m: &MeasuredCurrents) -> Result<FeatureVector> {
    assemble(InjectionMode::Joint, m)
}

/// Four-component vector for one track: [te(e), ti(e), ti(r), te(r)].
pub fn assemble_independent(track: u8, m: &MeasuredCurrents) -> Result<FeatureVector> {
    assemble(InjectionMode::independent(track)?, m)
}

#[derive(Debug, Clone, Serialize)]
pub struct SymbolEntry {
    pub index: usize,
    pub symbol: &'static str,
    pub end: End,
    pub conductor: String,
}

/// Index → symbol map for a mode, for documentation tooling.
pub fn symbol_map(mode: InjectionMode) -> Vec<SymbolEntry> {
    mode.points()
        .into_iter()
        .enumerate()
        .map(|(index, (end, c))| SymbolEntry {
            index,
            symbol: symbol(end, c),
            end,
            conductor: c.to_string(),
        })
        .collect()
}

pub fn symbol_map_json() -> String {
    #[derive(Serialize)]
    struct Maps {
        joint: Vec<SymbolEntry>,
        independent_track1: Vec<SymbolEntry>,
        independent_track2: Vec<SymbolEntry>,
    }
    let maps = Maps {
        joint: symbol_map(InjectionMode::Joint),
        independent_track1: symbol_map(InjectionMode::Independent(Track::One)),
        independent_track2: symbol_map(InjectionMode::Independent(Track::Two)),
    };
    serde_json::to_string_pretty(&maps).expect("symbol map serializes")
}
