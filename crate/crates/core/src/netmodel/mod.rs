//! Phasor model of a double-track section: a ladder of coupled
//! four-conductor π-sections solved by modified nodal analysis.

mod lu;
mod model;
mod network;
mod params;

pub use lu::{ComplexLu, PIVOT_TOLERANCE};
pub use model::{
    breakage_set_label, parse_breakage_set, BreakageSpec, Conductor, Quarter, Rail, SectionModel, SourceSpec,
    Track, SECTION_LENGTH_KM, SEGMENT_COUNT,
};
pub use network::{
    build_admittance, solve_currents, track_conductors, Branch, BranchTag, End, NetworkSystem, RailCurrents,
};
pub use params::{SegmentParams, SoilKind, SoilPreset};

use crate::error::Result;

/// Scales a section's shunt conductances for a ballast condition.
pub fn apply_soil(model: &SectionModel, preset: &SoilPreset) -> Result<SectionModel> {
    preset.validate()?;
    Ok(model.apply_soil(preset))
}
