use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Per-kilometre electrical parameters of one lumped segment of the
/// double-track section.
///
/// Series quantities are per rail; `m_intra_per_km` couples the two rails of
/// one track and `m_inter_per_km` couples any rail of track 1 with any rail
/// of track 2. Shunts are split into rail-to-rail (within a track) and
/// rail-to-ground (ballast/earth) parts.
///
/// The defaults are PLACEHOLDER values. Published rail impedance campaigns
/// are not reproduced here; override them in the scenario file.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SegmentParams {
    pub length_km: f64,
    pub r_per_km: f64,
    pub l_per_km: f64,
    pub m_intra_per_km: f64,
    pub m_inter_per_km: f64,
    pub c_rail_rail_per_km: f64,
    pub g_rail_rail_per_km: f64,
    pub c_rail_gnd_per_km: f64,
    pub g_rail_gnd_per_km: f64,
}

impl Default for SegmentParams {
    fn default() -> Self {
        Self {
            length_km: 2.0,
            r_per_km: 1.0,
            l_per_km: 1.4e-3,
            m_intra_per_km: 0.6e-3,
            m_inter_per_km: 0.1e-3,
            c_rail_rail_per_km: 0.02e-6,
            g_rail_rail_per_km: 0.005,
            c_rail_gnd_per_km: 0.0,
            g_rail_gnd_per_km: 0.02,
        }
    }
}

impl SegmentParams {
    pub fn with_length(mut self, length_km: f64) -> Self {
        self.length_km = length_km;
        self
    }

    /// 4×4 per-km inductance matrix in conductor order [1e, 1i, 2i, 2e].
    pub fn inductance_matrix(&self) -> [[f64; 4]; 4] {
        let mut l = [[0.0; 4]; 4];
        for (a, row) in l.iter_mut().enumerate() {
            for (b, v) in row.iter_mut().enumerate() {
                *v = if a == b {
                    self.l_per_km
                } else if a / 2 == b / 2 {
                    self.m_intra_per_km
                } else {
                    self.m_inter_per_km
                };
            }
        }
        l
    }

    pub fn validate(&self) -> Result<()> {
        let fields = [
            ("length_km", self.length_km),
            ("r_per_km", self.r_per_km),
            ("l_per_km", self.l_per_km),
            ("m_intra_per_km", self.m_intra_per_km),
            ("m_inter_per_km", self.m_inter_per_km),
            ("c_rail_rail_per_km", self.c_rail_rail_per_km),
            ("g_rail_rail_per_km", self.g_rail_rail_per_km),
            ("c_rail_gnd_per_km", self.c_rail_gnd_per_km),
            ("g_rail_gnd_per_km", self.g_rail_gnd_per_km),
        ];
        for (name, v) in fields {
            if !v.is_finite() {
                return Err(Error::param(format!("{name} must be finite, got {v}")));
            }
        }
        if self.length_km <= 0.0 {
            return Err(Error::param("segment length must be positive"));
        }
        for (name, v) in &fields[1..] {
            if name.starts_with("m_") {
                continue;
            }
            if *v < 0.0 {
                return Err(Error::param(format!("{name} must be non-negative, got {v}")));
            }
        }
        if self.m_intra_per_km.abs() >= self.l_per_km || self.m_inter_per_km.abs() >= self.l_per_km {
            return Err(Error::param(
                "mutual inductances must be smaller in magnitude than the self inductance",
            ));
        }
        if !is_positive_definite(&self.inductance_matrix()) {
            return Err(Error::param("inductance matrix is not positive definite (non-passive coupling)"));
        }
        Ok(())
    }
}

/// Cholesky test on a small symmetric matrix.
pub(crate) fn is_positive_definite(a: &[[f64; 4]; 4]) -> bool {
    let mut l = [[0.0f64; 4]; 4];
    for i in 0..4 {
        for j in 0..=i {
            let mut sum = a[i][j];
            for k in 0..j {
                sum -= l[i][k] * l[j][k];
            }
            if i == j {
                if sum <= 0.0 {
                    return false;
                }
                l[i][i] = sum.sqrt();
            } else {
                l[i][j] = sum / l[j][j];
            }
        }
    }
    true
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SoilKind {
    Dry,
    Wet,
}

impl SoilKind {
    pub fn as_str(self) -> &'static str {
        match self {
            SoilKind::Dry => "dry",
            SoilKind::Wet => "wet",
        }
    }

    pub fn preset(self) -> SoilPreset {
        match self {
            SoilKind::Dry => SoilPreset::dry(),
            SoilKind::Wet => SoilPreset::wet(),
        }
    }
}

impl std::fmt::Display for SoilKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for SoilKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "dry" => Ok(SoilKind::Dry),
            "wet" => Ok(SoilKind::Wet),
            other => Err(Error::param(format!("unknown soil preset '{other}' (expected dry or wet)"))),
        }
    }
}

/// Ballast moisture preset. Only the shunt conductances react to it.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SoilPreset {
    pub name: SoilKind,
    pub water_content_pct: f64,
    pub g_scale: f64,
}

impl SoilPreset {
    /// Reference condition: the segment defaults describe dry ballast.
    pub fn dry() -> Self {
        Self {
            name: SoilKind::Dry,
            water_content_pct: 0.1,
            g_scale: 1.0,
        }
    }

    /// Ten times the dry leakage (PLACEHOLDER ratio).
    pub fn wet() -> Self {
        Self {
            name: SoilKind::Wet,
            water_content_pct: 1.0,
            g_scale: 10.0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.water_content_pct > 0.0) {
            return Err(Error::param("water content must be positive"));
        }
        if !(self.g_scale > 0.0) || !self.g_scale.is_finite() {
            return Err(Error::param("g_scale must be a positive finite multiplier"));
        }
        Ok(())
    }
}
