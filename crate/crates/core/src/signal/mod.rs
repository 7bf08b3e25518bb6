//! Kasami spreading, noisy chip-stream synthesis and correlation.

mod kasami;

pub use kasami::{code_pair, kasami_code, kasami_small_set, lfsr_sequence, m_sequence, KasamiCode};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::features::{FeatureVector, InjectionMode};
use crate::netmodel::{solve_currents, RailCurrents, SectionModel};

/// Default Kasami degree (period 65535).
pub const DEFAULT_DEGREE: u32 = 16;

/// Noise standard deviation per chip for a stream of amplitude `a` at the
/// given per-stream SNR. Infinite SNR disables noise.
pub fn noise_sigma(amplitude: f64, snr_db: f64) -> f64 {
    if snr_db == f64::INFINITY {
        0.0
    } else {
        amplitude.abs() * 10f64.powf(-snr_db / 20.0)
    }
}

fn check_snr(snr_db: f64) -> Result<()> {
    if snr_db.is_nan() || snr_db == f64::NEG_INFINITY {
        return Err(Error::param(format!("SNR must be a number or +inf, got {snr_db}")));
    }
    Ok(())
}

/// One coded emission seen at the measurement points: per-stream amplitude
/// (current magnitude) modulated by a code.
#[derive(Debug, Clone, Copy)]
pub struct Emission<'a> {
    pub amplitudes: &'a [f64],
    pub code: &'a KasamiCode,
}

/// Chip streams measured at the points of an injection mode, one sample
/// per chip.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RawMeasurement {
    pub mode: InjectionMode,
    pub snr_db: f64,
    pub seed: u64,
    /// Noise-free current magnitude of the primary emission per stream.
    pub amplitudes: Vec<f64>,
    pub streams: Vec<Vec<f64>>,
}

impl RawMeasurement {
    pub fn period(&self) -> usize {
        self.streams.first().map_or(0, Vec::len)
    }
}

/// Superimposes coded emissions and adds white Gaussian noise to every
/// stream. Noise is scaled to the first emission's amplitude so that each
/// stream's SNR equals `snr_db`. Noise samples are drawn stream by stream.
pub fn synthesize(mode: InjectionMode, emissions: &[Emission<'_>], snr_db: f64, seed: u64) -> Result<RawMeasurement> {
    check_snr(snr_db)?;
    let primary = emissions.first().ok_or_else(|| Error::param("at least one emission required"))?;
    let dim = mode.dimension();
    let period = primary.code.period();
    for e in emissions {
        if e.amplitudes.len() != dim {
            return Err(Error::param(format!("{mode} needs {dim} amplitudes, got {}", e.amplitudes.len())));
        }
        if e.code.period() != period {
            return Err(Error::param("all emissions must share the code period"));
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut streams = Vec::with_capacity(dim);
    for k in 0..dim {
        let sigma = noise_sigma(primary.amplitudes[k], snr_db);
        let mut s: Vec<f64> = (0..period)
            .map(|c| emissions.iter().map(|e| e.amplitudes[k] * f64::from(e.code.chips[c])).sum::<f64>())
            .collect();
        if sigma > 0.0 {
            for v in &mut s {
                let n: f64 = StandardNormal.sample(&mut rng);
                *v += sigma * n;
            }
        }
        streams.push(s);
    }
    Ok(RawMeasurement {
        mode,
        snr_db,
        seed,
        amplitudes: primary.amplitudes.to_vec(),
        streams,
    })
}

/// Current magnitudes at the measurement points of `mode`, in feature order.
pub fn point_magnitudes(currents: &RailCurrents, mode: InjectionMode) -> Vec<f64> {
    mode.points().into_iter().map(|(end, c)| currents.get(end, c).norm()).collect()
}

/// Solves the section and returns the coded, noisy chip streams.
pub fn transmit_measure(
    model: &SectionModel,
    injection: InjectionMode,
    code: &KasamiCode,
    snr_db: f64,
    seed: u64,
) -> Result<RawMeasurement> {
    let currents = solve_currents(model, injection)?;
    let amplitudes = point_magnitudes(&currents, injection);
    synthesize(injection, &[Emission { amplitudes: &amplitudes, code }], snr_db, seed)
}

/// Zero-lag correlation of every stream with `code`. Components are the
/// correlation magnitudes.
pub fn correlate(raw: &RawMeasurement, code: &KasamiCode) -> Result<FeatureVector> {
    let mut out = Vec::with_capacity(raw.streams.len());
    for (k, s) in raw.streams.iter().enumerate() {
        if s.len() != code.period() {
            return Err(Error::param(format!(
                "stream {k} has {} samples but the code period is {}",
                s.len(),
                code.period()
            )));
        }
        let mut acc = 0.0;
        for (x, &c) in s.iter().zip(&code.chips) {
            acc += x * f64::from(c);
        }
        out.push(acc.abs());
    }
    FeatureVector::new(raw.mode, out)
}

/// Same result as `correlate(transmit_measure(..))` for a single emission,
/// bit for bit, without materializing the streams.
pub fn measure_features(
    mode: InjectionMode,
    amplitudes: &[f64],
    code: &KasamiCode,
    snr_db: f64,
    seed: u64,
) -> Result<FeatureVector> {
    check_snr(snr_db)?;
    if amplitudes.len() != mode.dimension() {
        return Err(Error::param(format!(
            "{mode} needs {} amplitudes, got {}",
            mode.dimension(),
            amplitudes.len()
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::with_capacity(amplitudes.len());
    for &a in amplitudes {
        let sigma = noise_sigma(a, snr_db);
        let mut acc = 0.0;
        if sigma > 0.0 {
            for &c in &code.chips {
                let chip = f64::from(c);
                let n: f64 = StandardNormal.sample(&mut rng);
                acc += (a * chip + sigma * n) * chip;
            }
        } else {
            for &c in &code.chips {
                let chip = f64::from(c);
                acc += (a * chip) * chip;
            }
        }
        out.push(acc.abs());
    }
    FeatureVector::new(mode, out)
}
