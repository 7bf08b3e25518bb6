use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Primitive polynomials over GF(2), as the exponents of the non-leading
/// terms (the constant term is implied).
fn primitive_taps(degree: u32) -> Option<&'static [u32]> {
    Some(match degree {
        4 => &[1],
        6 => &[1],
        8 => &[4, 3, 2],
        10 => &[3],
        12 => &[6, 4, 1],
        14 => &[10, 6, 1],
        16 => &[12, 3, 1],
        _ => return None,
    })
}

/// One period of the maximal-length sequence of the degree's primitive
/// polynomial, as bits, starting from the state 0…01.
pub fn m_sequence(degree: u32) -> Result<Vec<u8>> {
    let taps = primitive_taps(degree).ok_or_else(|| degree_error(degree))?;
    Ok(lfsr_sequence(degree, taps, (1u64 << degree) as usize - 1))
}

/// Runs the recurrence a[k+n] = a[k] + Σ a[k+t] for t in `taps`.
pub fn lfsr_sequence(degree: u32, taps: &[u32], len: usize) -> Vec<u8> {
    let n = degree as usize;
    let mut a = vec![0u8; len.max(n)];
    a[n - 1] = 1;
    for k in 0..len.saturating_sub(n) {
        let mut bit = a[k];
        for &t in taps {
            bit ^= a[k + t as usize];
        }
        a[k + n] = bit;
    }
    a.truncate(len);
    a
}

fn degree_error(degree: u32) -> Error {
    Error::param(format!("Kasami degree must be even and within 4..=16, got {degree}"))
}

/// A member of the small Kasami set, stored as ±1 chips (bit 0 → +1).
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct KasamiCode {
    pub degree: u32,
    pub family_index: usize,
    pub chips: Vec<i8>,
}

impl KasamiCode {
    pub fn period(&self) -> usize {
        self.chips.len()
    }

    /// Largest cross-correlation magnitude the small set guarantees.
    pub fn correlation_bound(&self) -> i64 {
        (1i64 << (self.degree / 2)) + 1
    }

    /// Periodic correlation with `other` shifted left by `shift` chips.
    pub fn periodic_correlation(&self, other: &KasamiCode, shift: usize) -> i64 {
        let n = self.period();
        assert_eq!(n, other.period(), "codes of different period");
        self.chips
            .iter()
            .enumerate()
            .map(|(i, &a)| i64::from(a) * i64::from(other.chips[(i + shift) % n]))
            .sum()
    }

    pub fn balance(&self) -> i64 {
        self.chips.iter().map(|&c| i64::from(c)).sum()
    }
}

/// The 2^(n/2) codes of the small Kasami set of even degree n.
///
/// Member 0 is the m-sequence itself; member k+1 is the m-sequence XOR the
/// k-chip shift of its (non-zero) decimation by 2^(n/2)+1.
pub fn kasami_small_set(degree: u32) -> Result<Vec<KasamiCode>> {
    if degree % 2 != 0 || !(4..=16).contains(&degree) {
        return Err(degree_error(degree));
    }
    let u = m_sequence(degree)?;
    let period = u.len();
    let q = (1usize << (degree / 2)) + 1;
    // Decimation from some phases of u is identically zero; any other phase
    // gives a shift of the same half-degree m-sequence.
    let w: Vec<u8> = (0..period)
        .map(|s| (0..period).map(|i| u[(q * i + s) % period]).collect::<Vec<u8>>())
        .find(|w| w.iter().any(|&b| b == 1))
        .expect("an m-sequence has a non-zero decimation");
    let to_chips = |bits: &mut dyn Iterator<Item = u8>| bits.map(|b| if b == 0 { 1i8 } else { -1 }).collect();
    let mut set = Vec::with_capacity(1 << (degree / 2));
    set.push(KasamiCode {
        degree,
        family_index: 0,
        chips: to_chips(&mut u.iter().copied()),
    });
    let w_period = (1usize << (degree / 2)) - 1;
    for k in 0..w_period {
        let mut bits = (0..period).map(|i| u[i] ^ w[(i + k) % period]);
        set.push(KasamiCode {
            degree,
            family_index: k + 1,
            chips: to_chips(&mut bits),
        });
    }
    Ok(set)
}

/// Codes A and B used by the two emitting nodes of a cell.
pub fn code_pair(degree: u32) -> Result<(KasamiCode, KasamiCode)> {
    let mut set = kasami_small_set(degree)?;
    set.truncate(2);
    let b = set.pop().expect("small set has at least four members");
    let a = set.pop().expect("small set has at least four members");
    Ok((a, b))
}

/// Member `index` of the small set.
pub fn kasami_code(degree: u32, index: usize) -> Result<KasamiCode> {
    let set = kasami_small_set(degree)?;
    let size = set.len();
    set.into_iter()
        .nth(index)
        .ok_or_else(|| Error::param(format!("family index {index} out of range (set size {size})")))
}
