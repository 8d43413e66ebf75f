//! Truncated estimation of the asymptotic covariance of the dinucleotide
//! frequency vector.
//!
//! The 16x16 estimate sums lagged quadruple-count autocovariances up to a
//! truncation lag `m`. The adaptive rule picks the smallest lag at which every
//! dinucleotide's lag autocovariance drops below a fraction of its variance
//! estimate; covariances are then reduced to the 5x5 matrix of the
//! parity-difference vector.

use thiserror::Error;

use crate::counting::{count_pairs, rc_pair_index, K_INDICES};
use crate::numerics::{SymMatrix16, SymMatrix5};
use crate::seq::{Sequence, Topology};

#[derive(Debug, Error)]
pub enum CovError {
    #[error("covariance estimation requires circular topology")]
    LinearTopology,
    #[error("sequence too short for covariance estimation: {len} bases (need >= {need})")]
    TooShort { len: usize, need: usize },
    #[error("truncation lag {m} out of range for length {len} (max {max})")]
    LagOutOfRange { m: usize, len: usize, max: usize },
}

/// Result of the adaptive truncation-lag search.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct MSelection {
    pub m: usize,
    /// The search exhausted the cap without the criterion holding.
    pub capped: bool,
}

/// The 16x16 truncated covariance estimate.
#[derive(Debug, Clone, PartialEq)]
pub struct SigmaEstimate {
    pub matrix: SymMatrix16,
    pub m_used: usize,
    pub truncated_at_cap: bool,
    pub n: u64,
}

/// The 5x5 covariance of the parity-difference vector, derived from a
/// `SigmaEstimate` by the four-term reduction.
#[derive(Debug, Clone, PartialEq)]
pub struct VEstimate {
    pub matrix: SymMatrix5,
    pub source: SigmaEstimate,
}

/// Default cap on the truncation lag search.
pub const DEFAULT_MAX_M: usize = 1000;
/// Default threshold fraction in the lag-selection rule.
pub const DEFAULT_THRESHOLD_FRAC: f64 = 0.01;

fn require_circular(s: &Sequence, need: usize) -> Result<(), CovError> {
    if s.topology() != Topology::Circular {
        return Err(CovError::LinearTopology);
    }
    if s.len() < need {
        return Err(CovError::TooShort { len: s.len(), need });
    }
    Ok(())
}

fn pair_codes_circular(s: &Sequence) -> Vec<u8> {
    let bases = s.bases();
    let n = bases.len();
    let mut codes = Vec::with_capacity(n);
    for w in bases.windows(2) {
        codes.push((w[0].index() * 4 + w[1].index()) as u8);
    }
    codes.push((bases[n - 1].index() * 4 + bases[0].index()) as u8);
    codes
}

/// One pass over the pair codes, counting window pairs at the given offset.
fn lag_table(codes: &[u8], lag: usize) -> [u64; 256] {
    let n = codes.len();
    let shift = lag % n;
    let mut counts = [0u64; 256];
    for j in 0..n - shift {
        counts[codes[j] as usize * 16 + codes[j + shift] as usize] += 1;
    }
    for j in n - shift..n {
        counts[codes[j] as usize * 16 + codes[j + shift - n] as usize] += 1;
    }
    counts
}

/// The lag-selection criterion: every dinucleotide's lag autocovariance is
/// within `threshold_frac` of its variance estimate. Comparisons are
/// absolute, so zero-count pairs need no special handling.
fn lag_within_threshold(
    table: &[u64; 256],
    freqs: &[f64; 16],
    n: f64,
    threshold_frac: f64,
) -> bool {
    for (ab, &p) in freqs.iter().enumerate() {
        let lhs = (table[ab * 16 + ab] as f64 / n - p * p).abs();
        let var = p - p * p;
        let ok = if var == 0.0 {
            lhs == 0.0
        } else {
            lhs <= threshold_frac * var
        };
        if !ok {
            return false;
        }
    }
    true
}

/// Add the lag table and its transpose into the running covariance sum.
fn accumulate_lag(acc: &mut [[f64; 16]; 16], table: &[u64; 256], freqs: &[f64; 16], n: f64) {
    for ab in 0..16 {
        for cd in 0..16 {
            let fwd = table[ab * 16 + cd] as f64 / n;
            let rev = table[cd * 16 + ab] as f64 / n;
            acc[ab][cd] += fwd + rev - 2.0 * freqs[ab] * freqs[cd];
        }
    }
}

fn lag0_base(freqs: &[f64; 16]) -> [[f64; 16]; 16] {
    let mut acc = [[0.0; 16]; 16];
    for ab in 0..16 {
        for cd in 0..16 {
            let diag = if ab == cd { freqs[ab] } else { 0.0 };
            acc[ab][cd] = diag - freqs[ab] * freqs[cd];
        }
    }
    acc
}

/// Smallest lag at which the truncation criterion holds, searching
/// `1..=max_m` (further capped at `len - 2`). Returns the cap with the
/// `capped` flag set when no lag qualifies.
pub fn select_m(s: &Sequence, max_m: usize, threshold_frac: f64) -> Result<MSelection, CovError> {
    require_circular(s, 4)?;
    let codes = pair_codes_circular(s);
    let pc = count_pairs(s);
    let n = pc.n() as f64;
    let freqs: [f64; 16] = std::array::from_fn(|d| pc.freq(d));

    let cap = max_m.max(1).min(s.len() - 2);
    for i in 1..=cap {
        if lag_within_threshold(&lag_table(&codes, i), &freqs, n, threshold_frac) {
            return Ok(MSelection {
                m: i,
                capped: false,
            });
        }
    }
    Ok(MSelection {
        m: cap,
        capped: true,
    })
}

/// Truncated covariance estimate at a fixed lag `m`.
pub fn sigma_hat(s: &Sequence, m: usize) -> Result<SigmaEstimate, CovError> {
    require_circular(s, 2)?;
    if m > s.len() - 2 {
        return Err(CovError::LagOutOfRange {
            m,
            len: s.len(),
            max: s.len() - 2,
        });
    }
    let codes = pair_codes_circular(s);
    let pc = count_pairs(s);
    let n = pc.n() as f64;
    let freqs: [f64; 16] = std::array::from_fn(|d| pc.freq(d));

    let mut acc = lag0_base(&freqs);
    for i in 1..=m {
        accumulate_lag(&mut acc, &lag_table(&codes, i), &freqs, n);
    }
    Ok(SigmaEstimate {
        matrix: SymMatrix16::new(acc),
        m_used: m,
        truncated_at_cap: false,
        n: pc.n(),
    })
}

/// Lag selection and covariance accumulation fused into one streaming pass
/// per lag: each lag's quadruple counts feed both the truncation criterion
/// and the running sum.
pub fn sigma_hat_adaptive(
    s: &Sequence,
    max_m: usize,
    threshold_frac: f64,
) -> Result<SigmaEstimate, CovError> {
    require_circular(s, 4)?;
    let codes = pair_codes_circular(s);
    let pc = count_pairs(s);
    let n = pc.n() as f64;
    let freqs: [f64; 16] = std::array::from_fn(|d| pc.freq(d));

    let cap = max_m.max(1).min(s.len() - 2);
    let mut acc = lag0_base(&freqs);
    let mut m_used = cap;
    let mut capped = true;
    for i in 1..=cap {
        let table = lag_table(&codes, i);
        accumulate_lag(&mut acc, &table, &freqs, n);
        if lag_within_threshold(&table, &freqs, n, threshold_frac) {
            m_used = i;
            capped = false;
            break;
        }
    }
    Ok(SigmaEstimate {
        matrix: SymMatrix16::new(acc),
        m_used,
        truncated_at_cap: capped,
        n: pc.n(),
    })
}

/// Reduce a 16x16 covariance estimate to the 5x5 covariance of the
/// parity-difference vector via the four-term formula.
pub fn v_hat(sig: &SigmaEstimate) -> VEstimate {
    let s = &sig.matrix;
    let mut v = [[0.0; 5]; 5];
    for (i, &ab) in K_INDICES.iter().enumerate() {
        for (j, &cd) in K_INDICES.iter().enumerate() {
            let rab = rc_pair_index(ab);
            let rcd = rc_pair_index(cd);
            v[i][j] = s.get(ab, cd) + s.get(rab, rcd) - s.get(rab, cd) - s.get(ab, rcd);
        }
    }
    VEstimate {
        matrix: SymMatrix5::new(v),
        source: sig.clone(),
    }
}
