//! Dinucleotide counting and the 5-dimensional parity-difference vector.
//!
//! Dinucleotides are indexed `4*a + b` with bases in the A=0, C=1, G=2, T=3
//! order. The pair `(a, b)` and its reverse complement `(comp(b), comp(a))`
//! are related by `rc_pair_index`.

use thiserror::Error;

use crate::seq::{Nucleotide, Sequence, Topology};

/// Index of the dinucleotide `(a, b)` in the flat 16-cell layout.
#[inline]
pub fn pair_index(a: Nucleotide, b: Nucleotide) -> usize {
    4 * a.index() + b.index()
}

/// Decode a flat dinucleotide index back into bases.
#[inline]
pub fn pair_from_index(d: usize) -> (Nucleotide, Nucleotide) {
    (Nucleotide::from_index(d / 4), Nucleotide::from_index(d % 4))
}

/// Index of the reverse complement `(comp(b), comp(a))` of the dinucleotide
/// with flat index `d`.
#[inline]
pub fn rc_pair_index(d: usize) -> usize {
    let (a, b) = (d / 4, d % 4);
    15 - 4 * b - a
}

/// The five dinucleotides carrying all independent information in the
/// parity-difference vector, in frozen order.
pub const K_SET: [(Nucleotide, Nucleotide); 5] = [
    (Nucleotide::A, Nucleotide::A),
    (Nucleotide::A, Nucleotide::C),
    (Nucleotide::A, Nucleotide::G),
    (Nucleotide::C, Nucleotide::A),
    (Nucleotide::C, Nucleotide::C),
];

/// Flat indices of `K_SET`, in the same order.
pub const K_INDICES: [usize; 5] = [0, 1, 2, 4, 5];

#[derive(Debug, Error)]
pub enum CountError {
    #[error("lag {lag} out of range for linear sequence of length {len}")]
    LagOutOfRange { lag: usize, len: usize },
}

/// Dinucleotide window counts for one sequence.
///
/// `n` is the number of windows: the sequence length for circular topology,
/// length - 1 for linear.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PairCounts {
    n: u64,
    counts: [u64; 16],
}

impl PairCounts {
    pub fn n(&self) -> u64 {
        self.n
    }

    pub fn counts(&self) -> &[u64; 16] {
        &self.counts
    }

    pub fn count(&self, a: Nucleotide, b: Nucleotide) -> u64 {
        self.counts[pair_index(a, b)]
    }

    /// Empirical frequency of the dinucleotide with flat index `d`.
    pub fn freq(&self, d: usize) -> f64 {
        self.counts[d] as f64 / self.n as f64
    }
}

/// Quadruple counts at a fixed offset: how often the window at position `j`
/// shows pattern `(a, b)` while the window at `j + lag` shows `(c, d)`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LagPairCounts {
    lag: usize,
    windows: u64,
    counts: [u64; 256],
}

impl LagPairCounts {
    pub fn lag(&self) -> usize {
        self.lag
    }

    /// Number of start positions counted.
    pub fn windows(&self) -> u64 {
        self.windows
    }

    pub fn count(&self, ab: usize, cd: usize) -> u64 {
        self.counts[ab * 16 + cd]
    }

    pub fn counts(&self) -> &[u64; 256] {
        &self.counts
    }
}

/// The parity-difference vector over `K_SET`, in frozen order.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FVector(pub [f64; 5]);

/// The fixed 5x16 matrix with +1 at each K pair's own column and -1 at its
/// reverse complement's column; maps raw counts to `n * FVector`.
#[derive(Debug, Clone, PartialEq)]
pub struct LambdaMatrix(pub [[f64; 16]; 5]);

/// Per-window dinucleotide pair codes: `codes[j] = 4*x[j] + x[j+1]`, with the
/// final window wrapping for circular topology.
fn pair_codes(s: &Sequence) -> Vec<u8> {
    let bases = s.bases();
    let len = bases.len();
    let mut codes = Vec::with_capacity(len);
    for w in bases.windows(2) {
        codes.push((w[0].index() * 4 + w[1].index()) as u8);
    }
    if s.topology() == Topology::Circular {
        codes.push((bases[len - 1].index() * 4 + bases[0].index()) as u8);
    }
    codes
}

/// Count dinucleotide windows.
pub fn count_pairs(s: &Sequence) -> PairCounts {
    let codes = pair_codes(s);
    let mut counts = [0u64; 16];
    for &c in &codes {
        counts[c as usize] += 1;
    }
    PairCounts {
        n: codes.len() as u64,
        counts,
    }
}

/// Count quadruples of windows at offset `lag`.
///
/// Circular sequences count all `n` start positions with indices mod `n`;
/// linear sequences count only fully in-range windows and reject lags with no
/// valid window.
pub fn count_lag_pairs(s: &Sequence, lag: usize) -> Result<LagPairCounts, CountError> {
    let codes = pair_codes(s);
    let mut counts = [0u64; 256];
    let windows = match s.topology() {
        Topology::Circular => {
            let n = codes.len();
            let shift = lag % n;
            for j in 0..n - shift {
                counts[codes[j] as usize * 16 + codes[j + shift] as usize] += 1;
            }
            for j in n - shift..n {
                counts[codes[j] as usize * 16 + codes[j + shift - n] as usize] += 1;
            }
            n as u64
        }
        Topology::Linear => {
            let len = s.len();
            if lag > len.saturating_sub(2) {
                return Err(CountError::LagOutOfRange { lag, len });
            }
            // codes.len() == len - 1 here; windows j and j+lag must both exist.
            for j in 0..codes.len() - lag {
                counts[codes[j] as usize * 16 + codes[j + lag] as usize] += 1;
            }
            (codes.len() - lag) as u64
        }
    };
    Ok(LagPairCounts {
        lag,
        windows,
        counts,
    })
}

/// The full 16-component parity-difference vector
/// `f(a,b) = N(a,b)/n - N(comp(b),comp(a))/n`.
pub fn f_full(pc: &PairCounts) -> [f64; 16] {
    let n = pc.n as f64;
    let mut f = [0.0; 16];
    for d in 0..16 {
        f[d] = (pc.counts[d] as f64 - pc.counts[rc_pair_index(d)] as f64) / n;
    }
    f
}

/// The 5-component parity-difference vector over `K_SET`.
pub fn f_vector(pc: &PairCounts) -> FVector {
    let full = f_full(pc);
    let mut v = [0.0; 5];
    for (out, &d) in v.iter_mut().zip(K_INDICES.iter()) {
        *out = full[d];
    }
    FVector(v)
}

/// The fixed selector/differencing matrix.
pub fn lambda_matrix() -> LambdaMatrix {
    let mut m = [[0.0; 16]; 5];
    for (row, &d) in K_INDICES.iter().enumerate() {
        m[row][d] = 1.0;
        m[row][rc_pair_index(d)] = -1.0;
    }
    LambdaMatrix(m)
}
