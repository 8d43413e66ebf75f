//! Sequence simulators with known parity status: order-1 Markov chains and
//! Gibbs-sampled Markov random fields with clique potentials up to size 4.
//!
//! All randomness comes from ChaCha12 seeded through `seed_from_u64`, so a
//! (parameters, seed) pair reproduces the same sequence on any platform.
//! Replicates derive their seeds as `base seed + replicate index`.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha12Rng;
use thiserror::Error;

use crate::seq::{Nucleotide, Sequence, Topology};

pub type RngSeed = u64;

/// Seed-splitting rule for replicate r of a batch.
pub fn replicate_seed(base: RngSeed, replicate: u64) -> RngSeed {
    base.wrapping_add(replicate)
}

fn rng_from_seed(seed: RngSeed) -> ChaCha12Rng {
    ChaCha12Rng::seed_from_u64(seed)
}

#[derive(Debug, Error)]
pub enum SimError {
    #[error("invalid distribution: {0}")]
    InvalidDistribution(String),
    #[error("joint marginals do not match: row {row:e} vs column {col:e} for base index {base}")]
    MarginalMismatch { base: usize, row: f64, col: f64 },
    #[error("degenerate model: {0}")]
    DegenerateModel(String),
    #[error("model declared compliant but stationary joint deviates by {max_dev:e}")]
    NotCompliant { max_dev: f64 },
    #[error("invalid clique energy: {0}")]
    InvalidEnergy(String),
}

const PROB_TOL: f64 = 1e-9;

/// An order-1 chain over the four bases with a declared parity status.
#[derive(Debug, Clone, PartialEq)]
pub struct MarkovModel {
    pub pi: [f64; 4],
    pub p: [[f64; 4]; 4],
    pub compliant: bool,
}

impl MarkovModel {
    /// Validates stochasticity, and for `compliant` models checks that the
    /// stationary joint really is reverse-complement symmetric.
    pub fn new(pi: [f64; 4], p: [[f64; 4]; 4], compliant: bool) -> Result<Self, SimError> {
        for (i, row) in p.iter().enumerate() {
            if row.iter().any(|&v| v < 0.0) {
                return Err(SimError::InvalidDistribution(format!(
                    "negative transition probability in row {i}"
                )));
            }
            let sum: f64 = row.iter().sum();
            if (sum - 1.0).abs() > 1e-12 {
                return Err(SimError::InvalidDistribution(format!(
                    "transition row {i} sums to {sum}"
                )));
            }
        }
        if pi.iter().any(|&v| v < 0.0) || (pi.iter().sum::<f64>() - 1.0).abs() > 1e-12 {
            return Err(SimError::InvalidDistribution(
                "initial distribution must be a probability vector".into(),
            ));
        }
        let model = Self { pi, p, compliant };
        if compliant {
            let q = model.stationary_joint();
            let max_dev = (0..16)
                .map(|d| (q[d / 4][d % 4] - q[3 - d % 4][3 - d / 4]).abs())
                .fold(0.0f64, f64::max);
            if max_dev > 1e-10 {
                return Err(SimError::NotCompliant { max_dev });
            }
        }
        Ok(model)
    }

    pub fn uniform() -> Self {
        Self {
            pi: [0.25; 4],
            p: [[0.25; 4]; 4],
            compliant: true,
        }
    }

    /// Stationary distribution of the transition matrix, by power iteration.
    pub fn stationary_distribution(&self) -> [f64; 4] {
        let mut v = self.pi;
        for _ in 0..10_000 {
            let mut next = [0.0; 4];
            for a in 0..4 {
                for b in 0..4 {
                    next[b] += v[a] * self.p[a][b];
                }
            }
            let diff: f64 = next.iter().zip(v.iter()).map(|(x, y)| (x - y).abs()).sum();
            v = next;
            if diff < 1e-15 {
                break;
            }
        }
        v
    }

    /// Stationary dinucleotide joint `q(a,b) = pi*(a) P(a,b)`.
    pub fn stationary_joint(&self) -> [[f64; 4]; 4] {
        let pi = self.stationary_distribution();
        let mut q = [[0.0; 4]; 4];
        for a in 0..4 {
            for b in 0..4 {
                q[a][b] = pi[a] * self.p[a][b];
            }
        }
        q
    }
}

fn check_joint(q: &[[f64; 4]; 4]) -> Result<(), SimError> {
    let total: f64 = q.iter().flatten().sum();
    if q.iter().flatten().any(|&v| v < 0.0) || (total - 1.0).abs() > PROB_TOL {
        return Err(SimError::InvalidDistribution(format!(
            "joint must be a probability distribution (sum {total})"
        )));
    }
    for a in 0..4 {
        let row: f64 = (0..4).map(|b| q[a][b]).sum();
        let col: f64 = (0..4).map(|b| q[b][a]).sum();
        if (row - col).abs() > PROB_TOL {
            return Err(SimError::MarginalMismatch { base: a, row, col });
        }
    }
    Ok(())
}

/// Project a dinucleotide joint onto the reverse-complement-symmetric
/// subspace and build the compliant chain it induces.
///
/// Matching marginals of `q` are preserved by the averaging, so the
/// symmetrized joint is the stationary pair distribution of the returned
/// chain.
pub fn symmetrize_joint(q: &[[f64; 4]; 4]) -> Result<MarkovModel, SimError> {
    check_joint(q)?;
    let mut qs = [[0.0; 4]; 4];
    for a in 0..4 {
        for b in 0..4 {
            qs[a][b] = 0.5 * (q[a][b] + q[3 - b][3 - a]);
        }
    }
    markov_from_joint(&qs, true)
}

/// Chain induced by a dinucleotide joint: `P(a,b) = q(a,b) / row(a)`, initial
/// distribution the row marginal.
pub fn markov_from_joint(q: &[[f64; 4]; 4], compliant: bool) -> Result<MarkovModel, SimError> {
    let mut pi = [0.0; 4];
    let mut p = [[0.0; 4]; 4];
    for a in 0..4 {
        let row: f64 = (0..4).map(|b| q[a][b]).sum();
        if row == 0.0 {
            return Err(SimError::DegenerateModel(format!(
                "joint row for base index {a} is zero"
            )));
        }
        pi[a] = row;
        for b in 0..4 {
            p[a][b] = q[a][b] / row;
        }
    }
    // guard against drift in the marginals themselves
    let total: f64 = pi.iter().sum();
    for v in pi.iter_mut() {
        *v /= total;
    }
    MarkovModel::new(pi, p, compliant)
}

/// Multiply one joint cell by `1 + epsilon` and renormalize; breaks parity
/// when the cell is not reverse-complement palindromic.
pub fn perturb_joint(q: &[[f64; 4]; 4], epsilon: f64, cell: (usize, usize)) -> [[f64; 4]; 4] {
    let mut out = *q;
    out[cell.0][cell.1] *= 1.0 + epsilon;
    let total: f64 = out.iter().flatten().sum();
    for v in out.iter_mut().flatten() {
        *v /= total;
    }
    out
}

/// A random joint with matching marginals: draw a row-stochastic matrix,
/// take its stationary distribution, and form `pi(a) P(a,b)`.
pub fn random_joint(seed: RngSeed) -> [[f64; 4]; 4] {
    let mut rng = rng_from_seed(seed);
    let mut p = [[0.0; 4]; 4];
    for row in p.iter_mut() {
        // entries bounded away from zero keep the chain fast-mixing
        for v in row.iter_mut() {
            *v = rng.random_range(0.2..1.2);
        }
        let sum: f64 = row.iter().sum();
        for v in row.iter_mut() {
            *v /= sum;
        }
    }
    let model = MarkovModel {
        pi: [0.25; 4],
        p,
        compliant: false,
    };
    model.stationary_joint()
}

#[inline]
fn draw(cum: &[f64; 4], u: f64) -> usize {
    if u < cum[0] {
        0
    } else if u < cum[1] {
        1
    } else if u < cum[2] {
        2
    } else {
        3
    }
}

fn cumulative(row: &[f64; 4]) -> [f64; 4] {
    let mut cum = [0.0; 4];
    let mut acc = 0.0;
    for (c, &v) in cum.iter_mut().zip(row.iter()) {
        acc += v;
        *c = acc;
    }
    cum
}

/// Sample a length-`n` realization of the chain, returned as a circular
/// sequence (the wrap junction is a model mismatch of order 1/n).
pub fn sample_markov(model: &MarkovModel, n: usize, seed: RngSeed) -> Sequence {
    assert!(n >= 2, "need at least two bases");
    let mut rng = rng_from_seed(seed);
    let cum_pi = cumulative(&model.pi);
    let cum_rows: [[f64; 4]; 4] = std::array::from_fn(|a| cumulative(&model.p[a]));

    let mut bases = Vec::with_capacity(n);
    let mut state = draw(&cum_pi, rng.random::<f64>());
    bases.push(Nucleotide::from_index(state));
    for _ in 1..n {
        state = draw(&cum_rows[state], rng.random::<f64>());
        bases.push(Nucleotide::from_index(state));
    }
    Sequence::new("", bases, Topology::Circular).expect("n >= 2")
}

/// Clique potentials up to size `k`: `tables[j-1]` maps each word of length
/// `j` (base-4 encoded, first base most significant) to its potential.
#[derive(Debug, Clone, PartialEq)]
pub struct CliqueEnergy {
    tables: Vec<Vec<f64>>,
}

/// Base-4 word index of the reverse complement of the length-`j` word `w`.
fn rc_word(w: usize, j: usize) -> usize {
    let mut out = 0;
    let mut w = w;
    for _ in 0..j {
        out = out * 4 + (3 - (w & 3));
        w >>= 2;
    }
    out
}

impl CliqueEnergy {
    pub fn new(tables: Vec<Vec<f64>>) -> Result<Self, SimError> {
        let k = tables.len();
        if k == 0 || k > 4 {
            return Err(SimError::InvalidEnergy(format!(
                "maximal clique size must lie in 1..=4, got {k}"
            )));
        }
        for (j, t) in tables.iter().enumerate() {
            let want = 4usize.pow(j as u32 + 1);
            if t.len() != want {
                return Err(SimError::InvalidEnergy(format!(
                    "table for clique size {} has {} entries, expected {want}",
                    j + 1,
                    t.len()
                )));
            }
            if t.iter().any(|v| !v.is_finite()) {
                return Err(SimError::InvalidEnergy(format!(
                    "non-finite potential in clique size {}",
                    j + 1
                )));
            }
        }
        Ok(Self { tables })
    }

    pub fn zero(k: usize) -> Self {
        Self::new((1..=k).map(|j| vec![0.0; 4usize.pow(j as u32)]).collect()).expect("valid k")
    }

    /// Random potentials, symmetrized so the energy is reverse-complement
    /// invariant. Entries are uniform on `[-scale, scale]` before averaging.
    pub fn random_symmetric(k: usize, scale: f64, seed: RngSeed) -> Self {
        let mut rng = rng_from_seed(seed);
        let tables = (1..=k)
            .map(|j| {
                (0..4usize.pow(j as u32))
                    .map(|_| rng.random_range(-scale..scale))
                    .collect()
            })
            .collect();
        symmetrize_energy(&Self::new(tables).expect("valid tables"))
    }

    pub fn k(&self) -> usize {
        self.tables.len()
    }

    pub fn table(&self, j: usize) -> &[f64] {
        &self.tables[j - 1]
    }

    /// Add `delta` to the potential of one length-`j` word.
    pub fn perturbed(&self, j: usize, word: usize, delta: f64) -> Self {
        let mut tables = self.tables.clone();
        tables[j - 1][word] += delta;
        Self { tables }
    }
}

/// True iff every potential equals its value on the reverse-complemented
/// word, exactly.
pub fn is_energy_symmetric(e: &CliqueEnergy) -> bool {
    for j in 1..=e.k() {
        let t = e.table(j);
        for (w, &v) in t.iter().enumerate() {
            if v != t[rc_word(w, j)] {
                return false;
            }
        }
    }
    true
}

/// Average each potential with its value on the reverse-complemented word.
pub fn symmetrize_energy(e: &CliqueEnergy) -> CliqueEnergy {
    let tables = (1..=e.k())
        .map(|j| {
            let t = e.table(j);
            (0..t.len())
                .map(|w| 0.5 * (t[w] + t[rc_word(w, j)]))
                .collect()
        })
        .collect();
    CliqueEnergy { tables }
}

/// Heat-bath conditional weights for one site given its neighborhood.
///
/// `ctx` holds the neighbor values at offsets `-c..-1` then `+1..+c` where
/// `c = k - 1`; returns the cumulative conditional distribution over the four
/// candidate values of the site itself. Windows containing the site are
/// enumerated per clique size; all other positions come from `ctx`.
fn site_conditional(e: &CliqueEnergy, ctx: &[usize]) -> [f64; 4] {
    let c = e.k() - 1;
    let value_at = |offset: isize, candidate: usize| -> usize {
        if offset == 0 {
            candidate
        } else if offset < 0 {
            ctx[(offset + c as isize) as usize]
        } else {
            ctx[(offset + c as isize - 1) as usize]
        }
    };
    let mut s = [0.0f64; 4];
    for (a, sa) in s.iter_mut().enumerate() {
        for j in 1..=e.k() {
            for t in 0..j {
                // window starting at offset -t, of length j, contains offset 0
                let mut word = 0usize;
                for pos in 0..j {
                    word = word * 4 + value_at(pos as isize - t as isize, a);
                }
                *sa += e.table(j)[word];
            }
        }
    }
    let max = s.iter().fold(f64::NEG_INFINITY, |acc, &v| acc.max(v));
    let mut w = [0.0f64; 4];
    for (wi, &si) in w.iter_mut().zip(s.iter()) {
        *wi = (si - max).exp();
    }
    let total: f64 = w.iter().sum();
    let mut cum = [0.0; 4];
    let mut acc = 0.0;
    for (ci, &wi) in cum.iter_mut().zip(w.iter()) {
        acc += wi / total;
        *ci = acc;
    }
    cum
}

/// Precompute the conditional for every neighborhood configuration. The
/// conditional depends on the 2(k-1) surrounding values only, so a single
/// table of 4^(2k-2) rows drives every site update.
fn conditional_table(e: &CliqueEnergy) -> Vec<[f64; 4]> {
    let c = e.k() - 1;
    let codes = 4usize.pow(2 * c as u32);
    let mut table = Vec::with_capacity(codes);
    let mut ctx = vec![0usize; 2 * c];
    for code in 0..codes {
        let mut rest = code;
        for t in (0..2 * c).rev() {
            ctx[t] = rest & 3;
            rest >>= 2;
        }
        table.push(site_conditional(e, &ctx));
    }
    table
}

/// Systematic-sweep Gibbs sampler for the circular Markov random field with
/// the given clique energy. The state starts uniform i.i.d. and each sweep
/// resamples sites 0..n-1 in order from their heat-bath conditionals.
pub fn gibbs_sample_mrf(e: &CliqueEnergy, n: usize, sweeps: usize, seed: RngSeed) -> Sequence {
    let k = e.k();
    assert!(n >= k.max(2), "need at least max(k, 2) sites");
    assert!(sweeps >= 1, "need at least one sweep");
    let mut rng = rng_from_seed(seed);
    let table = conditional_table(e);
    let c = k - 1;

    let mut x: Vec<usize> = (0..n).map(|_| rng.random_range(0..4usize)).collect();
    for _ in 0..sweeps {
        for i in 0..n {
            let code = if i >= c && i + c < n {
                let mut code = 0usize;
                for t in 0..c {
                    code = code * 4 + x[i - c + t];
                }
                for t in 1..=c {
                    code = code * 4 + x[i + t];
                }
                code
            } else {
                let mut code = 0usize;
                for t in 0..c {
                    code = code * 4 + x[(i + n - c + t) % n];
                }
                for t in 1..=c {
                    code = code * 4 + x[(i + t) % n];
                }
                code
            };
            x[i] = draw(&table[code], rng.random::<f64>());
        }
    }
    let bases = x.into_iter().map(Nucleotide::from_index).collect();
    Sequence::new("", bases, Topology::Circular).expect("n >= 2")
}

/// Maximum absolute frequency discrepancy between each word and its reverse
/// complement, for word lengths `1..=k_max`, over circular windows.
pub fn kmer_parity_report(s: &Sequence, k_max: usize) -> Vec<f64> {
    assert!((1..=6).contains(&k_max), "word length must lie in 1..=6");
    assert!(s.len() >= k_max, "sequence shorter than longest word");
    let n = s.len();
    let bases = s.bases();
    let mut out = Vec::with_capacity(k_max);
    for k in 1..=k_max {
        let cells = 4usize.pow(k as u32);
        let mut counts = vec![0u64; cells];
        let mask = cells / 4;
        // seed the rolling code with the first k-1 bases
        let mut code = 0usize;
        for t in 0..k - 1 {
            code = code * 4 + bases[t].index();
        }
        for j in 0..n {
            let incoming = bases[(j + k - 1) % n].index();
            code = (code % mask.max(1)) * 4 + incoming;
            counts[code] += 1;
        }
        let max_disc = (0..cells)
            .map(|w| (counts[w] as f64 - counts[rc_word(w, k)] as f64).abs() / n as f64)
            .fold(0.0f64, f64::max);
        out.push(max_disc);
    }
    out
}
