//! Testing dinucleotide strand parity in genomic sequences.
//!
//! A DNA strand satisfies the second parity rule for dinucleotides when every
//! two-letter word occurs as often as its reverse complement. This crate
//! implements a chi-square test (5 degrees of freedom) of that hypothesis for
//! stationary sequences with rapidly decaying correlations, together with the
//! machinery around it:
//!
//! - [`seq`]: validated ACGT sequences and FASTA ingestion;
//! - [`counting`]: dinucleotide and lagged quadruple counts, the
//!   five-component parity-difference vector and its selector matrix;
//! - [`numerics`]: small symmetric solves and chi-square distribution
//!   functions, self-contained;
//! - [`covariance`]: truncated long-run covariance estimation with an
//!   adaptive truncation lag;
//! - [`testkit`]: the quadratic-form statistic, per-sequence reports and
//!   Holm-Bonferroni batch correction;
//! - [`simulate`]: Markov-chain and Markov-random-field samplers with known
//!   parity status, for power and level experiments.

// index-based loops over fixed-size matrices read better than iterator
// chains in the numeric code
#![allow(clippy::needless_range_loop)]

pub mod counting;
pub mod covariance;
pub mod numerics;
pub mod seq;
pub mod simulate;
pub mod testkit;

pub use counting::{count_lag_pairs, count_pairs, f_vector, lambda_matrix, FVector};
pub use covariance::{select_m, sigma_hat, sigma_hat_adaptive, v_hat};
pub use seq::{parse_fasta, write_fasta, Nucleotide, Sequence, Topology};
pub use testkit::{decide_batch, holm_bonferroni, run_test, TestConfig, TestReport, TestStatus};
