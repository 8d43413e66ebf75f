//! The parity test statistic, per-sequence reports, and the Holm-Bonferroni
//! step-down correction for genome batches.

use thiserror::Error;

use crate::counting::{count_pairs, f_vector, FVector};
use crate::covariance::{sigma_hat_adaptive, v_hat, CovError, VEstimate};
use crate::numerics::{chi2_cdf, solve_spd, NumericsError};
use crate::seq::Sequence;

/// Degrees of freedom of the asymptotic null distribution.
pub const TEST_DF: f64 = 5.0;

/// Minimum sequence length accepted by `run_test`; the asymptotic
/// approximation is not meaningful below this.
pub const MIN_TEST_LEN: usize = 100;

#[derive(Debug, Error)]
pub enum TestError {
    #[error("sequence '{id}' too short to test: {len} bases (minimum {min})")]
    TooShort { id: String, len: usize, min: usize },
    #[error(transparent)]
    Covariance(#[from] CovError),
    #[error(transparent)]
    Numerics(#[from] NumericsError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TestStatus {
    Ok,
    /// The estimated covariance was not positive definite; no statistic or
    /// p-value is available. Reported, never dropped: a near-singular
    /// covariance is itself evidence against the model assumptions.
    SingularCovariance,
}

/// Everything the test pipeline learned about one sequence.
#[derive(Debug, Clone, PartialEq)]
pub struct TestReport {
    pub id: String,
    pub n: u64,
    pub eta: Option<f64>,
    pub p_value: Option<f64>,
    pub m_used: usize,
    pub truncated_at_cap: bool,
    pub status: TestStatus,
    pub gc: f64,
    pub skipped_positions: usize,
}

#[derive(Debug, Clone, Copy)]
pub struct TestConfig {
    pub alpha: f64,
    pub max_m: usize,
    pub threshold_frac: f64,
}

impl Default for TestConfig {
    fn default() -> Self {
        Self {
            alpha: 0.01,
            max_m: crate::covariance::DEFAULT_MAX_M,
            threshold_frac: crate::covariance::DEFAULT_THRESHOLD_FRAC,
        }
    }
}

/// The quadratic-form statistic `n * f' V^{-1} f`.
pub fn eta_statistic(f: &FVector, v: &VEstimate, n: u64) -> Result<f64, NumericsError> {
    let x = solve_spd(&v.matrix, &f.0)?;
    let quad: f64 = f.0.iter().zip(x.iter()).map(|(a, b)| a * b).sum();
    Ok((n as f64 * quad).max(0.0))
}

/// Full per-sequence pipeline: counts, parity vector, adaptive covariance,
/// statistic, p-value.
pub fn run_test(s: &Sequence, config: &TestConfig) -> Result<TestReport, TestError> {
    if s.len() < MIN_TEST_LEN {
        return Err(TestError::TooShort {
            id: s.id().to_string(),
            len: s.len(),
            min: MIN_TEST_LEN,
        });
    }
    let pc = count_pairs(s);
    let f = f_vector(&pc);
    let sig = sigma_hat_adaptive(s, config.max_m, config.threshold_frac)?;
    let m_used = sig.m_used;
    let truncated_at_cap = sig.truncated_at_cap;
    let v = v_hat(&sig);

    let (eta, p_value, status) = match eta_statistic(&f, &v, pc.n()) {
        Ok(eta) => {
            let p = 1.0 - chi2_cdf(eta, TEST_DF)?;
            (Some(eta), Some(p), TestStatus::Ok)
        }
        Err(NumericsError::NotPositiveDefinite { .. }) => {
            (None, None, TestStatus::SingularCovariance)
        }
        Err(e) => return Err(e.into()),
    };

    Ok(TestReport {
        id: s.id().to_string(),
        n: pc.n(),
        eta,
        p_value,
        m_used,
        truncated_at_cap,
        status,
        gc: s.gc_content(),
        skipped_positions: s.skipped_positions(),
    })
}

/// Holm-Bonferroni step-down: sort p-values ascending, reject while
/// `p_(i) <= alpha / (M - i + 1)`, and map the decisions back to input order.
pub fn holm_bonferroni(p_values: &[f64], alpha: f64) -> Vec<bool> {
    let m = p_values.len();
    let mut order: Vec<usize> = (0..m).collect();
    order.sort_by(|&a, &b| p_values[a].total_cmp(&p_values[b]));

    let mut reject = vec![false; m];
    for (rank, &idx) in order.iter().enumerate() {
        if p_values[idx] <= alpha / (m - rank) as f64 {
            reject[idx] = true;
        } else {
            break;
        }
    }
    reject
}

/// A batch of reports with the family-wise correction applied across every
/// report that produced a p-value. Failed tests are excluded from the
/// multiplicity count and never rejected.
#[derive(Debug, Clone)]
pub struct BatchDecision {
    pub alpha: f64,
    pub reports: Vec<TestReport>,
    pub adjusted_reject: Vec<bool>,
}

pub fn decide_batch(reports: Vec<TestReport>, alpha: f64) -> BatchDecision {
    let defined: Vec<(usize, f64)> = reports
        .iter()
        .enumerate()
        .filter_map(|(i, r)| r.p_value.map(|p| (i, p)))
        .collect();
    let p_values: Vec<f64> = defined.iter().map(|&(_, p)| p).collect();
    let holm = holm_bonferroni(&p_values, alpha);

    let mut adjusted_reject = vec![false; reports.len()];
    for (&(i, _), &rej) in defined.iter().zip(holm.iter()) {
        adjusted_reject[i] = rej;
    }
    BatchDecision {
        alpha,
        reports,
        adjusted_reject,
    }
}
