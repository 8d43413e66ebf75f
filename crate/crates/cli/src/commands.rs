//! Subcommand implementations.

use std::fs::File;
use std::io::{BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use rayon::prelude::*;

use cspr_core::seq::{parse_fasta, write_fasta, IngestionPolicy, Sequence, Topology};
use cspr_core::simulate::{
    gibbs_sample_mrf, markov_from_joint, perturb_joint, random_joint, replicate_seed,
    sample_markov, symmetrize_joint, MarkovModel,
};
use cspr_core::testkit::{decide_batch, run_test, TestConfig, TestError};

use crate::config::{ModelKind, PowerSpec, SimSpec};
use crate::output::{write_json, write_tsv, Row};
use crate::{Format, TestArgs};

/// The non-palindromic dinucleotide whose joint probability the epsilon
/// perturbation inflates (A followed by C).
const PERTURBED_CELL: (usize, usize) = (0, 1);

fn open_output(path: &Option<PathBuf>) -> Result<Box<dyn Write>> {
    Ok(match path {
        Some(p) => Box::new(BufWriter::new(
            File::create(p).with_context(|| format!("creating {}", p.display()))?,
        )),
        None => Box::new(BufWriter::new(std::io::stdout().lock())),
    })
}

/// Run closure inside a rayon pool of the requested width (or the global
/// default pool when unset). Results are collated in input order either way.
fn with_workers<T: Send>(workers: Option<usize>, f: impl FnOnce() -> T + Send) -> Result<T> {
    match workers {
        Some(w) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(w)
                .build()
                .context("building worker pool")?;
            Ok(pool.install(f))
        }
        None => Ok(f()),
    }
}

enum ParsedInput {
    Record(Box<Sequence>),
    Failed {
        id: String,
        kind: String,
        message: String,
    },
}

fn read_inputs(files: &[PathBuf], policy: &IngestionPolicy) -> (Vec<ParsedInput>, usize) {
    let mut inputs = Vec::new();
    let mut failed_files = 0usize;
    for path in files {
        let display = path.display().to_string();
        let file = match File::open(path) {
            Ok(f) => f,
            Err(e) => {
                failed_files += 1;
                inputs.push(ParsedInput::Failed {
                    id: display,
                    kind: "read-error".into(),
                    message: e.to_string(),
                });
                continue;
            }
        };
        match parse_fasta(BufReader::new(file), policy) {
            Ok(records) if records.is_empty() => {
                failed_files += 1;
                inputs.push(ParsedInput::Failed {
                    id: display,
                    kind: "no-records".into(),
                    message: "no records".into(),
                });
            }
            Ok(records) => {
                for r in records {
                    inputs.push(ParsedInput::Record(Box::new(r)));
                }
            }
            Err(e) => {
                failed_files += 1;
                inputs.push(ParsedInput::Failed {
                    id: display,
                    kind: "format-error".into(),
                    message: e.to_string(),
                });
            }
        }
    }
    (inputs, failed_files)
}

pub fn cmd_test(args: &TestArgs) -> Result<i32> {
    if args.files.is_empty() {
        bail!("no input files");
    }
    if args.linear {
        eprintln!(
            "warning: the test statistic requires circular counts; --linear is ignored for testing"
        );
    }
    let policy = IngestionPolicy {
        ambiguity: args.ambiguity.into(),
        default_topology: Topology::Circular,
    };
    let config = TestConfig {
        alpha: args.alpha,
        max_m: args.max_m,
        threshold_frac: args.threshold_frac,
    };
    let (inputs, failed_files) = read_inputs(&args.files, &policy);
    if failed_files == args.files.len() {
        // still emit the error rows before signaling failure
        let rows: Vec<Row> = inputs
            .into_iter()
            .map(|i| match i {
                ParsedInput::Failed { id, kind, message } => Row::Error { id, kind, message },
                ParsedInput::Record(_) => unreachable!("all files failed"),
            })
            .collect();
        let mut out = open_output(&args.out)?;
        match args.format {
            Format::Tsv => write_tsv(&mut out, &rows, args.alpha)?,
            Format::Json => write_json(&mut out, &rows, args.alpha)?,
        }
        out.flush()?;
        return Ok(1);
    }

    // worker pool over records; collect preserves input order
    let outcomes: Vec<_> = with_workers(args.workers, || {
        inputs
            .into_par_iter()
            .map(|input| match input {
                ParsedInput::Record(seq) => match run_test(&seq, &config) {
                    Ok(report) => Ok(report),
                    Err(TestError::TooShort { id, len, min }) => Err(Row::Error {
                        id,
                        kind: "too-short".into(),
                        message: format!("{len} bases (minimum {min})"),
                    }),
                    Err(e) => Err(Row::Error {
                        id: seq.id().to_string(),
                        kind: "test-error".into(),
                        message: e.to_string(),
                    }),
                },
                ParsedInput::Failed { id, kind, message } => Err(Row::Error { id, kind, message }),
            })
            .collect()
    })?;

    // collation barrier: the family-wise correction runs across the whole
    // invocation
    let reports: Vec<_> = outcomes
        .iter()
        .filter_map(|o| o.as_ref().ok().cloned())
        .collect();
    let batch = decide_batch(reports, args.alpha);

    let mut rows = Vec::with_capacity(outcomes.len());
    let mut report_iter = batch.reports.into_iter().zip(batch.adjusted_reject);
    for outcome in outcomes {
        match outcome {
            Ok(_) => {
                let (report, reject_holm) = report_iter.next().expect("one decision per report");
                let reject_raw = report.p_value.map(|p| p <= args.alpha).unwrap_or(false);
                rows.push(Row::Report {
                    report,
                    reject_raw,
                    reject_holm,
                });
            }
            Err(row) => rows.push(row),
        }
    }

    let mut out = open_output(&args.out)?;
    match args.format {
        Format::Tsv => write_tsv(&mut out, &rows, args.alpha)?,
        Format::Json => write_json(&mut out, &rows, args.alpha)?,
    }
    out.flush()?;
    Ok(0)
}

/// Lower quartile, median, upper quartile by linear interpolation of order
/// statistics (the convention spreadsheets and R's default use).
fn quantile(sorted: &[f64], p: f64) -> f64 {
    let n = sorted.len();
    if n == 1 {
        return sorted[0];
    }
    let h = (n - 1) as f64 * p;
    let lo = h.floor() as usize;
    let hi = lo + 1;
    if hi >= n {
        return sorted[n - 1];
    }
    sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
}

fn mean_sd(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    if values.len() < 2 {
        return (mean, 0.0);
    }
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, var.sqrt())
}

pub struct SummaryStats {
    pub property: &'static str,
    pub q1: f64,
    pub median: f64,
    pub q3: f64,
    pub mean: f64,
    pub sd: f64,
}

pub fn summarize(values: &mut [f64], property: &'static str) -> SummaryStats {
    values.sort_by(f64::total_cmp);
    let (mean, sd) = mean_sd(values);
    SummaryStats {
        property,
        q1: quantile(values, 0.25),
        median: quantile(values, 0.5),
        q3: quantile(values, 0.75),
        mean,
        sd,
    }
}

pub fn cmd_summary(
    files: &[PathBuf],
    ambiguity: crate::Ambiguity,
    format: Format,
    out_path: &Option<PathBuf>,
) -> Result<i32> {
    if files.is_empty() {
        bail!("no input files");
    }
    let policy = IngestionPolicy {
        ambiguity: ambiguity.into(),
        default_topology: Topology::Circular,
    };
    let (inputs, _) = read_inputs(files, &policy);
    let mut lengths = Vec::new();
    let mut gcs = Vec::new();
    for input in &inputs {
        match input {
            ParsedInput::Record(seq) => {
                lengths.push(seq.len() as f64);
                gcs.push(seq.gc_content());
            }
            ParsedInput::Failed { id, message, .. } => {
                eprintln!("warning: skipping {id}: {message}");
            }
        }
    }
    if lengths.is_empty() {
        bail!("no records in any input");
    }
    let rows = [
        summarize(&mut lengths, "length"),
        summarize(&mut gcs, "gc_content"),
    ];

    let mut out = open_output(out_path)?;
    match format {
        Format::Tsv => {
            writeln!(out, "property\tq1\tmedian\tq3\tmean\tsd")?;
            for r in rows {
                writeln!(
                    out,
                    "{}\t{}\t{}\t{}\t{}\t{}",
                    r.property, r.q1, r.median, r.q3, r.mean, r.sd
                )?;
            }
        }
        Format::Json => {
            let doc: Vec<_> = rows
                .iter()
                .map(|r| {
                    serde_json::json!({
                        "property": r.property,
                        "q1": r.q1,
                        "median": r.median,
                        "q3": r.q3,
                        "mean": r.mean,
                        "sd": r.sd,
                    })
                })
                .collect();
            writeln!(out, "{}", serde_json::to_string_pretty(&doc)?)?;
        }
    }
    out.flush()?;
    Ok(0)
}

/// Compliant chain for a joint seed, and its epsilon-perturbed counterpart.
fn power_models(joint_seed: u64, epsilon: f64) -> Result<MarkovModel> {
    let compliant = symmetrize_joint(&random_joint(joint_seed))?;
    if epsilon == 0.0 {
        return Ok(compliant);
    }
    let q = perturb_joint(&compliant.stationary_joint(), epsilon, PERTURBED_CELL);
    Ok(markov_from_joint(&q, false)?)
}

fn simulate_replicate(spec: &SimSpec, rep: usize) -> Result<Sequence> {
    let seed = replicate_seed(spec.seed, rep as u64);
    let seq = match spec.model {
        ModelKind::MarkovUniform => sample_markov(&MarkovModel::uniform(), spec.n, seed),
        ModelKind::MarkovCompliant => {
            let model = symmetrize_joint(&random_joint(spec.joint_seed))?;
            sample_markov(&model, spec.n, seed)
        }
        ModelKind::MarkovNoncompliant => {
            let model = power_models(spec.joint_seed, spec.epsilon)?;
            sample_markov(&model, spec.n, seed)
        }
        ModelKind::MrfSymmetric | ModelKind::MrfAsymmetric => {
            let energy = spec.energy()?;
            gibbs_sample_mrf(&energy, spec.n, spec.sweeps, seed)
        }
    };
    let id = match spec.model {
        ModelKind::MrfSymmetric | ModelKind::MrfAsymmetric => format!(
            "{}_k{}_n{}_seed{}_rep{}",
            model_name(spec.model),
            spec.k,
            spec.n,
            seed,
            rep
        ),
        _ => format!(
            "{}_n{}_seed{}_rep{}",
            model_name(spec.model),
            spec.n,
            seed,
            rep
        ),
    };
    Ok(seq.with_id(id))
}

fn model_name(kind: ModelKind) -> &'static str {
    match kind {
        ModelKind::MarkovUniform => "markov_uniform",
        ModelKind::MarkovCompliant => "markov_compliant",
        ModelKind::MarkovNoncompliant => "markov_noncompliant",
        ModelKind::MrfSymmetric => "mrf_symmetric",
        ModelKind::MrfAsymmetric => "mrf_asymmetric",
    }
}

pub fn cmd_simulate(
    spec_path: &Path,
    out_path: &Option<PathBuf>,
    seed_override: Option<u64>,
) -> Result<i32> {
    let mut spec = SimSpec::load(spec_path)?;
    if let Some(seed) = seed_override {
        spec.seed = seed;
    }
    let seqs = (0..spec.replicates)
        .map(|rep| simulate_replicate(&spec, rep))
        .collect::<Result<Vec<_>>>()?;
    let mut out = open_output(out_path)?;
    write_fasta(&mut out, &seqs)?;
    out.flush()?;
    Ok(0)
}

pub fn cmd_power(
    spec_path: &Path,
    format: Format,
    out_path: &Option<PathBuf>,
    workers: Option<usize>,
) -> Result<i32> {
    let spec = PowerSpec::load(spec_path)?;
    if spec.replicates == 0 {
        eprintln!("warning: replicates = 0, emitting empty table");
    }
    let config = TestConfig {
        alpha: spec.alpha,
        max_m: spec.max_m,
        threshold_frac: spec.threshold_frac,
    };

    struct GridRow {
        epsilon: f64,
        rejected: usize,
        singular: usize,
    }

    let grid: Vec<GridRow> = with_workers(workers, || {
        spec.epsilons
            .iter()
            .enumerate()
            .map(|(gi, &epsilon)| {
                let model = power_models(spec.joint_seed, epsilon)?;
                // disjoint seed blocks per grid point
                let base = spec.seed.wrapping_add((gi * spec.replicates) as u64);
                let outcomes: Vec<(bool, bool)> = (0..spec.replicates)
                    .into_par_iter()
                    .map(|rep| {
                        let s = sample_markov(&model, spec.n, replicate_seed(base, rep as u64));
                        match run_test(&s, &config) {
                            Ok(r) => match r.p_value {
                                Some(p) => (p <= spec.alpha, false),
                                None => (false, true),
                            },
                            Err(_) => (false, true),
                        }
                    })
                    .collect();
                Ok(GridRow {
                    epsilon,
                    rejected: outcomes.iter().filter(|o| o.0).count(),
                    singular: outcomes.iter().filter(|o| o.1).count(),
                })
            })
            .collect::<Result<Vec<_>>>()
    })??;

    let mut out = open_output(out_path)?;
    match format {
        Format::Tsv => {
            writeln!(
                out,
                "epsilon\tn\treplicates\trejected\tsingular\trejection_rate\tbinomial_se"
            )?;
            for row in &grid {
                if spec.replicates == 0 {
                    continue;
                }
                let rate = row.rejected as f64 / spec.replicates as f64;
                let se = (rate * (1.0 - rate) / spec.replicates as f64).sqrt();
                writeln!(
                    out,
                    "{}\t{}\t{}\t{}\t{}\t{}\t{}",
                    row.epsilon, spec.n, spec.replicates, row.rejected, row.singular, rate, se
                )?;
            }
        }
        Format::Json => {
            let doc: Vec<_> = grid
                .iter()
                .filter(|_| spec.replicates > 0)
                .map(|row| {
                    let rate = row.rejected as f64 / spec.replicates as f64;
                    let se = (rate * (1.0 - rate) / spec.replicates as f64).sqrt();
                    serde_json::json!({
                        "epsilon": row.epsilon,
                        "n": spec.n,
                        "replicates": spec.replicates,
                        "rejected": row.rejected,
                        "singular": row.singular,
                        "rejection_rate": rate,
                        "binomial_se": se,
                    })
                })
                .collect();
            writeln!(out, "{}", serde_json::to_string_pretty(&doc)?)?;
        }
    }
    out.flush()?;
    Ok(0)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn quantiles_interpolate() {
        let v = [1.0, 2.0, 3.0, 4.0];
        assert_eq!(quantile(&v, 0.25), 1.75);
        assert_eq!(quantile(&v, 0.5), 2.5);
        assert_eq!(quantile(&v, 0.75), 3.25);
        assert_eq!(quantile(&v, 0.0), 1.0);
        assert_eq!(quantile(&v, 1.0), 4.0);
    }

    #[test]
    fn singleton_summary_is_degenerate() {
        let mut v = [4.0];
        let s = summarize(&mut v, "length");
        assert_eq!(s.q1, 4.0);
        assert_eq!(s.median, 4.0);
        assert_eq!(s.q3, 4.0);
        assert_eq!(s.mean, 4.0);
        assert_eq!(s.sd, 0.0);
    }

    #[test]
    fn two_point_summary() {
        let mut v = [100.0, 300.0];
        let s = summarize(&mut v, "length");
        assert_eq!(s.mean, 200.0);
        assert_eq!(s.median, 200.0);
    }
}
