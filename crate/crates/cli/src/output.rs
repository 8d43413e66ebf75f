//! Report rendering. TSV and JSON carry the same values; the TSV column
//! order is frozen for downstream parsers.

use std::io::Write;

use anyhow::Result;
use cspr_core::testkit::{TestReport, TestStatus};
use serde_json::json;

pub const TSV_COLUMNS: &str =
    "id\tn\tgc\tskipped\tm_used\tcapped\teta\tp_value\tstatus\treject_raw\treject_holm";

/// One output row, in input order: either a finished report or the reason a
/// record or file produced none.
#[derive(Debug, Clone)]
pub enum Row {
    Report {
        report: TestReport,
        reject_raw: bool,
        reject_holm: bool,
    },
    Error {
        id: String,
        kind: String,
        message: String,
    },
}

fn status_str(status: TestStatus) -> &'static str {
    match status {
        TestStatus::Ok => "ok",
        TestStatus::SingularCovariance => "singular-covariance",
    }
}

/// p-values (and the statistic) carry 17 significant digits so doubles
/// round-trip losslessly through the TSV.
fn full_precision(v: Option<f64>) -> String {
    match v {
        Some(v) => format!("{v:.16e}"),
        None => "NA".to_string(),
    }
}

pub fn write_tsv(mut w: impl Write, rows: &[Row], alpha: f64) -> Result<()> {
    writeln!(w, "{TSV_COLUMNS}")?;
    let mut tested = 0usize;
    let mut singular = 0usize;
    let mut rejected_raw = 0usize;
    let mut rejected_holm = 0usize;
    let mut errors = 0usize;
    for row in rows {
        match row {
            Row::Report {
                report,
                reject_raw,
                reject_holm,
            } => {
                writeln!(
                    w,
                    "{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}",
                    report.id,
                    report.n,
                    report.gc,
                    report.skipped_positions,
                    report.m_used,
                    report.truncated_at_cap,
                    full_precision(report.eta),
                    full_precision(report.p_value),
                    status_str(report.status),
                    reject_raw,
                    reject_holm,
                )?;
                match report.status {
                    TestStatus::Ok => {
                        tested += 1;
                        rejected_raw += *reject_raw as usize;
                        rejected_holm += *reject_holm as usize;
                    }
                    TestStatus::SingularCovariance => singular += 1,
                }
            }
            Row::Error { id, kind, .. } => {
                writeln!(w, "{id}\tNA\tNA\tNA\tNA\tNA\tNA\tNA\t{kind}\tNA\tNA")?;
                errors += 1;
            }
        }
    }
    writeln!(w, "# alpha {alpha}")?;
    writeln!(w, "# records {}", rows.len())?;
    writeln!(w, "# tested {tested}")?;
    writeln!(w, "# accepted_holm {}", tested - rejected_holm)?;
    writeln!(w, "# rejected_holm {rejected_holm}")?;
    writeln!(w, "# rejected_raw {rejected_raw}")?;
    writeln!(w, "# singular {singular}")?;
    writeln!(w, "# errors {errors}")?;
    Ok(())
}

pub fn write_json(mut w: impl Write, rows: &[Row], alpha: f64) -> Result<()> {
    let mut out_rows = Vec::new();
    let mut tested = 0usize;
    let mut singular = 0usize;
    let mut rejected_raw = 0usize;
    let mut rejected_holm = 0usize;
    let mut errors = 0usize;
    for row in rows {
        match row {
            Row::Report {
                report,
                reject_raw,
                reject_holm,
            } => {
                out_rows.push(json!({
                    "id": report.id,
                    "n": report.n,
                    "gc": report.gc,
                    "skipped": report.skipped_positions,
                    "m_used": report.m_used,
                    "capped": report.truncated_at_cap,
                    "eta": report.eta,
                    "p_value": report.p_value,
                    "status": status_str(report.status),
                    "reject_raw": reject_raw,
                    "reject_holm": reject_holm,
                }));
                match report.status {
                    TestStatus::Ok => {
                        tested += 1;
                        rejected_raw += *reject_raw as usize;
                        rejected_holm += *reject_holm as usize;
                    }
                    TestStatus::SingularCovariance => singular += 1,
                }
            }
            Row::Error { id, kind, message } => {
                out_rows.push(json!({
                    "id": id,
                    "status": kind,
                    "message": message,
                }));
                errors += 1;
            }
        }
    }
    let doc = json!({
        "alpha": alpha,
        "rows": out_rows,
        "summary": {
            "records": rows.len(),
            "tested": tested,
            "accepted_holm": tested - rejected_holm,
            "rejected_holm": rejected_holm,
            "rejected_raw": rejected_raw,
            "singular": singular,
            "errors": errors,
        },
    });
    writeln!(w, "{}", serde_json::to_string_pretty(&doc)?)?;
    Ok(())
}
