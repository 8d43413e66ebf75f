//! End-to-end checks of the command-line interface via the built binary.

use std::collections::HashMap;
use std::path::Path;
use std::process::{Command, Output};

fn cspr() -> Command {
    Command::new(env!("CARGO_BIN_EXE_cspr"))
}

fn run(args: &[&str]) -> Output {
    cspr().args(args).output().expect("binary runs")
}

fn stdout_str(out: &Output) -> String {
    String::from_utf8(out.stdout.clone()).expect("utf8 output")
}

fn write_file(dir: &Path, name: &str, contents: &str) -> String {
    let path = dir.join(name);
    std::fs::write(&path, contents).unwrap();
    path.to_str().unwrap().to_string()
}

/// A deterministic 600-base ACGT sequence with mixed composition.
fn pseudo_random_fasta() -> String {
    let mut state = 0x243f6a8885a308d3u64;
    let mut bases = String::new();
    for _ in 0..600 {
        state = state
            .wrapping_mul(6364136223846793005)
            .wrapping_add(1442695040888963407);
        bases.push(['A', 'C', 'G', 'T'][(state >> 33) as usize % 4]);
    }
    format!(">r1\n{bases}\n")
}

#[test]
fn simulate_is_byte_identical_across_runs() {
    let dir = tempfile::tempdir().unwrap();
    let spec = write_file(
        dir.path(),
        "sim.cfg",
        "model = markov_uniform\nn = 1000\nreplicates = 2\nseed = 5\n",
    );
    let out1 = dir.path().join("a.fasta");
    let out2 = dir.path().join("b.fasta");
    assert!(
        run(&["simulate", "--spec", &spec, "--out", out1.to_str().unwrap()])
            .status
            .success()
    );
    assert!(
        run(&["simulate", "--spec", &spec, "--out", out2.to_str().unwrap()])
            .status
            .success()
    );
    let a = std::fs::read(&out1).unwrap();
    let b = std::fs::read(&out2).unwrap();
    assert!(!a.is_empty());
    assert_eq!(a, b);
    let text = String::from_utf8(a).unwrap();
    assert_eq!(text.matches('>').count(), 2);
    // each record holds n = 1000 bases
    let first_record: String = text
        .lines()
        .skip(1)
        .take_while(|l| !l.starts_with('>'))
        .collect();
    assert_eq!(first_record.len(), 1000);
}

#[test]
fn invalid_spec_key_is_reported_by_name() {
    let dir = tempfile::tempdir().unwrap();
    let spec = write_file(
        dir.path(),
        "bad.cfg",
        "model = markov_uniform\nn = 100\nwat = 1\n",
    );
    let out = run(&["simulate", "--spec", &spec]);
    assert_eq!(out.status.code(), Some(2));
    let err = String::from_utf8(out.stderr).unwrap();
    assert!(err.contains("wat"), "{err}");
}

fn parse_tsv_reports(text: &str) -> Vec<HashMap<String, String>> {
    let mut lines = text.lines().filter(|l| !l.starts_with('#'));
    let header: Vec<&str> = lines.next().unwrap().split('\t').collect();
    lines
        .map(|l| {
            header
                .iter()
                .map(|h| h.to_string())
                .zip(l.split('\t').map(|v| v.to_string()))
                .collect()
        })
        .collect()
}

#[test]
fn tsv_and_json_agree_on_values() {
    let dir = tempfile::tempdir().unwrap();
    let spec = write_file(
        dir.path(),
        "sim.cfg",
        "model = markov_compliant\nn = 150000\nreplicates = 2\nseed = 11\n",
    );
    let fasta = dir.path().join("seqs.fasta");
    assert!(run(&[
        "simulate",
        "--spec",
        &spec,
        "--out",
        fasta.to_str().unwrap()
    ])
    .status
    .success());
    let fasta = fasta.to_str().unwrap();

    let tsv = stdout_str(&run(&["test", fasta, "--alpha", "0.05", "--max-m", "50"]));
    let json = stdout_str(&run(&[
        "test", fasta, "--alpha", "0.05", "--max-m", "50", "--format", "json",
    ]));

    let tsv_rows = parse_tsv_reports(&tsv);
    let doc: serde_json::Value = serde_json::from_str(&json).unwrap();
    let json_rows = doc["rows"].as_array().unwrap();
    assert_eq!(tsv_rows.len(), json_rows.len());
    for (t, j) in tsv_rows.iter().zip(json_rows) {
        assert_eq!(t["id"], j["id"].as_str().unwrap());
        assert_eq!(t["n"].parse::<u64>().unwrap(), j["n"].as_u64().unwrap());
        assert_eq!(t["gc"].parse::<f64>().unwrap(), j["gc"].as_f64().unwrap());
        assert_eq!(
            t["eta"].parse::<f64>().unwrap(),
            j["eta"].as_f64().unwrap(),
            "eta must round-trip identically"
        );
        assert_eq!(
            t["p_value"].parse::<f64>().unwrap(),
            j["p_value"].as_f64().unwrap()
        );
        assert_eq!(t["status"], j["status"].as_str().unwrap());
        assert_eq!(
            t["reject_raw"].parse::<bool>().unwrap(),
            j["reject_raw"].as_bool().unwrap()
        );
        assert_eq!(
            t["reject_holm"].parse::<bool>().unwrap(),
            j["reject_holm"].as_bool().unwrap()
        );
    }
}

#[test]
fn output_is_deterministic_and_ordered_across_worker_counts() {
    let dir = tempfile::tempdir().unwrap();
    let spec = write_file(
        dir.path(),
        "sim.cfg",
        "model = markov_compliant\nn = 120000\nreplicates = 4\nseed = 3\n",
    );
    let fasta = dir.path().join("seqs.fasta");
    assert!(run(&[
        "simulate",
        "--spec",
        &spec,
        "--out",
        fasta.to_str().unwrap()
    ])
    .status
    .success());
    let fasta = fasta.to_str().unwrap();

    let one = stdout_str(&run(&["test", fasta, "--max-m", "50", "--workers", "1"]));
    let four = stdout_str(&run(&["test", fasta, "--max-m", "50", "--workers", "4"]));
    assert_eq!(one, four);
    let ids: Vec<String> = parse_tsv_reports(&one)
        .iter()
        .map(|r| r["id"].clone())
        .collect();
    let mut sorted = ids.clone();
    sorted.sort_by_key(|id| id.clone());
    // replicate ids are generated in order, so input order == rep order
    assert_eq!(ids, sorted);
}

#[test]
fn empty_fasta_gives_no_records_row() {
    let dir = tempfile::tempdir().unwrap();
    let empty = write_file(dir.path(), "empty.fasta", "");
    let good = write_file(dir.path(), "good.fasta", &pseudo_random_fasta());
    let out = run(&["test", &empty, &good, "--max-m", "10"]);
    assert_eq!(out.status.code(), Some(0), "partial failure still exits 0");
    let text = stdout_str(&out);
    let rows = parse_tsv_reports(&text);
    assert_eq!(rows.len(), 2);
    assert_eq!(rows[0]["status"], "no-records");
    assert_eq!(rows[1]["status"], "ok");
}

#[test]
fn all_inputs_failing_is_nonzero() {
    let out = run(&["test", "/nonexistent/a.fasta", "/nonexistent/b.fasta"]);
    assert_eq!(out.status.code(), Some(1));
    let rows = parse_tsv_reports(&stdout_str(&out));
    assert_eq!(rows.len(), 2);
    assert!(rows.iter().all(|r| r["status"] == "read-error"));
}

#[test]
fn too_short_records_get_error_rows() {
    let dir = tempfile::tempdir().unwrap();
    let fasta = write_file(
        dir.path(),
        "mix.fasta",
        &format!(">s\nACGTACGT\n{}", pseudo_random_fasta()),
    );
    let out = run(&["test", &fasta, "--max-m", "10"]);
    assert_eq!(out.status.code(), Some(0));
    let rows = parse_tsv_reports(&stdout_str(&out));
    assert_eq!(rows[0]["status"], "too-short");
    assert_eq!(rows[1]["status"], "ok");
}

#[test]
fn ambiguity_error_policy_fails_file() {
    let dir = tempfile::tempdir().unwrap();
    let fasta = write_file(dir.path(), "amb.fasta", ">s\nACGTNACGT\n");
    let skip = run(&["summary", &fasta]);
    assert!(skip.status.success());
    let out = run(&["test", &fasta, "--ambiguity", "error"]);
    let rows = parse_tsv_reports(&stdout_str(&out));
    assert_eq!(rows[0]["status"], "format-error");
}

#[test]
fn env_variables_mirror_flags() {
    let dir = tempfile::tempdir().unwrap();
    let fasta = write_file(dir.path(), "r.fasta", &pseudo_random_fasta());
    let out = cspr()
        .args(["test", &fasta, "--max-m", "10"])
        .env("CSPR_FORMAT", "json")
        .output()
        .unwrap();
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(serde_json::from_str::<serde_json::Value>(&text).is_ok());
}

#[test]
fn linear_flag_warns_for_test() {
    let dir = tempfile::tempdir().unwrap();
    let fasta = write_file(dir.path(), "r.fasta", &pseudo_random_fasta());
    let out = run(&["test", &fasta, "--linear", "--max-m", "10"]);
    assert!(out.status.success());
    let err = String::from_utf8(out.stderr).unwrap();
    assert!(err.contains("circular"), "{err}");
}

#[test]
fn summary_two_records() {
    let dir = tempfile::tempdir().unwrap();
    // lengths 100 and 300, gc 0.5 each
    let fasta = write_file(
        dir.path(),
        "two.fasta",
        &format!(">a\n{}\n>b\n{}\n", "ACGT".repeat(25), "ACGT".repeat(75)),
    );
    let text = stdout_str(&run(&["summary", &fasta]));
    let rows = parse_tsv_reports(&text);
    assert_eq!(rows[0]["property"], "length");
    assert_eq!(rows[0]["mean"].parse::<f64>().unwrap(), 200.0);
    assert_eq!(rows[0]["median"].parse::<f64>().unwrap(), 200.0);
    assert_eq!(rows[1]["property"], "gc_content");
    assert_eq!(rows[1]["mean"].parse::<f64>().unwrap(), 0.5);
    assert_eq!(rows[1]["sd"].parse::<f64>().unwrap(), 0.0);
}

#[test]
fn power_empty_grid_warns() {
    let dir = tempfile::tempdir().unwrap();
    let spec = write_file(
        dir.path(),
        "p.cfg",
        "n = 1000\nreplicates = 0\nepsilons = 0.0\n",
    );
    let out = run(&["power", "--spec", &spec]);
    assert!(out.status.success());
    let text = stdout_str(&out);
    assert_eq!(text.lines().count(), 1, "header only: {text}");
    assert!(String::from_utf8(out.stderr)
        .unwrap()
        .contains("replicates"));
}
