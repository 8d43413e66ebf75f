//! Validated nucleotide sequences and FASTA ingestion.
//!
//! Sequences are restricted to the alphabet {A, C, G, T}. Ambiguous IUPAC
//! symbols are either skipped (with the number of dropped positions recorded
//! on the sequence) or treated as a hard error, depending on the ingestion
//! policy.

use std::fmt;
use std::io::{self, BufRead, Write};

use thiserror::Error;

/// A single DNA base.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
#[repr(u8)]
pub enum Nucleotide {
    A = 0,
    C = 1,
    G = 2,
    T = 3,
}

pub const ALPHABET: [Nucleotide; 4] = [Nucleotide::A, Nucleotide::C, Nucleotide::G, Nucleotide::T];

impl Nucleotide {
    /// Watson-Crick complement: A<->T, C<->G. An involution.
    #[inline]
    pub fn complement(self) -> Self {
        // With the A=0, C=1, G=2, T=3 encoding the complement is 3 - x.
        Self::from_index(3 - self.index())
    }

    #[inline]
    pub fn index(self) -> usize {
        self as usize
    }

    #[inline]
    pub fn from_index(i: usize) -> Self {
        ALPHABET[i]
    }

    pub fn from_char(c: char) -> Option<Self> {
        match c.to_ascii_uppercase() {
            'A' => Some(Nucleotide::A),
            'C' => Some(Nucleotide::C),
            'G' => Some(Nucleotide::G),
            'T' => Some(Nucleotide::T),
            _ => None,
        }
    }

    pub fn to_char(self) -> char {
        match self {
            Nucleotide::A => 'A',
            Nucleotide::C => 'C',
            Nucleotide::G => 'G',
            Nucleotide::T => 'T',
        }
    }
}

impl fmt::Display for Nucleotide {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.to_char())
    }
}

/// Whether the last base is considered adjacent to the first.
///
/// The estimators in this crate assume circular counting, matching the
/// convention for bacterial replicons; `Linear` is available for counting
/// only.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Topology {
    #[default]
    Circular,
    Linear,
}

/// What to do with non-ACGT symbols in sequence data.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum AmbiguityPolicy {
    /// Drop the symbol and record the number of dropped positions.
    #[default]
    Skip,
    /// Abort ingestion at the first non-ACGT symbol.
    Error,
}

#[derive(Debug, Clone, Copy, Default)]
pub struct IngestionPolicy {
    pub ambiguity: AmbiguityPolicy,
    pub default_topology: Topology,
}

#[derive(Debug, Error)]
pub enum SeqError {
    #[error("line {line}: sequence data before any FASTA header")]
    DataBeforeHeader { line: usize },
    #[error("record '{record}': invalid base '{symbol}' at position {position}")]
    InvalidBase {
        record: String,
        position: usize,
        symbol: char,
    },
    #[error("record '{record}': only {len} valid bases after cleaning (need at least 2)")]
    TooShort { record: String, len: usize },
    #[error("I/O error: {0}")]
    Io(#[from] io::Error),
}

/// A validated nucleotide sequence.
///
/// Immutable after construction; at least two bases long so that dinucleotide
/// windows are always defined.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Sequence {
    id: String,
    bases: Vec<Nucleotide>,
    topology: Topology,
    skipped_positions: usize,
}

impl Sequence {
    pub fn new(
        id: impl Into<String>,
        bases: Vec<Nucleotide>,
        topology: Topology,
    ) -> Result<Self, SeqError> {
        let id = id.into();
        if bases.len() < 2 {
            return Err(SeqError::TooShort {
                record: id,
                len: bases.len(),
            });
        }
        Ok(Self {
            id,
            bases,
            topology,
            skipped_positions: 0,
        })
    }

    /// Parse from an ACGT string; convenience for tests and small inputs.
    pub fn from_str_circular(id: &str, s: &str) -> Result<Self, SeqError> {
        let bases = s
            .chars()
            .enumerate()
            .map(|(i, c)| {
                Nucleotide::from_char(c).ok_or(SeqError::InvalidBase {
                    record: id.to_string(),
                    position: i + 1,
                    symbol: c,
                })
            })
            .collect::<Result<Vec<_>, _>>()?;
        Self::new(id, bases, Topology::Circular)
    }

    pub fn id(&self) -> &str {
        &self.id
    }

    pub fn bases(&self) -> &[Nucleotide] {
        &self.bases
    }

    pub fn len(&self) -> usize {
        self.bases.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bases.is_empty()
    }

    pub fn topology(&self) -> Topology {
        self.topology
    }

    pub fn skipped_positions(&self) -> usize {
        self.skipped_positions
    }

    pub fn with_id(mut self, id: impl Into<String>) -> Self {
        self.id = id.into();
        self
    }

    pub fn with_topology(mut self, topology: Topology) -> Self {
        self.topology = topology;
        self
    }

    /// Fraction of G and C bases.
    pub fn gc_content(&self) -> f64 {
        let gc = self
            .bases
            .iter()
            .filter(|b| matches!(b, Nucleotide::G | Nucleotide::C))
            .count();
        gc as f64 / self.bases.len() as f64
    }

    /// The complementary strand read in the opposite direction: output base j
    /// is the complement of input base len-1-j.
    pub fn reverse_complement(&self) -> Sequence {
        let bases = self
            .bases
            .iter()
            .rev()
            .map(|b| b.complement())
            .collect::<Vec<_>>();
        Sequence {
            id: self.id.clone(),
            bases,
            topology: self.topology,
            skipped_positions: self.skipped_positions,
        }
    }
}

impl fmt::Display for Sequence {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for b in &self.bases {
            write!(f, "{}", b.to_char())?;
        }
        Ok(())
    }
}

/// Parse FASTA records from a reader.
///
/// Headers become sequence ids (text after '>' up to end of line, trimmed).
/// Sequence lines may hold bases in either case and arbitrary line widths;
/// whitespace and CR are ignored. Positions reported in errors are 1-based
/// ordinals among the sequence symbols of the offending record.
pub fn parse_fasta(
    reader: impl BufRead,
    policy: &IngestionPolicy,
) -> Result<Vec<Sequence>, SeqError> {
    let mut records = Vec::new();
    let mut current: Option<RecordBuilder> = None;

    for (lineno, line) in reader.lines().enumerate() {
        let line = line?;
        let line = line.trim_end_matches(['\r', '\n']);
        if let Some(header) = line.strip_prefix('>') {
            if let Some(rec) = current.take() {
                records.push(rec.finish()?);
            }
            current = Some(RecordBuilder::new(header.trim().to_string(), *policy));
        } else if line.trim().is_empty() {
            continue;
        } else {
            match current.as_mut() {
                Some(rec) => rec.push_line(line)?,
                None => return Err(SeqError::DataBeforeHeader { line: lineno + 1 }),
            }
        }
    }
    if let Some(rec) = current.take() {
        records.push(rec.finish()?);
    }
    Ok(records)
}

struct RecordBuilder {
    id: String,
    bases: Vec<Nucleotide>,
    skipped: usize,
    position: usize,
    policy: IngestionPolicy,
}

impl RecordBuilder {
    fn new(id: String, policy: IngestionPolicy) -> Self {
        Self {
            id,
            bases: Vec::new(),
            skipped: 0,
            position: 0,
            policy,
        }
    }

    fn push_line(&mut self, line: &str) -> Result<(), SeqError> {
        for c in line.chars() {
            if c.is_ascii_whitespace() {
                continue;
            }
            self.position += 1;
            match Nucleotide::from_char(c) {
                Some(b) => self.bases.push(b),
                None => match self.policy.ambiguity {
                    AmbiguityPolicy::Skip => self.skipped += 1,
                    AmbiguityPolicy::Error => {
                        return Err(SeqError::InvalidBase {
                            record: self.id.clone(),
                            position: self.position,
                            symbol: c,
                        })
                    }
                },
            }
        }
        Ok(())
    }

    fn finish(self) -> Result<Sequence, SeqError> {
        if self.bases.len() < 2 {
            return Err(SeqError::TooShort {
                record: self.id,
                len: self.bases.len(),
            });
        }
        Ok(Sequence {
            id: self.id,
            bases: self.bases,
            topology: self.policy.default_topology,
            skipped_positions: self.skipped,
        })
    }
}

/// Write sequences as FASTA with 70-column wrapping.
pub fn write_fasta(mut w: impl Write, seqs: &[Sequence]) -> io::Result<()> {
    for s in seqs {
        writeln!(w, ">{}", s.id())?;
        for chunk in s.bases().chunks(70) {
            let line: String = chunk.iter().map(|b| b.to_char()).collect();
            writeln!(w, "{line}")?;
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn skip_policy() -> IngestionPolicy {
        IngestionPolicy::default()
    }

    #[test]
    fn complement_is_involution() {
        for b in ALPHABET {
            assert_eq!(b.complement().complement(), b);
        }
        assert_eq!(Nucleotide::A.complement(), Nucleotide::T);
        assert_eq!(Nucleotide::T.complement(), Nucleotide::A);
        assert_eq!(Nucleotide::C.complement(), Nucleotide::G);
        assert_eq!(Nucleotide::G.complement(), Nucleotide::C);
    }

    #[test]
    fn parses_minimal_record() {
        let recs = parse_fasta(">s1\nACGT\n".as_bytes(), &skip_policy()).unwrap();
        assert_eq!(recs.len(), 1);
        assert_eq!(recs[0].id(), "s1");
        assert_eq!(recs[0].to_string(), "ACGT");
        assert_eq!(recs[0].skipped_positions(), 0);
        assert_eq!(recs[0].topology(), Topology::Circular);
    }

    #[test]
    fn skip_policy_drops_ambiguous_symbol() {
        let recs = parse_fasta(">s1\nACNGT\n".as_bytes(), &skip_policy()).unwrap();
        assert_eq!(recs[0].to_string(), "ACGT");
        assert_eq!(recs[0].skipped_positions(), 1);
    }

    #[test]
    fn error_policy_reports_position() {
        let policy = IngestionPolicy {
            ambiguity: AmbiguityPolicy::Error,
            ..Default::default()
        };
        let err = parse_fasta(">s1\nACNGT\n".as_bytes(), &policy).unwrap_err();
        match err {
            SeqError::InvalidBase {
                record,
                position,
                symbol,
            } => {
                assert_eq!(record, "s1");
                assert_eq!(position, 3);
                assert_eq!(symbol, 'N');
            }
            other => panic!("unexpected error: {other}"),
        }
    }

    #[test]
    fn multi_record_in_file_order() {
        let recs = parse_fasta(">a\nAC\n>b\nGT\n".as_bytes(), &skip_policy()).unwrap();
        assert_eq!(recs.len(), 2);
        assert_eq!(recs[0].id(), "a");
        assert_eq!(recs[0].to_string(), "AC");
        assert_eq!(recs[1].id(), "b");
        assert_eq!(recs[1].to_string(), "GT");
    }

    #[test]
    fn data_before_header_is_format_error() {
        let err = parse_fasta("ACGT\n>s1\nAC\n".as_bytes(), &skip_policy()).unwrap_err();
        assert!(matches!(err, SeqError::DataBeforeHeader { line: 1 }));
    }

    #[test]
    fn lowercase_and_line_breaks_tolerated() {
        let recs = parse_fasta(">s\nac\r\ngT\n".as_bytes(), &skip_policy()).unwrap();
        assert_eq!(recs[0].to_string(), "ACGT");
    }

    #[test]
    fn record_too_short_after_cleaning() {
        let err = parse_fasta(">s\nAN\n".as_bytes(), &skip_policy()).unwrap_err();
        assert!(matches!(err, SeqError::TooShort { len: 1, .. }));
    }

    #[test]
    fn gc_content_examples() {
        let s = Sequence::from_str_circular("s", "ACGT").unwrap();
        assert_eq!(s.gc_content(), 0.5);
        let s = Sequence::from_str_circular("s", "AAAA").unwrap();
        assert_eq!(s.gc_content(), 0.0);
        let s = Sequence::from_str_circular("s", "GGCCGC").unwrap();
        assert_eq!(s.gc_content(), 1.0);
    }

    #[test]
    fn reverse_complement_examples() {
        let s = Sequence::from_str_circular("s", "ACGT").unwrap();
        assert_eq!(s.reverse_complement().to_string(), "ACGT");
        let s = Sequence::from_str_circular("s", "AACC").unwrap();
        assert_eq!(s.reverse_complement().to_string(), "GGTT");
    }

    #[test]
    fn round_trip_through_fasta() {
        let recs = parse_fasta(
            ">a\nACGTACGT\n>b du jour\nTTTTAAAA\n".as_bytes(),
            &skip_policy(),
        )
        .unwrap();
        let mut out = Vec::new();
        write_fasta(&mut out, &recs).unwrap();
        let again = parse_fasta(out.as_slice(), &skip_policy()).unwrap();
        assert_eq!(recs, again);
    }

    mod properties {
        use super::*;
        use proptest::prelude::*;

        fn seq_strategy() -> impl Strategy<Value = Sequence> {
            proptest::collection::vec(0usize..4, 2..200).prop_map(|idx| {
                let bases = idx.into_iter().map(Nucleotide::from_index).collect();
                Sequence::new("p", bases, Topology::Circular).unwrap()
            })
        }

        proptest! {
            #[test]
            fn reverse_complement_is_an_involution(s in seq_strategy()) {
                prop_assert_eq!(s.reverse_complement().reverse_complement(), s);
            }

            #[test]
            fn gc_content_is_strand_symmetric(s in seq_strategy()) {
                prop_assert_eq!(s.gc_content(), s.reverse_complement().gc_content());
            }

            #[test]
            fn fasta_round_trip_preserves_bases(s in seq_strategy()) {
                let mut out = Vec::new();
                write_fasta(&mut out, std::slice::from_ref(&s)).unwrap();
                let again = parse_fasta(out.as_slice(), &IngestionPolicy::default()).unwrap();
                prop_assert_eq!(again[0].bases(), s.bases());
            }
        }
    }
}
