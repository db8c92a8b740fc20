//! Sequence ingestion: FASTA parsing, corpus assembly, and noise removal.
//!
//! Noise removal drops three kinds of records the downstream feature
//! extractors cannot tolerate: sequences containing non-standard residues
//! (B, J, O, U, X, Z, ...), exact duplicates, and sequences outside a
//! configured length range.

use std::collections::HashSet;
use std::fmt;

use crate::error::{Error, Result};

/// The 20 standard amino acids in alphabetical one-letter order.
pub const AMINO_ACIDS: [u8; 20] = *b"ACDEFGHIKLMNPQRSTVWY";

/// Map an amino-acid letter to its index in [`AMINO_ACIDS`], or `None`
/// for anything outside the standard alphabet.
pub fn residue_index(aa: u8) -> Option<usize> {
    match aa {
        b'A' => Some(0),
        b'C' => Some(1),
        b'D' => Some(2),
        b'E' => Some(3),
        b'F' => Some(4),
        b'G' => Some(5),
        b'H' => Some(6),
        b'I' => Some(7),
        b'K' => Some(8),
        b'L' => Some(9),
        b'M' => Some(10),
        b'N' => Some(11),
        b'P' => Some(12),
        b'Q' => Some(13),
        b'R' => Some(14),
        b'S' => Some(15),
        b'T' => Some(16),
        b'V' => Some(17),
        b'W' => Some(18),
        b'Y' => Some(19),
        _ => None,
    }
}

/// An identified amino-acid sequence.
///
/// Construction uppercases the residues and rejects empty ids or bodies.
/// Alphabet validity is established by [`clean_corpus`]; a freshly parsed
/// sequence may still contain non-standard letters and is checked with
/// [`ProteinSequence::has_valid_residues`] before feature extraction.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ProteinSequence {
    id: String,
    residues: String,
}

impl ProteinSequence {
    pub fn new(id: impl Into<String>, residues: impl Into<String>) -> Result<Self> {
        let id = id.into();
        let residues: String = residues.into().to_ascii_uppercase();
        if id.is_empty() {
            return Err(Error::InvalidSequence("empty sequence id".into()));
        }
        if residues.is_empty() {
            return Err(Error::InvalidSequence(format!(
                "sequence '{id}' has no residues"
            )));
        }
        Ok(Self { id, residues })
    }

    pub fn id(&self) -> &str {
        &self.id
    }

    pub fn residues(&self) -> &str {
        &self.residues
    }

    pub fn len(&self) -> usize {
        self.residues.len()
    }

    pub fn is_empty(&self) -> bool {
        self.residues.is_empty()
    }

    /// True when every residue belongs to the 20-letter alphabet.
    pub fn has_valid_residues(&self) -> bool {
        self.residues.bytes().all(|b| residue_index(b).is_some())
    }
}

/// A cleaned, label-consistent training or evaluation corpus.
///
/// `families` holds the distinct labels in sorted order; that order
/// defines the class indices used by every trained model.
#[derive(Debug, Clone)]
pub struct LabeledCorpus {
    pub records: Vec<(ProteinSequence, String)>,
    pub families: Vec<String>,
}

impl LabeledCorpus {
    /// Assemble a corpus, deriving the sorted family list. Fails on
    /// duplicate ids.
    pub fn new(records: Vec<(ProteinSequence, String)>) -> Result<Self> {
        let mut ids = HashSet::new();
        for (seq, _) in &records {
            if !ids.insert(seq.id().to_string()) {
                return Err(Error::InvalidSequence(format!(
                    "duplicate sequence id '{}' in corpus",
                    seq.id()
                )));
            }
        }
        let mut families: Vec<String> = records
            .iter()
            .map(|(_, label)| label.clone())
            .collect::<HashSet<_>>()
            .into_iter()
            .collect();
        families.sort();
        Ok(Self { records, families })
    }

    pub fn family_index(&self, label: &str) -> Option<usize> {
        self.families.iter().position(|f| f == label)
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }
}

/// Per-category drop counts from one [`clean_corpus`] pass.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct CleanReport {
    pub kept: usize,
    pub dropped_invalid_residue: usize,
    pub dropped_duplicate: usize,
    pub dropped_length: usize,
}

impl CleanReport {
    pub fn total(&self) -> usize {
        self.kept + self.dropped_invalid_residue + self.dropped_duplicate + self.dropped_length
    }
}

impl fmt::Display for CleanReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "kept\t{}", self.kept)?;
        writeln!(f, "dropped_invalid_residue\t{}", self.dropped_invalid_residue)?;
        writeln!(f, "dropped_duplicate\t{}", self.dropped_duplicate)?;
        write!(f, "dropped_length\t{}", self.dropped_length)
    }
}

/// Parse FASTA text into sequences.
///
/// Headers start with '>'; the id is the header text up to the first
/// whitespace; sequence lines are joined and uppercased. CR-LF input is
/// accepted. Sequence data before any header is a parse error.
pub fn parse_fasta(text: &str) -> Result<Vec<ProteinSequence>> {
    let mut out = Vec::new();
    let mut current: Option<(String, String, usize)> = None; // id, residues, header line

    let flush = |cur: Option<(String, String, usize)>, out: &mut Vec<ProteinSequence>| {
        if let Some((id, residues, line)) = cur {
            if residues.is_empty() {
                return Err(Error::FastaParse {
                    line,
                    msg: format!("record '{id}' has no sequence lines"),
                });
            }
            out.push(ProteinSequence::new(id, residues)?);
        }
        Ok(())
    };

    for (idx, raw) in text.lines().enumerate() {
        let line_no = idx + 1;
        let line = raw.trim_end_matches('\r');
        if line.is_empty() {
            continue;
        }
        if let Some(header) = line.strip_prefix('>') {
            flush(current.take(), &mut out)?;
            let id = header.split_whitespace().next().unwrap_or("").to_string();
            if id.is_empty() {
                return Err(Error::FastaParse {
                    line: line_no,
                    msg: "header with empty id".into(),
                });
            }
            current = Some((id, String::new(), line_no));
        } else {
            match current.as_mut() {
                Some((_, residues, _)) => {
                    residues.push_str(line.trim());
                }
                None => {
                    return Err(Error::FastaParse {
                        line: line_no,
                        msg: "sequence data before any '>' header".into(),
                    });
                }
            }
        }
    }
    flush(current.take(), &mut out)?;
    Ok(out)
}

/// Serialize sequences as FASTA, wrapping bodies at 60 columns.
pub fn write_fasta(seqs: &[ProteinSequence]) -> String {
    let mut out = String::new();
    for seq in seqs {
        out.push('>');
        out.push_str(seq.id());
        out.push('\n');
        for chunk in seq.residues().as_bytes().chunks(60) {
            out.push_str(std::str::from_utf8(chunk).expect("residues are ASCII"));
            out.push('\n');
        }
    }
    out
}

/// Remove noise records from a labeled collection.
///
/// Rules, applied per record in order: non-standard residues; exact
/// duplicates (same residues, or same id, as an earlier record that
/// passed the residue check — first occurrence wins); length outside
/// `[min_len, max_len]`. Degenerate inputs become drops, never faults.
pub fn clean_corpus(
    records: Vec<(ProteinSequence, String)>,
    min_len: usize,
    max_len: usize,
) -> Result<(LabeledCorpus, CleanReport)> {
    if min_len < 2 {
        return Err(Error::Config(
            "min_len must be at least 2 (2-gram features need L >= 2)".into(),
        ));
    }
    if max_len < min_len {
        return Err(Error::Config(format!(
            "max_len {max_len} is smaller than min_len {min_len}"
        )));
    }

    let mut report = CleanReport::default();
    let mut seen_residues: HashSet<String> = HashSet::new();
    let mut seen_ids: HashSet<String> = HashSet::new();
    let mut kept = Vec::new();

    for (seq, label) in records {
        if !seq.has_valid_residues() {
            report.dropped_invalid_residue += 1;
            continue;
        }
        if seen_residues.contains(seq.residues()) || seen_ids.contains(seq.id()) {
            report.dropped_duplicate += 1;
            continue;
        }
        seen_residues.insert(seq.residues().to_string());
        seen_ids.insert(seq.id().to_string());
        if seq.len() < min_len || seq.len() > max_len {
            report.dropped_length += 1;
            continue;
        }
        kept.push((seq, label));
    }

    report.kept = kept.len();
    let corpus = LabeledCorpus::new(kept)?;
    Ok((corpus, report))
}
