//! Error type shared by every module in the crate.

use thiserror::Error;

/// Errors produced anywhere in the classification pipeline.
#[derive(Debug, Error)]
pub enum Error {
    /// FASTA text that cannot be parsed; carries the 1-based line number.
    #[error("FASTA parse error at line {line}: {msg}")]
    FastaParse { line: usize, msg: String },

    /// A sequence violates a structural invariant (empty id, empty residues, ...).
    #[error("invalid sequence: {0}")]
    InvalidSequence(String),

    /// A feature cannot be computed for the given sequence.
    #[error("feature error: {0}")]
    Feature(String),

    /// Bad configuration or parameter value.
    #[error("invalid configuration: {0}")]
    Config(String),

    /// Vector dimensionality does not match what the model expects.
    #[error("dimension mismatch: expected {expected}, found {found}")]
    Dimension { expected: usize, found: usize },

    /// A family has too few training sequences for band construction.
    #[error("family '{family}' has only {size} training sequences (minimum {min})")]
    FamilyTooSmall {
        family: String,
        size: usize,
        min: usize,
    },

    /// Training was requested on empty or single-class data.
    #[error("training error: {0}")]
    Training(String),

    /// A model was queried before it was trained.
    #[error("model not trained: {0}")]
    NotTrained(&'static str),

    /// Knowledge base and model bundle disagree on the family set.
    #[error("family-set mismatch: {0}")]
    FamilyMismatch(String),

    /// Bundle file carries an unsupported version tag.
    #[error("bundle version error: found '{found}', expected '{expected}'")]
    Version { found: String, expected: String },

    /// Bundle file is malformed; carries the section being parsed.
    #[error("bundle parse error in section '{section}': {msg}")]
    BundleParse { section: String, msg: String },

    /// A loaded bundle violates a model invariant.
    #[error("bundle validation error: {0}")]
    Validation(String),

    /// Synthetic-corpus specification cannot be satisfied.
    #[error("infeasible synthesis spec: {0}")]
    Infeasible(String),

    /// Underlying I/O failure, annotated with the path involved.
    #[error("I/O error on '{path}': {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

/// Crate-wide result alias.
pub type Result<T> = std::result::Result<T, Error>;
