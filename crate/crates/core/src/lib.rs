//! Multi-phase cascade classifier for protein sequence families.
//!
//! Unknown sequences pass through four phases, any of which can produce
//! the final verdict:
//!
//! 1. **Band prefilter** — per-family feature ranges built from
//!    FFT-smoothed training series narrow the candidate family set.
//! 2. **Fuzzy ARTMAP** — a fast resonance classifier over scaled
//!    physicochemical features; a confident match ends the cascade.
//! 3. **SVM + MLP** — one-vs-rest linear SVMs over weighted k-mer
//!    features prune candidates, then a softmax network decides among
//!    the survivors.
//! 4. **Rough set** — reduct-based decision rules with a Hamming-ball
//!    neighborhood fallback; always decides.
//!
//! Trained artifacts are persisted together in a single text bundle (see
//! [`warehouse`]); the `protfam` CLI drives corpus generation, training,
//! classification, and evaluation.

pub mod artmap;
pub mod cascade;
pub mod error;
pub mod featurex;
pub mod neuralnet;
pub mod rng;
pub mod roughset;
pub mod seqio;
pub mod spectral;
pub mod strsvm;
pub mod synth;
pub mod train;
pub mod warehouse;

pub use cascade::{classify_cascade, evaluate, CascadeConfig, EvalMetrics, Verdict};
pub use error::{Error, Result};
pub use seqio::{clean_corpus, parse_fasta, write_fasta, CleanReport, LabeledCorpus, ProteinSequence};
pub use spectral::KnowledgeBase;
pub use synth::{gen_synth, SynthSpec};
pub use train::{train_bundle, TrainConfig};
pub use warehouse::{load_bundle, save_bundle, ModelBundle};
