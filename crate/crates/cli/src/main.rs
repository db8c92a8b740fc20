//! `protfam` — train, persist, and run the four-phase protein family
//! cascade from the command line.
//!
//! Corpus directories hold one FASTA file per family; the file stem is
//! the family label. Verdicts and metrics go to standard output as
//! tab-separated lines; diagnostics and clean reports go to standard
//! error. Every subcommand is deterministic given its flags and inputs.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use protfam_core::cascade::{classify_cascade, evaluate, CascadeConfig};
use protfam_core::seqio::{clean_corpus, parse_fasta, write_fasta, LabeledCorpus, ProteinSequence};
use protfam_core::synth::{gen_synth, SynthSpec};
use protfam_core::train::{train_bundle, TrainConfig};
use protfam_core::warehouse::{load_bundle, save_bundle};
use protfam_core::{Error, Result};

#[derive(Parser)]
#[command(
    name = "protfam",
    about = "Multi-phase cascade classifier for protein sequence families",
    version
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a deterministic synthetic corpus, one FASTA per family.
    #[command(name = "gen-synth")]
    GenSynth {
        #[arg(long)]
        families: usize,
        #[arg(long = "per-family")]
        per_family: usize,
        #[arg(long = "len-min")]
        len_min: usize,
        #[arg(long = "len-max")]
        len_max: usize,
        /// Exclusive motifs implanted per family.
        #[arg(long)]
        motifs: usize,
        #[arg(long = "motif-len")]
        motif_len: usize,
        #[arg(long)]
        seed: u64,
        /// Output directory (created if missing).
        #[arg(long)]
        out: PathBuf,
    },
    /// Train every phase on a corpus directory and save the bundle.
    Train {
        /// Directory of per-family FASTA files.
        #[arg(long)]
        data: PathBuf,
        /// Bundle file to write.
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 3)]
        k: usize,
        #[arg(long, default_value_t = 5)]
        bins: usize,
        /// Baseline ARTMAP vigilance.
        #[arg(long, default_value_t = 0.75)]
        rho: f64,
        #[arg(long, default_value_t = 64)]
        hidden: usize,
        #[arg(long, default_value_t = 200)]
        epochs: usize,
        #[arg(long, default_value_t = 42)]
        seed: u64,
        /// Frequency groups kept per family band.
        #[arg(long = "top-k", default_value_t = 8)]
        top_k: usize,
        #[arg(long, default_value_t = 0.05)]
        slack: f64,
    },
    /// Print physico feature vectors, one tab-separated row per
    /// sequence: id, then the 43 values.
    Features {
        /// FASTA file of sequences.
        #[arg(long = "in")]
        input: PathBuf,
    },
    /// Classify sequences; one verdict line per sequence on stdout.
    Classify {
        #[arg(long)]
        bundle: PathBuf,
        /// FASTA file of sequences to classify.
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long, default_value_t = 0.9)]
        tau2: f64,
        #[arg(long, default_value_t = 0.9)]
        tau3: f64,
    },
    /// Evaluate a bundle on a labeled corpus directory.
    Eval {
        #[arg(long)]
        bundle: PathBuf,
        #[arg(long)]
        data: PathBuf,
    },
    /// Noise-remove a FASTA file; the report goes to stderr.
    Clean {
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long = "out")]
        output: PathBuf,
        #[arg(long = "min-len", default_value_t = 10)]
        min_len: usize,
        #[arg(long = "max-len", default_value_t = 10_000)]
        max_len: usize,
    },
}

fn read_file(path: &Path) -> Result<String> {
    std::fs::read_to_string(path).map_err(|source| Error::Io {
        path: path.display().to_string(),
        source,
    })
}

/// Load a corpus directory: every `.fasta`/`.fa` file is one family,
/// labeled by its file stem, in sorted filename order.
fn read_corpus_dir(dir: &Path) -> Result<Vec<(ProteinSequence, String)>> {
    let entries = std::fs::read_dir(dir).map_err(|source| Error::Io {
        path: dir.display().to_string(),
        source,
    })?;
    let mut files: Vec<PathBuf> = entries
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| {
            matches!(
                p.extension().and_then(|e| e.to_str()),
                Some("fasta") | Some("fa")
            )
        })
        .collect();
    files.sort();
    if files.is_empty() {
        return Err(Error::Config(format!(
            "no FASTA files (*.fasta, *.fa) in '{}'",
            dir.display()
        )));
    }

    let mut records = Vec::new();
    for file in files {
        let label = file
            .file_stem()
            .and_then(|s| s.to_str())
            .ok_or_else(|| Error::Config(format!("unusable file name '{}'", file.display())))?
            .to_string();
        for seq in parse_fasta(&read_file(&file)?)? {
            records.push((seq, label.clone()));
        }
    }
    Ok(records)
}

/// Clean a directory corpus with the default length window, echoing the
/// report to stderr.
fn load_clean_corpus(dir: &Path) -> Result<LabeledCorpus> {
    let records = read_corpus_dir(dir)?;
    let (corpus, report) = clean_corpus(records, 10, 10_000)?;
    eprintln!("{report}");
    Ok(corpus)
}

fn run(command: Command) -> Result<()> {
    match command {
        Command::GenSynth {
            families,
            per_family,
            len_min,
            len_max,
            motifs,
            motif_len,
            seed,
            out,
        } => {
            let corpus = gen_synth(&SynthSpec {
                families,
                per_family,
                len_min,
                len_max,
                motifs_per_family: motifs,
                motif_len,
                seed,
            })?;
            std::fs::create_dir_all(&out).map_err(|source| Error::Io {
                path: out.display().to_string(),
                source,
            })?;
            for family in &corpus.families {
                let seqs: Vec<ProteinSequence> = corpus
                    .records
                    .iter()
                    .filter(|(_, label)| label == family)
                    .map(|(seq, _)| seq.clone())
                    .collect();
                let path = out.join(format!("{family}.fasta"));
                std::fs::write(&path, write_fasta(&seqs)).map_err(|source| Error::Io {
                    path: path.display().to_string(),
                    source,
                })?;
            }
            eprintln!(
                "wrote {} sequences across {} families to {}",
                corpus.len(),
                corpus.families.len(),
                out.display()
            );
            Ok(())
        }
        Command::Train {
            data,
            out,
            k,
            bins,
            rho,
            hidden,
            epochs,
            seed,
            top_k,
            slack,
        } => {
            let corpus = load_clean_corpus(&data)?;
            let cfg = TrainConfig {
                k,
                bins,
                rho_base: rho,
                hidden,
                epochs,
                seed,
                top_k,
                slack,
                ..TrainConfig::default()
            };
            let bundle = train_bundle(&corpus, &cfg)?;
            save_bundle(&bundle, &out)?;
            eprintln!(
                "trained on {} sequences, {} families; bundle written to {}",
                corpus.len(),
                corpus.families.len(),
                out.display()
            );
            Ok(())
        }
        Command::Features { input } => {
            for seq in parse_fasta(&read_file(&input)?)? {
                let values = protfam_core::featurex::physico_vector(&seq)?.to_vec();
                let mut line = seq.id().to_string();
                for v in values {
                    line.push('\t');
                    line.push_str(&format!("{v:.6}"));
                }
                println!("{line}");
            }
            Ok(())
        }
        Command::Classify {
            bundle,
            input,
            tau2,
            tau3,
        } => {
            let bundle = load_bundle(&bundle)?;
            let cfg = CascadeConfig {
                tau2,
                tau3,
                ..CascadeConfig::default()
            };
            for seq in parse_fasta(&read_file(&input)?)? {
                let verdict = classify_cascade(&bundle.kb, &bundle, &seq, &cfg)?;
                println!("{}", verdict.render());
            }
            Ok(())
        }
        Command::Eval { bundle, data } => {
            let bundle = load_bundle(&bundle)?;
            let corpus = load_clean_corpus(&data)?;
            let metrics = evaluate(&bundle.kb, &bundle, &corpus, &CascadeConfig::default())?;
            print!("{}", metrics.render());
            Ok(())
        }
        Command::Clean {
            input,
            output,
            min_len,
            max_len,
        } => {
            let records: Vec<(ProteinSequence, String)> = parse_fasta(&read_file(&input)?)?
                .into_iter()
                .map(|seq| (seq, String::new()))
                .collect();
            let (corpus, report) = clean_corpus(records, min_len, max_len)?;
            let kept: Vec<ProteinSequence> =
                corpus.records.into_iter().map(|(seq, _)| seq).collect();
            std::fs::write(&output, write_fasta(&kept)).map_err(|source| Error::Io {
                path: output.display().to_string(),
                source,
            })?;
            eprintln!("{report}");
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err}");
            ExitCode::FAILURE
        }
    }
}
