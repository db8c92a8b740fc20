//! Four-phase cascade orchestration with confidence-gated early exit.
//!
//! Any phase can produce the verdict:
//!
//! 1. Band prefilter narrows the candidate families (fail-open); a
//!    singleton candidate set decides immediately.
//! 2. ARTMAP decides when its match confidence passes the `tau2` gate
//!    (restoring the full candidate set, recorded, if its prediction was
//!    prefiltered away); otherwise it prunes candidates to families with
//!    a category match of at least `tau2 / 2`.
//! 3. One-vs-rest SVM margins prune the candidates, then the MLP decides
//!    among the survivors when its renormalized probability passes
//!    `tau3`.
//! 4. RDT rules, falling back to neighborhood analysis over the
//!    candidate families, always decide.
//!
//! A gate threshold of 1.0 is compared strictly, so `tau = 1` means the
//! gate never passes. Candidate sets only shrink across phases except
//! where a recorded fail-open restores them.

use std::time::Instant;

use crate::error::{Error, Result};
use crate::featurex;
use crate::roughset::{neighborhood_classify, rule_classify, DecisionTable};
use crate::seqio::{LabeledCorpus, ProteinSequence};
use crate::spectral::{candidate_families_strict, KnowledgeBase};
use crate::strsvm::{svm_prune, weighted_feature};
use crate::train::mlp_features;
use crate::warehouse::ModelBundle;

/// Gating thresholds and the neighborhood radius.
#[derive(Debug, Clone, PartialEq)]
pub struct CascadeConfig {
    /// Fraction of features that must fall inside a family's bands.
    pub theta_prefilter: f64,
    /// Phase-2 confidence gate.
    pub tau2: f64,
    /// Phase-3 probability gate.
    pub tau3: f64,
    /// Phase-4 Hamming radius.
    pub radius: usize,
}

impl Default for CascadeConfig {
    fn default() -> Self {
        Self {
            theta_prefilter: 0.8,
            tau2: 0.9,
            tau3: 0.9,
            radius: 1,
        }
    }
}

/// The cascade's output for one sequence.
#[derive(Debug, Clone, PartialEq)]
pub struct Verdict {
    pub id: String,
    pub family: String,
    pub confidence: f64,
    /// 1-4; equals the number of recorded candidate sets.
    pub phase_decided: u8,
    /// Surviving candidate set after each executed phase (family
    /// indices into the bundle's family list).
    pub candidates_per_phase: Vec<Vec<usize>>,
    /// Phases where fail-open restored a candidate set.
    pub fail_open_phases: Vec<u8>,
    /// Wall-clock milliseconds spent in each executed phase.
    pub timings_ms: Vec<f64>,
}

impl Verdict {
    /// One tab-separated line: id, family, confidence (6 decimals),
    /// deciding phase, comma-joined per-phase candidate counts.
    pub fn render(&self) -> String {
        let counts: Vec<String> = self
            .candidates_per_phase
            .iter()
            .map(|c| c.len().to_string())
            .collect();
        format!(
            "{}\t{}\t{:.6}\t{}\t{}",
            self.id,
            self.family,
            self.confidence,
            self.phase_decided,
            counts.join(",")
        )
    }
}

/// True when `confidence` passes the gate; thresholds at or above 1.0
/// are strict, so they never pass.
fn gate(confidence: f64, tau: f64) -> bool {
    if tau >= 1.0 {
        confidence > tau
    } else {
        confidence >= tau
    }
}

fn elapsed_ms(from: Instant) -> f64 {
    from.elapsed().as_secs_f64() * 1e3
}

/// Run the cascade for one sequence.
pub fn classify_cascade(
    kb: &KnowledgeBase,
    bundle: &ModelBundle,
    seq: &ProteinSequence,
    cfg: &CascadeConfig,
) -> Result<Verdict> {
    if kb.families() != bundle.families.iter().map(|s| s.as_str()).collect::<Vec<_>>() {
        return Err(Error::FamilyMismatch(format!(
            "knowledge base families {:?} vs bundle families {:?}",
            kb.families(),
            bundle.families
        )));
    }
    if !seq.has_valid_residues() {
        return Err(Error::InvalidSequence(format!(
            "sequence '{}' contains non-standard residues",
            seq.id()
        )));
    }
    let min_len = bundle.kmer_table.k.max(2);
    if seq.len() < min_len {
        return Err(Error::InvalidSequence(format!(
            "sequence '{}' is shorter than {min_len}",
            seq.id()
        )));
    }

    let n_families = bundle.families.len();
    let all: Vec<usize> = (0..n_families).collect();
    let mut candidates_per_phase: Vec<Vec<usize>> = Vec::with_capacity(4);
    let mut fail_open_phases: Vec<u8> = Vec::new();
    let mut timings_ms: Vec<f64> = Vec::with_capacity(4);

    let verdict = |family: usize,
                   confidence: f64,
                   phase: u8,
                   candidates_per_phase: Vec<Vec<usize>>,
                   fail_open_phases: Vec<u8>,
                   timings_ms: Vec<f64>| {
        Verdict {
            id: seq.id().to_string(),
            family: bundle.families[family].clone(),
            confidence,
            phase_decided: phase,
            candidates_per_phase,
            fail_open_phases,
            timings_ms,
        }
    };

    // Phase 1: band prefilter.
    let start = Instant::now();
    let physico = featurex::physico_vector(seq)?.to_vec();
    let mut candidates = candidate_families_strict(kb, &physico, cfg.theta_prefilter);
    if candidates.is_empty() {
        candidates = all.clone();
        fail_open_phases.push(1);
    }
    candidates_per_phase.push(candidates.clone());
    timings_ms.push(elapsed_ms(start));
    if candidates.len() == 1 {
        let family = candidates[0];
        return Ok(verdict(
            family,
            1.0,
            1,
            candidates_per_phase,
            fail_open_phases,
            timings_ms,
        ));
    }

    // Phase 2: ARTMAP.
    let start = Instant::now();
    let scaled = kb.scale(&physico);
    let (predicted, confidence) = bundle.artmap.classify(&scaled)?;
    if gate(confidence, cfg.tau2) {
        if !candidates.contains(&predicted) {
            // A confident match overrides the prefilter; the restoration
            // to the full family set is recorded.
            candidates = all.clone();
            fail_open_phases.push(2);
        }
        candidates_per_phase.push(candidates.clone());
        timings_ms.push(elapsed_ms(start));
        return Ok(verdict(
            predicted,
            confidence,
            2,
            candidates_per_phase,
            fail_open_phases,
            timings_ms,
        ));
    }
    let kept: Vec<usize> = candidates
        .iter()
        .copied()
        .filter(|&f| {
            bundle
                .artmap
                .best_match_for_label(&scaled, f)
                .is_some_and(|m| m >= cfg.tau2 / 2.0)
        })
        .collect();
    if kept.is_empty() {
        fail_open_phases.push(2);
    } else {
        candidates = kept;
    }
    candidates_per_phase.push(candidates.clone());
    timings_ms.push(elapsed_ms(start));

    // Phase 3: SVM pruning, then the MLP over the survivors.
    let start = Instant::now();
    let svm_x = weighted_feature(seq, &bundle.kmer_table)?;
    let (survivors, _margins) = svm_prune(&bundle.svm, &svm_x, &candidates);
    let mlp_x = mlp_features(seq, bundle.train_config.spectral_m)?;
    let probs = bundle.mlp.forward(&mlp_x)?;
    let total: f64 = survivors.iter().map(|&f| probs[f]).sum();
    let (best_family, best_prob) = survivors
        .iter()
        .map(|&f| (f, probs[f] / total))
        .fold((survivors[0], f64::NEG_INFINITY), |acc, (f, p)| {
            if p > acc.1 {
                (f, p)
            } else {
                acc
            }
        });
    candidates = survivors;
    candidates_per_phase.push(candidates.clone());
    timings_ms.push(elapsed_ms(start));
    if gate(best_prob, cfg.tau3) {
        return Ok(verdict(
            best_family,
            best_prob,
            3,
            candidates_per_phase,
            fail_open_phases,
            timings_ms,
        ));
    }

    // Phase 4: rough-set rules, then neighborhood analysis. Always
    // decides.
    let start = Instant::now();
    let row = bundle.rough.table.bin_row(&physico);
    let ruled = rule_classify(&bundle.rough.rules, &row).filter(|label| candidates.contains(label));
    let (family, confidence) = match ruled {
        Some(label) => (label, 1.0),
        None => {
            // Restrict the vote to candidate families by filtering the
            // training rows.
            let filtered = DecisionTable {
                rows: bundle
                    .rough
                    .table
                    .rows
                    .iter()
                    .filter(|(_, d)| candidates.contains(d))
                    .cloned()
                    .collect(),
                n_attrs: bundle.rough.table.n_attrs,
                bins: bundle.rough.table.bins,
                boundaries: bundle.rough.table.boundaries.clone(),
            };
            neighborhood_classify(&filtered, &bundle.rough.reduct.attrs, &row, cfg.radius)
        }
    };
    candidates_per_phase.push(candidates.clone());
    timings_ms.push(elapsed_ms(start));
    Ok(verdict(
        family,
        confidence,
        4,
        candidates_per_phase,
        fail_open_phases,
        timings_ms,
    ))
}

/// Per-family precision and recall over one evaluation run.
#[derive(Debug, Clone, PartialEq)]
pub struct FamilyMetrics {
    pub family: String,
    pub precision: f64,
    pub recall: f64,
    pub support: usize,
}

/// Aggregated evaluation results.
#[derive(Debug, Clone, PartialEq)]
pub struct EvalMetrics {
    pub accuracy: f64,
    pub per_family: Vec<FamilyMetrics>,
    /// Verdicts decided at each phase (index 0 is phase 1).
    pub phase_decided: [usize; 4],
    /// Mean milliseconds per executed phase.
    pub phase_mean_ms: [f64; 4],
    pub total: usize,
}

impl EvalMetrics {
    /// Tab-separated report: one accuracy line, a per-family table, and
    /// per-phase decision counts with mean latencies.
    pub fn render(&self) -> String {
        let mut out = String::new();
        out.push_str(&format!("accuracy\t{:.6}\n", self.accuracy));
        out.push_str("family\tprecision\trecall\tsupport\n");
        for fm in &self.per_family {
            out.push_str(&format!(
                "{}\t{:.6}\t{:.6}\t{}\n",
                fm.family, fm.precision, fm.recall, fm.support
            ));
        }
        out.push_str("phase\tdecided\tmean_ms\n");
        for phase in 0..4 {
            out.push_str(&format!(
                "{}\t{}\t{:.3}\n",
                phase + 1,
                self.phase_decided[phase],
                self.phase_mean_ms[phase]
            ));
        }
        out
    }
}

/// Classify a labeled corpus and aggregate accuracy, per-family
/// precision/recall, per-phase decision counts, and mean latencies.
pub fn evaluate(
    kb: &KnowledgeBase,
    bundle: &ModelBundle,
    test: &LabeledCorpus,
    cfg: &CascadeConfig,
) -> Result<EvalMetrics> {
    if test.is_empty() {
        return Err(Error::Training("evaluation corpus is empty".into()));
    }

    let n = bundle.families.len();
    let mut correct = 0usize;
    let mut true_positives = vec![0usize; n];
    let mut predicted_counts = vec![0usize; n];
    let mut support = vec![0usize; n];
    let mut phase_decided = [0usize; 4];
    let mut phase_time = [0.0f64; 4];
    let mut phase_runs = [0usize; 4];

    for (seq, label) in &test.records {
        let v = classify_cascade(kb, bundle, seq, cfg)?;
        let predicted = bundle
            .families
            .iter()
            .position(|f| *f == v.family)
            .expect("verdict family comes from the bundle");
        predicted_counts[predicted] += 1;
        if let Some(truth) = bundle.families.iter().position(|f| f == label) {
            support[truth] += 1;
            if truth == predicted {
                correct += 1;
                true_positives[truth] += 1;
            }
        }
        phase_decided[v.phase_decided as usize - 1] += 1;
        for (phase, &ms) in v.timings_ms.iter().enumerate() {
            phase_time[phase] += ms;
            phase_runs[phase] += 1;
        }
    }

    let per_family = bundle
        .families
        .iter()
        .enumerate()
        .map(|(i, family)| FamilyMetrics {
            family: family.clone(),
            precision: if predicted_counts[i] > 0 {
                true_positives[i] as f64 / predicted_counts[i] as f64
            } else {
                0.0
            },
            recall: if support[i] > 0 {
                true_positives[i] as f64 / support[i] as f64
            } else {
                0.0
            },
            support: support[i],
        })
        .collect();

    let mut phase_mean_ms = [0.0f64; 4];
    for phase in 0..4 {
        if phase_runs[phase] > 0 {
            phase_mean_ms[phase] = phase_time[phase] / phase_runs[phase] as f64;
        }
    }

    Ok(EvalMetrics {
        accuracy: correct as f64 / test.len() as f64,
        per_family,
        phase_decided,
        phase_mean_ms,
        total: test.len(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::artmap::{ArtmapModel, ArtmapParams};
    use crate::neuralnet::{init_mlp, MlpConfig};
    use crate::roughset::{build_rdt, discretize, greedy_reduct};
    use crate::spectral::build_family_bands;
    use crate::strsvm::{kmer_weights, BinarySvm, SvmModel};
    use crate::synth::{gen_synth, SynthSpec};
    use crate::train::{train_bundle, TrainConfig};
    use crate::warehouse::RoughArtifacts;

    fn corpus(seed: u64) -> LabeledCorpus {
        gen_synth(&SynthSpec {
            families: 3,
            per_family: 10,
            len_min: 40,
            len_max: 60,
            motifs_per_family: 2,
            motif_len: 5,
            seed,
        })
        .unwrap()
    }

    fn quick_config() -> TrainConfig {
        TrainConfig {
            epochs: 30,
            hidden: 8,
            ..TrainConfig::default()
        }
    }

    #[test]
    fn zero_tau2_decides_by_phase_two() {
        let train = corpus(5);
        let bundle = train_bundle(&train, &quick_config()).unwrap();
        let cfg = CascadeConfig {
            tau2: 0.0,
            ..CascadeConfig::default()
        };
        for (seq, _) in &corpus(6).records {
            let v = classify_cascade(&bundle.kb, &bundle, seq, &cfg).unwrap();
            assert!(v.phase_decided <= 2, "{} decided at {}", v.id, v.phase_decided);
        }
    }

    #[test]
    fn closed_gates_push_everything_to_phase_four() {
        let train = corpus(7);
        let bundle = train_bundle(&train, &quick_config()).unwrap();
        let cfg = CascadeConfig {
            theta_prefilter: 0.0,
            tau2: 1.0,
            tau3: 1.0,
            radius: 1,
        };
        for (seq, _) in &corpus(8).records {
            let v = classify_cascade(&bundle.kb, &bundle, seq, &cfg).unwrap();
            assert_eq!(v.phase_decided, 4, "{}", v.id);
            assert_eq!(v.candidates_per_phase.len(), 4);
        }
    }

    #[test]
    fn single_family_bundle_decides_at_phase_one() {
        let solo = gen_synth(&SynthSpec {
            families: 1,
            per_family: 6,
            len_min: 40,
            len_max: 50,
            motifs_per_family: 2,
            motif_len: 5,
            seed: 9,
        })
        .unwrap();
        let kb = build_family_bands(&solo, usize::MAX, 0.05).unwrap();

        let physico: Vec<Vec<f64>> = solo
            .records
            .iter()
            .map(|(s, _)| featurex::physico_vector(s).unwrap().to_vec())
            .collect();
        let scaled: Vec<(Vec<f64>, usize)> =
            physico.iter().map(|f| (kb.scale(f), 0usize)).collect();
        let artmap = ArtmapModel::train(&scaled, ArtmapParams::default()).unwrap();
        let kmer_table = kmer_weights(&solo, 3, 1.0).unwrap();
        let labels = vec![0usize; solo.len()];
        let table = discretize(&physico, &labels, 5).unwrap();
        let reduct = greedy_reduct(&table);
        let rules = build_rdt(&table, &reduct);
        let mlp = init_mlp(MlpConfig {
            layer_sizes: vec![452, 4, 1],
            learning_rate: 0.1,
            epochs: 0,
            seed: 1,
        })
        .unwrap();

        let bundle = ModelBundle {
            families: solo.families.clone(),
            kb: kb.clone(),
            artmap,
            kmer_table,
            svm: SvmModel {
                dim: 1,
                c: 1.0,
                machines: vec![BinarySvm {
                    weights: vec![0.0],
                    bias: 0.0,
                }],
            },
            mlp,
            rough: RoughArtifacts {
                table,
                reduct,
                rules,
            },
            train_config: quick_config(),
        };

        let (seq, _) = &solo.records[0];
        let v = classify_cascade(&kb, &bundle, seq, &CascadeConfig::default()).unwrap();
        assert_eq!(v.phase_decided, 1);
        assert_eq!(v.confidence, 1.0);
        assert_eq!(v.family, solo.families[0]);
    }

    #[test]
    fn family_set_mismatch_is_an_error() {
        let bundle = train_bundle(&corpus(11), &quick_config()).unwrap();
        let other = gen_synth(&SynthSpec {
            families: 4,
            per_family: 6,
            len_min: 40,
            len_max: 50,
            motifs_per_family: 2,
            motif_len: 5,
            seed: 12,
        })
        .unwrap();
        let other_kb = build_family_bands(&other, 8, 0.05).unwrap();
        let (seq, _) = &other.records[0];
        match classify_cascade(&other_kb, &bundle, seq, &CascadeConfig::default()) {
            Err(Error::FamilyMismatch(_)) => {}
            other => panic!("unexpected result {other:?}"),
        }
    }

    #[test]
    fn memorizing_configuration_is_perfect_on_training_data() {
        let train = corpus(13);
        let cfg = TrainConfig {
            rho_base: 1.0,
            beta: 1.0,
            top_k: usize::MAX,
            epochs: 10,
            hidden: 8,
            ..TrainConfig::default()
        };
        let bundle = train_bundle(&train, &cfg).unwrap();
        let cascade_cfg = CascadeConfig {
            tau2: 0.0,
            ..CascadeConfig::default()
        };
        let metrics = evaluate(&bundle.kb, &bundle, &train, &cascade_cfg).unwrap();
        assert_eq!(metrics.accuracy, 1.0, "metrics: {}", metrics.render());
    }

    #[test]
    fn phase_counts_sum_to_test_size() {
        let bundle = train_bundle(&corpus(17), &quick_config()).unwrap();
        let test = corpus(18);
        let metrics =
            evaluate(&bundle.kb, &bundle, &test, &CascadeConfig::default()).unwrap();
        assert_eq!(metrics.phase_decided.iter().sum::<usize>(), test.len());
        assert_eq!(metrics.total, test.len());
    }

    #[test]
    fn accuracy_is_order_invariant() {
        let bundle = train_bundle(&corpus(19), &quick_config()).unwrap();
        let test = corpus(20);
        let forward = evaluate(&bundle.kb, &bundle, &test, &CascadeConfig::default()).unwrap();
        let mut reversed_records = test.records.clone();
        reversed_records.reverse();
        let reversed = LabeledCorpus::new(reversed_records).unwrap();
        let backward =
            evaluate(&bundle.kb, &bundle, &reversed, &CascadeConfig::default()).unwrap();
        assert_eq!(forward.accuracy, backward.accuracy);
    }

    #[test]
    fn raising_tau2_never_reduces_phase_three_traffic() {
        let bundle = train_bundle(&corpus(21), &quick_config()).unwrap();
        let test = corpus(22);
        let mut last = 0usize;
        for tau2 in [0.0, 0.3, 0.6, 0.9, 1.0] {
            let cfg = CascadeConfig {
                tau2,
                ..CascadeConfig::default()
            };
            let reaching: usize = test
                .records
                .iter()
                .map(|(seq, _)| {
                    let v = classify_cascade(&bundle.kb, &bundle, seq, &cfg).unwrap();
                    usize::from(v.phase_decided >= 3)
                })
                .sum();
            assert!(
                reaching >= last,
                "tau2={tau2}: {reaching} < previous {last}"
            );
            last = reaching;
        }
    }

    #[test]
    fn candidate_sets_shrink_except_recorded_fail_open() {
        let bundle = train_bundle(&corpus(23), &quick_config()).unwrap();
        for (seq, _) in &corpus(24).records {
            for tau2 in [0.0, 0.5, 0.9, 1.0] {
                let cfg = CascadeConfig {
                    tau2,
                    tau3: 0.95,
                    ..CascadeConfig::default()
                };
                let v = classify_cascade(&bundle.kb, &bundle, seq, &cfg).unwrap();
                for i in 1..v.candidates_per_phase.len() {
                    let phase = (i + 1) as u8;
                    if v.fail_open_phases.contains(&phase) {
                        continue;
                    }
                    let prev = &v.candidates_per_phase[i - 1];
                    assert!(
                        v.candidates_per_phase[i].iter().all(|f| prev.contains(f)),
                        "phase {phase} grew the candidate set: {:?}",
                        v.candidates_per_phase
                    );
                }
                let family_idx = bundle
                    .families
                    .iter()
                    .position(|f| *f == v.family)
                    .unwrap();
                assert!(v
                    .candidates_per_phase
                    .last()
                    .unwrap()
                    .contains(&family_idx));
            }
        }
    }

    #[test]
    fn classification_is_deterministic() {
        let bundle = train_bundle(&corpus(25), &quick_config()).unwrap();
        let (seq, _) = &corpus(26).records[0];
        let a = classify_cascade(&bundle.kb, &bundle, seq, &CascadeConfig::default()).unwrap();
        let b = classify_cascade(&bundle.kb, &bundle, seq, &CascadeConfig::default()).unwrap();
        assert_eq!(a.family, b.family);
        assert_eq!(a.confidence, b.confidence);
        assert_eq!(a.phase_decided, b.phase_decided);
        assert_eq!(a.candidates_per_phase, b.candidates_per_phase);
    }

    #[test]
    fn invalid_sequences_are_rejected() {
        let bundle = train_bundle(&corpus(27), &quick_config()).unwrap();
        let bad = ProteinSequence::new("bad", "ACXDEFGHIKL").unwrap();
        assert!(classify_cascade(&bundle.kb, &bundle, &bad, &CascadeConfig::default()).is_err());
        let short = ProteinSequence::new("short", "AC").unwrap();
        assert!(
            classify_cascade(&bundle.kb, &bundle, &short, &CascadeConfig::default()).is_err()
        );
    }

    #[test]
    fn verdict_line_format() {
        let v = Verdict {
            id: "q1".into(),
            family: "fam2".into(),
            confidence: 0.9731556,
            phase_decided: 2,
            candidates_per_phase: vec![vec![0, 1, 2], vec![2]],
            fail_open_phases: vec![],
            timings_ms: vec![0.1, 0.2],
        };
        assert_eq!(v.render(), "q1\tfam2\t0.973156\t2\t3,1");
    }

    #[test]
    fn empty_evaluation_corpus_errors() {
        let bundle = train_bundle(&corpus(29), &quick_config()).unwrap();
        let empty = LabeledCorpus::new(vec![]).unwrap();
        assert!(evaluate(&bundle.kb, &bundle, &empty, &CascadeConfig::default()).is_err());
    }
}
