//! End-to-end training: builds every phase's artifact from one corpus
//! and assembles the model bundle.

use crate::artmap::{ArtmapModel, ArtmapParams};
use crate::error::{Error, Result};
use crate::featurex;
use crate::neuralnet::{init_mlp, MlpConfig};
use crate::roughset::{build_rdt, discretize, greedy_reduct};
use crate::seqio::{LabeledCorpus, ProteinSequence};
use crate::spectral::{self, build_family_bands_from_features};
use crate::strsvm::{kmer_weights, train_ovr_svm, weighted_feature};
use crate::warehouse::{ModelBundle, RoughArtifacts};

/// Every knob of the training pipeline, echoed into the saved bundle.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainConfig {
    /// k-mer length for the string-weighted features.
    pub k: usize,
    pub pseudocount: f64,
    /// Soft-margin regularization for the one-vs-rest SVMs.
    pub svm_c: f64,
    /// Bin count for rough-set discretization.
    pub bins: usize,
    pub rho_base: f64,
    pub alpha: f64,
    pub beta: f64,
    pub eps_mt: f64,
    pub artmap_epochs: usize,
    /// Hidden layer width of the MLP.
    pub hidden: usize,
    pub epochs: usize,
    pub learning_rate: f64,
    pub seed: u64,
    /// Retained frequency groups per family band.
    pub top_k: usize,
    pub slack: f64,
    /// Spectral magnitudes appended to the MLP features.
    pub spectral_m: usize,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            k: 3,
            pseudocount: 1.0,
            svm_c: 1.0,
            bins: 5,
            rho_base: 0.75,
            alpha: 0.001,
            beta: 1.0,
            eps_mt: 0.001,
            artmap_epochs: 10,
            hidden: 64,
            epochs: 200,
            learning_rate: 0.5,
            seed: 42,
            top_k: 8,
            slack: 0.05,
            spectral_m: 16,
        }
    }
}

/// The Phase-3 network input: 2-gram (400) + exchange 2-gram (36) +
/// spectral magnitudes (m).
pub fn mlp_features(seq: &ProteinSequence, spectral_m: usize) -> Result<Vec<f64>> {
    let gram = featurex::two_gram(seq)?;
    let exchange = featurex::exchange_two_gram(seq)?;
    let spectrum = spectral::spectral_features(seq, spectral_m)?;
    let mut v = Vec::with_capacity(gram.values.len() + exchange.values.len() + spectrum.len());
    v.extend(gram.values);
    v.extend(exchange.values);
    v.extend(spectrum);
    Ok(v)
}

/// Train every phase on a cleaned corpus and assemble the bundle.
///
/// The corpus must have at least two families (the one-vs-rest SVM needs
/// negatives) and at least four sequences per family (band construction),
/// with every sequence valid and no shorter than `max(2, cfg.k)`.
pub fn train_bundle(corpus: &LabeledCorpus, cfg: &TrainConfig) -> Result<ModelBundle> {
    if corpus.is_empty() {
        return Err(Error::Training("training corpus is empty".into()));
    }
    if corpus.families.len() < 2 {
        return Err(Error::Training(
            "training needs at least two families (one-vs-rest SVM)".into(),
        ));
    }
    let n_families = corpus.families.len();

    let labels: Vec<usize> = corpus
        .records
        .iter()
        .map(|(_, label)| {
            corpus
                .family_index(label)
                .expect("corpus labels are in the family list")
        })
        .collect();

    // Phase 1: physico features, bands, scaler.
    let physico: Vec<Vec<f64>> = corpus
        .records
        .iter()
        .map(|(seq, _)| featurex::physico_vector(seq).map(|f| f.to_vec()))
        .collect::<Result<_>>()?;
    let kb = build_family_bands_from_features(corpus, &physico, cfg.top_k, cfg.slack)?;

    // Phase 2: ARTMAP on scaled physico vectors.
    let scaled: Vec<(Vec<f64>, usize)> = physico
        .iter()
        .zip(&labels)
        .map(|(f, &y)| (kb.scale(f), y))
        .collect();
    let artmap = ArtmapModel::train(
        &scaled,
        ArtmapParams {
            rho_base: cfg.rho_base,
            alpha: cfg.alpha,
            beta: cfg.beta,
            eps_mt: cfg.eps_mt,
            max_epochs: cfg.artmap_epochs,
        },
    )?;

    // Phase 3: k-mer weighted SVM features plus the n-gram/spectral MLP.
    let kmer_table = kmer_weights(corpus, cfg.k, cfg.pseudocount)?;
    let svm_x: Vec<Vec<f64>> = corpus
        .records
        .iter()
        .map(|(seq, _)| weighted_feature(seq, &kmer_table))
        .collect::<Result<_>>()?;
    let svm = train_ovr_svm(&svm_x, &labels, n_families, cfg.svm_c)?;

    let mlp_x: Vec<(Vec<f64>, usize)> = corpus
        .records
        .iter()
        .zip(&labels)
        .map(|((seq, _), &y)| mlp_features(seq, cfg.spectral_m).map(|v| (v, y)))
        .collect::<Result<_>>()?;
    let input_dim = mlp_x[0].0.len();
    let mlp = init_mlp(MlpConfig {
        layer_sizes: vec![input_dim, cfg.hidden, n_families],
        learning_rate: cfg.learning_rate,
        epochs: cfg.epochs,
        seed: cfg.seed,
    })?;
    let (mlp, _) = mlp.train_backprop(&mlp_x)?;

    // Phase 4: rough-set artifacts over discretized physico features.
    let table = discretize(&physico, &labels, cfg.bins)?;
    let reduct = greedy_reduct(&table);
    let rules = build_rdt(&table, &reduct);

    Ok(ModelBundle {
        families: corpus.families.clone(),
        kb,
        artmap,
        kmer_table,
        svm,
        mlp,
        rough: RoughArtifacts {
            table,
            reduct,
            rules,
        },
        train_config: cfg.clone(),
    })
}
