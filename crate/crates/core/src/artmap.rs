//! Fuzzy ARTMAP classifier over scaled feature vectors (Phase 2).
//!
//! Simplified fast-commit Fuzzy ARTMAP: inputs are complement-coded, a
//! category's choice value is `|I ∧ w| / (alpha + |w|)` and its match
//! value `|I ∧ w| / |I|`. Categories are visited in descending choice
//! order; the first one passing the vigilance test is accepted. A label
//! mismatch raises vigilance just above the offending match value
//! (match tracking) and the search continues; when no category is
//! accepted a new one is committed with the input as its weights.

use crate::error::{Error, Result};

/// Hyperparameters of the resonance search.
#[derive(Debug, Clone, PartialEq)]
pub struct ArtmapParams {
    /// Baseline vigilance in [0, 1]; reset for every sample.
    pub rho_base: f64,
    /// Choice parameter, > 0.
    pub alpha: f64,
    /// Learning rate in (0, 1]; 1.0 is fast learning.
    pub beta: f64,
    /// Match-tracking increment, > 0.
    pub eps_mt: f64,
    /// Upper bound on training passes over the data.
    pub max_epochs: usize,
}

impl Default for ArtmapParams {
    fn default() -> Self {
        Self {
            rho_base: 0.75,
            alpha: 0.001,
            beta: 1.0,
            eps_mt: 0.001,
            max_epochs: 10,
        }
    }
}

impl ArtmapParams {
    fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.rho_base) {
            return Err(Error::Config("rho_base must be in [0, 1]".into()));
        }
        if self.alpha <= 0.0 {
            return Err(Error::Config("alpha must be > 0".into()));
        }
        if !(self.beta > 0.0 && self.beta <= 1.0) {
            return Err(Error::Config("beta must be in (0, 1]".into()));
        }
        if self.eps_mt <= 0.0 {
            return Err(Error::Config("eps_mt must be > 0".into()));
        }
        Ok(())
    }
}

/// One committed category: complement-coded weights plus its family label.
#[derive(Debug, Clone, PartialEq)]
pub struct ArtmapCategory {
    /// Weight vector of length `2 * dim`, every component in [0, 1].
    pub weights: Vec<f64>,
    /// Family index the category maps to.
    pub label: usize,
}

/// A trained Fuzzy ARTMAP model.
#[derive(Debug, Clone, PartialEq)]
pub struct ArtmapModel {
    pub categories: Vec<ArtmapCategory>,
    /// Input dimensionality before complement coding.
    pub dim: usize,
    pub params: ArtmapParams,
}

/// Complement code a vector: clamp to [0, 1], then append `1 - x`.
/// The output's L1 norm is always `x.len()`.
pub fn complement_code(x: &[f64]) -> Vec<f64> {
    let mut coded = Vec::with_capacity(2 * x.len());
    coded.extend(x.iter().map(|&v| v.clamp(0.0, 1.0)));
    coded.extend(x.iter().map(|&v| 1.0 - v.clamp(0.0, 1.0)));
    coded
}

fn fuzzy_and_norm(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(&x, &y)| x.min(y)).sum()
}

fn l1(v: &[f64]) -> f64 {
    v.iter().sum()
}

/// What one resonance search did to the category list.
enum StepOutcome {
    /// An existing category learned; carries the largest weight change.
    Learned(f64),
    /// No category resonated; a new one was committed.
    Committed,
}

fn sample_step(
    categories: &mut Vec<ArtmapCategory>,
    input: &[f64],
    label: usize,
    params: &ArtmapParams,
) -> StepOutcome {
    let input_norm = l1(input);
    let mut rho = params.rho_base;

    // Descending choice order, ties broken by lowest category index.
    let mut order: Vec<(usize, f64)> = categories
        .iter()
        .enumerate()
        .map(|(j, cat)| {
            let t = fuzzy_and_norm(input, &cat.weights) / (params.alpha + l1(&cat.weights));
            (j, t)
        })
        .collect();
    order.sort_by(|a, b| {
        b.1.partial_cmp(&a.1)
            .expect("choice values are finite")
            .then(a.0.cmp(&b.0))
    });

    for (j, _) in order {
        let matched = fuzzy_and_norm(input, &categories[j].weights) / input_norm;
        if matched >= rho {
            if categories[j].label == label {
                let beta = params.beta;
                let mut max_delta = 0.0f64;
                for (w, &i) in categories[j].weights.iter_mut().zip(input) {
                    let updated = beta * w.min(i) + (1.0 - beta) * *w;
                    max_delta = max_delta.max(*w - updated);
                    *w = updated;
                }
                return StepOutcome::Learned(max_delta);
            }
            // Match tracking: demand strictly better matches from here on.
            rho = matched + params.eps_mt;
        }
    }

    categories.push(ArtmapCategory {
        weights: input.to_vec(),
        label,
    });
    StepOutcome::Committed
}

impl ArtmapModel {
    /// Train on `(scaled vector, family index)` pairs. Vectors must share
    /// a dimensionality and be scaled into [0, 1] (values are clamped).
    /// Passes repeat until no category is added and no weight moves more
    /// than 1e-12, bounded by `params.max_epochs`.
    pub fn train(data: &[(Vec<f64>, usize)], params: ArtmapParams) -> Result<Self> {
        params.validate()?;
        let dim = match data.first() {
            Some((v, _)) => v.len(),
            None => return Err(Error::Training("ARTMAP training data is empty".into())),
        };
        for (v, _) in data {
            if v.len() != dim {
                return Err(Error::Dimension {
                    expected: dim,
                    found: v.len(),
                });
            }
        }

        let coded: Vec<(Vec<f64>, usize)> = data
            .iter()
            .map(|(v, label)| (complement_code(v), *label))
            .collect();

        let mut categories: Vec<ArtmapCategory> = Vec::new();
        for _ in 0..params.max_epochs.max(1) {
            let mut committed = false;
            let mut max_delta = 0.0f64;
            for (input, label) in &coded {
                match sample_step(&mut categories, input, *label, &params) {
                    StepOutcome::Learned(delta) => max_delta = max_delta.max(delta),
                    StepOutcome::Committed => committed = true,
                }
            }
            if !committed && max_delta <= 1e-12 {
                break;
            }
        }

        Ok(Self {
            categories,
            dim,
            params,
        })
    }

    /// Classify a scaled vector: the winner is the category with the
    /// highest choice value; the confidence is its match value.
    pub fn classify(&self, x: &[f64]) -> Result<(usize, f64)> {
        if self.categories.is_empty() {
            return Err(Error::NotTrained("ARTMAP model has no categories"));
        }
        if x.len() != self.dim {
            return Err(Error::Dimension {
                expected: self.dim,
                found: x.len(),
            });
        }
        let input = complement_code(x);
        let input_norm = l1(&input);

        let mut winner = 0;
        let mut best_choice = f64::NEG_INFINITY;
        for (j, cat) in self.categories.iter().enumerate() {
            let t = fuzzy_and_norm(&input, &cat.weights) / (self.params.alpha + l1(&cat.weights));
            if t > best_choice {
                best_choice = t;
                winner = j;
            }
        }
        let confidence = fuzzy_and_norm(&input, &self.categories[winner].weights) / input_norm;
        Ok((self.categories[winner].label, confidence))
    }

    /// Best match value among this family's categories, if it has any.
    /// Drives the Phase-2 candidate pruning in the cascade.
    pub fn best_match_for_label(&self, x: &[f64], label: usize) -> Option<f64> {
        let input = complement_code(x);
        let input_norm = l1(&input);
        self.categories
            .iter()
            .filter(|cat| cat.label == label)
            .map(|cat| fuzzy_and_norm(&input, &cat.weights) / input_norm)
            .fold(None, |acc, m| Some(acc.map_or(m, |a: f64| a.max(m))))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn fast_params(rho_base: f64) -> ArtmapParams {
        ArtmapParams {
            rho_base,
            ..ArtmapParams::default()
        }
    }

    #[test]
    fn complement_code_definition() {
        let coded = complement_code(&[0.3, 0.7]);
        for (got, want) in coded.iter().zip(&[0.3, 0.7, 0.7, 0.3]) {
            assert!((got - want).abs() < 1e-12, "{coded:?}");
        }
        assert_eq!(complement_code(&[0.0, 1.0]), vec![0.0, 1.0, 1.0, 0.0]);
    }

    #[test]
    fn complement_code_norm_is_dim() {
        for x in [vec![0.2, 0.9, 0.5], vec![0.0, 0.0, 0.0], vec![1.5, -0.5, 0.3]] {
            let coded = complement_code(&x);
            assert!((l1(&coded) - x.len() as f64).abs() < 1e-12);
        }
    }

    #[test]
    fn single_sample_commits_one_category() {
        let data = vec![(vec![0.4, 0.6], 2usize)];
        let model = ArtmapModel::train(&data, fast_params(0.75)).unwrap();
        assert_eq!(model.categories.len(), 1);
        assert_eq!(model.categories[0].weights, vec![0.4, 0.6, 0.6, 0.4]);
        assert_eq!(model.categories[0].label, 2);
    }

    #[test]
    fn identical_samples_share_a_category() {
        let data = vec![(vec![0.4, 0.6], 0usize), (vec![0.4, 0.6], 0usize)];
        let model = ArtmapModel::train(&data, fast_params(0.75)).unwrap();
        assert_eq!(model.categories.len(), 1);
    }

    #[test]
    fn self_match_is_perfect() {
        let v = vec![0.3, 0.8, 0.1];
        let model = ArtmapModel::train(&[(v.clone(), 4)], fast_params(0.75)).unwrap();
        let (label, confidence) = model.classify(&v).unwrap();
        assert_eq!(label, 4);
        assert!((confidence - 1.0).abs() < 1e-12);
    }

    #[test]
    fn maximal_vigilance_memorizes() {
        let data: Vec<(Vec<f64>, usize)> = vec![
            (vec![0.1, 0.2], 0),
            (vec![0.8, 0.9], 1),
            (vec![0.5, 0.5], 0),
            (vec![0.9, 0.1], 1),
        ];
        let model = ArtmapModel::train(&data, fast_params(1.0)).unwrap();
        assert_eq!(model.categories.len(), data.len());
        for (v, label) in &data {
            let (got, confidence) = model.classify(v).unwrap();
            assert_eq!(got, *label);
            assert!((confidence - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn category_count_bounded_by_samples() {
        let data: Vec<(Vec<f64>, usize)> = (0..20)
            .map(|i| (vec![i as f64 / 20.0, 1.0 - i as f64 / 20.0], i % 3))
            .collect();
        let model = ArtmapModel::train(&data, fast_params(0.6)).unwrap();
        assert!(model.categories.len() <= data.len());
    }

    /// Hand-simulated trace of the update rules on a 4-point, 2-class set
    /// with rho_base = 0.5 and fast learning.
    #[test]
    fn toy_trace_matches_hand_simulation() {
        let data: Vec<(Vec<f64>, usize)> = vec![
            (vec![0.1, 0.1], 0),
            (vec![0.2, 0.1], 0),
            (vec![0.9, 0.9], 1),
            (vec![0.8, 0.9], 1),
        ];
        let model = ArtmapModel::train(&data, fast_params(0.5)).unwrap();

        // Hand trace: A1 commits w0 = [.1,.1,.9,.9]; A2 resonates with w0
        // (match 0.95) shrinking it to [.1,.1,.8,.9]; B1 fails vigilance
        // against w0 (match 0.2) and commits w1 = [.9,.9,.1,.1]; B2
        // resonates with w1 shrinking it to [.8,.9,.1,.1]. Epoch 2 changes
        // nothing.
        assert_eq!(model.categories.len(), 2);
        let w0 = &model.categories[0].weights;
        let w1 = &model.categories[1].weights;
        for (got, want) in w0.iter().zip(&[0.1, 0.1, 0.8, 0.9]) {
            assert!((got - want).abs() < 1e-12, "w0 = {w0:?}");
        }
        for (got, want) in w1.iter().zip(&[0.8, 0.9, 0.1, 0.1]) {
            assert!((got - want).abs() < 1e-12, "w1 = {w1:?}");
        }

        // Held-out point nearest class A in fuzzy-AND match.
        let (label, confidence) = model.classify(&[0.15, 0.1]).unwrap();
        assert_eq!(label, 0);
        assert!((confidence - 0.95).abs() < 1e-12);
    }

    #[test]
    fn weights_never_increase_during_training() {
        let mut categories = Vec::new();
        let params = ArtmapParams {
            beta: 0.7,
            ..fast_params(0.4)
        };
        let samples: Vec<(Vec<f64>, usize)> = (0..40)
            .map(|i| {
                let a = ((i * 37) % 100) as f64 / 100.0;
                let b = ((i * 61) % 100) as f64 / 100.0;
                (vec![a, b], i % 2)
            })
            .collect();
        for (x, label) in &samples {
            let input = complement_code(x);
            let before: Vec<Vec<f64>> = categories
                .iter()
                .map(|c: &ArtmapCategory| c.weights.clone())
                .collect();
            sample_step(&mut categories, &input, *label, &params);
            for (cat, old) in categories.iter().zip(&before) {
                for (&w_new, &w_old) in cat.weights.iter().zip(old) {
                    assert!(w_new <= w_old + 1e-15);
                }
            }
        }
    }

    #[test]
    fn classify_is_deterministic_and_clamp_stable() {
        let data: Vec<(Vec<f64>, usize)> = vec![
            (vec![0.2, 0.3, 0.4], 0),
            (vec![0.9, 0.8, 0.7], 1),
            (vec![0.1, 0.5, 0.9], 2),
        ];
        let model = ArtmapModel::train(&data, fast_params(0.7)).unwrap();
        let raw: Vec<f64> = vec![1.3, -0.2, 0.55];
        let clamped: Vec<f64> = raw.iter().map(|&v| v.clamp(0.0, 1.0)).collect();
        assert_eq!(model.classify(&raw).unwrap(), model.classify(&clamped).unwrap());
        assert_eq!(model.classify(&raw).unwrap(), model.classify(&raw).unwrap());
    }

    #[test]
    fn confidence_is_in_unit_interval() {
        let data = vec![(vec![0.5, 0.5], 0), (vec![0.9, 0.2], 1)];
        let model = ArtmapModel::train(&data, fast_params(0.75)).unwrap();
        for x in [vec![0.0, 0.0], vec![1.0, 1.0], vec![0.3, 0.99]] {
            let (_, confidence) = model.classify(&x).unwrap();
            assert!((0.0..=1.0).contains(&confidence));
        }
    }

    #[test]
    fn untrained_and_empty_inputs_error() {
        assert!(ArtmapModel::train(&[], ArtmapParams::default()).is_err());
        let model = ArtmapModel {
            categories: vec![],
            dim: 2,
            params: ArtmapParams::default(),
        };
        assert!(model.classify(&[0.1, 0.2]).is_err());
    }
}
