//! Feed-forward network trained by backpropagation (Phase 3 decision
//! stage).
//!
//! Sigmoid hidden layers, softmax output, mean cross-entropy loss,
//! full-batch gradient descent. Initialization and training are fully
//! deterministic given the seed and the data order; the analytic
//! gradients are verifiable against central finite differences through
//! [`MlpModel::gradient_check`].

use crate::error::{Error, Result};
use crate::rng::XorShift64Star;

/// Network shape and training hyperparameters.
#[derive(Debug, Clone, PartialEq)]
pub struct MlpConfig {
    /// Layer widths, input first, output last; at least one hidden layer.
    pub layer_sizes: Vec<usize>,
    pub learning_rate: f64,
    pub epochs: usize,
    pub seed: u64,
}

/// One dense layer; `weights` is row-major `[out_dim][in_dim]`.
#[derive(Debug, Clone, PartialEq)]
pub struct Layer {
    pub in_dim: usize,
    pub out_dim: usize,
    pub weights: Vec<f64>,
    pub biases: Vec<f64>,
}

/// A feed-forward model plus the configuration that built it.
#[derive(Debug, Clone, PartialEq)]
pub struct MlpModel {
    pub layers: Vec<Layer>,
    pub config: MlpConfig,
}

fn sigmoid(z: f64) -> f64 {
    1.0 / (1.0 + (-z).exp())
}

fn softmax(logits: &[f64]) -> Vec<f64> {
    let max = logits.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let exps: Vec<f64> = logits.iter().map(|&z| (z - max).exp()).collect();
    let sum: f64 = exps.iter().sum();
    exps.into_iter().map(|e| e / sum).collect()
}

/// Initialize a network: weights uniform in `[-1/sqrt(fan_in),
/// +1/sqrt(fan_in)]` drawn from xorshift64* seeded with `config.seed`,
/// biases zero. Same seed, same model, bit for bit.
pub fn init_mlp(config: MlpConfig) -> Result<MlpModel> {
    if config.layer_sizes.len() < 3 {
        return Err(Error::Config(
            "network needs input, at least one hidden, and output layers".into(),
        ));
    }
    if config.layer_sizes.contains(&0) {
        return Err(Error::Config("zero-size layer".into()));
    }
    if config.learning_rate <= 0.0 {
        return Err(Error::Config("learning rate must be > 0".into()));
    }

    let mut rng = XorShift64Star::new(config.seed);
    let mut layers = Vec::with_capacity(config.layer_sizes.len() - 1);
    for pair in config.layer_sizes.windows(2) {
        let (in_dim, out_dim) = (pair[0], pair[1]);
        let bound = 1.0 / (in_dim as f64).sqrt();
        let weights = (0..in_dim * out_dim)
            .map(|_| rng.uniform(-bound, bound))
            .collect();
        layers.push(Layer {
            in_dim,
            out_dim,
            weights,
            biases: vec![0.0; out_dim],
        });
    }
    Ok(MlpModel { layers, config })
}

impl Layer {
    fn affine(&self, input: &[f64]) -> Vec<f64> {
        let mut out = self.biases.clone();
        for (row, slot) in out.iter_mut().enumerate() {
            let w = &self.weights[row * self.in_dim..(row + 1) * self.in_dim];
            *slot += w.iter().zip(input).map(|(a, b)| a * b).sum::<f64>();
        }
        out
    }
}

impl MlpModel {
    pub fn input_dim(&self) -> usize {
        self.layers.first().map_or(0, |l| l.in_dim)
    }

    pub fn output_dim(&self) -> usize {
        self.layers.last().map_or(0, |l| l.out_dim)
    }

    /// Activations of every layer, input included; the last entry is the
    /// softmax output.
    fn forward_trace(&self, x: &[f64]) -> Result<Vec<Vec<f64>>> {
        if x.len() != self.input_dim() {
            return Err(Error::Dimension {
                expected: self.input_dim(),
                found: x.len(),
            });
        }
        let mut acts: Vec<Vec<f64>> = Vec::with_capacity(self.layers.len() + 1);
        acts.push(x.to_vec());
        for (i, layer) in self.layers.iter().enumerate() {
            let z = layer.affine(acts.last().expect("acts is nonempty"));
            let a = if i + 1 == self.layers.len() {
                softmax(&z)
            } else {
                z.into_iter().map(sigmoid).collect()
            };
            acts.push(a);
        }
        Ok(acts)
    }

    /// Class probability vector for one input; sums to 1.
    pub fn forward(&self, x: &[f64]) -> Result<Vec<f64>> {
        Ok(self.forward_trace(x)?.pop().expect("trace is nonempty"))
    }

    /// Cross-entropy of one sample, `-ln p[class]`.
    fn sample_loss(&self, x: &[f64], class: usize) -> Result<f64> {
        let p = self.forward(x)?;
        Ok(-(p[class].max(f64::MIN_POSITIVE)).ln())
    }

    /// Mean cross-entropy over a batch.
    pub fn batch_loss(&self, data: &[(Vec<f64>, usize)]) -> Result<f64> {
        if data.is_empty() {
            return Err(Error::Training("loss of an empty batch".into()));
        }
        let mut total = 0.0;
        for (x, class) in data {
            total += self.sample_loss(x, *class)?;
        }
        Ok(total / data.len() as f64)
    }

    /// Analytic cross-entropy gradients for one sample, per layer
    /// `(d_weights, d_biases)` in layer order.
    fn gradients(&self, x: &[f64], class: usize) -> Result<Vec<(Vec<f64>, Vec<f64>)>> {
        if class >= self.output_dim() {
            return Err(Error::Config(format!(
                "class index {class} out of range ({} outputs)",
                self.output_dim()
            )));
        }
        let acts = self.forward_trace(x)?;
        let n_layers = self.layers.len();

        // Softmax + cross-entropy: output delta is p - onehot.
        let mut delta: Vec<f64> = acts[n_layers].clone();
        delta[class] -= 1.0;

        let mut grads: Vec<(Vec<f64>, Vec<f64>)> = vec![(vec![], vec![]); n_layers];
        for l in (0..n_layers).rev() {
            let layer = &self.layers[l];
            let input = &acts[l];
            let mut dw = vec![0.0f64; layer.weights.len()];
            for (row, &d) in delta.iter().enumerate() {
                let slot = &mut dw[row * layer.in_dim..(row + 1) * layer.in_dim];
                for (g, &a) in slot.iter_mut().zip(input) {
                    *g = d * a;
                }
            }
            let db = delta.clone();

            if l > 0 {
                // delta for the sigmoid layer below: (W^T delta) * a(1-a).
                let mut next = vec![0.0f64; layer.in_dim];
                for (row, &d) in delta.iter().enumerate() {
                    let w = &layer.weights[row * layer.in_dim..(row + 1) * layer.in_dim];
                    for (slot, &wv) in next.iter_mut().zip(w) {
                        *slot += wv * d;
                    }
                }
                for (slot, &a) in next.iter_mut().zip(input) {
                    *slot *= a * (1.0 - a);
                }
                delta = next;
            }
            grads[l] = (dw, db);
        }
        Ok(grads)
    }

    /// Full-batch gradient descent on the mean cross-entropy for
    /// `config.epochs` epochs. Returns the trained model and the final
    /// batch loss. With zero epochs the model is returned unchanged.
    pub fn train_backprop(mut self, data: &[(Vec<f64>, usize)]) -> Result<(Self, f64)> {
        if data.is_empty() {
            return Err(Error::Training("backprop training data is empty".into()));
        }
        for (_, class) in data {
            if *class >= self.output_dim() {
                return Err(Error::Config(format!(
                    "class index {class} out of range ({} outputs)",
                    self.output_dim()
                )));
            }
        }
        let lr = self.config.learning_rate;
        let scale = lr / data.len() as f64;
        for _ in 0..self.config.epochs {
            let mut acc: Vec<(Vec<f64>, Vec<f64>)> = self
                .layers
                .iter()
                .map(|l| (vec![0.0; l.weights.len()], vec![0.0; l.out_dim]))
                .collect();
            for (x, class) in data {
                for (slot, grad) in acc.iter_mut().zip(self.gradients(x, *class)?) {
                    for (a, g) in slot.0.iter_mut().zip(&grad.0) {
                        *a += g;
                    }
                    for (a, g) in slot.1.iter_mut().zip(&grad.1) {
                        *a += g;
                    }
                }
            }
            for (layer, (dw, db)) in self.layers.iter_mut().zip(&acc) {
                for (w, g) in layer.weights.iter_mut().zip(dw) {
                    *w -= scale * g;
                }
                for (b, g) in layer.biases.iter_mut().zip(db) {
                    *b -= scale * g;
                }
            }
        }
        let loss = self.batch_loss(data)?;
        Ok((self, loss))
    }

    /// Compare analytic gradients against central finite differences
    /// (h = 1e-5) for every parameter; returns the maximum relative
    /// error `|a - n| / max(1e-8, |a| + |n|)`.
    #[allow(clippy::needless_range_loop)]
    pub fn gradient_check(&self, x: &[f64], class: usize) -> Result<f64> {
        const H: f64 = 1e-5;
        let analytic = self.gradients(x, class)?;
        let mut worst = 0.0f64;
        let mut probe = self.clone();

        for l in 0..self.layers.len() {
            for slot in 0..self.layers[l].weights.len() + self.layers[l].biases.len() {
                let read = |m: &MlpModel| {
                    let layer = &m.layers[l];
                    if slot < layer.weights.len() {
                        layer.weights[slot]
                    } else {
                        layer.biases[slot - layer.weights.len()]
                    }
                };
                let write = |m: &mut MlpModel, v: f64| {
                    let layer = &mut m.layers[l];
                    if slot < layer.weights.len() {
                        layer.weights[slot] = v;
                    } else {
                        let at = slot - layer.weights.len();
                        layer.biases[at] = v;
                    }
                };

                let original = read(&probe);
                write(&mut probe, original + H);
                let plus = probe.sample_loss(x, class)?;
                write(&mut probe, original - H);
                let minus = probe.sample_loss(x, class)?;
                write(&mut probe, original);

                let numeric = (plus - minus) / (2.0 * H);
                let a = if slot < self.layers[l].weights.len() {
                    analytic[l].0[slot]
                } else {
                    analytic[l].1[slot - self.layers[l].weights.len()]
                };
                let rel = (a - numeric).abs() / (a.abs() + numeric.abs()).max(1e-8);
                worst = worst.max(rel);
            }
        }
        Ok(worst)
    }
}
