//! One-hidden-layer ReLU regressor trained with seeded mini-batch gradient
//! descent and inverted dropout on the hidden layer.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const DEFAULT_HIDDEN: usize = 128;
pub const DEFAULT_DROPOUT: f64 = 0.5;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MlpParameters {
    pub input_dim: usize,
    pub hidden_dim: usize,
    /// Row-major `hidden_dim x input_dim`.
    pub weights_in: Vec<f64>,
    pub bias_in: Vec<f64>,
    pub weights_out: Vec<f64>,
    pub bias_out: f64,
    pub dropout_rate: f64,
}

/// Gradient of the squared loss, laid out like [`MlpParameters`].
#[derive(Debug, Clone, PartialEq)]
pub struct MlpGradient {
    pub weights_in: Vec<f64>,
    pub bias_in: Vec<f64>,
    pub weights_out: Vec<f64>,
    pub bias_out: f64,
}

impl MlpGradient {
    fn zeros(input_dim: usize, hidden_dim: usize) -> Self {
        Self {
            weights_in: vec![0.0; input_dim * hidden_dim],
            bias_in: vec![0.0; hidden_dim],
            weights_out: vec![0.0; hidden_dim],
            bias_out: 0.0,
        }
    }

    fn clear(&mut self) {
        self.weights_in.fill(0.0);
        self.bias_in.fill(0.0);
        self.weights_out.fill(0.0);
        self.bias_out = 0.0;
    }
}

impl MlpParameters {
    /// All-zero network; its output is 0 for every input.
    pub fn zeros(input_dim: usize, hidden_dim: usize) -> Self {
        Self {
            input_dim,
            hidden_dim,
            weights_in: vec![0.0; input_dim * hidden_dim],
            bias_in: vec![0.0; hidden_dim],
            weights_out: vec![0.0; hidden_dim],
            bias_out: 0.0,
            dropout_rate: DEFAULT_DROPOUT,
        }
    }

    /// He-style uniform initialization: weights in `±sqrt(6 / fan_in)`, biases zero.
    pub fn he_uniform(input_dim: usize, hidden_dim: usize, rng: &mut impl Rng) -> Self {
        let mut p = Self::zeros(input_dim, hidden_dim);
        let bound_in = (6.0 / input_dim as f64).sqrt();
        let bound_out = (6.0 / hidden_dim as f64).sqrt();
        for w in &mut p.weights_in {
            *w = rng.random_range(-bound_in..bound_in);
        }
        for w in &mut p.weights_out {
            *w = rng.random_range(-bound_out..bound_out);
        }
        p
    }

    pub fn num_parameters(&self) -> usize {
        self.weights_in.len() + self.bias_in.len() + self.weights_out.len() + 1
    }

    /// Checks dimension consistency and finiteness.
    pub fn validate(&self) -> Result<()> {
        if self.input_dim == 0 || self.hidden_dim == 0 {
            return Err(Error::contract("network dimensions must be positive"));
        }
        if self.weights_in.len() != self.input_dim * self.hidden_dim
            || self.bias_in.len() != self.hidden_dim
            || self.weights_out.len() != self.hidden_dim
        {
            return Err(Error::contract(format!(
                "parameter shapes inconsistent with {}x{}",
                self.hidden_dim, self.input_dim
            )));
        }
        if !(0.0..1.0).contains(&self.dropout_rate) {
            return Err(Error::contract(format!(
                "dropout rate {} outside [0, 1)",
                self.dropout_rate
            )));
        }
        let all_finite = self
            .weights_in
            .iter()
            .chain(&self.bias_in)
            .chain(&self.weights_out)
            .chain(std::iter::once(&self.bias_out))
            .all(|v| v.is_finite());
        if !all_finite {
            return Err(Error::contract("non-finite network parameter"));
        }
        Ok(())
    }

    fn check_input(&self, x: &[f64]) -> Result<()> {
        if x.len() != self.input_dim {
            return Err(Error::contract(format!(
                "input has {} entries, network expects {}",
                x.len(),
                self.input_dim
            )));
        }
        Ok(())
    }

    fn preactivation(&self, j: usize, x: &[f64]) -> f64 {
        let row = &self.weights_in[j * self.input_dim..(j + 1) * self.input_dim];
        self.bias_in[j] + row.iter().zip(x).map(|(w, v)| w * v).sum::<f64>()
    }

    fn forward_unchecked(&self, x: &[f64]) -> f64 {
        let mut out = self.bias_out;
        for j in 0..self.hidden_dim {
            let z = self.preactivation(j, x);
            if z > 0.0 {
                out += self.weights_out[j] * z;
            }
        }
        out
    }
}

/// Inference pass (`bias_out + w_out . relu(W_in x + b_in)`); dropout is not applied.
pub fn mlp_forward(params: &MlpParameters, x: &[f64]) -> Result<f64> {
    params.check_input(x)?;
    Ok(params.forward_unchecked(x))
}

/// Squared loss `(f(x) - target)^2` and its exact gradient, without dropout.
pub fn loss_gradient(params: &MlpParameters, x: &[f64], target: f64) -> Result<(f64, MlpGradient)> {
    params.check_input(x)?;
    let mut grad = MlpGradient::zeros(params.input_dim, params.hidden_dim);
    let mut hidden = vec![0.0; params.hidden_dim];
    let loss = accumulate_sample(params, x, target, None, 1.0, &mut hidden, &mut grad);
    Ok((loss, grad))
}

/// Adds `scale * d loss / d params` for one sample into `grad` and returns the loss.
///
/// `keep` carries the dropout mask already divided by the keep probability
/// (inverted dropout); `None` means no dropout.
fn accumulate_sample(
    params: &MlpParameters,
    x: &[f64],
    target: f64,
    keep: Option<&[f64]>,
    scale: f64,
    hidden: &mut [f64],
    grad: &mut MlpGradient,
) -> f64 {
    let mut out = params.bias_out;
    for j in 0..params.hidden_dim {
        let z = params.preactivation(j, x);
        let mut h = if z > 0.0 { z } else { 0.0 };
        if let Some(mask) = keep {
            h *= mask[j];
        }
        hidden[j] = h;
        out += params.weights_out[j] * h;
    }
    let residual = out - target;
    let d_out = 2.0 * residual * scale;
    grad.bias_out += d_out;
    for j in 0..params.hidden_dim {
        let h = hidden[j];
        grad.weights_out[j] += d_out * h;
        if h > 0.0 {
            let mask = keep.map_or(1.0, |m| m[j]);
            let d_z = d_out * params.weights_out[j] * mask;
            grad.bias_in[j] += d_z;
            let row = &mut grad.weights_in[j * params.input_dim..(j + 1) * params.input_dim];
            for (g, v) in row.iter_mut().zip(x) {
                *g += d_z * v;
            }
        }
    }
    residual * residual
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum TargetScaling {
    None,
    #[default]
    Standardize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum OutputInit {
    #[default]
    HeUniform,
    Zeros,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TrainingConfig {
    pub learning_rate: f64,
    pub epochs: usize,
    pub batch_size: usize,
    pub seed: u64,
    pub target_scaling: TargetScaling,
    pub hidden_dim: usize,
    pub dropout_rate: f64,
    pub output_init: OutputInit,
}

impl Default for TrainingConfig {
    fn default() -> Self {
        Self {
            learning_rate: 1e-3,
            epochs: 20,
            batch_size: 256,
            seed: 0,
            target_scaling: TargetScaling::Standardize,
            hidden_dim: DEFAULT_HIDDEN,
            dropout_rate: DEFAULT_DROPOUT,
            output_init: OutputInit::HeUniform,
        }
    }
}

impl TrainingConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return Err(Error::contract(format!(
                "learning rate must be positive, got {}",
                self.learning_rate
            )));
        }
        if self.epochs == 0 || self.batch_size == 0 || self.hidden_dim == 0 {
            return Err(Error::contract(
                "epochs, batch size and hidden width must be at least 1",
            ));
        }
        if !(0.0..1.0).contains(&self.dropout_rate) {
            return Err(Error::contract(format!(
                "dropout rate {} outside [0, 1)",
                self.dropout_rate
            )));
        }
        Ok(())
    }
}

/// Mean and standard deviation used to standardize a column; a zero spread maps to 1.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Standardizer {
    pub mean: f64,
    pub std: f64,
}

impl Standardizer {
    pub fn identity() -> Self {
        Self { mean: 0.0, std: 1.0 }
    }

    pub fn fit(values: impl Iterator<Item = f64> + Clone) -> Self {
        let (n, sum) = values.clone().fold((0usize, 0.0), |(n, s), v| (n + 1, s + v));
        if n == 0 {
            return Self::identity();
        }
        let mean = sum / n as f64;
        let var = values.map(|v| (v - mean) * (v - mean)).sum::<f64>() / n as f64;
        let std = var.sqrt();
        Self {
            mean,
            std: if std > 0.0 && std.is_finite() { std } else { 1.0 },
        }
    }

    pub fn apply(&self, v: f64) -> f64 {
        (v - self.mean) / self.std
    }
}

/// Trains a network on `(features, target)` pairs.
///
/// Mini-batch gradient descent on mean squared error, with the sample order
/// reshuffled every epoch and a fresh inverted-dropout mask per sample. With
/// [`TargetScaling::Standardize`] targets are standardized during training
/// and the returned output layer is rescaled so the network predicts raw
/// targets. Identical inputs and seed give bit-identical parameters.
pub fn mlp_train(dataset: &[(Vec<f64>, f64)], config: &TrainingConfig) -> Result<MlpParameters> {
    config.validate()?;
    let input_dim = match dataset.first() {
        Some((x, _)) => x.len(),
        None => return Err(Error::contract("training on an empty dataset")),
    };
    if input_dim == 0 {
        return Err(Error::contract("zero-dimensional inputs"));
    }
    if let Some((x, _)) = dataset.iter().find(|(x, _)| x.len() != input_dim) {
        return Err(Error::contract(format!(
            "ragged dataset: {} vs {} features",
            x.len(),
            input_dim
        )));
    }
    if dataset
        .iter()
        .any(|(x, t)| !t.is_finite() || x.iter().any(|v| !v.is_finite()))
    {
        return Err(Error::contract("non-finite value in training data"));
    }

    let scaler = match config.target_scaling {
        TargetScaling::None => Standardizer::identity(),
        TargetScaling::Standardize => Standardizer::fit(dataset.iter().map(|(_, t)| *t)),
    };
    let targets: Vec<f64> = dataset.iter().map(|(_, t)| scaler.apply(*t)).collect();

    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let hidden_dim = config.hidden_dim;
    let mut params = MlpParameters::he_uniform(input_dim, hidden_dim, &mut rng);
    params.dropout_rate = config.dropout_rate;
    if config.output_init == OutputInit::Zeros {
        params.weights_out.fill(0.0);
        params.bias_out = 0.0;
    }

    let keep_prob = 1.0 - config.dropout_rate;
    let mut order: Vec<usize> = (0..dataset.len()).collect();
    let mut grad = MlpGradient::zeros(input_dim, hidden_dim);
    let mut hidden = vec![0.0; hidden_dim];
    let mut mask = vec![0.0; hidden_dim];

    for _ in 0..config.epochs {
        order.shuffle(&mut rng);
        for batch in order.chunks(config.batch_size) {
            grad.clear();
            let scale = 1.0 / batch.len() as f64;
            for &i in batch {
                let keep = if config.dropout_rate > 0.0 {
                    for m in mask.iter_mut() {
                        *m = if rng.random::<f64>() < keep_prob {
                            1.0 / keep_prob
                        } else {
                            0.0
                        };
                    }
                    Some(mask.as_slice())
                } else {
                    None
                };
                accumulate_sample(
                    &params,
                    &dataset[i].0,
                    targets[i],
                    keep,
                    scale,
                    &mut hidden,
                    &mut grad,
                );
            }
            apply_step(&mut params, &grad, config.learning_rate);
        }
    }

    // Fold the target standardization back into the output layer.
    for w in &mut params.weights_out {
        *w *= scaler.std;
    }
    params.bias_out = scaler.mean + scaler.std * params.bias_out;
    params.validate()?;
    Ok(params)
}

fn apply_step(params: &mut MlpParameters, grad: &MlpGradient, lr: f64) {
    for (w, g) in params.weights_in.iter_mut().zip(&grad.weights_in) {
        *w -= lr * g;
    }
    for (w, g) in params.bias_in.iter_mut().zip(&grad.bias_in) {
        *w -= lr * g;
    }
    for (w, g) in params.weights_out.iter_mut().zip(&grad.weights_out) {
        *w -= lr * g;
    }
    params.bias_out -= lr * grad.bias_out;
}

#[cfg(test)]
mod tests {
    use super::*;

    fn seeded_params(input_dim: usize, hidden_dim: usize, seed: u64) -> (MlpParameters, Vec<f64>) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut p = MlpParameters::he_uniform(input_dim, hidden_dim, &mut rng);
        for b in &mut p.bias_in {
            *b = rng.random_range(-0.5..0.5);
        }
        p.bias_out = rng.random_range(-1.0..1.0);
        let x = (0..input_dim).map(|_| rng.random_range(-2.0..2.0)).collect();
        (p, x)
    }

    #[test]
    fn zero_network_outputs_zero() {
        let p = MlpParameters::zeros(5, 8);
        assert_eq!(mlp_forward(&p, &[1.0, -2.0, 3.0, 0.5, 9.0]).unwrap(), 0.0);
    }

    #[test]
    fn bias_passthrough() {
        let mut p = MlpParameters::zeros(3, 4);
        p.weights_out = vec![1.0, -2.0, 0.5, 3.0];
        p.bias_out = 4.25;
        assert_eq!(mlp_forward(&p, &[10.0, -3.0, 2.0]).unwrap(), 4.25);
    }

    #[test]
    fn dimension_mismatch() {
        let p = MlpParameters::zeros(3, 4);
        assert!(matches!(mlp_forward(&p, &[1.0]), Err(Error::Contract(_))));
    }

    #[test]
    fn gradient_has_zero_loss_at_target() {
        let (p, x) = seeded_params(6, 10, 3);
        let y = mlp_forward(&p, &x).unwrap();
        let (loss, g) = loss_gradient(&p, &x, y).unwrap();
        assert_eq!(loss, 0.0);
        assert_eq!(g.bias_out, 0.0);
    }

    #[test]
    fn piecewise_linear_along_direction() {
        let (p, x) = seeded_params(8, 16, 11);
        let v: Vec<f64> = (0..8).map(|i| ((i * 3 % 5) as f64 - 2.0) * 0.1).collect();
        let f = |eps: f64| {
            let xe: Vec<f64> = x.iter().zip(&v).map(|(a, b)| a + eps * b).collect();
            mlp_forward(&p, &xe).unwrap()
        };
        // eps small enough that no hidden unit changes sign here
        let (f0, f1, f2) = (f(0.0), f(1e-4), f(2e-4));
        assert!(((f2 - f1) - (f1 - f0)).abs() < 1e-12);
    }

    #[test]
    fn zero_target_with_zero_output_layer_stays_zero() {
        let data: Vec<(Vec<f64>, f64)> = (0..40)
            .map(|i| (vec![i as f64 * 0.1, 1.0, -(i as f64) * 0.05], 0.0))
            .collect();
        let cfg = TrainingConfig {
            output_init: OutputInit::Zeros,
            hidden_dim: 16,
            epochs: 3,
            batch_size: 8,
            ..TrainingConfig::default()
        };
        let p = mlp_train(&data, &cfg).unwrap();
        assert!(p.weights_out.iter().all(|w| *w == 0.0));
        assert_eq!(p.bias_out, 0.0);
        for (x, _) in &data {
            assert_eq!(mlp_forward(&p, x).unwrap(), 0.0);
        }
    }

    #[test]
    fn single_example_converges() {
        let x = vec![0.3, -1.2, 0.8, 1.0];
        let data = vec![(x.clone(), 5.0); 32];
        let cfg = TrainingConfig {
            learning_rate: 0.002,
            // dropout shifts the fit into the output bias slowly
            epochs: 20_000,
            batch_size: 32,
            seed: 9,
            target_scaling: TargetScaling::None,
            hidden_dim: 32,
            ..TrainingConfig::default()
        };
        let p = mlp_train(&data, &cfg).unwrap();
        let y = mlp_forward(&p, &x).unwrap();
        assert!((y - 5.0).abs() < 1e-2, "prediction {y}");
    }

    #[test]
    fn training_is_seed_deterministic() {
        let data: Vec<(Vec<f64>, f64)> = (0..200)
            .map(|i| {
                let a = (i as f64 * 0.1).sin();
                let b = (i as f64 * 0.07).cos();
                (vec![a, b, a * b], 3.0 * a - b + 10.0)
            })
            .collect();
        let cfg = TrainingConfig {
            seed: 42,
            hidden_dim: 24,
            epochs: 5,
            batch_size: 16,
            ..TrainingConfig::default()
        };
        let p1 = mlp_train(&data, &cfg).unwrap();
        let p2 = mlp_train(&data, &cfg).unwrap();
        assert_eq!(p1, p2);
        let p3 = mlp_train(&data, &TrainingConfig { seed: 43, ..cfg }).unwrap();
        assert_ne!(p1, p3);
    }

    #[test]
    fn training_errors() {
        assert!(mlp_train(&[], &TrainingConfig::default()).is_err());
        let data = vec![(vec![1.0], 1.0)];
        let bad = TrainingConfig {
            learning_rate: 0.0,
            ..TrainingConfig::default()
        };
        assert!(mlp_train(&data, &bad).is_err());
        let ragged = vec![(vec![1.0], 1.0), (vec![1.0, 2.0], 1.0)];
        assert!(mlp_train(&ragged, &TrainingConfig::default()).is_err());
    }

    #[test]
    fn standardized_training_fits_linear_target() {
        let data: Vec<(Vec<f64>, f64)> = (0..400)
            .map(|i| {
                let a = (i as f64 * 0.37).sin();
                let b = (i as f64 * 0.11).cos();
                (vec![a, b], 200.0 + 50.0 * a - 30.0 * b)
            })
            .collect();
        let cfg = TrainingConfig {
            learning_rate: 0.02,
            epochs: 60,
            batch_size: 16,
            seed: 1,
            hidden_dim: 32,
            dropout_rate: 0.0,
            ..TrainingConfig::default()
        };
        let p = mlp_train(&data, &cfg).unwrap();
        let preds: Vec<f64> = data.iter().map(|(x, _)| mlp_forward(&p, x).unwrap()).collect();
        let targets: Vec<f64> = data.iter().map(|(_, t)| *t).collect();
        let err = crate::metrics::rmse(&preds, &targets).unwrap();
        assert!(err < 5.0, "rmse {err}");
    }
}
