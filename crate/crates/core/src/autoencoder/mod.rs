//! Five-layer autoencoder `[D, h, code, h, D]` trained on the binary user
//! features with mean-squared reconstruction error plus an elastic-net
//! penalty on the weights.

pub mod optim;

use alloc::vec;
use alloc::vec::Vec;

use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::matrix::Matrix;
use crate::{Error, Result};

pub use optim::{OptimizerKind, OptimizerSpec, OptimizerState};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OutputActivation {
    Relu,
    Sigmoid,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AutoencoderConfig {
    pub input_dim: usize,
    pub hidden: usize,
    pub code: usize,
    pub output_activation: OutputActivation,
    pub l1: f64,
    pub l2: f64,
    pub epochs: usize,
    /// Rows per mini-batch; 0 means full batch.
    pub batch_size: usize,
    pub validation_fraction: f64,
    pub seed: u64,
}

impl Default for AutoencoderConfig {
    fn default() -> Self {
        AutoencoderConfig {
            input_dim: 35,
            hidden: 16,
            code: 4,
            output_activation: OutputActivation::Relu,
            l1: 1e-5,
            l2: 1e-5,
            epochs: 100,
            batch_size: 32,
            validation_fraction: 0.2,
            seed: 0,
        }
    }
}

impl AutoencoderConfig {
    pub fn layer_sizes(&self) -> [usize; 5] {
        [
            self.input_dim,
            self.hidden,
            self.code,
            self.hidden,
            self.input_dim,
        ]
    }

    pub fn validate(&self) -> Result<()> {
        if self.input_dim == 0 || self.hidden == 0 || self.code == 0 {
            return Err(Error::invalid("autoencoder layer widths must be positive"));
        }
        if !(self.l1 >= 0.0 && self.l2 >= 0.0) {
            return Err(Error::invalid(
                "elastic-net coefficients must be non-negative",
            ));
        }
        if !(0.0..1.0).contains(&self.validation_fraction) {
            return Err(Error::invalid("validation fraction must lie in [0,1)"));
        }
        Ok(())
    }
}

/// Fully connected layer; `weights` is `out × in`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Layer {
    pub weights: Matrix,
    pub bias: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EpochLoss {
    pub epoch: usize,
    pub train_loss: f64,
    pub val_loss: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AutoencoderModel {
    pub config: AutoencoderConfig,
    pub layers: Vec<Layer>,
    pub optimizer: Option<OptimizerSpec>,
    pub history: Vec<EpochLoss>,
}

/// Output of a forward pass, with what backprop needs.
#[derive(Debug, Clone, PartialEq)]
pub struct Forward {
    /// `activations[0]` is the input, `activations[4]` the reconstruction.
    pub activations: Vec<Vec<f64>>,
    pub preactivations: Vec<Vec<f64>>,
}

impl Forward {
    pub fn reconstruction(&self) -> &[f64] {
        &self.activations[self.activations.len() - 1]
    }

    pub fn code(&self) -> &[f64] {
        &self.activations[self.activations.len() / 2]
    }
}

/// Per-layer gradients, shaped like the layers.
#[derive(Debug, Clone, PartialEq)]
pub struct Gradients {
    pub weights: Vec<Matrix>,
    pub bias: Vec<Vec<f64>>,
}

fn relu(x: f64) -> f64 {
    if x > 0.0 {
        x
    } else {
        0.0
    }
}

fn sigmoid(x: f64) -> f64 {
    1.0 / (1.0 + libm::exp(-x))
}

impl AutoencoderModel {
    /// Model whose weights and biases are all zero.
    pub fn zeros(config: AutoencoderConfig) -> Self {
        let sizes = config.layer_sizes();
        let layers = sizes
            .windows(2)
            .map(|w| Layer {
                weights: Matrix::zeros(w[1], w[0]),
                bias: vec![0.0; w[1]],
            })
            .collect();
        AutoencoderModel {
            config,
            layers,
            optimizer: None,
            history: Vec::new(),
        }
    }

    /// Glorot-uniform weights, zero biases.
    pub fn initialized(config: AutoencoderConfig) -> Self {
        let mut rng = crate::rng(config.seed, 0xAE01);
        let mut model = AutoencoderModel::zeros(config);
        for layer in &mut model.layers {
            let (fan_out, fan_in) = (layer.weights.rows(), layer.weights.cols());
            let limit = libm::sqrt(6.0 / (fan_in + fan_out) as f64);
            for w in layer.weights.as_mut_slice() {
                *w = rng.random_range(-limit..limit);
            }
        }
        model
    }

    fn is_output(&self, layer: usize) -> bool {
        layer + 1 == self.layers.len()
    }

    fn activate(&self, layer: usize, z: f64) -> f64 {
        if self.is_output(layer) && self.config.output_activation == OutputActivation::Sigmoid {
            sigmoid(z)
        } else {
            relu(z)
        }
    }

    /// Derivative of the activation given its pre-activation and output; the
    /// ReLU subgradient at zero is taken as zero.
    fn activation_slope(&self, layer: usize, z: f64, a: f64) -> f64 {
        if self.is_output(layer) && self.config.output_activation == OutputActivation::Sigmoid {
            a * (1.0 - a)
        } else if z > 0.0 {
            1.0
        } else {
            0.0
        }
    }

    pub fn forward(&self, x: &[f64]) -> Result<Forward> {
        if x.len() != self.config.input_dim {
            return Err(Error::ShapeMismatch {
                expected: self.config.input_dim,
                actual: x.len(),
            });
        }
        let mut activations = Vec::with_capacity(self.layers.len() + 1);
        let mut preactivations = Vec::with_capacity(self.layers.len());
        activations.push(x.to_vec());
        for (li, layer) in self.layers.iter().enumerate() {
            let input = &activations[li];
            let z: Vec<f64> = (0..layer.weights.rows())
                .map(|o| {
                    layer.bias[o]
                        + layer
                            .weights
                            .row(o)
                            .iter()
                            .zip(input)
                            .map(|(w, v)| w * v)
                            .sum::<f64>()
                })
                .collect();
            let a = z.iter().map(|&zv| self.activate(li, zv)).collect();
            preactivations.push(z);
            activations.push(a);
        }
        Ok(Forward {
            activations,
            preactivations,
        })
    }

    /// `l1·Σ|W| + l2·ΣW²`, biases excluded.
    pub fn penalty(&self) -> f64 {
        let (mut abs, mut sq) = (0.0, 0.0);
        for layer in &self.layers {
            for &w in layer.weights.as_slice() {
                abs += w.abs();
                sq += w * w;
            }
        }
        self.config.l1 * abs + self.config.l2 * sq
    }

    /// Batch mean of the per-row mean squared error, plus the penalty.
    pub fn loss(&self, batch: &Matrix) -> Result<f64> {
        Ok(self.reconstruction_error(batch)? + self.penalty())
    }

    pub fn reconstruction_error(&self, batch: &Matrix) -> Result<f64> {
        if batch.rows() == 0 {
            return Err(Error::Empty("loss of an empty batch"));
        }
        let mut total = 0.0;
        for row in batch.iter_rows() {
            let f = self.forward(row)?;
            total += f
                .reconstruction()
                .iter()
                .zip(row)
                .map(|(y, x)| (y - x) * (y - x))
                .sum::<f64>()
                / row.len() as f64;
        }
        Ok(total / batch.rows() as f64)
    }

    /// Exact gradient of [`loss`](Self::loss) over `batch`.
    pub fn backward(&self, batch: &Matrix) -> Result<(f64, Gradients)> {
        if batch.rows() == 0 {
            return Err(Error::Empty("gradient of an empty batch"));
        }
        let mut grads = Gradients {
            weights: self
                .layers
                .iter()
                .map(|l| Matrix::zeros(l.weights.rows(), l.weights.cols()))
                .collect(),
            bias: self
                .layers
                .iter()
                .map(|l| vec![0.0; l.bias.len()])
                .collect(),
        };
        let scale = 1.0 / (batch.rows() * self.config.input_dim) as f64;
        let mut data_loss = 0.0;
        for row in batch.iter_rows() {
            let f = self.forward(row)?;
            let out = f.reconstruction();
            data_loss += out
                .iter()
                .zip(row)
                .map(|(y, x)| (y - x) * (y - x))
                .sum::<f64>();
            // dL/da at the output
            let mut upstream: Vec<f64> = out
                .iter()
                .zip(row)
                .map(|(y, x)| 2.0 * (y - x) * scale)
                .collect();
            for li in (0..self.layers.len()).rev() {
                let z = &f.preactivations[li];
                let a = &f.activations[li + 1];
                let dz: Vec<f64> = (0..z.len())
                    .map(|o| upstream[o] * self.activation_slope(li, z[o], a[o]))
                    .collect();
                let input = &f.activations[li];
                let gw = &mut grads.weights[li];
                for (o, &d) in dz.iter().enumerate() {
                    if d == 0.0 {
                        continue;
                    }
                    grads.bias[li][o] += d;
                    for (g, &x) in gw.row_mut(o).iter_mut().zip(input) {
                        *g += d * x;
                    }
                }
                if li > 0 {
                    let w = &self.layers[li].weights;
                    upstream = (0..w.cols())
                        .map(|i| dz.iter().enumerate().map(|(o, &d)| d * w.get(o, i)).sum())
                        .collect();
                }
            }
        }
        let (l1, l2) = (self.config.l1, self.config.l2);
        for (gw, layer) in grads.weights.iter_mut().zip(&self.layers) {
            for (g, &w) in gw.as_mut_slice().iter_mut().zip(layer.weights.as_slice()) {
                let sign = if w > 0.0 {
                    1.0
                } else if w < 0.0 {
                    -1.0
                } else {
                    0.0
                };
                *g += l1 * sign + 2.0 * l2 * w;
            }
        }
        Ok((data_loss * scale + self.penalty(), grads))
    }

    fn group_sizes(&self) -> Vec<usize> {
        self.layers
            .iter()
            .flat_map(|l| [l.weights.as_slice().len(), l.bias.len()])
            .collect()
    }

    fn apply(&mut self, state: &mut OptimizerState, grads: &Gradients) -> Result<()> {
        let grad_refs: Vec<&[f64]> = grads
            .weights
            .iter()
            .zip(&grads.bias)
            .flat_map(|(w, b)| [w.as_slice(), b.as_slice()])
            .collect();
        let mut params: Vec<&mut [f64]> = self
            .layers
            .iter_mut()
            .flat_map(|l| [l.weights.as_mut_slice(), l.bias.as_mut_slice()])
            .collect();
        state.step(&mut params, &grad_refs)
    }

    fn all_finite(&self) -> bool {
        self.layers.iter().all(|l| {
            l.weights
                .as_slice()
                .iter()
                .chain(&l.bias)
                .all(|v| v.is_finite())
        })
    }

    /// Code-layer activations for every row.
    pub fn encode(&self, data: &Matrix) -> Result<Matrix> {
        if data.cols() != self.config.input_dim {
            return Err(Error::ShapeMismatch {
                expected: self.config.input_dim,
                actual: data.cols(),
            });
        }
        let mut out = Matrix::zeros(data.rows(), self.config.code);
        for (r, row) in data.iter_rows().enumerate() {
            out.row_mut(r).copy_from_slice(self.forward(row)?.code());
        }
        Ok(out)
    }

    pub fn encode_row(&self, x: &[f64]) -> Result<Vec<f64>> {
        Ok(self.forward(x)?.code().to_vec())
    }
}

/// Trains a fresh model for `config.epochs` epochs.
///
/// A seeded `validation_fraction` of the rows is held out and scored after
/// every epoch; the remaining rows are reshuffled each epoch.
pub fn train(
    config: &AutoencoderConfig,
    optimizer: &OptimizerSpec,
    data: &Matrix,
) -> Result<AutoencoderModel> {
    config.validate()?;
    optimizer.validate()?;
    if data.rows() < 10 {
        return Err(Error::invalid(
            "autoencoder training needs at least 10 rows",
        ));
    }
    if data.cols() != config.input_dim {
        return Err(Error::ShapeMismatch {
            expected: config.input_dim,
            actual: data.cols(),
        });
    }
    let mut order: Vec<usize> = (0..data.rows()).collect();
    order.shuffle(&mut crate::rng(config.seed, 0xAE02));
    let n_val = libm::floor(config.validation_fraction * data.rows() as f64) as usize;
    let val = data.select_rows(&order[..n_val]);
    let mut train_idx = order[n_val..].to_vec();
    let train_all = data.select_rows(&train_idx);

    let mut model = AutoencoderModel::initialized(config.clone());
    model.optimizer = Some(*optimizer);
    let mut state = OptimizerState::new(*optimizer, &model.group_sizes());
    let mut rng = crate::rng(config.seed, 0xAE03);
    let batch = if config.batch_size == 0 {
        train_idx.len()
    } else {
        config.batch_size
    };

    for epoch in 1..=config.epochs {
        train_idx.shuffle(&mut rng);
        for chunk in train_idx.chunks(batch) {
            let (_, grads) = model.backward(&data.select_rows(chunk))?;
            model.apply(&mut state, &grads).map_err(|e| match e {
                Error::NonFiniteGradient(_) => Error::Diverged { epoch },
                other => other,
            })?;
            if !model.all_finite() {
                return Err(Error::Diverged { epoch });
            }
        }
        let train_loss = model.loss(&train_all)?;
        let val_loss = if val.rows() > 0 {
            Some(model.loss(&val)?)
        } else {
            None
        };
        if !train_loss.is_finite() || val_loss.is_some_and(|v| !v.is_finite()) {
            return Err(Error::Diverged { epoch });
        }
        model.history.push(EpochLoss {
            epoch,
            train_loss,
            val_loss,
        });
    }
    Ok(model)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tiny(input_dim: usize, hidden: usize, code: usize) -> AutoencoderConfig {
        AutoencoderConfig {
            input_dim,
            hidden,
            code,
            l1: 0.0,
            l2: 0.0,
            ..Default::default()
        }
    }

    #[test]
    fn zero_model_outputs_zero() {
        let m = AutoencoderModel::zeros(tiny(5, 3, 2));
        let f = m.forward(&[1.0, 0.0, 1.0, 1.0, 0.0]).unwrap();
        assert!(f.reconstruction().iter().all(|&v| v == 0.0));
        assert_eq!(f.code(), &[0.0, 0.0]);
        assert!(m.forward(&[1.0]).is_err());
    }

    #[test]
    fn unit_chain_passes_positive_input() {
        let mut m = AutoencoderModel::zeros(tiny(1, 1, 1));
        for l in &mut m.layers {
            l.weights.set(0, 0, 1.0);
        }
        assert_eq!(m.forward(&[2.0]).unwrap().reconstruction(), &[2.0]);
        assert_eq!(m.forward(&[-2.0]).unwrap().reconstruction(), &[0.0]);
    }

    #[test]
    fn loss_examples() {
        let m = AutoencoderModel::zeros(tiny(2, 2, 1));
        let perfect = Matrix::from_rows(&[vec![0.0, 0.0]]).unwrap();
        assert_eq!(m.loss(&perfect).unwrap(), 0.0);
        let x = Matrix::from_rows(&[vec![1.0, 0.0]]).unwrap();
        assert_eq!(m.loss(&x).unwrap(), 0.5);
        assert!(m.loss(&Matrix::zeros(0, 2)).is_err());

        // l1 = 0.01 with Σ|W| = 10 and zero reconstruction error
        let mut cfg = tiny(2, 2, 1);
        cfg.l1 = 0.01;
        let mut m = AutoencoderModel::zeros(cfg);
        // first layer (2x2) feeds ReLU; make it negative so the output stays 0
        for w in m.layers[0].weights.as_mut_slice() {
            *w = -2.5;
        }
        assert!((m.loss(&perfect).unwrap() - 0.1).abs() < 1e-15);
    }

    #[test]
    fn l1_sign_rule() {
        let mut cfg = tiny(1, 1, 1);
        cfg.l1 = 0.1;
        let mut m = AutoencoderModel::zeros(cfg);
        m.layers[0].weights.set(0, 0, 0.5);
        let (_, g) = m.backward(&Matrix::zeros(1, 1)).unwrap();
        assert!((g.weights[0].get(0, 0) - 0.1).abs() < 1e-15);
        // zero-weight layers get no penalty gradient
        assert_eq!(g.weights[1].get(0, 0), 0.0);
    }

    #[test]
    fn zero_input_zero_data_gradient() {
        let model = AutoencoderModel::initialized(tiny(4, 3, 2));
        let (loss, g) = model.backward(&Matrix::zeros(3, 4)).unwrap();
        assert_eq!(loss, 0.0);
        assert!(g
            .weights
            .iter()
            .all(|w| w.as_slice().iter().all(|&v| v == 0.0)));
        assert!(g.bias.iter().all(|b| b.iter().all(|&v| v == 0.0)));
    }

    #[test]
    fn constant_data_is_learned() {
        let row = vec![1.0, 0.0, 1.0, 0.0, 0.0, 1.0];
        let data = Matrix::from_rows(&vec![row; 400]).unwrap();
        let cfg = AutoencoderConfig {
            input_dim: 6,
            hidden: 8,
            code: 4,
            seed: 3,
            ..Default::default()
        };
        let model = train(&cfg, &OptimizerSpec::new(OptimizerKind::Adam), &data).unwrap();
        let last = model.history.last().unwrap();
        assert_eq!(model.history.len(), 100);
        // penalty keeps the loss slightly above zero
        assert!(last.val_loss.unwrap() < 0.02, "{last:?}");
    }

    #[test]
    fn training_is_deterministic() {
        let rows: Vec<Vec<f64>> = (0..30)
            .map(|i| (0..5).map(|j| ((i + j) % 2) as f64).collect())
            .collect();
        let data = Matrix::from_rows(&rows).unwrap();
        let cfg = AutoencoderConfig {
            input_dim: 5,
            hidden: 4,
            code: 2,
            epochs: 5,
            ..Default::default()
        };
        let spec = OptimizerSpec::new(OptimizerKind::RmsProp);
        let a = train(&cfg, &spec, &data).unwrap();
        let b = train(&cfg, &spec, &data).unwrap();
        assert_eq!(a, b);
        assert!(train(&cfg, &spec, &data.select_rows(&[0, 1, 2])).is_err());
    }

    #[test]
    fn encode_shapes() {
        let m = AutoencoderModel::zeros(tiny(3, 2, 2));
        let codes = m.encode(&Matrix::zeros(4, 3)).unwrap();
        assert_eq!((codes.rows(), codes.cols()), (4, 2));
        assert!(codes.as_slice().iter().all(|&c| c == 0.0));
        assert!(m.encode(&Matrix::zeros(4, 2)).is_err());
    }
}
