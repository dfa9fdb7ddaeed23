#![allow(dead_code)]

//! Backpropagated gradients against central differences on random small
//! networks. Configurations where a perturbation crosses a ReLU kink or
//! flips the sign of a weight under an L1 penalty are redrawn.

use ghrs_core::autoencoder::{AutoencoderConfig, AutoencoderModel, OutputActivation};
use ghrs_core::matrix::Matrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const STEP: f64 = 1e-5;
pub const TOL: f64 = 1e-4;
const FLOOR: f64 = 1e-6;

pub fn random_model(rng: &mut ChaCha8Rng) -> (AutoencoderModel, Matrix) {
    let config = AutoencoderConfig {
        input_dim: rng.random_range(2..=8),
        hidden: rng.random_range(1..=5),
        code: rng.random_range(1..=3),
        output_activation: if rng.random_bool(0.5) {
            OutputActivation::Relu
        } else {
            OutputActivation::Sigmoid
        },
        l1: if rng.random_bool(0.5) {
            rng.random_range(0.0..0.05)
        } else {
            0.0
        },
        l2: if rng.random_bool(0.5) {
            rng.random_range(0.0..0.05)
        } else {
            0.0
        },
        ..AutoencoderConfig::default()
    };
    let mut model = AutoencoderModel::zeros(config.clone());
    for layer in &mut model.layers {
        layer
            .weights
            .as_mut_slice()
            .iter_mut()
            .for_each(|w| *w = rng.random_range(-1.0..1.0));
        layer
            .bias
            .iter_mut()
            .for_each(|b| *b = rng.random_range(-0.5..0.5));
    }
    let rows = rng.random_range(1..=6);
    let binary = rng.random_bool(0.5);
    let data: Vec<f64> = (0..rows * config.input_dim)
        .map(|_| {
            if binary {
                f64::from(u8::from(rng.random_bool(0.4)))
            } else {
                rng.random_range(-1.0..1.0)
            }
        })
        .collect();
    (
        model,
        Matrix::from_vec(rows, config.input_dim, data).unwrap(),
    )
}

/// Which ReLU units are active, over every row.
fn pattern(model: &AutoencoderModel, batch: &Matrix) -> Vec<bool> {
    let last = model.layers.len() - 1;
    let mut out = Vec::new();
    for row in batch.iter_rows() {
        let f = model.forward(row).unwrap();
        for (li, z) in f.preactivations.iter().enumerate() {
            if li < last || model.config.output_activation == OutputActivation::Relu {
                out.extend(z.iter().map(|&v| v > 0.0));
            }
        }
    }
    out
}

fn param_mut(model: &mut AutoencoderModel, group: usize, k: usize) -> &mut f64 {
    let layer = &mut model.layers[group / 2];
    if group % 2 == 0 {
        &mut layer.weights.as_mut_slice()[k]
    } else {
        &mut layer.bias[k]
    }
}

/// `None` when some perturbation lands on a non-smooth point.
fn check(model: &AutoencoderModel, batch: &Matrix) -> Option<f64> {
    let (_, grads) = model.backward(batch).unwrap();
    let base = pattern(model, batch);
    let mut worst: f64 = 0.0;
    for group in 0..model.layers.len() * 2 {
        let analytic: &[f64] = if group % 2 == 0 {
            grads.weights[group / 2].as_slice()
        } else {
            &grads.bias[group / 2]
        };
        for (k, &a) in analytic.iter().enumerate() {
            let mut m = model.clone();
            let w0 = *param_mut(&mut m, group, k);
            if group % 2 == 0 && m.config.l1 > 0.0 && w0.abs() <= 2.0 * STEP {
                return None;
            }
            *param_mut(&mut m, group, k) = w0 + STEP;
            if pattern(&m, batch) != base {
                return None;
            }
            let up = m.loss(batch).unwrap();
            *param_mut(&mut m, group, k) = w0 - STEP;
            if pattern(&m, batch) != base {
                return None;
            }
            let down = m.loss(batch).unwrap();
            let numeric = (up - down) / (2.0 * STEP);
            let rel = (a - numeric).abs() / a.abs().max(numeric.abs()).max(FLOOR);
            worst = worst.max(rel);
        }
    }
    Some(worst)
}

/// Largest relative error over `configs` accepted configurations.
pub fn worst_relative_error(configs: usize, seed: u64) -> Result<f64, String> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (mut accepted, mut drawn, mut worst) = (0, 0, 0.0f64);
    while accepted < configs {
        drawn += 1;
        if drawn > 100 * configs {
            return Err(format!(
                "only {accepted} of {drawn} configurations avoided kinks"
            ));
        }
        let (model, batch) = random_model(&mut rng);
        if let Some(w) = check(&model, &batch) {
            worst = worst.max(w);
            accepted += 1;
        }
    }
    Ok(worst)
}
