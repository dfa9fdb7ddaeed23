#![allow(dead_code)]

//! Two-step scalar traces for every optimizer at its default
//! hyperparameters, frozen from an independent implementation.

use ghrs_core::autoencoder::{OptimizerKind, OptimizerSpec, OptimizerState};

pub fn trace(spec: OptimizerSpec, p0: f64, grads: &[f64]) -> Vec<f64> {
    let mut state = OptimizerState::new(spec, &[1]);
    let mut p = [p0];
    grads
        .iter()
        .map(|&g| {
            state.step(&mut [&mut p[..]], &[&[g][..]]).unwrap();
            p[0]
        })
        .collect()
}

const CASES: [(f64, [f64; 2]); 2] = [(0.5, [0.3, -0.2]), (-1.25, [2.0, 1.5])];

#[rustfmt::skip]
pub const EXPECTED: [(OptimizerKind, [[f64; 2]; 2]); 7] = [
    (OptimizerKind::Sgd, [[0.497, 0.499], [-1.27, -1.285]]),
    (OptimizerKind::Adagrad, [[0.4900000033333322, 0.4955470037571234], [-1.2599999995, -1.26599999926]]),
    (OptimizerKind::Adadelta, [[0.49552836086619345, 0.49909845282276694], [-1.2544721247747017, -1.2583290596576457]]),
    (OptimizerKind::RmsProp, [[0.4968377256731614, 0.4986559058384522], [-1.2531622771601685, -1.2551234382551402]]),
    (OptimizerKind::Adam, [[0.49900000003333334, 0.498855479509286], [-1.250999999995, -1.2519825750708997]]),
    (OptimizerKind::AdaMax, [[0.498, 0.4977541401050173], [-1.252, -1.2537385806859491]]),
    (OptimizerKind::Nadam, [[0.497052631677193, 0.49769607940840227], [-1.2529473684063157, -1.2550806209696244]]),
];

/// Traces that differ from the frozen values by more than 1e-12.
pub fn mismatches() -> Vec<String> {
    let mut out = Vec::new();
    for (kind, expected) in EXPECTED {
        for ((p0, grads), want) in CASES.iter().zip(expected) {
            let got = trace(OptimizerSpec::new(kind), *p0, grads);
            if got.iter().zip(&want).any(|(g, w)| (g - w).abs() > 1e-12) {
                out.push(format!("{}: {got:?} vs {want:?}", kind.name()));
            }
        }
    }
    out
}
