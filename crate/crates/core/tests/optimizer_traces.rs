#[path = "oracles/optimizer.rs"]
mod oracle;

use ghrs_core::autoencoder::{OptimizerKind, OptimizerSpec};

#[test]
fn default_traces_match_reference() {
    let bad = oracle::mismatches();
    assert!(bad.is_empty(), "{bad:#?}");
}

#[test]
fn sgd_momentum_trace() {
    let spec = OptimizerSpec {
        momentum: 0.9,
        ..OptimizerSpec::new(OptimizerKind::Sgd)
    };
    let got = oracle::trace(spec, 0.5, &[0.3, -0.2]);
    assert!((got[0] - 0.497).abs() <= 1e-12);
    assert!((got[1] - 0.4963).abs() <= 1e-12);
}

#[test]
fn every_kind_is_covered() {
    let kinds: Vec<OptimizerKind> = oracle::EXPECTED.iter().map(|e| e.0).collect();
    assert_eq!(kinds, OptimizerKind::ALL.to_vec());
}
