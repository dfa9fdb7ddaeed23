//! First-order update rules, each kept as close to its original formulation
//! as possible.

use alloc::vec;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OptimizerKind {
    Sgd,
    Adagrad,
    Adadelta,
    RmsProp,
    Adam,
    AdaMax,
    Nadam,
}

impl OptimizerKind {
    pub const ALL: [OptimizerKind; 7] = [
        OptimizerKind::Sgd,
        OptimizerKind::Adagrad,
        OptimizerKind::Adadelta,
        OptimizerKind::RmsProp,
        OptimizerKind::Adam,
        OptimizerKind::AdaMax,
        OptimizerKind::Nadam,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            OptimizerKind::Sgd => "sgd",
            OptimizerKind::Adagrad => "adagrad",
            OptimizerKind::Adadelta => "adadelta",
            OptimizerKind::RmsProp => "rmsprop",
            OptimizerKind::Adam => "adam",
            OptimizerKind::AdaMax => "adamax",
            OptimizerKind::Nadam => "nadam",
        }
    }

    pub fn parse(name: &str) -> Option<Self> {
        OptimizerKind::ALL
            .into_iter()
            .find(|k| k.name().eq_ignore_ascii_case(name))
    }
}

/// Optimizer choice plus its hyperparameters.
///
/// Fields a rule does not use are ignored: Adadelta has no learning rate,
/// only SGD reads `momentum`, `rho` is shared by RMSProp and Adadelta.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OptimizerSpec {
    pub kind: OptimizerKind,
    pub learning_rate: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub rho: f64,
    pub epsilon: f64,
    pub momentum: f64,
}

impl OptimizerSpec {
    /// Customary defaults for each rule.
    pub fn new(kind: OptimizerKind) -> Self {
        let base = OptimizerSpec {
            kind,
            learning_rate: 0.001,
            beta1: 0.9,
            beta2: 0.999,
            rho: 0.9,
            epsilon: 1e-7,
            momentum: 0.0,
        };
        match kind {
            OptimizerKind::Sgd => OptimizerSpec {
                learning_rate: 0.01,
                ..base
            },
            OptimizerKind::Adagrad => OptimizerSpec {
                learning_rate: 0.01,
                ..base
            },
            OptimizerKind::Adadelta => OptimizerSpec {
                learning_rate: 1.0,
                rho: 0.95,
                epsilon: 1e-6,
                ..base
            },
            OptimizerKind::RmsProp => base,
            OptimizerKind::Adam => OptimizerSpec {
                epsilon: 1e-8,
                ..base
            },
            OptimizerKind::AdaMax => OptimizerSpec {
                learning_rate: 0.002,
                ..base
            },
            OptimizerKind::Nadam => OptimizerSpec {
                learning_rate: 0.002,
                epsilon: 1e-8,
                ..base
            },
        }
    }

    pub fn validate(&self) -> Result<()> {
        let unit = |x: f64| (0.0..1.0).contains(&x);
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return Err(Error::invalid("learning rate must be positive"));
        }
        if !unit(self.beta1) || !unit(self.beta2) || !unit(self.rho) || !unit(self.momentum) {
            return Err(Error::invalid(
                "beta1, beta2, rho and momentum must lie in [0,1)",
            ));
        }
        if !(self.epsilon >= 0.0) {
            return Err(Error::invalid("epsilon must be non-negative"));
        }
        Ok(())
    }
}

/// Per-parameter state, one slot vector per parameter group.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OptimizerState {
    pub spec: OptimizerSpec,
    pub step: u64,
    first: Vec<Vec<f64>>,
    second: Vec<Vec<f64>>,
}

impl OptimizerState {
    /// Zero state shaped like the given parameter groups.
    pub fn new(spec: OptimizerSpec, group_sizes: &[usize]) -> Self {
        OptimizerState {
            spec,
            step: 0,
            first: group_sizes.iter().map(|&n| vec![0.0; n]).collect(),
            second: group_sizes.iter().map(|&n| vec![0.0; n]).collect(),
        }
    }

    /// One update of every group. Nothing is modified when a gradient is
    /// not finite.
    pub fn step(&mut self, params: &mut [&mut [f64]], grads: &[&[f64]]) -> Result<()> {
        if params.len() != self.first.len() || grads.len() != self.first.len() {
            return Err(Error::ShapeMismatch {
                expected: self.first.len(),
                actual: params.len().min(grads.len()),
            });
        }
        for (gi, (p, g)) in params.iter().zip(grads).enumerate() {
            if p.len() != self.first[gi].len() || g.len() != p.len() {
                return Err(Error::ShapeMismatch {
                    expected: self.first[gi].len(),
                    actual: g.len(),
                });
            }
            if g.iter().any(|x| !x.is_finite()) {
                return Err(Error::NonFiniteGradient(gi));
            }
        }
        self.step += 1;
        let t = self.step as f64;
        let s = self.spec;
        for (gi, (p, g)) in params.iter_mut().zip(grads).enumerate() {
            let m = &mut self.first[gi];
            let v = &mut self.second[gi];
            for k in 0..p.len() {
                let gk = g[k];
                p[k] += match s.kind {
                    OptimizerKind::Sgd => {
                        if s.momentum > 0.0 {
                            m[k] = s.momentum * m[k] - s.learning_rate * gk;
                            m[k]
                        } else {
                            -s.learning_rate * gk
                        }
                    }
                    OptimizerKind::Adagrad => {
                        v[k] += gk * gk;
                        -s.learning_rate * gk / (libm::sqrt(v[k]) + s.epsilon)
                    }
                    OptimizerKind::Adadelta => {
                        v[k] = s.rho * v[k] + (1.0 - s.rho) * gk * gk;
                        let dx = -libm::sqrt(m[k] + s.epsilon) / libm::sqrt(v[k] + s.epsilon) * gk;
                        m[k] = s.rho * m[k] + (1.0 - s.rho) * dx * dx;
                        dx
                    }
                    OptimizerKind::RmsProp => {
                        v[k] = s.rho * v[k] + (1.0 - s.rho) * gk * gk;
                        -s.learning_rate * gk / (libm::sqrt(v[k]) + s.epsilon)
                    }
                    OptimizerKind::Adam => {
                        m[k] = s.beta1 * m[k] + (1.0 - s.beta1) * gk;
                        v[k] = s.beta2 * v[k] + (1.0 - s.beta2) * gk * gk;
                        let m_hat = m[k] / (1.0 - libm::pow(s.beta1, t));
                        let v_hat = v[k] / (1.0 - libm::pow(s.beta2, t));
                        -s.learning_rate * m_hat / (libm::sqrt(v_hat) + s.epsilon)
                    }
                    OptimizerKind::AdaMax => {
                        m[k] = s.beta1 * m[k] + (1.0 - s.beta1) * gk;
                        v[k] = (s.beta2 * v[k]).max(gk.abs());
                        if v[k] == 0.0 {
                            0.0
                        } else {
                            -(s.learning_rate / (1.0 - libm::pow(s.beta1, t))) * m[k] / v[k]
                        }
                    }
                    OptimizerKind::Nadam => {
                        // constant momentum schedule mu_t = beta1
                        m[k] = s.beta1 * m[k] + (1.0 - s.beta1) * gk;
                        v[k] = s.beta2 * v[k] + (1.0 - s.beta2) * gk * gk;
                        let m_hat = s.beta1 * m[k] / (1.0 - libm::pow(s.beta1, t + 1.0))
                            + (1.0 - s.beta1) * gk / (1.0 - libm::pow(s.beta1, t));
                        let v_hat = v[k] / (1.0 - libm::pow(s.beta2, t));
                        -s.learning_rate * m_hat / (libm::sqrt(v_hat) + s.epsilon)
                    }
                };
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn run(spec: OptimizerSpec, p0: f64, grads: &[f64]) -> Vec<f64> {
        let mut state = OptimizerState::new(spec, &[1]);
        let mut p = [p0];
        let mut out = Vec::new();
        for &g in grads {
            state.step(&mut [&mut p[..]], &[&[g][..]]).unwrap();
            out.push(p[0]);
        }
        out
    }

    #[test]
    fn sgd_step() {
        let spec = OptimizerSpec {
            learning_rate: 0.1,
            ..OptimizerSpec::new(OptimizerKind::Sgd)
        };
        assert!((run(spec, 0.0, &[1.0])[0] + 0.1).abs() < 1e-15);
    }

    #[test]
    fn adam_first_step_is_lr_sized() {
        let spec = OptimizerSpec::new(OptimizerKind::Adam);
        for g in [1e-3, 0.5, -3.0, 250.0] {
            let p = run(spec, 0.0, &[g])[0];
            assert!((p.abs() - 0.001).abs() < 1e-7, "g={g} p={p}");
            assert_eq!(p.signum(), -g.signum());
        }
    }

    #[test]
    fn adagrad_accumulates() {
        let spec = OptimizerSpec {
            learning_rate: 1.0,
            epsilon: 0.0,
            ..OptimizerSpec::new(OptimizerKind::Adagrad)
        };
        let trace = run(spec, 0.0, &[2.0, 2.0]);
        assert!((trace[0] + 1.0).abs() < 1e-15);
        assert!((trace[1] - (-1.0 - 2.0 / libm::sqrt(8.0))).abs() < 1e-15);
    }

    #[test]
    fn non_finite_gradient_leaves_params() {
        let mut state = OptimizerState::new(OptimizerSpec::new(OptimizerKind::Adam), &[2]);
        let mut p = [1.0, 2.0];
        let err = state.step(&mut [&mut p[..]], &[&[0.1, f64::NAN][..]]);
        assert_eq!(err, Err(Error::NonFiniteGradient(0)));
        assert_eq!(p, [1.0, 2.0]);
        assert_eq!(state.step, 0);
    }

    #[test]
    fn zero_gradient_adamax_is_still() {
        let p = run(OptimizerSpec::new(OptimizerKind::AdaMax), 0.3, &[0.0, 0.0]);
        assert_eq!(p, vec![0.3, 0.3]);
    }

    #[test]
    fn parse_names() {
        for k in OptimizerKind::ALL {
            assert_eq!(OptimizerKind::parse(k.name()), Some(k));
        }
        assert_eq!(
            OptimizerKind::parse("RMSProp"),
            Some(OptimizerKind::RmsProp)
        );
        assert_eq!(OptimizerKind::parse("lbfgs"), None);
    }

    #[test]
    fn validate_ranges() {
        assert!(OptimizerSpec::new(OptimizerKind::Adam).validate().is_ok());
        let bad = OptimizerSpec {
            beta1: 1.0,
            ..OptimizerSpec::new(OptimizerKind::Adam)
        };
        assert!(bad.validate().is_err());
        let bad = OptimizerSpec {
            learning_rate: 0.0,
            ..OptimizerSpec::new(OptimizerKind::Sgd)
        };
        assert!(bad.validate().is_err());
    }
}
