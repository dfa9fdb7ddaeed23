//! Rating-prediction metrics.

use alloc::collections::BTreeMap;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// One scored test rating.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Scored {
    pub user_id: u32,
    pub item_id: u32,
    pub actual: f64,
    pub predicted: f64,
}

/// Root-mean-square error over `(actual, predicted)` pairs.
pub fn rmse(pairs: &[(f64, f64)]) -> Result<f64> {
    if pairs.is_empty() {
        return Err(Error::Empty("rmse of no predictions"));
    }
    Ok(libm::sqrt(sum_squared_error(pairs) / pairs.len() as f64))
}

pub fn sum_squared_error(pairs: &[(f64, f64)]) -> f64 {
    pairs.iter().map(|(a, p)| (a - p) * (a - p)).sum()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct Confusion {
    pub tp: usize,
    pub fp: usize,
    pub fn_: usize,
    pub tn: usize,
}

impl Confusion {
    pub fn add(&mut self, other: &Confusion) {
        self.tp += other.tp;
        self.fp += other.fp;
        self.fn_ += other.fn_;
        self.tn += other.tn;
    }

    /// `None` when nothing was selected.
    pub fn precision(&self) -> Option<f64> {
        ratio(self.tp, self.tp + self.fp)
    }

    /// `None` when nothing was relevant.
    pub fn recall(&self) -> Option<f64> {
        ratio(self.tp, self.tp + self.fn_)
    }
}

fn ratio(num: usize, den: usize) -> Option<f64> {
    (den > 0).then(|| num as f64 / den as f64)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Thresholds {
    /// Actual ratings at or above this are relevant.
    pub relevance: f64,
    /// Predicted ratings at or above this are selected.
    pub selection: f64,
}

impl Default for Thresholds {
    fn default() -> Self {
        Thresholds {
            relevance: 4.0,
            selection: 4.0,
        }
    }
}

pub fn confusion(pairs: &[(f64, f64)], t: &Thresholds) -> Confusion {
    let mut c = Confusion::default();
    for &(actual, predicted) in pairs {
        match (actual >= t.relevance, predicted >= t.selection) {
            (true, true) => c.tp += 1,
            (false, true) => c.fp += 1,
            (true, false) => c.fn_ += 1,
            (false, false) => c.tn += 1,
        }
    }
    c
}

/// Pooled precision and recall; either is `None` when its denominator is 0.
pub fn precision_recall(pairs: &[(f64, f64)], t: &Thresholds) -> (Option<f64>, Option<f64>) {
    let c = confusion(pairs, t);
    (c.precision(), c.recall())
}

/// Means of the per-user precision and recall over users where each is
/// defined.
pub fn macro_precision_recall(scored: &[Scored], t: &Thresholds) -> (Option<f64>, Option<f64>) {
    let mut per_user: BTreeMap<u32, Vec<(f64, f64)>> = BTreeMap::new();
    for s in scored {
        per_user
            .entry(s.user_id)
            .or_default()
            .push((s.actual, s.predicted));
    }
    let (mut p, mut r) = (Vec::new(), Vec::new());
    for pairs in per_user.values() {
        let c = confusion(pairs, t);
        p.extend(c.precision());
        r.extend(c.recall());
    }
    let mean = |v: &[f64]| (!v.is_empty()).then(|| v.iter().sum::<f64>() / v.len() as f64);
    (mean(&p), mean(&r))
}

pub fn mean_and_variance(xs: &[f64]) -> (f64, f64) {
    if xs.is_empty() {
        return (f64::NAN, f64::NAN);
    }
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    if xs.len() < 2 {
        return (mean, 0.0);
    }
    // sample variance
    let var = xs.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / (n - 1.0);
    (mean, var)
}
