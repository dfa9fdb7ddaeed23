#![allow(dead_code)]

//! Exhaustive optimum over every partition of small point sets.

use ghrs_core::kmeans::{kmeans_fit, KMeansParams};
use ghrs_core::matrix::Matrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn sse(points: &Matrix, labels: &[usize], k: usize) -> f64 {
    let mut total = 0.0;
    for c in 0..k {
        let members: Vec<&[f64]> = points
            .iter_rows()
            .zip(labels)
            .filter(|(_, &l)| l == c)
            .map(|(p, _)| p)
            .collect();
        let mean: Vec<f64> = (0..points.cols())
            .map(|j| members.iter().map(|p| p[j]).sum::<f64>() / members.len() as f64)
            .collect();
        total += members
            .iter()
            .map(|p| {
                p.iter()
                    .zip(&mean)
                    .map(|(a, b)| (a - b) * (a - b))
                    .sum::<f64>()
            })
            .sum::<f64>();
    }
    total
}

/// Minimum within-cluster sum of squares over partitions into exactly `k`
/// non-empty blocks, walked as restricted growth strings.
pub fn exhaustive_optimum(points: &Matrix, k: usize) -> f64 {
    fn walk(points: &Matrix, k: usize, labels: &mut Vec<usize>, used: usize, best: &mut f64) {
        let n = points.rows();
        if labels.len() == n {
            if used == k {
                *best = best.min(sse(points, labels, k));
            }
            return;
        }
        if k - used > n - labels.len() {
            return;
        }
        for l in 0..(used + 1).min(k) {
            labels.push(l);
            walk(points, k, labels, used.max(l + 1), best);
            labels.pop();
        }
    }
    let mut best = f64::INFINITY;
    walk(points, k, &mut Vec::new(), 0, &mut best);
    best
}

pub fn random_points(rng: &mut ChaCha8Rng) -> Matrix {
    let n = rng.random_range(1..=8);
    let d = rng.random_range(1..=3);
    let grid = rng.random_bool(0.3);
    let data = (0..n * d)
        .map(|_| {
            if grid {
                f64::from(rng.random_range(0..3u8))
            } else {
                rng.random_range(-2.0..2.0)
            }
        })
        .collect();
    Matrix::from_vec(n, d, data).unwrap()
}

pub fn monotone(trace: &[f64]) -> bool {
    trace
        .windows(2)
        .all(|w| w[1] <= w[0] * (1.0 + 1e-12) + 1e-12)
}

/// Whether moving one point to another cluster lowers the sum of squares.
pub fn single_move_improves(points: &Matrix, labels: &[usize], k: usize) -> bool {
    let base = sse(points, labels, k);
    let mut trial = labels.to_vec();
    for i in 0..labels.len() {
        let a = labels[i];
        if labels.iter().filter(|&&l| l == a).count() < 2 {
            continue;
        }
        for b in (0..k).filter(|&b| b != a) {
            trial[i] = b;
            if sse(points, &trial, k) < base - 1e-9 * (1.0 + base) {
                return true;
            }
        }
        trial[i] = a;
    }
    false
}

#[derive(Debug, Default)]
pub struct Report {
    pub fits: usize,
    /// Best-of-restart fits above the exhaustive optimum.
    pub misses: Vec<String>,
    /// Runs whose inertia trace rose, counting every single-restart run.
    pub non_monotone: usize,
    pub below_optimum: usize,
    pub inconsistent: usize,
    pub improvable: usize,
}

/// `cases` random instances, every `K ≤ min(3, n)`, default parameters,
/// plus five single-restart runs per instance and `K`.
pub fn run(cases: u64, seed: u64) -> Report {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let params = KMeansParams::default();
    let single = KMeansParams {
        n_init: 1,
        ..params
    };
    let mut report = Report::default();
    for case in 0..cases {
        let points = random_points(&mut rng);
        for k in 1..=points.rows().min(3) {
            let opt = exhaustive_optimum(&points, k);
            let model = kmeans_fit(&points, k, case, &params).unwrap();
            report.fits += 1;
            if (model.inertia - opt).abs() > 1e-9 {
                report
                    .misses
                    .push(format!("case {case} K={k}: {} vs {opt}", model.inertia));
            }
            if (sse(&points, &model.assignment, k) - model.inertia).abs() > 1e-9 {
                report.inconsistent += 1;
            }
            if single_move_improves(&points, &model.assignment, k) {
                report.improvable += 1;
            }
            for s in 0..5 {
                let one = kmeans_fit(&points, k, case * 5 + s, &single).unwrap();
                if !monotone(&one.inertia_trace) {
                    report.non_monotone += 1;
                }
                if one.inertia < opt - 1e-9 {
                    report.below_optimum += 1;
                }
            }
            if !monotone(&model.inertia_trace) {
                report.non_monotone += 1;
            }
        }
    }
    report
}
