//! Lloyd k-means with k-means++ seeding and single-point transfer refinement,
//! and the elbow / average-silhouette rules for choosing the number of clusters.

use alloc::vec;
use alloc::vec::Vec;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::matrix::{squared_distance, Matrix};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KMeansParams {
    pub max_iter: usize,
    /// Stop once the summed squared centroid shift falls to this value.
    pub tol: f64,
    pub n_init: usize,
}

impl Default for KMeansParams {
    fn default() -> Self {
        KMeansParams {
            max_iter: 300,
            tol: 1e-6,
            n_init: 10,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClusterModel {
    pub k: usize,
    pub centroids: Matrix,
    pub assignment: Vec<usize>,
    /// Sum of squared distances to the assigned centroids.
    pub inertia: f64,
    /// Inertia after every assignment step of the winning restart.
    pub inertia_trace: Vec<f64>,
}

impl ClusterModel {
    /// Nearest centroid, ties to the lowest index.
    pub fn assign(&self, point: &[f64]) -> Result<usize> {
        if point.len() != self.centroids.cols() {
            return Err(Error::ShapeMismatch {
                expected: self.centroids.cols(),
                actual: point.len(),
            });
        }
        Ok(nearest(&self.centroids, point).0)
    }

    pub fn cluster_sizes(&self) -> Vec<usize> {
        let mut sizes = vec![0; self.k];
        for &a in &self.assignment {
            sizes[a] += 1;
        }
        sizes
    }
}

fn nearest(centroids: &Matrix, point: &[f64]) -> (usize, f64) {
    let mut best = (0, f64::INFINITY);
    for (c, row) in centroids.iter_rows().enumerate() {
        let d = squared_distance(row, point);
        if d < best.1 {
            best = (c, d);
        }
    }
    best
}

fn assign_all(points: &Matrix, centroids: &Matrix) -> (Vec<usize>, Vec<f64>, f64) {
    let mut labels = Vec::with_capacity(points.rows());
    let mut dists = Vec::with_capacity(points.rows());
    let mut inertia = 0.0;
    for p in points.iter_rows() {
        let (c, d) = nearest(centroids, p);
        labels.push(c);
        dists.push(d);
        inertia += d;
    }
    (labels, dists, inertia)
}

fn seed_plus_plus(points: &Matrix, k: usize, rng: &mut impl Rng) -> Matrix {
    let n = points.rows();
    let mut chosen: Vec<usize> = Vec::with_capacity(k);
    chosen.push(rng.random_range(0..n));
    let mut d2: Vec<f64> = points
        .iter_rows()
        .map(|p| squared_distance(p, points.row(chosen[0])))
        .collect();
    while chosen.len() < k {
        let total: f64 = d2.iter().sum();
        let next = if total > 0.0 {
            let mut target = rng.random::<f64>() * total;
            let mut pick = n - 1;
            for (i, &d) in d2.iter().enumerate() {
                if d > 0.0 && target < d {
                    pick = i;
                    break;
                }
                target -= d;
            }
            pick
        } else {
            (0..n).find(|i| !chosen.contains(i)).unwrap_or(0)
        };
        chosen.push(next);
        for (i, p) in points.iter_rows().enumerate() {
            let d = squared_distance(p, points.row(next));
            if d < d2[i] {
                d2[i] = d;
            }
        }
    }
    points.select_rows(&chosen)
}

fn cluster_means(points: &Matrix, labels: &[usize], k: usize) -> Matrix {
    let mut sums = Matrix::zeros(k, points.cols());
    let mut counts = vec![0usize; k];
    for (p, &c) in points.iter_rows().zip(labels) {
        counts[c] += 1;
        for (s, v) in sums.row_mut(c).iter_mut().zip(p) {
            *s += v;
        }
    }
    for (c, &n) in counts.iter().enumerate() {
        if n > 0 {
            sums.row_mut(c).iter_mut().for_each(|s| *s /= n as f64);
        }
    }
    sums
}

/// Single-point moves between clusters, taken whenever one strictly lowers
/// the within-cluster sum of squares. Returns whether anything moved.
fn transfer_points(points: &Matrix, labels: &mut [usize], k: usize) -> bool {
    let mut means = cluster_means(points, labels, k);
    let mut counts = vec![0usize; k];
    labels.iter().for_each(|&c| counts[c] += 1);
    let mut moved = false;
    for (i, p) in points.iter_rows().enumerate() {
        let a = labels[i];
        if counts[a] < 2 {
            continue;
        }
        let na = counts[a] as f64;
        let cost_out = na / (na - 1.0) * squared_distance(p, means.row(a));
        let mut best = (a, cost_out);
        for b in (0..k).filter(|&b| b != a) {
            let nb = counts[b] as f64;
            let cost_in = nb / (nb + 1.0) * squared_distance(p, means.row(b));
            if cost_in < best.1 {
                best = (b, cost_in);
            }
        }
        let b = best.0;
        if b == a || cost_out - best.1 <= 1e-12 * (1.0 + cost_out) {
            continue;
        }
        let nb = counts[b] as f64;
        for (j, &x) in p.iter().enumerate() {
            let ma = means.get(a, j);
            means.set(a, j, (ma * na - x) / (na - 1.0));
            let mb = means.get(b, j);
            means.set(b, j, (mb * nb + x) / (nb + 1.0));
        }
        counts[a] -= 1;
        counts[b] += 1;
        labels[i] = b;
        moved = true;
    }
    moved
}

fn lloyd(points: &Matrix, mut centroids: Matrix, params: &KMeansParams) -> ClusterModel {
    let k = centroids.rows();
    let dim = points.cols();
    let (mut labels, mut dists, mut inertia) = assign_all(points, &centroids);
    let mut trace = vec![inertia];
    let mut iterations = 0;
    loop {
        while iterations < params.max_iter {
            iterations += 1;
            let mut sums = Matrix::zeros(k, dim);
            let mut counts = vec![0usize; k];
            for (p, &c) in points.iter_rows().zip(&labels) {
                counts[c] += 1;
                for (s, v) in sums.row_mut(c).iter_mut().zip(p) {
                    *s += v;
                }
            }
            let mut next = Matrix::zeros(k, dim);
            let mut taken: Vec<usize> = Vec::new();
            for c in 0..k {
                if counts[c] > 0 {
                    let inv = 1.0 / counts[c] as f64;
                    for (o, s) in next.row_mut(c).iter_mut().zip(sums.row(c)) {
                        *o = s * inv;
                    }
                } else {
                    // empty cluster: move it onto the worst-served point
                    let far = (0..points.rows())
                        .filter(|i| !taken.contains(i))
                        .fold(None, |best: Option<usize>, i| match best {
                            Some(b) if dists[b] >= dists[i] => Some(b),
                            _ => Some(i),
                        })
                        .unwrap_or(0);
                    taken.push(far);
                    next.row_mut(c).copy_from_slice(points.row(far));
                }
            }
            let shift: f64 = centroids
                .iter_rows()
                .zip(next.iter_rows())
                .map(|(a, b)| squared_distance(a, b))
                .sum();
            centroids = next;
            let (new_labels, new_dists, new_inertia) = assign_all(points, &centroids);
            debug_assert!(
                new_inertia <= inertia * (1.0 + 1e-12) + 1e-12,
                "Lloyd step increased inertia"
            );
            let changed = new_labels != labels;
            labels = new_labels;
            dists = new_dists;
            inertia = new_inertia;
            trace.push(inertia);
            if !changed || shift <= params.tol {
                break;
            }
        }
        if !transfer_points(points, &mut labels, k) {
            break;
        }
        centroids = cluster_means(points, &labels, k);
        let (new_labels, new_dists, new_inertia) = assign_all(points, &centroids);
        debug_assert!(
            new_inertia <= inertia * (1.0 + 1e-12) + 1e-12,
            "transfer increased inertia"
        );
        labels = new_labels;
        dists = new_dists;
        inertia = new_inertia;
        trace.push(inertia);
    }
    ClusterModel {
        k,
        centroids,
        assignment: labels,
        inertia,
        inertia_trace: trace,
    }
}

/// Best of `n_init` seeded restarts by inertia; ties go to the earliest restart.
pub fn kmeans_fit(
    points: &Matrix,
    k: usize,
    seed: u64,
    params: &KMeansParams,
) -> Result<ClusterModel> {
    if k == 0 {
        return Err(Error::invalid("k must be at least 1"));
    }
    if k > points.rows() {
        return Err(Error::invalid(alloc::format!(
            "k = {k} exceeds the {} points",
            points.rows()
        )));
    }
    let mut best: Option<ClusterModel> = None;
    for restart in 0..params.n_init.max(1) {
        let mut rng = crate::rng(seed, 0xC000 + restart as u64);
        let init = seed_plus_plus(points, k, &mut rng);
        let model = lloyd(points, init, params);
        if best.as_ref().is_none_or(|b| model.inertia < b.inertia) {
            best = Some(model);
        }
    }
    Ok(best.expect("at least one restart"))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Selection {
    pub k_star: usize,
    /// `(K, inertia)` or `(K, silhouette)` per evaluated K.
    pub curve: Vec<(usize, f64)>,
    /// Set when the curve has no interior knee.
    pub degenerate: bool,
}

/// K whose normalized `(K, inertia)` point lies farthest below the chord
/// joining the first and last points of the curve.
pub fn knee(curve: &[(usize, f64)]) -> (usize, bool) {
    if curve.len() < 3 {
        return (curve.first().map_or(1, |c| c.0), true);
    }
    let (x0, xn) = (curve[0].0 as f64, curve[curve.len() - 1].0 as f64);
    let ymax = curve.iter().map(|c| c.1).fold(f64::NEG_INFINITY, f64::max);
    let ymin = curve.iter().map(|c| c.1).fold(f64::INFINITY, f64::min);
    if ymax - ymin <= 0.0 {
        return (curve[0].0, true);
    }
    let norm = |&(k, y): &(usize, f64)| ((k as f64 - x0) / (xn - x0), (y - ymin) / (ymax - ymin));
    let (ax, ay) = norm(&curve[0]);
    let (bx, by) = norm(&curve[curve.len() - 1]);
    let (dx, dy) = (bx - ax, by - ay);
    let len = libm::sqrt(dx * dx + dy * dy);
    let mut best = (curve[0].0, 0.0);
    for point in &curve[1..curve.len() - 1] {
        let (px, py) = norm(point);
        // positive below the chord of a decreasing curve
        let dist = (dx * (py - ay) - dy * (px - ax)) / len * -1.0;
        if dist > best.1 {
            best = (point.0, dist);
        }
    }
    if best.1 <= 1e-6 {
        (curve[0].0, true)
    } else {
        (best.0, false)
    }
}

pub fn inertia_curve(
    points: &Matrix,
    ks: &[usize],
    seed: u64,
    params: &KMeansParams,
) -> Result<Vec<(usize, f64)>> {
    ks.iter()
        .filter(|&&k| k >= 1 && k <= points.rows())
        .map(|&k| Ok((k, kmeans_fit(points, k, seed, params)?.inertia)))
        .collect()
}

pub fn elbow_select(
    points: &Matrix,
    k_min: usize,
    k_max: usize,
    seed: u64,
    params: &KMeansParams,
) -> Result<Selection> {
    if k_min == 0 || k_max <= k_min {
        return Err(Error::invalid("elbow needs 1 ≤ k_min < k_max"));
    }
    let ks: Vec<usize> = (k_min..=k_max).collect();
    let curve = inertia_curve(points, &ks, seed, params)?;
    let (k_star, degenerate) = knee(&curve);
    Ok(Selection {
        k_star,
        curve,
        degenerate,
    })
}

/// Mean silhouette `(b − a) / max(a, b)` with Euclidean distances;
/// points alone in their cluster score 0.
pub fn silhouette_score(points: &Matrix, labels: &[usize], k: usize) -> Result<f64> {
    if k < 2 {
        return Err(Error::invalid("silhouette needs at least 2 clusters"));
    }
    if labels.len() != points.rows() {
        return Err(Error::ShapeMismatch {
            expected: points.rows(),
            actual: labels.len(),
        });
    }
    let mut sizes = vec![0usize; k];
    for &l in labels {
        if l >= k {
            return Err(Error::invalid(alloc::format!("label {l} outside 0..{k}")));
        }
        sizes[l] += 1;
    }
    if sizes.contains(&0) {
        return Err(Error::invalid("silhouette needs every cluster non-empty"));
    }
    let n = points.rows();
    let mut total = 0.0;
    let mut sums = vec![0.0; k];
    for i in 0..n {
        sums.iter_mut().for_each(|s| *s = 0.0);
        let pi = points.row(i);
        for j in 0..n {
            if i != j {
                sums[labels[j]] += libm::sqrt(squared_distance(pi, points.row(j)));
            }
        }
        let own = labels[i];
        if sizes[own] == 1 {
            continue;
        }
        let a = sums[own] / (sizes[own] - 1) as f64;
        let b = (0..k)
            .filter(|&c| c != own)
            .map(|c| sums[c] / sizes[c] as f64)
            .fold(f64::INFINITY, f64::min);
        let m = a.max(b);
        if m > 0.0 {
            total += (b - a) / m;
        }
    }
    Ok(total / n as f64)
}

pub fn silhouette_select(
    points: &Matrix,
    k_min: usize,
    k_max: usize,
    seed: u64,
    params: &KMeansParams,
) -> Result<Selection> {
    let k_min = k_min.max(2);
    if k_max < k_min {
        return Err(Error::invalid("silhouette range needs k_max ≥ 2"));
    }
    let mut curve = Vec::new();
    for k in k_min..=k_max.min(points.rows()) {
        let model = kmeans_fit(points, k, seed, params)?;
        // duplicate points can leave a cluster empty
        let score = silhouette_score(points, &model.assignment, k).unwrap_or(f64::NEG_INFINITY);
        curve.push((k, score));
    }
    let mut best = (k_min, f64::NEG_INFINITY);
    for &(k, s) in &curve {
        if s > best.1 {
            best = (k, s);
        }
    }
    Ok(Selection {
        k_star: best.0,
        curve,
        degenerate: best.1 == f64::NEG_INFINITY,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pts(rows: &[[f64; 2]]) -> Matrix {
        Matrix::from_rows(&rows.iter().map(|r| r.to_vec()).collect::<Vec<_>>()).unwrap()
    }

    fn blobs(seed: u64) -> Matrix {
        let mut rng = crate::rng(seed, 1);
        let centers = [[0.0, 0.0], [10.0, 0.0], [5.0, 9.0]];
        let rows: Vec<Vec<f64>> = (0..90)
            .map(|i| {
                let c = centers[i % 3];
                vec![
                    c[0] + rng.random_range(-0.5..0.5),
                    c[1] + rng.random_range(-0.5..0.5),
                ]
            })
            .collect();
        Matrix::from_rows(&rows).unwrap()
    }

    #[test]
    fn k1_is_mean() {
        let p = pts(&[[0.0, 0.0], [2.0, 0.0], [4.0, 3.0]]);
        let m = kmeans_fit(&p, 1, 0, &KMeansParams::default()).unwrap();
        assert!(
            (m.centroids.get(0, 0) - 2.0).abs() < 1e-12
                && (m.centroids.get(0, 1) - 1.0).abs() < 1e-12
        );
        // 4 + 1 + 0 + 1 + 4 + 4
        assert!((m.inertia - 14.0).abs() < 1e-12);
    }

    #[test]
    fn two_pairs() {
        let p = pts(&[[0.0, 0.0], [0.0, 1.0], [10.0, 0.0], [10.0, 1.0]]);
        let m = kmeans_fit(&p, 2, 5, &KMeansParams::default()).unwrap();
        assert!((m.inertia - 1.0).abs() < 1e-12);
        let mut cs: Vec<(f64, f64)> = m.centroids.iter_rows().map(|r| (r[0], r[1])).collect();
        cs.sort_by(|a, b| a.0.total_cmp(&b.0));
        assert_eq!(cs, vec![(0.0, 0.5), (10.0, 0.5)]);
    }

    #[test]
    fn k_equals_n_and_errors() {
        let p = pts(&[[0.0, 0.0], [1.0, 5.0], [3.0, 2.0]]);
        assert_eq!(
            kmeans_fit(&p, 3, 1, &KMeansParams::default())
                .unwrap()
                .inertia,
            0.0
        );
        assert!(kmeans_fit(&p, 4, 1, &KMeansParams::default()).is_err());
        assert!(kmeans_fit(&p, 0, 1, &KMeansParams::default()).is_err());
    }

    #[test]
    fn assign_rules() {
        let m = ClusterModel {
            k: 3,
            centroids: pts(&[[0.0, 0.0], [2.0, 0.0], [5.0, 5.0]]),
            assignment: vec![],
            inertia: 0.0,
            inertia_trace: vec![],
        };
        assert_eq!(m.assign(&[5.0, 5.0]).unwrap(), 2);
        assert_eq!(m.assign(&[1.0, 0.0]).unwrap(), 0);
        assert!(m.assign(&[1.0]).is_err());
    }

    #[test]
    fn blobs_select_three() {
        let p = blobs(7);
        let params = KMeansParams::default();
        let elbow = elbow_select(&p, 1, 30, 1, &params).unwrap();
        assert_eq!(elbow.k_star, 3, "{:?}", elbow.curve);
        assert!(!elbow.degenerate);
        let sil = silhouette_select(&p, 2, 30, 1, &params).unwrap();
        assert_eq!(sil.k_star, 3);
    }

    #[test]
    fn linear_curve_is_degenerate() {
        let curve: Vec<(usize, f64)> = (1..=10).map(|k| (k, 100.0 - 10.0 * k as f64)).collect();
        assert_eq!(knee(&curve), (1, true));
    }

    #[test]
    fn silhouette_examples() {
        let p = pts(&[[0.0, 0.0], [0.0, 0.01], [100.0, 0.0], [100.0, 0.01]]);
        assert!(silhouette_score(&p, &[0, 0, 1, 1], 2).unwrap() > 0.99);
        let same = pts(&[[1.0, 1.0]; 4]);
        assert_eq!(silhouette_score(&same, &[0, 1, 0, 1], 2).unwrap(), 0.0);
        assert!(silhouette_score(&p, &[0, 0, 0, 0], 1).is_err());
        assert!(silhouette_score(&p, &[0, 0, 0, 0], 2).is_err());
    }
}
