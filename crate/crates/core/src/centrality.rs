//! Per-node graph features: PageRank, degree, closeness, betweenness, load
//! and average neighbor degree.
//!
//! All shortest-path measures run one breadth-first pass per source node.
//! Sources are processed in fixed chunks whose partial sums are added in
//! chunk order, so sequential and `parallel` builds produce identical bits.

use alloc::collections::{BTreeMap, VecDeque};
use alloc::vec;
use alloc::vec::Vec;

use rand::seq::index;
use serde::{Deserialize, Serialize};

use crate::matrix::Matrix;
use crate::similarity::SimilarityGraph;
use crate::{Error, Result};

pub const FEATURE_NAMES: [&str; 6] = ["PR", "CD", "CC", "CB", "LC", "AND"];

const SOURCE_CHUNK: usize = 32;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PageRankParams {
    pub damping: f64,
    pub tol: f64,
    pub max_iter: usize,
}

impl Default for PageRankParams {
    fn default() -> Self {
        PageRankParams {
            damping: 0.85,
            tol: 1e-8,
            max_iter: 200,
        }
    }
}

/// Which sources the betweenness and load passes visit.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum SourceSampling {
    /// Every node.
    Exact,
    /// `pivots` distinct random nodes, rescaled by `n / pivots`.
    Pivots { pivots: usize, seed: u64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CentralityOptions {
    pub pagerank: PageRankParams,
    pub normalized: bool,
    pub sampling: SourceSampling,
}

impl Default for CentralityOptions {
    fn default() -> Self {
        CentralityOptions {
            pagerank: PageRankParams::default(),
            normalized: true,
            sampling: SourceSampling::Exact,
        }
    }
}

/// PageRank by power iteration on the random-walk transition matrix.
///
/// Isolated nodes are dangling: their mass is spread uniformly. Iteration
/// stops once the L1 change drops below `tol`.
pub fn pagerank(g: &SimilarityGraph, params: &PageRankParams) -> Result<Vec<f64>> {
    let n = g.n_nodes();
    if n == 0 {
        return Err(Error::Empty("pagerank on an empty graph"));
    }
    let d = params.damping;
    let nf = n as f64;
    let mut rank = vec![1.0 / nf; n];
    let mut next = vec![0.0; n];
    let mut residual = f64::INFINITY;
    for _ in 0..params.max_iter {
        let dangling: f64 = (0..n).filter(|&v| g.degree(v) == 0).map(|v| rank[v]).sum();
        let base = (1.0 - d) / nf + d * dangling / nf;
        for v in 0..n {
            let inflow: f64 = g
                .neighbors(v)
                .iter()
                .map(|&u| rank[u as usize] / g.degree(u as usize) as f64)
                .sum();
            next[v] = base + d * inflow;
        }
        residual = rank.iter().zip(&next).map(|(a, b)| (a - b).abs()).sum();
        core::mem::swap(&mut rank, &mut next);
        if residual < params.tol {
            return Ok(rank);
        }
    }
    Err(Error::NotConverged {
        iterations: params.max_iter,
        residual,
    })
}

/// `deg(u) / (n − 1)`.
pub fn degree_centrality(g: &SimilarityGraph) -> Result<Vec<f64>> {
    let n = g.n_nodes();
    if n < 2 {
        return Err(Error::invalid("degree centrality needs at least 2 nodes"));
    }
    Ok((0..n)
        .map(|v| g.degree(v) as f64 / (n - 1) as f64)
        .collect())
}

/// Closeness `r / Σ d(v,u)` over the `r` nodes reachable from `u`, scaled by
/// `r / (n − 1)` so that nodes in small components are not inflated.
pub fn closeness_centrality(g: &SimilarityGraph) -> Vec<f64> {
    let n = g.n_nodes();
    let mut out = vec![0.0; n];
    if n < 2 {
        return out;
    }
    let mut bfs = Bfs::new(n);
    for (u, slot) in out.iter_mut().enumerate() {
        bfs.run(g, u, false);
        let reached = bfs.order.len() - 1;
        let total: usize = bfs
            .order
            .iter()
            .map(|&v| bfs.dist[v as usize] as usize)
            .sum();
        if total > 0 {
            let r = reached as f64;
            *slot = (r / total as f64) * (r / (n - 1) as f64);
        }
    }
    out
}

/// Shortest-path betweenness (Brandes) on the undirected graph.
///
/// Each unordered pair `{s, t}` distributes one unit over the nodes strictly
/// inside its shortest paths, proportionally to the number of paths through
/// them. With `normalized` the result is divided by `(n−1)(n−2)/2`.
pub fn betweenness_centrality(g: &SimilarityGraph, normalized: bool) -> Vec<f64> {
    betweenness_with_sampling(g, normalized, SourceSampling::Exact)
}

pub fn betweenness_with_sampling(
    g: &SimilarityGraph,
    normalized: bool,
    sampling: SourceSampling,
) -> Vec<f64> {
    let (sources, scale) = sources(g.n_nodes(), sampling);
    let mut acc = accumulate(g, &sources, brandes_source);
    finish_pair_measure(&mut acc, scale, normalized);
    acc
}

/// Newman's load centrality: a unit flow sent between each pair splits
/// equally over the predecessors at every hop, rather than per path.
pub fn load_centrality(g: &SimilarityGraph, normalized: bool) -> Vec<f64> {
    load_with_sampling(g, normalized, SourceSampling::Exact)
}

pub fn load_with_sampling(
    g: &SimilarityGraph,
    normalized: bool,
    sampling: SourceSampling,
) -> Vec<f64> {
    let (sources, scale) = sources(g.n_nodes(), sampling);
    let mut acc = accumulate(g, &sources, load_source);
    finish_pair_measure(&mut acc, scale, normalized);
    acc
}

/// Mean degree of the neighbors; 0 for isolated nodes.
pub fn average_neighbor_degree(g: &SimilarityGraph) -> Vec<f64> {
    (0..g.n_nodes())
        .map(|u| {
            let nb = g.neighbors(u);
            if nb.is_empty() {
                0.0
            } else {
                nb.iter().map(|&v| g.degree(v as usize) as f64).sum::<f64>() / nb.len() as f64
            }
        })
        .collect()
}

/// Strength-weighted neighbor degree `(1/s_u) Σ w_uv k_v`.
///
/// `weights` is keyed by `(min(u,v), max(u,v))` and must cover every edge.
pub fn average_neighbor_degree_weighted(
    g: &SimilarityGraph,
    weights: &BTreeMap<(usize, usize), f64>,
) -> Result<Vec<f64>> {
    let mut out = vec![0.0; g.n_nodes()];
    for (u, slot) in out.iter_mut().enumerate() {
        let (mut strength, mut acc) = (0.0, 0.0);
        for &v in g.neighbors(u) {
            let v = v as usize;
            let key = if u < v { (u, v) } else { (v, u) };
            let w = *weights.get(&key).ok_or_else(|| {
                Error::invalid(alloc::format!(
                    "missing weight for edge ({}, {})",
                    key.0,
                    key.1
                ))
            })?;
            strength += w;
            acc += w * g.degree(v) as f64;
        }
        if strength > 0.0 {
            *slot = acc / strength;
        }
    }
    Ok(out)
}

/// Per-user graph features, columns in [`FEATURE_NAMES`] order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GraphFeatureMatrix {
    pub user_ids: Vec<u32>,
    pub values: Matrix,
}

impl GraphFeatureMatrix {
    pub fn column(&self, c: usize) -> Vec<f64> {
        (0..self.values.rows())
            .map(|r| self.values.get(r, c))
            .collect()
    }

    pub fn row_of(&self, user_id: u32) -> Option<&[f64]> {
        self.user_ids
            .binary_search(&user_id)
            .ok()
            .map(|r| self.values.row(r))
    }
}

pub fn extract_all(g: &SimilarityGraph, opts: &CentralityOptions) -> Result<GraphFeatureMatrix> {
    let pr = pagerank(g, &opts.pagerank)?;
    let cd = degree_centrality(g)?;
    let cc = closeness_centrality(g);
    let cb = betweenness_with_sampling(g, opts.normalized, opts.sampling);
    let lc = load_with_sampling(g, opts.normalized, opts.sampling);
    let and = average_neighbor_degree(g);
    let n = g.n_nodes();
    let mut values = Matrix::zeros(n, 6);
    for v in 0..n {
        values
            .row_mut(v)
            .copy_from_slice(&[pr[v], cd[v], cc[v], cb[v], lc[v], and[v]]);
    }
    Ok(GraphFeatureMatrix {
        user_ids: g.user_ids().to_vec(),
        values,
    })
}

fn sources(n: usize, sampling: SourceSampling) -> (Vec<usize>, f64) {
    match sampling {
        SourceSampling::Pivots { pivots, seed } if pivots > 0 && pivots < n => {
            let mut picked = index::sample(&mut crate::rng(seed, 0x9170), n, pivots).into_vec();
            picked.sort_unstable();
            (picked, n as f64 / pivots as f64)
        }
        _ => ((0..n).collect(), 1.0),
    }
}

/// Halves the ordered-pair sums of an undirected graph and applies scaling.
fn finish_pair_measure(acc: &mut [f64], scale: f64, normalized: bool) {
    let n = acc.len();
    let mut factor = 0.5 * scale;
    if normalized {
        if n <= 2 {
            factor = 0.0;
        } else {
            factor *= 2.0 / ((n - 1) * (n - 2)) as f64;
        }
    }
    for x in acc {
        *x *= factor;
    }
}

/// Scratch space reused by one worker across its sources.
struct Bfs {
    dist: Vec<i64>,
    sigma: Vec<f64>,
    delta: Vec<f64>,
    order: Vec<u32>,
    preds: Vec<Vec<u32>>,
    queue: VecDeque<u32>,
}

impl Bfs {
    fn new(n: usize) -> Self {
        Bfs {
            dist: vec![-1; n],
            sigma: vec![0.0; n],
            delta: vec![0.0; n],
            order: Vec::with_capacity(n),
            preds: vec![Vec::new(); n],
            queue: VecDeque::with_capacity(n),
        }
    }

    /// BFS from `s`; `order` lists reached nodes by non-decreasing distance.
    fn run(&mut self, g: &SimilarityGraph, s: usize, with_paths: bool) {
        for &v in &self.order {
            let v = v as usize;
            self.dist[v] = -1;
            self.sigma[v] = 0.0;
            self.delta[v] = 0.0;
            self.preds[v].clear();
        }
        self.order.clear();
        self.dist[s] = 0;
        self.sigma[s] = 1.0;
        self.queue.push_back(s as u32);
        while let Some(v) = self.queue.pop_front() {
            self.order.push(v);
            let v = v as usize;
            let dv = self.dist[v];
            for &w in g.neighbors(v) {
                let wi = w as usize;
                if self.dist[wi] < 0 {
                    self.dist[wi] = dv + 1;
                    self.queue.push_back(w);
                }
                if with_paths && self.dist[wi] == dv + 1 {
                    self.sigma[wi] += self.sigma[v];
                    self.preds[wi].push(v as u32);
                }
            }
        }
    }
}

fn brandes_source(g: &SimilarityGraph, s: usize, bfs: &mut Bfs, acc: &mut [f64]) {
    bfs.run(g, s, true);
    for k in (0..bfs.order.len()).rev() {
        let w = bfs.order[k] as usize;
        let coeff = (1.0 + bfs.delta[w]) / bfs.sigma[w];
        for p in 0..bfs.preds[w].len() {
            let v = bfs.preds[w][p] as usize;
            bfs.delta[v] += bfs.sigma[v] * coeff;
        }
        if w != s {
            acc[w] += bfs.delta[w];
        }
    }
}

fn load_source(g: &SimilarityGraph, s: usize, bfs: &mut Bfs, acc: &mut [f64]) {
    bfs.run(g, s, true);
    // delta holds the flow arriving at each node from the farther layers
    for k in (0..bfs.order.len()).rev() {
        let v = bfs.order[k] as usize;
        if v == s {
            continue;
        }
        let through = 1.0 + bfs.delta[v];
        let share = through / bfs.preds[v].len() as f64;
        for p in 0..bfs.preds[v].len() {
            let x = bfs.preds[v][p] as usize;
            if x != s {
                bfs.delta[x] += share;
            }
        }
        acc[v] += bfs.delta[v];
    }
}

type SourcePass = fn(&SimilarityGraph, usize, &mut Bfs, &mut [f64]);

fn accumulate_chunk(g: &SimilarityGraph, chunk: &[usize], pass: SourcePass) -> Vec<f64> {
    let n = g.n_nodes();
    let mut bfs = Bfs::new(n);
    let mut acc = vec![0.0; n];
    for &s in chunk {
        pass(g, s, &mut bfs, &mut acc);
    }
    acc
}

fn accumulate(g: &SimilarityGraph, sources: &[usize], pass: SourcePass) -> Vec<f64> {
    let n = g.n_nodes();
    #[cfg(feature = "parallel")]
    let partials: Vec<Vec<f64>> = {
        use rayon::prelude::*;
        sources
            .par_chunks(SOURCE_CHUNK)
            .map(|c| accumulate_chunk(g, c, pass))
            .collect()
    };
    #[cfg(not(feature = "parallel"))]
    let partials: Vec<Vec<f64>> = sources
        .chunks(SOURCE_CHUNK)
        .map(|c| accumulate_chunk(g, c, pass))
        .collect();

    let mut total = vec![0.0; n];
    for part in partials {
        for (t, p) in total.iter_mut().zip(part) {
            *t += p;
        }
    }
    total
}
