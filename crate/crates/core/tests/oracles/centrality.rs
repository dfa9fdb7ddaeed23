#![allow(dead_code)]

//! Brute-force centralities over every small connected graph.

use std::collections::HashSet;

use ghrs_core::centrality::{
    average_neighbor_degree, betweenness_centrality, closeness_centrality, degree_centrality,
    load_centrality, pagerank, PageRankParams,
};
use ghrs_core::SimilarityGraph;
use rand::{Rng, SeedableRng};

/// Adjacency as one bitmask per vertex.
pub type Adj = Vec<u16>;

fn edges_of(adj: &Adj) -> Vec<(usize, usize)> {
    let n = adj.len();
    let mut e = Vec::new();
    for u in 0..n {
        for v in u + 1..n {
            if adj[u] >> v & 1 == 1 {
                e.push((u, v));
            }
        }
    }
    e
}

/// Colour refinement labels; isomorphism invariant.
fn refine(adj: &Adj) -> Vec<usize> {
    let n = adj.len();
    let mut colour: Vec<usize> = adj.iter().map(|m| m.count_ones() as usize).collect();
    loop {
        let sigs: Vec<(usize, Vec<usize>)> = (0..n)
            .map(|v| {
                let mut nb: Vec<usize> = (0..n)
                    .filter(|&u| adj[v] >> u & 1 == 1)
                    .map(|u| colour[u])
                    .collect();
                nb.sort_unstable();
                (colour[v], nb)
            })
            .collect();
        let mut distinct = sigs.clone();
        distinct.sort();
        distinct.dedup();
        let next: Vec<usize> = sigs
            .iter()
            .map(|s| distinct.binary_search(s).unwrap())
            .collect();
        let before = colour.iter().collect::<HashSet<_>>().len();
        if distinct.len() == before {
            return next;
        }
        colour = next;
    }
}

fn code(adj: &Adj, order: &[usize]) -> u64 {
    let n = order.len();
    let mut c = 0u64;
    for i in 0..n {
        for j in i + 1..n {
            c = c << 1 | u64::from(adj[order[i]] >> order[j] & 1);
        }
    }
    c
}

/// Largest adjacency code over orders that list colour classes in colour
/// order, trying every arrangement inside each class.
fn canonical(adj: &Adj) -> u64 {
    let colour = refine(adj);
    let mut classes: Vec<Vec<usize>> = Vec::new();
    let mut by_colour: Vec<(usize, usize)> = colour.iter().copied().zip(0..adj.len()).collect();
    by_colour.sort_unstable();
    for (c, v) in by_colour {
        match classes.last_mut() {
            Some(last) if colour[last[0]] == c => last.push(v),
            _ => classes.push(vec![v]),
        }
    }
    let mut best = 0u64;
    let mut order = Vec::with_capacity(adj.len());
    permute_classes(adj, &mut classes, 0, &mut order, &mut best);
    best
}

fn permute_classes(
    adj: &Adj,
    classes: &mut [Vec<usize>],
    ci: usize,
    order: &mut Vec<usize>,
    best: &mut u64,
) {
    if ci == classes.len() {
        *best = (*best).max(code(adj, order));
        return;
    }
    let k = classes[ci].len();
    heap_permutations(adj, classes, ci, k, order, best);
}

fn heap_permutations(
    adj: &Adj,
    classes: &mut [Vec<usize>],
    ci: usize,
    k: usize,
    order: &mut Vec<usize>,
    best: &mut u64,
) {
    if k <= 1 {
        let len = order.len();
        order.extend_from_slice(&classes[ci]);
        permute_classes(adj, classes, ci + 1, order, best);
        order.truncate(len);
        return;
    }
    for i in 0..k {
        heap_permutations(adj, classes, ci, k - 1, order, best);
        let j = if k % 2 == 0 { i } else { 0 };
        classes[ci].swap(j, k - 1);
    }
}

/// Connected graphs on `1..=max_n` vertices, one per isomorphism class,
/// grown by attaching a new vertex to every non-empty vertex subset.
pub fn connected_graphs(max_n: usize) -> Vec<Vec<Adj>> {
    let mut levels: Vec<Vec<Adj>> = vec![vec![vec![0]]];
    for n in 2..=max_n {
        let mut seen = HashSet::new();
        let mut next = Vec::new();
        for g in &levels[n - 2] {
            for subset in 1u16..(1 << (n - 1)) {
                let mut h = g.clone();
                h.push(subset);
                for (v, m) in h.iter_mut().enumerate().take(n - 1) {
                    if subset >> v & 1 == 1 {
                        *m |= 1 << (n - 1);
                    }
                }
                if seen.insert(canonical(&h)) {
                    next.push(h);
                }
            }
        }
        levels.push(next);
    }
    levels
}

fn distances(adj: &Adj) -> Vec<Vec<usize>> {
    let n = adj.len();
    let inf = usize::MAX / 4;
    let mut d = vec![vec![inf; n]; n];
    for u in 0..n {
        d[u][u] = 0;
        for v in 0..n {
            if adj[u] >> v & 1 == 1 {
                d[u][v] = 1;
            }
        }
    }
    for k in 0..n {
        for i in 0..n {
            for j in 0..n {
                if d[i][k] + d[k][j] < d[i][j] {
                    d[i][j] = d[i][k] + d[k][j];
                }
            }
        }
    }
    d
}

/// Every shortest `s → t` path, listed explicitly.
fn shortest_paths(adj: &Adj, d: &[Vec<usize>], s: usize, t: usize) -> Vec<Vec<usize>> {
    fn walk(
        adj: &Adj,
        d: &[Vec<usize>],
        v: usize,
        t: usize,
        path: &mut Vec<usize>,
        out: &mut Vec<Vec<usize>>,
    ) {
        if v == t {
            out.push(path.clone());
            return;
        }
        for u in 0..adj.len() {
            if adj[v] >> u & 1 == 1 && d[u][t] + 1 == d[v][t] {
                path.push(u);
                walk(adj, d, u, t, path, out);
                path.pop();
            }
        }
    }
    let mut out = Vec::new();
    if d[s][t] < usize::MAX / 4 {
        walk(adj, d, s, t, &mut vec![s], &mut out);
    }
    out
}

fn oracle_betweenness(adj: &Adj) -> Vec<f64> {
    let n = adj.len();
    let d = distances(adj);
    let mut b = vec![0.0; n];
    for s in 0..n {
        for t in s + 1..n {
            let paths = shortest_paths(adj, &d, s, t);
            for p in &paths {
                for &v in &p[1..p.len() - 1] {
                    b[v] += 1.0 / paths.len() as f64;
                }
            }
        }
    }
    if n > 2 {
        let scale = ((n - 1) * (n - 2)) as f64 / 2.0;
        b.iter_mut().for_each(|x| *x /= scale);
    } else {
        b.iter_mut().for_each(|x| *x = 0.0);
    }
    b
}

/// Unit flow from every `t` to every `s`, split equally over the
/// neighbours one hop closer to `s`.
fn oracle_load(adj: &Adj) -> Vec<f64> {
    let n = adj.len();
    let d = distances(adj);
    let inf = usize::MAX / 4;
    let mut load = vec![0.0; n];
    for s in 0..n {
        for t in 0..n {
            if t == s || d[s][t] >= inf {
                continue;
            }
            let mut flow = vec![0.0; n];
            flow[t] = 1.0;
            for dist in (1..=d[s][t]).rev() {
                for v in (0..n).filter(|&v| d[s][v] == dist) {
                    let closer: Vec<usize> = (0..n)
                        .filter(|&u| adj[v] >> u & 1 == 1 && d[s][u] + 1 == dist)
                        .collect();
                    for &u in &closer {
                        flow[u] += flow[v] / closer.len() as f64;
                    }
                }
            }
            for v in 0..n {
                if v != s && v != t {
                    load[v] += flow[v];
                }
            }
        }
    }
    if n > 2 {
        let scale = ((n - 1) * (n - 2)) as f64;
        load.iter_mut().for_each(|x| *x /= scale);
    } else {
        load.iter_mut().for_each(|x| *x = 0.0);
    }
    load
}

fn oracle_closeness(adj: &Adj) -> Vec<f64> {
    let n = adj.len();
    let d = distances(adj);
    (0..n)
        .map(|u| {
            let reach: Vec<usize> = (0..n)
                .filter(|&v| v != u && d[u][v] < usize::MAX / 4)
                .map(|v| d[u][v])
                .collect();
            let total: usize = reach.iter().sum();
            if total == 0 || n < 2 {
                0.0
            } else {
                let r = reach.len() as f64;
                (r / total as f64) * (r / (n - 1) as f64)
            }
        })
        .collect()
}

/// Solves the stationary equations directly by Gaussian elimination.
fn oracle_pagerank(adj: &Adj, damping: f64) -> Vec<f64> {
    let n = adj.len();
    let deg: Vec<f64> = adj.iter().map(|m| f64::from(m.count_ones())).collect();
    // (I - d·T) x = (1-d)/n, T[v][u] = 1/deg(u) on edges, 1/n for dangling u
    let mut a = vec![vec![0.0; n + 1]; n];
    for v in 0..n {
        a[v][v] += 1.0;
        for u in 0..n {
            let t = if deg[u] == 0.0 {
                1.0 / n as f64
            } else if adj[u] >> v & 1 == 1 {
                1.0 / deg[u]
            } else {
                0.0
            };
            a[v][u] -= damping * t;
        }
        a[v][n] = (1.0 - damping) / n as f64;
    }
    for col in 0..n {
        let pivot = (col..n)
            .max_by(|&i, &j| a[i][col].abs().total_cmp(&a[j][col].abs()))
            .unwrap();
        a.swap(col, pivot);
        for row in 0..n {
            if row != col {
                let f = a[row][col] / a[col][col];
                for k in col..=n {
                    a[row][k] -= f * a[col][k];
                }
            }
        }
    }
    (0..n).map(|i| a[i][n] / a[i][i]).collect()
}

fn oracle_and(adj: &Adj) -> Vec<f64> {
    let deg: Vec<f64> = adj.iter().map(|m| f64::from(m.count_ones())).collect();
    (0..adj.len())
        .map(|u| {
            let nb: Vec<usize> = (0..adj.len()).filter(|&v| adj[u] >> v & 1 == 1).collect();
            if nb.is_empty() {
                0.0
            } else {
                nb.iter().map(|&v| deg[v]).sum::<f64>() / nb.len() as f64
            }
        })
        .collect()
}

fn close(name: &str, adj: &Adj, got: &[f64], want: &[f64], tol: f64) -> Result<(), String> {
    for (v, (g, w)) in got.iter().zip(want).enumerate() {
        if (g - w).abs() > tol || g.is_nan() {
            return Err(format!(
                "{name} node {v}: {g} vs {w} on {:?}",
                edges_of(adj)
            ));
        }
    }
    Ok(())
}

pub fn check(adj: &Adj) -> Result<(), String> {
    let n = adj.len();
    let g = SimilarityGraph::from_edges(n, &edges_of(adj)).map_err(|e| e.to_string())?;
    close(
        "betweenness",
        adj,
        &betweenness_centrality(&g, true),
        &oracle_betweenness(adj),
        1e-9,
    )?;
    close(
        "load",
        adj,
        &load_centrality(&g, true),
        &oracle_load(adj),
        1e-9,
    )?;
    close(
        "closeness",
        adj,
        &closeness_centrality(&g),
        &oracle_closeness(adj),
        1e-9,
    )?;
    close(
        "and",
        adj,
        &average_neighbor_degree(&g),
        &oracle_and(adj),
        1e-9,
    )?;
    if n >= 2 {
        let want: Vec<f64> = adj
            .iter()
            .map(|m| f64::from(m.count_ones()) / (n - 1) as f64)
            .collect();
        close(
            "degree",
            adj,
            &degree_centrality(&g).map_err(|e| e.to_string())?,
            &want,
            1e-9,
        )?;
    } else if degree_centrality(&g).is_ok() {
        return Err("degree centrality of a single node should be undefined".into());
    }
    let params = PageRankParams::default();
    let pr = pagerank(&g, &params).map_err(|e| e.to_string())?;
    close(
        "pagerank",
        adj,
        &pr,
        &oracle_pagerank(adj, params.damping),
        1e-6,
    )
}

pub const CENSUS: [usize; 8] = [1, 1, 2, 6, 21, 112, 853, 11117];

/// `G(n, p)` with `n ≤ 12`.
pub fn random_graphs(count: usize, seed: u64) -> Vec<Adj> {
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    (0..count)
        .map(|_| {
            let n = rng.random_range(1..=12usize);
            let p = rng.random_range(0.05..0.9);
            let mut adj: Adj = vec![0; n];
            for u in 0..n {
                for v in u + 1..n {
                    if rng.random_bool(p) {
                        adj[u] |= 1 << v;
                        adj[v] |= 1 << u;
                    }
                }
            }
            adj
        })
        .collect()
}

/// Census, every connected graph up to 8 nodes and 200 random graphs.
/// Returns the number of graphs checked.
pub fn full_suite() -> Result<usize, String> {
    let levels = connected_graphs(8);
    let counts: Vec<usize> = levels.iter().map(Vec::len).collect();
    if counts != CENSUS {
        return Err(format!("graph census {counts:?}"));
    }
    let random = random_graphs(200, 0x6A);
    for adj in levels.iter().flatten().chain(&random) {
        check(adj)?;
    }
    Ok(counts.iter().sum::<usize>() + random.len())
}
