//! User similarity graph: two users are linked when they gave (nearly) the
//! same rating to at least `⌈α·m⌉` common items, `m` being the item count of
//! the dataset.

use alloc::collections::BTreeSet;
use alloc::vec;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::ratings::RatingTable;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SimilarityParams {
    /// Threshold as a fraction of the total item count.
    pub alpha: f64,
    /// Largest rating difference still counted as agreement.
    pub delta: u8,
}

impl Default for SimilarityParams {
    fn default() -> Self {
        SimilarityParams {
            alpha: 0.01,
            delta: 0,
        }
    }
}

impl SimilarityParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.alpha > 0.0) || !self.alpha.is_finite() {
            return Err(Error::invalid("alpha must be a positive finite fraction"));
        }
        if self.delta > 4 {
            return Err(Error::invalid("delta must lie in 0..=4"));
        }
        Ok(())
    }

    /// Minimum number of agreeing items for an edge, never below one.
    pub fn threshold(&self, n_items: usize) -> usize {
        // 1e-9 absorbs products such as 0.07 * 100 = 7.000000000000001
        let raw = libm::ceil(self.alpha * n_items as f64 - 1e-9);
        if raw < 1.0 {
            1
        } else {
            raw as usize
        }
    }
}

/// Number of items both users rated with `|r_u − r_v| ≤ delta`.
///
/// Both slices must be sorted by item id.
pub fn co_similar_count(a: &[(u32, u8)], b: &[(u32, u8)], delta: u8) -> usize {
    let (mut i, mut j, mut n) = (0, 0, 0);
    while i < a.len() && j < b.len() {
        match a[i].0.cmp(&b[j].0) {
            core::cmp::Ordering::Less => i += 1,
            core::cmp::Ordering::Greater => j += 1,
            core::cmp::Ordering::Equal => {
                if a[i].1.abs_diff(b[j].1) <= delta {
                    n += 1;
                }
                i += 1;
                j += 1;
            }
        }
    }
    n
}

/// Undirected, unweighted simple graph in compressed adjacency form.
///
/// Node `k` stands for the `k`-th smallest user id; neighbor lists are sorted.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SimilarityGraph {
    offsets: Vec<usize>,
    neighbors: Vec<u32>,
    user_ids: Vec<u32>,
}

impl SimilarityGraph {
    /// Graph on `n` nodes labelled `0..n` (used as user ids) from an edge list.
    ///
    /// Self-loops and duplicate edges are dropped.
    pub fn from_edges(n: usize, edges: &[(usize, usize)]) -> Result<Self> {
        Self::from_edges_with_ids((0..n as u32).collect(), edges)
    }

    pub fn from_edges_with_ids(user_ids: Vec<u32>, edges: &[(usize, usize)]) -> Result<Self> {
        let n = user_ids.len();
        if user_ids.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::invalid("user ids must be strictly increasing"));
        }
        let mut adj: Vec<Vec<u32>> = vec![Vec::new(); n];
        for &(u, v) in edges {
            if u >= n || v >= n {
                return Err(Error::invalid(alloc::format!(
                    "edge ({u},{v}) outside 0..{n}"
                )));
            }
            if u != v {
                adj[u].push(v as u32);
                adj[v].push(u as u32);
            }
        }
        Ok(Self::from_adjacency(user_ids, adj))
    }

    fn from_adjacency(user_ids: Vec<u32>, mut adj: Vec<Vec<u32>>) -> Self {
        let mut offsets = Vec::with_capacity(adj.len() + 1);
        let mut neighbors = Vec::new();
        offsets.push(0);
        for list in &mut adj {
            list.sort_unstable();
            list.dedup();
            neighbors.extend_from_slice(list);
            offsets.push(neighbors.len());
        }
        SimilarityGraph {
            offsets,
            neighbors,
            user_ids,
        }
    }

    pub fn n_nodes(&self) -> usize {
        self.user_ids.len()
    }

    pub fn n_edges(&self) -> usize {
        self.neighbors.len() / 2
    }

    pub fn neighbors(&self, v: usize) -> &[u32] {
        &self.neighbors[self.offsets[v]..self.offsets[v + 1]]
    }

    pub fn degree(&self, v: usize) -> usize {
        self.offsets[v + 1] - self.offsets[v]
    }

    pub fn user_ids(&self) -> &[u32] {
        &self.user_ids
    }

    pub fn user_id(&self, v: usize) -> u32 {
        self.user_ids[v]
    }

    pub fn node_of(&self, user_id: u32) -> Option<usize> {
        self.user_ids.binary_search(&user_id).ok()
    }

    pub fn has_edge(&self, u: usize, v: usize) -> bool {
        self.neighbors(u).binary_search(&(v as u32)).is_ok()
    }

    /// Edges `(u, v)` with `u < v`, in lexicographic order.
    pub fn edges(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        (0..self.n_nodes()).flat_map(move |u| {
            self.neighbors(u)
                .iter()
                .filter(move |&&v| v as usize > u)
                .map(move |&v| (u, v as usize))
        })
    }

    /// Number of connected components, isolated nodes included.
    pub fn component_count(&self) -> usize {
        let n = self.n_nodes();
        let mut seen = vec![false; n];
        let mut stack = Vec::new();
        let mut count = 0;
        for s in 0..n {
            if seen[s] {
                continue;
            }
            count += 1;
            seen[s] = true;
            stack.push(s);
            while let Some(v) = stack.pop() {
                for &w in self.neighbors(v) {
                    if !seen[w as usize] {
                        seen[w as usize] = true;
                        stack.push(w as usize);
                    }
                }
            }
        }
        count
    }

    /// Same graph with nodes renumbered: old node `v` becomes `perm[v]`.
    pub fn permuted(&self, perm: &[usize]) -> Result<Self> {
        let n = self.n_nodes();
        if perm.len() != n {
            return Err(Error::ShapeMismatch {
                expected: n,
                actual: perm.len(),
            });
        }
        let edges: Vec<(usize, usize)> = self.edges().map(|(u, v)| (perm[u], perm[v])).collect();
        SimilarityGraph::from_edges(n, &edges)
    }
}

/// Builds the similarity graph over every user that appears in `ratings`.
pub fn build_graph(
    ratings: &RatingTable,
    n_items: usize,
    params: &SimilarityParams,
) -> Result<SimilarityGraph> {
    let users: Vec<u32> = ratings.user_ids().into_iter().collect();
    build_graph_over(ratings, &users, n_items, params)
}

/// Builds the similarity graph over the given user set; users without
/// ratings become isolated nodes, ratings of users outside the set are ignored.
///
/// Pairs are counted through an item index: for every item, users are
/// bucketed by rating value and each bucket pair within `delta` contributes
/// one agreement to every user pair it spans.
pub fn build_graph_over(
    ratings: &RatingTable,
    users: &[u32],
    n_items: usize,
    params: &SimilarityParams,
) -> Result<SimilarityGraph> {
    params.validate()?;
    if n_items == 0 {
        return Err(Error::invalid("similarity graph needs n_items > 0"));
    }
    let user_ids: Vec<u32> = users
        .iter()
        .copied()
        .collect::<BTreeSet<_>>()
        .into_iter()
        .collect();
    let n = user_ids.len();
    let threshold = params.threshold(n_items);

    // item -> rating value -> users; the last record wins on duplicates
    let mut per_item: alloc::collections::BTreeMap<u32, alloc::collections::BTreeMap<u32, u8>> =
        alloc::collections::BTreeMap::new();
    for r in ratings.iter() {
        if let Ok(node) = user_ids.binary_search(&r.user_id) {
            per_item
                .entry(r.item_id)
                .or_default()
                .insert(node as u32, r.rating);
        }
    }

    let mut counts = PairCounts::new(n);
    let mut buckets: [Vec<u32>; 5] = Default::default();
    for raters in per_item.values() {
        for b in &mut buckets {
            b.clear();
        }
        for (&node, &rating) in raters {
            buckets[(rating - 1) as usize].push(node);
        }
        for a in 0..5 {
            let hi = (a + params.delta as usize).min(4);
            for b in a..=hi {
                if a == b {
                    let bucket = &buckets[a];
                    for (k, &u) in bucket.iter().enumerate() {
                        for &v in &bucket[k + 1..] {
                            counts.bump(u as usize, v as usize);
                        }
                    }
                } else {
                    for &u in &buckets[a] {
                        for &v in &buckets[b] {
                            counts.bump(u as usize, v as usize);
                        }
                    }
                }
            }
        }
    }

    let mut adj: Vec<Vec<u32>> = vec![Vec::new(); n];
    for u in 0..n {
        for v in u + 1..n {
            if counts.get(u, v) as usize >= threshold {
                adj[u].push(v as u32);
                adj[v].push(u as u32);
            }
        }
    }
    Ok(SimilarityGraph::from_adjacency(user_ids, adj))
}

/// Upper-triangular pair counter.
struct PairCounts {
    n: usize,
    cells: Vec<u32>,
}

impl PairCounts {
    fn new(n: usize) -> Self {
        PairCounts {
            n,
            cells: vec![0; n * n.saturating_sub(1) / 2],
        }
    }

    fn index(&self, u: usize, v: usize) -> usize {
        let (i, j) = if u < v { (u, v) } else { (v, u) };
        i * (2 * self.n - i - 1) / 2 + (j - i - 1)
    }

    fn bump(&mut self, u: usize, v: usize) {
        let k = self.index(u, v);
        self.cells[k] += 1;
    }

    fn get(&self, u: usize, v: usize) -> u32 {
        self.cells[self.index(u, v)]
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ratings::RatingRecord;

    fn rec(user_id: u32, item_id: u32, rating: u8) -> RatingRecord {
        RatingRecord {
            user_id,
            item_id,
            rating,
            timestamp: 0,
        }
    }

    #[test]
    fn co_count_examples() {
        assert_eq!(co_similar_count(&[], &[(1, 5)], 0), 0);
        assert_eq!(co_similar_count(&[(1, 5), (2, 3)], &[(1, 5), (2, 1)], 0), 1);
        assert_eq!(co_similar_count(&[(1, 5), (2, 3)], &[(1, 5), (2, 1)], 2), 2);
        let same: Vec<(u32, u8)> = (1..=7).map(|i| (i, (i % 5) as u8 + 1)).collect();
        assert_eq!(co_similar_count(&same, &same, 0), 7);
    }

    #[test]
    fn threshold_rounding() {
        let p = SimilarityParams {
            alpha: 0.2,
            delta: 0,
        };
        assert_eq!(p.threshold(10), 2);
        let p = SimilarityParams {
            alpha: 0.07,
            delta: 0,
        };
        assert_eq!(p.threshold(100), 7);
        let p = SimilarityParams {
            alpha: 0.01,
            delta: 0,
        };
        assert_eq!(p.threshold(1682), 17);
        let p = SimilarityParams {
            alpha: 1e-9,
            delta: 0,
        };
        assert_eq!(p.threshold(10), 1);
    }

    #[test]
    fn three_user_fixture() {
        // (1,2) agree on three items, (1,3) and (2,3) on one; threshold ⌈0.2·10⌉ = 2
        let t = RatingTable::new(vec![
            rec(1, 1, 4),
            rec(1, 2, 3),
            rec(1, 3, 5),
            rec(2, 1, 4),
            rec(2, 2, 3),
            rec(2, 3, 5),
            rec(3, 1, 4),
            rec(3, 2, 1),
        ])
        .unwrap();
        let g = build_graph(
            &t,
            10,
            &SimilarityParams {
                alpha: 0.2,
                delta: 0,
            },
        )
        .unwrap();
        assert_eq!(g.n_nodes(), 3);
        assert_eq!(g.edges().collect::<Vec<_>>(), vec![(0, 1)]);
        assert_eq!(g.user_id(1), 2);
    }

    #[test]
    fn huge_alpha_is_edgeless() {
        let t = RatingTable::new(vec![rec(1, 1, 4), rec(2, 1, 4), rec(3, 1, 4)]).unwrap();
        let g = build_graph(
            &t,
            10,
            &SimilarityParams {
                alpha: 5.0,
                delta: 0,
            },
        )
        .unwrap();
        assert_eq!(g.n_nodes(), 3);
        assert_eq!(g.n_edges(), 0);
        assert_eq!(g.component_count(), 3);
    }

    #[test]
    fn invalid_params() {
        let t = RatingTable::default();
        assert!(build_graph(
            &t,
            10,
            &SimilarityParams {
                alpha: 0.0,
                delta: 0
            }
        )
        .is_err());
        assert!(build_graph(
            &t,
            10,
            &SimilarityParams {
                alpha: 0.1,
                delta: 5
            }
        )
        .is_err());
        assert!(build_graph(
            &t,
            0,
            &SimilarityParams {
                alpha: 0.1,
                delta: 0
            }
        )
        .is_err());
    }

    #[test]
    fn from_edges_dedups() {
        let g = SimilarityGraph::from_edges(3, &[(0, 1), (1, 0), (1, 1), (1, 2)]).unwrap();
        assert_eq!(g.n_edges(), 2);
        assert_eq!(g.neighbors(1), &[0, 2]);
        assert!(g.has_edge(2, 1));
        assert!(!g.has_edge(0, 2));
    }
}
