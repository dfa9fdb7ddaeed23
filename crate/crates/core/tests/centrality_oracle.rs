//! Every connected graph up to 8 nodes, up to isomorphism, plus random
//! graphs up to 12 nodes, checked against brute-force centralities.

#[path = "oracles/centrality.rs"]
mod oracle;

use ghrs_core::centrality::{betweenness_centrality, load_centrality};
use ghrs_core::SimilarityGraph;
use oracle::{check, connected_graphs, random_graphs, CENSUS};
use rand::{Rng, SeedableRng};

#[test]
fn graph_census_matches_known_counts() {
    let counts: Vec<usize> = connected_graphs(8).iter().map(Vec::len).collect();
    assert_eq!(counts, CENSUS);
}

#[test]
fn all_connected_graphs_up_to_eight_nodes() {
    for adj in connected_graphs(8).iter().flatten() {
        check(adj).unwrap();
    }
}

#[test]
fn random_graphs_up_to_twelve_nodes() {
    for adj in random_graphs(200, 0x6A) {
        check(&adj).unwrap();
    }
}

#[test]
fn relabelling_permutes_centralities() {
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(3);
    for _ in 0..50 {
        let n = rng.random_range(3..=10usize);
        let edges: Vec<(usize, usize)> = (0..n)
            .flat_map(|u| (u + 1..n).map(move |v| (u, v)))
            .filter(|_| rng.random_bool(0.4))
            .collect::<Vec<_>>();
        let g = SimilarityGraph::from_edges(n, &edges).unwrap();
        let mut perm: Vec<usize> = (0..n).collect();
        rand::seq::SliceRandom::shuffle(perm.as_mut_slice(), &mut rng);
        let h = g.permuted(&perm).unwrap();
        let (bg, bh) = (
            betweenness_centrality(&g, true),
            betweenness_centrality(&h, true),
        );
        let (lg, lh) = (load_centrality(&g, true), load_centrality(&h, true));
        for v in 0..n {
            assert!((bg[v] - bh[perm[v]]).abs() < 1e-12);
            assert!((lg[v] - lh[perm[v]]).abs() < 1e-12);
        }
    }
}
