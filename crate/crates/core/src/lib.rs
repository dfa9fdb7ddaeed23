//! Graph-based hybrid recommender core.
//!
//! The pipeline connects users whose ratings agree on enough items, reads six
//! centrality features off that graph, one-hot encodes them together with
//! demographic side information, compresses the result with a small ReLU
//! autoencoder and clusters the codes with k-means. Ratings are predicted from
//! per-cluster item averages with a genre-similarity fallback, which also
//! covers users who have no ratings at all.
//!
//! The crate is `no_std` and only needs `alloc`. File formats, dataset
//! loaders and the command line live in the `ghrs` crate. Enabling the
//! `parallel` feature fans the per-source shortest-path passes out over rayon
//! with a fixed reduction order, so results do not depend on thread count.

#![no_std]

extern crate alloc;

#[cfg(feature = "std")]
extern crate std;

pub mod autoencoder;
pub mod centrality;
pub mod error;
pub mod evaluation;
pub mod features;
pub mod fingerprint;
pub mod kmeans;
pub mod matrix;
pub mod metrics;
pub mod pipeline;
pub mod ratings;
pub mod recommender;
pub mod similarity;

pub use error::{Error, Result};
pub use ratings::{Dataset, Gender, ItemProfile, RatingRecord, RatingTable, UserProfile};
pub use similarity::{SimilarityGraph, SimilarityParams};

/// Seeded generator for one named random stream of a run.
///
/// Every randomized step draws from its own stream so that changing one
/// step's consumption does not shift the others.
pub fn seeded_rng(seed: u64, stream: u64) -> rand_chacha::ChaCha8Rng {
    use rand::SeedableRng;
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

pub(crate) use seeded_rng as rng;
