//! MovieLens loaders, artifact formats, run configuration and the staged
//! command-line pipeline around `ghrs-core`.

pub mod config;
pub mod formats;
pub mod movielens;
pub mod stages;
