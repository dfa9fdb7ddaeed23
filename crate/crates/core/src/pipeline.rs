//! End-to-end fit on one training rating table.

use alloc::string::String;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::autoencoder::{self, AutoencoderConfig, AutoencoderModel, OptimizerKind, OptimizerSpec};
use crate::centrality::{self, CentralityOptions, GraphFeatureMatrix};
use crate::features::{self, CategorizationScheme, FeatureConfig, RawFeatureMatrix};
use crate::fingerprint::Fingerprinter;
use crate::kmeans::{self, ClusterModel, KMeansParams, Selection};
use crate::matrix::Matrix;
use crate::metrics::Thresholds;
use crate::ratings::{ItemProfile, RatingTable, UserProfile};
use crate::recommender::{
    self, ClusterItemMatrix, FallbackParams, ItemSimilarityIndex, UserClusterMatrix,
};
use crate::similarity::{self, SimilarityGraph, SimilarityParams};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "snake_case")]
pub enum KSelection {
    Fixed { k: usize },
    Elbow { k_min: usize, k_max: usize },
    Silhouette { k_min: usize, k_max: usize },
}

impl Default for KSelection {
    fn default() -> Self {
        KSelection::Elbow {
            k_min: 1,
            k_max: 30,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PipelineConfig {
    pub similarity: SimilarityParams,
    pub centrality: CentralityOptions,
    pub features: FeatureConfig,
    /// `input_dim` is replaced by the fitted scheme's width.
    pub autoencoder: AutoencoderConfig,
    pub optimizer: OptimizerSpec,
    pub k_selection: KSelection,
    pub kmeans: KMeansParams,
    pub fallback: FallbackParams,
    pub thresholds: Thresholds,
    pub seed: u64,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        PipelineConfig {
            similarity: SimilarityParams::default(),
            centrality: CentralityOptions::default(),
            features: FeatureConfig::default(),
            autoencoder: AutoencoderConfig::default(),
            optimizer: OptimizerSpec::new(OptimizerKind::Adam),
            k_selection: KSelection::default(),
            kmeans: KMeansParams::default(),
            fallback: FallbackParams::default(),
            thresholds: Thresholds::default(),
            seed: 0,
        }
    }
}

impl PipelineConfig {
    pub fn validate(&self) -> Result<()> {
        self.similarity.validate()?;
        self.features.validate()?;
        AutoencoderConfig {
            input_dim: 1,
            ..self.autoencoder.clone()
        }
        .validate()?;
        self.optimizer.validate()?;
        match self.k_selection {
            KSelection::Fixed { k } if k == 0 => {
                return Err(Error::invalid("fixed K must be at least 1"))
            }
            KSelection::Elbow { k_min, k_max } if k_min == 0 || k_max <= k_min => {
                return Err(Error::invalid("elbow range needs 1 ≤ k_min < k_max"))
            }
            KSelection::Silhouette { k_min, k_max } if k_max < k_min.max(2) => {
                return Err(Error::invalid(
                    "silhouette range needs k_max ≥ max(k_min, 2)",
                ))
            }
            _ => {}
        }
        if self.kmeans.n_init == 0 || self.kmeans.max_iter == 0 {
            return Err(Error::invalid("k-means needs n_init ≥ 1 and max_iter ≥ 1"));
        }
        if !(0.0..=1.0).contains(&self.fallback.similarity_threshold) {
            return Err(Error::invalid("similarity threshold must lie in [0,1]"));
        }
        Ok(())
    }

    pub fn fingerprint(&self) -> String {
        let mut f = Fingerprinter::new("pipeline-config");
        f.f64(self.similarity.alpha)
            .u64(u64::from(self.similarity.delta));
        f.f64(self.centrality.pagerank.damping)
            .f64(self.centrality.pagerank.tol)
            .u64(self.centrality.pagerank.max_iter as u64);
        f.u64(u64::from(self.centrality.normalized));
        match self.centrality.sampling {
            centrality::SourceSampling::Exact => f.u64(0),
            centrality::SourceSampling::Pivots { pivots, seed } => {
                f.u64(1).u64(pivots as u64).u64(seed)
            }
        };
        f.u64(self.features.bins as u64)
            .u32s(&self.features.age_edges)
            .str(&self.features.fallback_group);
        for g in &self.features.occupation_groups {
            f.str(&g.name).u64(g.members.len() as u64);
            for m in &g.members {
                f.str(m);
            }
        }
        f.u64(self.features.location as u64);
        let ae = &self.autoencoder;
        f.u64(ae.hidden as u64)
            .u64(ae.code as u64)
            .u64(ae.output_activation as u64)
            .f64(ae.l1)
            .f64(ae.l2);
        f.u64(ae.epochs as u64)
            .u64(ae.batch_size as u64)
            .f64(ae.validation_fraction);
        let o = &self.optimizer;
        f.str(o.kind.name())
            .f64(o.learning_rate)
            .f64(o.beta1)
            .f64(o.beta2)
            .f64(o.rho)
            .f64(o.epsilon)
            .f64(o.momentum);
        match self.k_selection {
            KSelection::Fixed { k } => f.u64(0).u64(k as u64),
            KSelection::Elbow { k_min, k_max } => f.u64(1).u64(k_min as u64).u64(k_max as u64),
            KSelection::Silhouette { k_min, k_max } => f.u64(2).u64(k_min as u64).u64(k_max as u64),
        };
        f.u64(self.kmeans.max_iter as u64)
            .f64(self.kmeans.tol)
            .u64(self.kmeans.n_init as u64);
        f.f64(self.fallback.similarity_threshold)
            .u64(u64::from(self.fallback.weighted));
        f.f64(self.thresholds.relevance)
            .f64(self.thresholds.selection)
            .u64(self.seed);
        f.finish()
    }
}

/// Digest of every fitted artifact, in pipeline order.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ArtifactHashes {
    pub graph: String,
    pub graph_features: String,
    pub scheme: String,
    pub autoencoder: String,
    pub clusters: String,
    pub cluster_items: String,
}

pub fn hash_graph(g: &SimilarityGraph) -> String {
    let mut f = Fingerprinter::new("graph");
    f.u32s(g.user_ids());
    for (u, v) in g.edges() {
        f.u64(u as u64).u64(v as u64);
    }
    f.finish()
}

pub fn hash_scheme(s: &CategorizationScheme) -> String {
    let mut f = Fingerprinter::new("scheme");
    for e in &s.graph_edges {
        f.f64s(e);
    }
    f.u32s(&s.age_edges)
        .u64(s.fallback_group as u64)
        .u64(s.location as u64);
    for (name, g) in &s.occupation_map {
        f.str(name).u64(*g as u64);
    }
    f.finish()
}

pub fn hash_autoencoder(m: &AutoencoderModel) -> String {
    let mut f = Fingerprinter::new("autoencoder");
    for l in &m.layers {
        f.matrix(&l.weights).f64s(&l.bias);
    }
    for h in &m.history {
        f.f64(h.train_loss).f64(h.val_loss.unwrap_or(f64::NAN));
    }
    f.finish()
}

pub fn hash_clusters(c: &ClusterModel) -> String {
    let mut f = Fingerprinter::new("clusters");
    f.matrix(&c.centroids).f64(c.inertia);
    for &a in &c.assignment {
        f.u64(a as u64);
    }
    f.finish()
}

pub fn hash_cluster_items(ci: &ClusterItemMatrix) -> String {
    let mut f = Fingerprinter::new("cluster-items");
    f.u32s(&ci.item_ids).matrix(&ci.values);
    for &s in &ci.sources {
        f.u64(s as u64);
    }
    f.finish()
}

/// Every stage fitted on one training table.
#[derive(Debug, Clone, PartialEq)]
pub struct FittedPipeline {
    pub config: PipelineConfig,
    /// Users with at least one training rating, ascending.
    pub known_users: Vec<u32>,
    pub graph: SimilarityGraph,
    pub graph_features: GraphFeatureMatrix,
    pub scheme: CategorizationScheme,
    pub features: RawFeatureMatrix,
    pub autoencoder: AutoencoderModel,
    pub codes: Matrix,
    pub selection: Option<Selection>,
    pub clusters: ClusterModel,
    pub membership: UserClusterMatrix,
    pub item_index: ItemSimilarityIndex,
    pub cluster_items: ClusterItemMatrix,
    pub global_mean: f64,
    profiles: Vec<UserProfile>,
}

pub fn choose_k(
    codes: &Matrix,
    selection: KSelection,
    seed: u64,
    params: &KMeansParams,
) -> Result<(usize, Option<Selection>)> {
    let cap = |k: usize| k.min(codes.rows());
    match selection {
        KSelection::Fixed { k } => Ok((k, None)),
        KSelection::Elbow { k_min, k_max } => {
            let s = kmeans::elbow_select(codes, k_min, cap(k_max).max(k_min + 1), seed, params)?;
            Ok((s.k_star, Some(s)))
        }
        KSelection::Silhouette { k_min, k_max } => {
            let s = kmeans::silhouette_select(codes, k_min, cap(k_max), seed, params)?;
            Ok((s.k_star, Some(s)))
        }
    }
}

impl FittedPipeline {
    /// Fits graph, features, autoencoder, clusters and cluster ratings on
    /// `train` only. `users` and `items` are side information and may cover
    /// users without training ratings.
    pub fn fit(
        train: &RatingTable,
        users: &[UserProfile],
        items: &[ItemProfile],
        config: &PipelineConfig,
    ) -> Result<Self> {
        config.validate()?;
        let global_mean = train
            .mean()
            .ok_or(Error::Empty("pipeline needs training ratings"))?;
        let known_users: Vec<u32> = train.user_ids().into_iter().collect();
        let graph =
            similarity::build_graph_over(train, &known_users, items.len(), &config.similarity)?;
        let graph_features = centrality::extract_all(&graph, &config.centrality)?;
        let scheme = features::fit_scheme(&graph_features, &config.features)?;
        let features = features::encode_users(&scheme, &graph_features, &known_users, users)?;

        let ae_config = AutoencoderConfig {
            input_dim: scheme.width(),
            seed: config.seed,
            ..config.autoencoder.clone()
        };
        let autoencoder = autoencoder::train(&ae_config, &config.optimizer, &features.values)?;
        let codes = autoencoder.encode(&features.values)?;

        let (k, selection) = choose_k(&codes, config.k_selection, config.seed, &config.kmeans)?;
        let clusters = kmeans::kmeans_fit(&codes, k, config.seed, &config.kmeans)?;
        let membership = UserClusterMatrix::new(k, &known_users, &clusters.assignment)?;
        let item_index = ItemSimilarityIndex::new(items)?;
        let cluster_items = recommender::build_cluster_item_matrix(
            train,
            &membership,
            &item_index,
            &config.fallback,
        )?;

        let mut profiles = users.to_vec();
        profiles.sort_by_key(|p| p.user_id);
        Ok(FittedPipeline {
            config: config.clone(),
            known_users,
            graph,
            graph_features,
            scheme,
            features,
            autoencoder,
            codes,
            selection,
            clusters,
            membership,
            item_index,
            cluster_items,
            global_mean,
            profiles,
        })
    }

    pub fn k(&self) -> usize {
        self.clusters.k
    }

    fn profile(&self, user_id: u32) -> Result<&UserProfile> {
        self.profiles
            .binary_search_by_key(&user_id, |p| p.user_id)
            .map(|i| &self.profiles[i])
            .map_err(|_| Error::UnknownUser(user_id))
    }

    /// Cluster of a training user, or the encoded-profile cluster of anyone else.
    pub fn cluster_of(&self, user_id: u32) -> Result<usize> {
        match self.membership.cluster_of(user_id) {
            Some(c) => Ok(c),
            None => recommender::assign_new_user(
                self.profile(user_id)?,
                &self.scheme,
                &self.autoencoder,
                &self.clusters,
            ),
        }
    }

    /// Predicted rating clamped to `[1, 5]`.
    pub fn predict(&self, user_id: u32, item_id: u32) -> Result<f64> {
        let c = self.cluster_of(user_id)?;
        Ok(self.cluster_items.get(c, item_id)?.clamp(1.0, 5.0))
    }

    /// Best `n` items the user has not rated in `train`.
    pub fn recommend(
        &self,
        user_id: u32,
        train: &RatingTable,
        n: usize,
    ) -> Result<Vec<(u32, f64)>> {
        let c = self.cluster_of(user_id)?;
        let rated = train
            .iter()
            .filter(|r| r.user_id == user_id)
            .map(|r| r.item_id)
            .collect();
        recommender::recommend_top_n(
            self.cluster_items.values.row(c),
            &self.cluster_items.item_ids,
            &rated,
            n,
        )
    }

    pub fn hashes(&self) -> ArtifactHashes {
        let mut gf = Fingerprinter::new("graph-features");
        gf.u32s(&self.graph_features.user_ids)
            .matrix(&self.graph_features.values);
        ArtifactHashes {
            graph: hash_graph(&self.graph),
            graph_features: gf.finish(),
            scheme: hash_scheme(&self.scheme),
            autoencoder: hash_autoencoder(&self.autoencoder),
            clusters: hash_clusters(&self.clusters),
            cluster_items: hash_cluster_items(&self.cluster_items),
        }
    }
}
