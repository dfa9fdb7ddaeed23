//! TOML run configuration. Every section is optional and falls back to the
//! defaults shown by `ghrs print-config`; unknown keys are rejected.

use std::path::{Path, PathBuf};

use ghrs_core::autoencoder::{AutoencoderConfig, OptimizerKind, OptimizerSpec, OutputActivation};
use ghrs_core::centrality::{CentralityOptions, PageRankParams, SourceSampling};
use ghrs_core::features::{FeatureConfig, LocationMode};
use ghrs_core::kmeans::KMeansParams;
use ghrs_core::metrics::Thresholds;
use ghrs_core::pipeline::{KSelection, PipelineConfig};
use ghrs_core::recommender::FallbackParams;
use ghrs_core::SimilarityParams;
use serde::{Deserialize, Serialize};

use crate::movielens::Variant;

#[derive(Debug, thiserror::Error)]
pub enum ConfigError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("{path}: {source}")]
    Toml {
        path: PathBuf,
        source: toml::de::Error,
    },
    #[error("invalid config: {0}")]
    Invalid(String),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DatasetSection {
    pub path: PathBuf,
    pub variant: Variant,
}

impl Default for DatasetSection {
    fn default() -> Self {
        DatasetSection {
            path: PathBuf::from("data/ml-100k"),
            variant: Variant::Ml100k,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SimilaritySection {
    pub alpha: f64,
    pub delta: u8,
}

impl Default for SimilaritySection {
    fn default() -> Self {
        let p = SimilarityParams::default();
        SimilaritySection {
            alpha: p.alpha,
            delta: p.delta,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CentralitySection {
    pub damping: f64,
    pub pagerank_tol: f64,
    pub pagerank_max_iter: usize,
    pub normalized: bool,
    /// Sampled shortest-path sources for betweenness and load; 0 = all nodes.
    pub pivots: usize,
}

impl Default for CentralitySection {
    fn default() -> Self {
        let p = PageRankParams::default();
        CentralitySection {
            damping: p.damping,
            pagerank_tol: p.tol,
            pagerank_max_iter: p.max_iter,
            normalized: true,
            pivots: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FeaturesSection {
    pub bins: usize,
    pub location: LocationMode,
}

impl Default for FeaturesSection {
    fn default() -> Self {
        FeaturesSection {
            bins: 3,
            location: LocationMode::KnownUnknown,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AutoencoderSection {
    pub hidden: usize,
    pub code: usize,
    pub output_activation: OutputActivation,
    pub l1: f64,
    pub l2: f64,
    pub epochs: usize,
    pub batch_size: usize,
    pub validation_fraction: f64,
}

impl Default for AutoencoderSection {
    fn default() -> Self {
        let a = AutoencoderConfig::default();
        AutoencoderSection {
            hidden: a.hidden,
            code: a.code,
            output_activation: a.output_activation,
            l1: a.l1,
            l2: a.l2,
            epochs: a.epochs,
            batch_size: a.batch_size,
            validation_fraction: a.validation_fraction,
        }
    }
}

/// Unset hyperparameters take the optimizer's own defaults.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OptimizerSection {
    pub kind: OptimizerKind,
    pub learning_rate: Option<f64>,
    pub beta1: Option<f64>,
    pub beta2: Option<f64>,
    pub rho: Option<f64>,
    pub epsilon: Option<f64>,
    pub momentum: Option<f64>,
}

impl Default for OptimizerSection {
    fn default() -> Self {
        OptimizerSection {
            kind: OptimizerKind::Adam,
            learning_rate: None,
            beta1: None,
            beta2: None,
            rho: None,
            epsilon: None,
            momentum: None,
        }
    }
}

impl OptimizerSection {
    pub fn spec(&self) -> OptimizerSpec {
        let d = OptimizerSpec::new(self.kind);
        OptimizerSpec {
            kind: self.kind,
            learning_rate: self.learning_rate.unwrap_or(d.learning_rate),
            beta1: self.beta1.unwrap_or(d.beta1),
            beta2: self.beta2.unwrap_or(d.beta2),
            rho: self.rho.unwrap_or(d.rho),
            epsilon: self.epsilon.unwrap_or(d.epsilon),
            momentum: self.momentum.unwrap_or(d.momentum),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SelectionMode {
    Elbow,
    Silhouette,
    Fixed,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ClusteringSection {
    pub selection: SelectionMode,
    /// Used when `selection = "fixed"`.
    pub k: usize,
    pub k_min: usize,
    pub k_max: usize,
    pub n_init: usize,
    pub max_iter: usize,
    pub tol: f64,
}

impl Default for ClusteringSection {
    fn default() -> Self {
        let p = KMeansParams::default();
        ClusteringSection {
            selection: SelectionMode::Elbow,
            k: 8,
            k_min: 1,
            k_max: 30,
            n_init: p.n_init,
            max_iter: p.max_iter,
            tol: p.tol,
        }
    }
}

impl ClusteringSection {
    pub fn k_selection(&self) -> KSelection {
        match self.selection {
            SelectionMode::Elbow => KSelection::Elbow {
                k_min: self.k_min,
                k_max: self.k_max,
            },
            SelectionMode::Silhouette => KSelection::Silhouette {
                k_min: self.k_min.max(2),
                k_max: self.k_max,
            },
            SelectionMode::Fixed => KSelection::Fixed { k: self.k },
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RecommenderSection {
    pub similarity_threshold: f64,
    pub weighted: bool,
    pub top_n: usize,
}

impl Default for RecommenderSection {
    fn default() -> Self {
        let f = FallbackParams::default();
        RecommenderSection {
            similarity_threshold: f.similarity_threshold,
            weighted: f.weighted,
            top_n: 10,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EvaluationSection {
    pub folds: usize,
    pub relevance_threshold: f64,
    pub selection_threshold: f64,
    pub alphas: Vec<f64>,
    pub coldstart_fractions: Vec<f64>,
}

impl Default for EvaluationSection {
    fn default() -> Self {
        let t = Thresholds::default();
        EvaluationSection {
            folds: 5,
            relevance_threshold: t.relevance,
            selection_threshold: t.selection,
            alphas: vec![0.005, 0.0075, 0.01, 0.015, 0.02, 0.03],
            coldstart_fractions: vec![0.05, 0.1, 0.2, 0.3],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OutputSection {
    pub dir: PathBuf,
}

impl Default for OutputSection {
    fn default() -> Self {
        OutputSection {
            dir: PathBuf::from("out"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub seed: u64,
    pub dataset: DatasetSection,
    pub similarity: SimilaritySection,
    pub centrality: CentralitySection,
    pub features: FeaturesSection,
    pub autoencoder: AutoencoderSection,
    pub optimizer: OptimizerSection,
    pub clustering: ClusteringSection,
    pub recommender: RecommenderSection,
    pub evaluation: EvaluationSection,
    pub output: OutputSection,
}

impl RunConfig {
    pub fn from_toml(text: &str) -> Result<Self, toml::de::Error> {
        toml::from_str(text)
    }

    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        let cfg = Self::from_toml(&text).map_err(|source| ConfigError::Toml {
            path: path.to_path_buf(),
            source,
        })?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("run config always serializes")
    }

    pub fn feature_config(&self) -> FeatureConfig {
        let base = match self.dataset.variant {
            Variant::Ml100k => FeatureConfig::movielens_100k(),
            Variant::Ml1m => FeatureConfig::movielens_1m(),
        };
        FeatureConfig {
            bins: self.features.bins,
            location: self.features.location,
            ..base
        }
    }

    pub fn pipeline(&self) -> PipelineConfig {
        let c = &self.centrality;
        let a = &self.autoencoder;
        let k = &self.clustering;
        PipelineConfig {
            similarity: SimilarityParams {
                alpha: self.similarity.alpha,
                delta: self.similarity.delta,
            },
            centrality: CentralityOptions {
                pagerank: PageRankParams {
                    damping: c.damping,
                    tol: c.pagerank_tol,
                    max_iter: c.pagerank_max_iter,
                },
                normalized: c.normalized,
                sampling: if c.pivots == 0 {
                    SourceSampling::Exact
                } else {
                    SourceSampling::Pivots {
                        pivots: c.pivots,
                        seed: self.seed,
                    }
                },
            },
            features: self.feature_config(),
            autoencoder: AutoencoderConfig {
                // replaced by the fitted scheme's width
                input_dim: 0,
                hidden: a.hidden,
                code: a.code,
                output_activation: a.output_activation,
                l1: a.l1,
                l2: a.l2,
                epochs: a.epochs,
                batch_size: a.batch_size,
                validation_fraction: a.validation_fraction,
                seed: self.seed,
            },
            optimizer: self.optimizer.spec(),
            k_selection: k.k_selection(),
            kmeans: KMeansParams {
                max_iter: k.max_iter,
                tol: k.tol,
                n_init: k.n_init,
            },
            fallback: FallbackParams {
                similarity_threshold: self.recommender.similarity_threshold,
                weighted: self.recommender.weighted,
            },
            thresholds: Thresholds {
                relevance: self.evaluation.relevance_threshold,
                selection: self.evaluation.selection_threshold,
            },
            seed: self.seed,
        }
    }

    /// Checks every field before any work starts.
    pub fn validate(&self) -> Result<(), ConfigError> {
        let invalid = |m: String| Err(ConfigError::Invalid(m));
        self.pipeline()
            .validate()
            .map_err(|e| ConfigError::Invalid(e.to_string()))?;
        if self.evaluation.folds < 2 {
            return invalid("evaluation.folds must be at least 2".into());
        }
        if self.recommender.top_n == 0 {
            return invalid("recommender.top_n must be at least 1".into());
        }
        if self.autoencoder.epochs == 0 {
            return invalid("autoencoder.epochs must be at least 1".into());
        }
        if self.clustering.selection == SelectionMode::Fixed && self.clustering.k == 0 {
            return invalid("clustering.k must be at least 1".into());
        }
        if let Some(a) = self
            .evaluation
            .alphas
            .iter()
            .find(|a| !(**a > 0.0 && **a <= 1.0))
        {
            return invalid(format!("evaluation.alphas entry {a} outside (0,1]"));
        }
        if let Some(f) = self
            .evaluation
            .coldstart_fractions
            .iter()
            .find(|f| !(**f > 0.0 && **f < 1.0))
        {
            return invalid(format!(
                "evaluation.coldstart_fractions entry {f} outside (0,1)"
            ));
        }
        Ok(())
    }

    /// Digest of everything that affects results; the output directory does not.
    pub fn fingerprint(&self) -> String {
        let mut c = self.clone();
        c.output = OutputSection::default();
        ghrs_core::fingerprint::digest("run-config", c.to_toml().as_bytes())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_round_trip() {
        let c = RunConfig::default();
        assert_eq!(RunConfig::from_toml(&c.to_toml()).unwrap(), c);
        assert!(c.validate().is_ok());
        assert_eq!(RunConfig::from_toml("").unwrap(), c);
    }

    #[test]
    fn unknown_keys_rejected() {
        assert!(RunConfig::from_toml("colour = 1").is_err());
        assert!(RunConfig::from_toml("[similarity]\nalpah = 0.1").is_err());
        assert!(RunConfig::from_toml("[fancy]\nx = 1").is_err());
    }

    #[test]
    fn partial_override() {
        let c = RunConfig::from_toml("seed = 9\n[similarity]\nalpha = 0.005\n[dataset]\nvariant = \"1m\"\n[optimizer]\nkind = \"sgd\"").unwrap();
        assert_eq!(c.seed, 9);
        assert_eq!(c.similarity.delta, 0);
        assert_eq!(c.optimizer.spec().learning_rate, 0.01);
        assert_eq!(c.feature_config().occupation_groups.len(), 7);
        assert_eq!(c.pipeline().similarity.alpha, 0.005);
    }

    #[test]
    fn invalid_values_rejected() {
        for text in [
            "[similarity]\nalpha = 0.0",
            "[evaluation]\nfolds = 1",
            "[clustering]\nselection = \"fixed\"\nk = 0",
            "[optimizer]\nbeta1 = 1.5",
        ] {
            assert!(
                RunConfig::from_toml(text).unwrap().validate().is_err(),
                "{text}"
            );
        }
    }

    #[test]
    fn fingerprint_ignores_output_dir() {
        let a = RunConfig::default();
        let mut b = a.clone();
        b.output.dir = PathBuf::from("elsewhere");
        assert_eq!(a.fingerprint(), b.fingerprint());
        b.similarity.alpha = 0.02;
        assert_ne!(a.fingerprint(), b.fingerprint());
    }
}
