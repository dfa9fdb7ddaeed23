//! Pipeline stages. Each reads its inputs from the output directory, writes
//! its artifacts there and appends a line to `manifest.tsv`.

use std::path::{Path, PathBuf};
use std::time::Instant;

use ghrs_core::autoencoder::{self, AutoencoderConfig, OptimizerKind};
use ghrs_core::centrality;
use ghrs_core::evaluation;
use ghrs_core::features;
use ghrs_core::fingerprint::digest;
use ghrs_core::kmeans;
use ghrs_core::pipeline::{FittedPipeline, KSelection, PipelineConfig};
use ghrs_core::similarity;
use ghrs_core::{Dataset, RatingTable};

use crate::config::{RunConfig, SelectionMode};
use crate::formats::{self, ClusterArtifact};
use crate::movielens;

pub const GRAPH: &str = "graph.edges";
pub const GRAPH_STATS: &str = "graph_stats.txt";
pub const GRAPH_FEATURES: &str = "graph_features.csv";
pub const SCHEME: &str = "scheme.toml";
pub const FEATURES: &str = "features.csv";
pub const CHECKPOINT: &str = "autoencoder.json";
pub const LOSS: &str = "loss.csv";
pub const CODES: &str = "codes.csv";
pub const INERTIA: &str = "inertia.csv";
pub const SILHOUETTE: &str = "silhouette.csv";
pub const CLUSTERS: &str = "clusters.json";
pub const REPORT_CSV: &str = "report.csv";
pub const REPORT_TXT: &str = "report.txt";
pub const PREDICTIONS: &str = "predictions.csv";
pub const TOP_N: &str = "topn.csv";
pub const COLDSTART: &str = "coldstart.csv";
pub const ALPHA_SWEEP: &str = "alpha_sweep.csv";
pub const OPTIMIZER_LOSS: &str = "optimizer_loss.csv";
pub const OPTIMIZER_SUMMARY: &str = "optimizer_summary.csv";
pub const MANIFEST: &str = "manifest.tsv";

#[derive(Debug, thiserror::Error)]
pub enum StageError {
    #[error("missing {path}; run `ghrs {command}` first")]
    MissingInput {
        path: PathBuf,
        command: &'static str,
    },
    #[error(transparent)]
    Format(#[from] formats::FormatError),
    #[error(transparent)]
    Load(#[from] movielens::LoadError),
    #[error(transparent)]
    Config(#[from] crate::config::ConfigError),
    #[error(transparent)]
    Core(#[from] ghrs_core::Error),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
}

pub type Result<T> = std::result::Result<T, StageError>;

/// Loaded configuration plus the output directory it writes to.
pub struct Stages {
    pub config: RunConfig,
    pub out: PathBuf,
}

struct Run<'a> {
    stages: &'a Stages,
    name: &'static str,
    start: Instant,
    inputs: Vec<(String, String)>,
}

fn file_hash(path: &Path) -> Result<String> {
    let bytes = std::fs::read(path).map_err(|source| StageError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    Ok(digest("file", &bytes))
}

impl Run<'_> {
    fn input(&mut self, file: &str, command: &'static str) -> Result<PathBuf> {
        let path = self.stages.out.join(file);
        if !path.exists() {
            return Err(StageError::MissingInput { path, command });
        }
        self.inputs.push((file.to_string(), file_hash(&path)?));
        Ok(path)
    }

    fn dataset(&mut self) -> Result<Dataset> {
        let d = &self.stages.config.dataset;
        let data = movielens::load(&d.path, d.variant)?;
        self.inputs
            .push(("dataset".to_string(), dataset_hash(&data.ratings)));
        Ok(data)
    }

    fn finish(self, outputs: &[&str]) -> Result<()> {
        let mut outs = Vec::new();
        for o in outputs {
            outs.push(format!(
                "{o}:{}",
                &file_hash(&self.stages.out.join(o))?[..16]
            ));
        }
        let ins: Vec<String> = self
            .inputs
            .iter()
            .map(|(n, h)| format!("{n}:{}", &h[..16]))
            .collect();
        let line = format!(
            "stage={}\tconfig={}\tinputs={}\toutputs={}\twall_ms={}",
            self.name,
            &self.stages.config.fingerprint()[..16],
            ins.join(","),
            outs.join(","),
            self.start.elapsed().as_millis()
        );
        formats::append_line(&self.stages.out.join(MANIFEST), &line)?;
        Ok(())
    }
}

pub fn dataset_hash(r: &RatingTable) -> String {
    let mut f = ghrs_core::fingerprint::Fingerprinter::new("ratings");
    for rec in r.iter() {
        f.u64(u64::from(rec.user_id))
            .u64(u64::from(rec.item_id))
            .u64(u64::from(rec.rating))
            .u64(rec.timestamp as u64);
    }
    f.finish()
}

impl Stages {
    pub fn new(config: RunConfig, out: PathBuf) -> Result<Self> {
        config.validate()?;
        std::fs::create_dir_all(&out).map_err(|source| StageError::Io {
            path: out.clone(),
            source,
        })?;
        Ok(Stages { config, out })
    }

    fn run(&self, name: &'static str) -> Run<'_> {
        Run {
            stages: self,
            name,
            start: Instant::now(),
            inputs: Vec::new(),
        }
    }

    fn path(&self, file: &str) -> PathBuf {
        self.out.join(file)
    }

    fn pipeline(&self) -> PipelineConfig {
        self.config.pipeline()
    }

    /// Similarity graph over every user; returns a human-readable summary.
    pub fn graph(&self) -> Result<String> {
        let mut run = self.run("graph");
        let data = run.dataset()?;
        let p = self.pipeline();
        let users: Vec<u32> = data.users.iter().map(|u| u.user_id).collect();
        let g =
            similarity::build_graph_over(&data.ratings, &users, data.items.len(), &p.similarity)?;
        formats::write_edge_list(&self.path(GRAPH), &g, &p.similarity)?;
        let n = g.n_nodes();
        let isolated = (0..n).filter(|&v| g.degree(v) == 0).count();
        let mut stats = format!(
            "nodes: {n}\nedges: {}\ncomponents: {}\nisolated: {isolated}\nthreshold: {}\n",
            g.n_edges(),
            g.component_count(),
            p.similarity.threshold(data.items.len())
        );
        if g.n_edges() == 0 {
            stats.push_str("warning: the graph has no edges at this alpha\n");
        }
        formats::write_text(&self.path(GRAPH_STATS), &stats)?;
        run.finish(&[GRAPH, GRAPH_STATS])?;
        Ok(stats)
    }

    pub fn features(&self) -> Result<String> {
        let mut run = self.run("features");
        let graph_path = run.input(GRAPH, "graph")?;
        let data = run.dataset()?;
        let (g, _) = formats::read_edge_list(&graph_path)?;
        let p = self.pipeline();
        let gf = centrality::extract_all(&g, &p.centrality)?;
        let scheme = features::fit_scheme(&gf, &p.features)?;
        let ids: Vec<u32> = data.users.iter().map(|u| u.user_id).collect();
        let raw = features::encode_users(&scheme, &gf, &ids, &data.users)?;
        formats::write_graph_features(&self.path(GRAPH_FEATURES), &gf)?;
        formats::write_scheme(&self.path(SCHEME), &scheme)?;
        formats::write_features(&self.path(FEATURES), &raw)?;
        run.finish(&[GRAPH_FEATURES, SCHEME, FEATURES])?;
        Ok(format!(
            "users: {}\nwidth: {}\nsparsity: {:.4}\n",
            raw.user_ids.len(),
            raw.width(),
            raw.sparsity()
        ))
    }

    pub fn train_ae(&self) -> Result<String> {
        let mut run = self.run("train-ae");
        let path = run.input(FEATURES, "features")?;
        let (ids, _, x) = formats::read_matrix_csv(&path)?;
        let p = self.pipeline();
        let cfg = AutoencoderConfig {
            input_dim: x.cols(),
            ..p.autoencoder
        };
        let model = autoencoder::train(&cfg, &p.optimizer, &x)?;
        let codes = model.encode(&x)?;
        formats::write_checkpoint(&self.path(CHECKPOINT), &model)?;
        formats::write_losses(
            &self.path(LOSS),
            &[(p.optimizer.kind.name(), &model.history)],
        )?;
        formats::write_codes(&self.path(CODES), &ids, &codes)?;
        run.finish(&[CHECKPOINT, LOSS, CODES])?;
        let last = model.history.last().expect("at least one epoch");
        Ok(format!(
            "epochs: {}\ntrain loss: {:.6}\nvalidation loss: {}\n",
            last.epoch,
            last.train_loss,
            last.val_loss.map_or("-".into(), |v| format!("{v:.6}"))
        ))
    }

    pub fn cluster(&self) -> Result<String> {
        let mut run = self.run("cluster");
        let path = run.input(CODES, "train-ae")?;
        let (ids, _, codes) = formats::read_matrix_csv(&path)?;
        let c = &self.config.clustering;
        let p = self.pipeline();
        let k_max = c.k_max.min(codes.rows());
        let elbow =
            kmeans::elbow_select(&codes, c.k_min.max(1), k_max, self.config.seed, &p.kmeans)?;
        let sil =
            kmeans::silhouette_select(&codes, c.k_min.max(2), k_max, self.config.seed, &p.kmeans)?;
        formats::write_curve(&self.path(INERTIA), "inertia", &elbow.curve)?;
        formats::write_curve(&self.path(SILHOUETTE), "silhouette", &sil.curve)?;
        let (k, label) = match c.selection {
            SelectionMode::Elbow => (elbow.k_star, "elbow"),
            SelectionMode::Silhouette => (sil.k_star, "silhouette"),
            SelectionMode::Fixed => (c.k, "fixed"),
        };
        let model = kmeans::kmeans_fit(&codes, k, self.config.seed, &p.kmeans)?;
        formats::write_json(
            &self.path(CLUSTERS),
            &ClusterArtifact {
                selection: label.to_string(),
                user_ids: ids,
                model,
            },
        )?;
        run.finish(&[INERTIA, SILHOUETTE, CLUSTERS])?;
        let mut s = format!(
            "elbow k: {}\nsilhouette k: {}\nchosen k: {k} ({label})\n",
            elbow.k_star, sil.k_star
        );
        if elbow.degenerate {
            s.push_str("warning: the inertia curve has no interior knee\n");
        }
        Ok(s)
    }

    fn k_from_clusters(&self, run: &mut Run<'_>) -> Result<usize> {
        let path = run.input(CLUSTERS, "cluster")?;
        let art: ClusterArtifact = formats::read_json(&path)?;
        Ok(art.model.k)
    }

    /// Cross-validation with K taken from the cluster stage.
    pub fn evaluate(&self) -> Result<String> {
        let mut run = self.run("evaluate");
        let k = self.k_from_clusters(&mut run)?;
        let data = run.dataset()?;
        let p = PipelineConfig {
            k_selection: KSelection::Fixed { k },
            ..self.pipeline()
        };
        let (report, outcomes) =
            evaluation::cross_validate(&data, self.config.evaluation.folds, &p)?;
        let scored: Vec<_> = outcomes
            .iter()
            .flat_map(|o| o.scored.iter().copied())
            .collect();
        formats::write_predictions(&self.path(PREDICTIONS), &scored)?;
        formats::write_report_csv(&self.path(REPORT_CSV), &report)?;
        let summary = formats::report_summary(&report);
        formats::write_text(&self.path(REPORT_TXT), &summary)?;

        let full = FittedPipeline::fit(&data.ratings, &data.users, &data.items, &p)?;
        let mut lists = Vec::new();
        for u in &data.users {
            lists.push((
                u.user_id,
                full.recommend(u.user_id, &data.ratings, self.config.recommender.top_n)?,
            ));
        }
        formats::write_top_n(&self.path(TOP_N), &lists)?;
        run.finish(&[PREDICTIONS, REPORT_CSV, REPORT_TXT, TOP_N])?;
        Ok(summary)
    }

    pub fn coldstart(&self) -> Result<String> {
        let mut run = self.run("coldstart");
        let k = self.k_from_clusters(&mut run)?;
        let data = run.dataset()?;
        let p = PipelineConfig {
            k_selection: KSelection::Fixed { k },
            ..self.pipeline()
        };
        let points = evaluation::cold_start_experiment(
            &data,
            &self.config.evaluation.coldstart_fractions,
            &p,
        )?;
        formats::write_coldstart(&self.path(COLDSTART), &points)?;
        run.finish(&[COLDSTART])?;
        Ok(points
            .iter()
            .map(|pt| {
                format!(
                    "fraction {}: rmse {:.4} (global mean {:.4})\n",
                    pt.fraction, pt.rmse, pt.baseline_rmse
                )
            })
            .collect())
    }

    pub fn sweep_alpha(&self) -> Result<String> {
        let mut run = self.run("sweep-alpha");
        let data = run.dataset()?;
        let reports = evaluation::alpha_sweep(
            &data,
            &self.config.evaluation.alphas,
            self.config.evaluation.folds,
            &self.pipeline(),
        )?;
        formats::write_alpha_sweep(&self.path(ALPHA_SWEEP), &reports)?;
        run.finish(&[ALPHA_SWEEP])?;
        Ok(reports
            .iter()
            .map(|r| format!("alpha {}: rmse {:.4}\n", r.alpha, r.rmse))
            .collect())
    }

    pub fn sweep_optimizer(&self) -> Result<String> {
        let mut run = self.run("sweep-optimizer");
        let data = run.dataset()?;
        let runs = evaluation::optimizer_sweep(
            &data,
            &OptimizerKind::ALL,
            self.config.evaluation.folds,
            &self.pipeline(),
        )?;
        let histories: Vec<(&str, &[_])> = runs
            .iter()
            .map(|r| (r.kind.name(), r.history.as_slice()))
            .collect();
        formats::write_losses(&self.path(OPTIMIZER_LOSS), &histories)?;
        formats::write_optimizer_summary(&self.path(OPTIMIZER_SUMMARY), &runs)?;
        run.finish(&[OPTIMIZER_LOSS, OPTIMIZER_SUMMARY])?;
        Ok(runs
            .iter()
            .map(|r| {
                format!(
                    "{}: validation loss {}\n",
                    r.kind.name(),
                    r.final_val_loss.map_or("-".into(), |v| format!("{v:.6}"))
                )
            })
            .collect())
    }
}
