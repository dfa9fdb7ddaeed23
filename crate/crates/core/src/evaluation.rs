//! Cross-validation, parameter sweeps and the cold-start experiment.

use alloc::string::{String, ToString};
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::autoencoder::{EpochLoss, OptimizerKind, OptimizerSpec};
use crate::kmeans::Selection;
use crate::metrics::{self, Confusion, Scored};
use crate::pipeline::{ArtifactHashes, FittedPipeline, PipelineConfig};
use crate::ratings::{self, Dataset, RatingTable};
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FoldMetrics {
    pub fold: usize,
    pub n_train: usize,
    pub n_test: usize,
    pub k: usize,
    pub rmse: f64,
    pub sse: f64,
    /// Global training mean predicted for every test rating.
    pub baseline_rmse: f64,
    pub confusion: Confusion,
    pub macro_precision: Option<f64>,
    pub macro_recall: Option<f64>,
    pub hashes: ArtifactHashes,
}

/// Everything one fold produced.
#[derive(Debug, Clone, PartialEq)]
pub struct FoldOutcome {
    pub metrics: FoldMetrics,
    pub scored: Vec<Scored>,
    pub selection: Option<Selection>,
    pub history: Vec<EpochLoss>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricReport {
    pub config_fingerprint: String,
    pub alpha: f64,
    pub delta: u8,
    pub optimizer: String,
    pub seed: u64,
    pub n_folds: usize,
    /// Mean of the per-fold RMSE.
    pub rmse: f64,
    /// Sample variance of the per-fold RMSE.
    pub rmse_variance: f64,
    /// RMSE over the pooled residuals of every fold.
    pub pooled_rmse: f64,
    pub baseline_rmse: f64,
    /// Pooled over every test rating.
    pub precision: Option<f64>,
    pub recall: Option<f64>,
    /// Means of the per-fold per-user averages.
    pub macro_precision: Option<f64>,
    pub macro_recall: Option<f64>,
    pub folds: Vec<FoldMetrics>,
}

/// Predicts every test rating with a fitted pipeline.
pub fn score(pipeline: &FittedPipeline, test: &RatingTable) -> Result<Vec<Scored>> {
    test.iter()
        .map(|r| {
            Ok(Scored {
                user_id: r.user_id,
                item_id: r.item_id,
                actual: f64::from(r.rating),
                predicted: pipeline.predict(r.user_id, r.item_id)?,
            })
        })
        .collect()
}

fn pairs(scored: &[Scored]) -> Vec<(f64, f64)> {
    scored.iter().map(|s| (s.actual, s.predicted)).collect()
}

/// RMSE of predicting the training mean for every test rating.
pub fn global_mean_rmse(train: &RatingTable, test: &RatingTable) -> Result<f64> {
    let mean = train
        .mean()
        .ok_or(Error::Empty("baseline needs training ratings"))?;
    let p: Vec<(f64, f64)> = test.iter().map(|r| (f64::from(r.rating), mean)).collect();
    metrics::rmse(&p)
}

/// Fits on `train` and scores `test`.
pub fn run_fold(
    dataset: &Dataset,
    train: &RatingTable,
    test: &RatingTable,
    fold: usize,
    config: &PipelineConfig,
) -> Result<FoldOutcome> {
    let pipeline = FittedPipeline::fit(train, &dataset.users, &dataset.items, config)?;
    let scored = score(&pipeline, test)?;
    let p = pairs(&scored);
    let (macro_precision, macro_recall) =
        metrics::macro_precision_recall(&scored, &config.thresholds);
    let metrics = FoldMetrics {
        fold,
        n_train: train.len(),
        n_test: test.len(),
        k: pipeline.k(),
        rmse: metrics::rmse(&p)?,
        sse: metrics::sum_squared_error(&p),
        baseline_rmse: global_mean_rmse(train, test)?,
        confusion: metrics::confusion(&p, &config.thresholds),
        macro_precision,
        macro_recall,
        hashes: pipeline.hashes(),
    };
    Ok(FoldOutcome {
        metrics,
        scored,
        selection: pipeline.selection.clone(),
        history: pipeline.autoencoder.history.clone(),
    })
}

fn mean_defined(xs: impl Iterator<Item = Option<f64>>) -> Option<f64> {
    let v: Vec<f64> = xs.flatten().collect();
    (!v.is_empty()).then(|| v.iter().sum::<f64>() / v.len() as f64)
}

pub fn aggregate(config: &PipelineConfig, folds: &[FoldMetrics]) -> Result<MetricReport> {
    if folds.is_empty() {
        return Err(Error::Empty("no folds to aggregate"));
    }
    let rmses: Vec<f64> = folds.iter().map(|f| f.rmse).collect();
    let (rmse, rmse_variance) = metrics::mean_and_variance(&rmses);
    let n: usize = folds.iter().map(|f| f.n_test).sum();
    let sse: f64 = folds.iter().map(|f| f.sse).sum();
    let mut pooled = Confusion::default();
    for f in folds {
        pooled.add(&f.confusion);
    }
    let baseline: Vec<f64> = folds.iter().map(|f| f.baseline_rmse).collect();
    Ok(MetricReport {
        config_fingerprint: config.fingerprint(),
        alpha: config.similarity.alpha,
        delta: config.similarity.delta,
        optimizer: config.optimizer.kind.name().to_string(),
        seed: config.seed,
        n_folds: folds.len(),
        rmse,
        rmse_variance,
        pooled_rmse: libm::sqrt(sse / n as f64),
        baseline_rmse: metrics::mean_and_variance(&baseline).0,
        precision: pooled.precision(),
        recall: pooled.recall(),
        macro_precision: mean_defined(folds.iter().map(|f| f.macro_precision)),
        macro_recall: mean_defined(folds.iter().map(|f| f.macro_recall)),
        folds: folds.to_vec(),
    })
}

/// Runs `n` independent jobs and returns their results in job order.
fn run_jobs<T: Send>(n: usize, job: impl Fn(usize) -> Result<T> + Sync + Send) -> Result<Vec<T>> {
    #[cfg(feature = "parallel")]
    {
        use rayon::prelude::*;
        (0..n).into_par_iter().map(job).collect()
    }
    #[cfg(not(feature = "parallel"))]
    {
        (0..n).map(job).collect()
    }
}

/// `n_folds`-fold CV; every stage is refit on each training fold.
pub fn cross_validate(
    dataset: &Dataset,
    n_folds: usize,
    config: &PipelineConfig,
) -> Result<(MetricReport, Vec<FoldOutcome>)> {
    config.validate()?;
    let plan = ratings::kfold_split(&dataset.ratings, n_folds, config.seed)?;
    let outcomes = run_jobs(n_folds, |k| {
        let (train, test) = plan.split(&dataset.ratings, k)?;
        run_fold(dataset, &train, &test, k, config)
    })?;
    let folds: Vec<FoldMetrics> = outcomes.iter().map(|o| o.metrics.clone()).collect();
    Ok((aggregate(config, &folds)?, outcomes))
}

/// One cross-validation per `alpha`, everything else fixed.
pub fn alpha_sweep(
    dataset: &Dataset,
    alphas: &[f64],
    n_folds: usize,
    config: &PipelineConfig,
) -> Result<Vec<MetricReport>> {
    run_jobs(alphas.len(), |i| {
        let mut c = config.clone();
        c.similarity.alpha = alphas[i];
        Ok(cross_validate(dataset, n_folds, &c)?.0)
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OptimizerRun {
    pub kind: OptimizerKind,
    pub history: Vec<EpochLoss>,
    pub final_train_loss: f64,
    pub final_val_loss: Option<f64>,
    pub rmse: f64,
}

/// Fits the pipeline on the first fold once per optimizer, each with its
/// default hyperparameters, and scores it on that fold's test set.
pub fn optimizer_sweep(
    dataset: &Dataset,
    kinds: &[OptimizerKind],
    n_folds: usize,
    config: &PipelineConfig,
) -> Result<Vec<OptimizerRun>> {
    let plan = ratings::kfold_split(&dataset.ratings, n_folds, config.seed)?;
    let (train, test) = plan.split(&dataset.ratings, 0)?;
    run_jobs(kinds.len(), |i| {
        let c = PipelineConfig {
            optimizer: OptimizerSpec::new(kinds[i]),
            ..config.clone()
        };
        let outcome = run_fold(dataset, &train, &test, 0, &c)?;
        let last = outcome
            .history
            .last()
            .copied()
            .ok_or(Error::Empty("autoencoder ran no epochs"))?;
        Ok(OptimizerRun {
            kind: kinds[i],
            final_train_loss: last.train_loss,
            final_val_loss: last.val_loss,
            rmse: outcome.metrics.rmse,
            history: outcome.history,
        })
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ColdStartPoint {
    pub fraction: f64,
    pub n_held_users: usize,
    pub n_test: usize,
    pub rmse: f64,
    pub baseline_rmse: f64,
    pub precision: Option<f64>,
    pub recall: Option<f64>,
}

/// Hides every rating of a fraction of the users, fits on the rest and
/// scores the hidden users through their profiles alone.
pub fn cold_start_experiment(
    dataset: &Dataset,
    fractions: &[f64],
    config: &PipelineConfig,
) -> Result<Vec<ColdStartPoint>> {
    config.validate()?;
    if let Some(f) = fractions.iter().find(|f| !(**f > 0.0 && **f < 1.0)) {
        return Err(Error::invalid(alloc::format!(
            "cold-start fraction {f} outside (0,1)"
        )));
    }
    let users: Vec<u32> = dataset.users.iter().map(|u| u.user_id).collect();
    run_jobs(fractions.len(), |i| {
        let split = ratings::coldstart_mask(&dataset.ratings, &users, fractions[i], config.seed)?;
        if split.test.is_empty() {
            return Err(Error::Empty("cold-start fraction holds out no ratings"));
        }
        let pipeline = FittedPipeline::fit(&split.train, &dataset.users, &dataset.items, config)?;
        let scored = score(&pipeline, &split.test)?;
        let p = pairs(&scored);
        let (precision, recall) = metrics::precision_recall(&p, &config.thresholds);
        Ok(ColdStartPoint {
            fraction: fractions[i],
            n_held_users: split.held_users.len(),
            n_test: split.test.len(),
            rmse: metrics::rmse(&p)?,
            baseline_rmse: global_mean_rmse(&split.train, &split.test)?,
            precision,
            recall,
        })
    })
}
