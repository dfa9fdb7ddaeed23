//! On-disk artifact formats. Every writer is deterministic: floats use the
//! shortest round-trip representation and rows follow id order.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use ghrs_core::autoencoder::{AutoencoderModel, EpochLoss};
use ghrs_core::centrality::{GraphFeatureMatrix, FEATURE_NAMES};
use ghrs_core::evaluation::{ColdStartPoint, MetricReport, OptimizerRun};
use ghrs_core::features::{CategorizationScheme, RawFeatureMatrix};
use ghrs_core::kmeans::ClusterModel;
use ghrs_core::matrix::Matrix;
use ghrs_core::metrics::Scored;
use ghrs_core::{SimilarityGraph, SimilarityParams};
use serde::{Deserialize, Serialize};

#[derive(Debug, thiserror::Error)]
pub enum FormatError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("{path}:{line}: {msg}")]
    Parse {
        path: PathBuf,
        line: usize,
        msg: String,
    },
    #[error("{path}: {source}")]
    Csv { path: PathBuf, source: csv::Error },
    #[error("{path}: {msg}")]
    Serde { path: PathBuf, msg: String },
    #[error(transparent)]
    Core(#[from] ghrs_core::Error),
}

pub type Result<T> = std::result::Result<T, FormatError>;

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> FormatError + '_ {
    move |source| FormatError::Io {
        path: path.to_path_buf(),
        source,
    }
}

fn csv_err(path: &Path) -> impl FnOnce(csv::Error) -> FormatError + '_ {
    move |source| FormatError::Csv {
        path: path.to_path_buf(),
        source,
    }
}

fn opt(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

pub fn write_text(path: &Path, text: &str) -> Result<()> {
    fs::write(path, text).map_err(io_err(path))
}

pub fn read_text(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(io_err(path))
}

fn write_rows(
    path: &Path,
    header: &[&str],
    rows: impl IntoIterator<Item = Vec<String>>,
) -> Result<()> {
    let mut w = csv::Writer::from_path(path).map_err(csv_err(path))?;
    w.write_record(header).map_err(csv_err(path))?;
    for r in rows {
        w.write_record(&r).map_err(csv_err(path))?;
    }
    w.flush().map_err(io_err(path))
}

/// Header row plus every data row.
fn read_rows(path: &Path) -> Result<(Vec<String>, Vec<Vec<String>>)> {
    let mut r = csv::Reader::from_path(path).map_err(csv_err(path))?;
    let header = r
        .headers()
        .map_err(csv_err(path))?
        .iter()
        .map(str::to_string)
        .collect();
    let mut rows = Vec::new();
    for rec in r.records() {
        rows.push(
            rec.map_err(csv_err(path))?
                .iter()
                .map(str::to_string)
                .collect(),
        );
    }
    Ok((header, rows))
}

fn parse<T: std::str::FromStr>(path: &Path, line: usize, raw: &str) -> Result<T> {
    raw.trim().parse().map_err(|_| FormatError::Parse {
        path: path.to_path_buf(),
        line,
        msg: format!("cannot parse {raw:?}"),
    })
}

/// `#nodes=<n> alpha=<a> delta=<d>`, then one `u v` user-id pair per edge.
/// Isolated users are listed as `u` alone so the node set survives a round trip.
pub fn write_edge_list(path: &Path, g: &SimilarityGraph, params: &SimilarityParams) -> Result<()> {
    let mut out = String::new();
    out.push_str(&format!(
        "#nodes={} alpha={} delta={}\n",
        g.n_nodes(),
        params.alpha,
        params.delta
    ));
    for v in 0..g.n_nodes() {
        if g.degree(v) == 0 {
            out.push_str(&format!("{}\n", g.user_id(v)));
        }
    }
    for (u, v) in g.edges() {
        out.push_str(&format!("{} {}\n", g.user_id(u), g.user_id(v)));
    }
    write_text(path, &out)
}

pub fn read_edge_list(path: &Path) -> Result<(SimilarityGraph, SimilarityParams)> {
    let text = read_text(path)?;
    let bad = |line: usize, msg: &str| FormatError::Parse {
        path: path.to_path_buf(),
        line,
        msg: msg.to_string(),
    };
    let mut lines = text.lines();
    let header = lines.next().ok_or_else(|| bad(1, "empty edge list"))?;
    let mut n_nodes = None;
    let mut params = SimilarityParams::default();
    for kv in header.trim_start_matches('#').split_whitespace() {
        match kv.split_once('=') {
            Some(("nodes", v)) => n_nodes = Some(parse::<usize>(path, 1, v)?),
            Some(("alpha", v)) => params.alpha = parse(path, 1, v)?,
            Some(("delta", v)) => params.delta = parse(path, 1, v)?,
            _ => return Err(bad(1, "malformed header")),
        }
    }
    let mut ids = Vec::new();
    let mut pairs = Vec::new();
    for (i, l) in lines.enumerate() {
        let f: Vec<&str> = l.split_whitespace().collect();
        match f.as_slice() {
            [] => {}
            [u] => ids.push(parse::<u32>(path, i + 2, u)?),
            [u, v] => {
                let (u, v) = (parse::<u32>(path, i + 2, u)?, parse::<u32>(path, i + 2, v)?);
                ids.extend([u, v]);
                pairs.push((u, v));
            }
            _ => return Err(bad(i + 2, "expected one or two user ids")),
        }
    }
    ids.sort_unstable();
    ids.dedup();
    if n_nodes != Some(ids.len()) {
        return Err(bad(1, "node count does not match the listed users"));
    }
    let idx = |u: u32| ids.binary_search(&u).expect("listed id");
    let edges: Vec<(usize, usize)> = pairs.iter().map(|&(u, v)| (idx(u), idx(v))).collect();
    Ok((SimilarityGraph::from_edges_with_ids(ids, &edges)?, params))
}

pub fn write_graph_features(path: &Path, f: &GraphFeatureMatrix) -> Result<()> {
    let mut header = vec!["user_id"];
    header.extend(FEATURE_NAMES);
    let rows = f.user_ids.iter().zip(f.values.iter_rows()).map(|(u, r)| {
        let mut row = vec![u.to_string()];
        row.extend(r.iter().map(|v| v.to_string()));
        row
    });
    write_rows(path, &header, rows)
}

/// `user_id` then one numeric column per label.
fn read_id_matrix(path: &Path) -> Result<(Vec<u32>, Vec<String>, Matrix)> {
    let (header, rows) = read_rows(path)?;
    if header.first().map(String::as_str) != Some("user_id") {
        return Err(FormatError::Parse {
            path: path.to_path_buf(),
            line: 1,
            msg: "first column must be user_id".into(),
        });
    }
    let mut ids = Vec::with_capacity(rows.len());
    let mut data = Vec::with_capacity(rows.len() * (header.len() - 1));
    for (i, r) in rows.iter().enumerate() {
        ids.push(parse(path, i + 2, &r[0])?);
        for v in &r[1..] {
            data.push(parse(path, i + 2, v)?);
        }
    }
    let m = Matrix::from_vec(rows.len(), header.len() - 1, data)?;
    Ok((ids, header[1..].to_vec(), m))
}

pub fn read_graph_features(path: &Path) -> Result<GraphFeatureMatrix> {
    let (user_ids, _, values) = read_id_matrix(path)?;
    Ok(GraphFeatureMatrix { user_ids, values })
}

pub fn write_features(path: &Path, f: &RawFeatureMatrix) -> Result<()> {
    let mut header = vec!["user_id"];
    header.extend(f.labels.iter().map(String::as_str));
    let rows = f.user_ids.iter().zip(f.values.iter_rows()).map(|(u, r)| {
        let mut row = vec![u.to_string()];
        row.extend(r.iter().map(|v| v.to_string()));
        row
    });
    write_rows(path, &header, rows)
}

/// Ids, column labels and values of a features or codes file.
pub fn read_matrix_csv(path: &Path) -> Result<(Vec<u32>, Vec<String>, Matrix)> {
    read_id_matrix(path)
}

pub fn write_codes(path: &Path, user_ids: &[u32], codes: &Matrix) -> Result<()> {
    let labels: Vec<String> = (0..codes.cols()).map(|c| format!("z{c}")).collect();
    let mut header = vec!["user_id"];
    header.extend(labels.iter().map(String::as_str));
    let rows = user_ids.iter().zip(codes.iter_rows()).map(|(u, r)| {
        let mut row = vec![u.to_string()];
        row.extend(r.iter().map(|v| v.to_string()));
        row
    });
    write_rows(path, &header, rows)
}

pub fn write_toml<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let text = toml::to_string(value).map_err(|e| FormatError::Serde {
        path: path.to_path_buf(),
        msg: e.to_string(),
    })?;
    write_text(path, &text)
}

pub fn read_toml<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<T> {
    toml::from_str(&read_text(path)?).map_err(|e| FormatError::Serde {
        path: path.to_path_buf(),
        msg: e.to_string(),
    })
}

pub fn write_scheme(path: &Path, s: &CategorizationScheme) -> Result<()> {
    write_toml(path, s)
}

pub fn read_scheme(path: &Path) -> Result<CategorizationScheme> {
    read_toml(path)
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value).map_err(|e| FormatError::Serde {
        path: path.to_path_buf(),
        msg: e.to_string(),
    })?;
    text.push('\n');
    write_text(path, &text)
}

pub fn read_json<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<T> {
    serde_json::from_str(&read_text(path)?).map_err(|e| FormatError::Serde {
        path: path.to_path_buf(),
        msg: e.to_string(),
    })
}

pub fn write_checkpoint(path: &Path, m: &AutoencoderModel) -> Result<()> {
    write_json(path, m)
}

pub fn read_checkpoint(path: &Path) -> Result<AutoencoderModel> {
    read_json(path)
}

/// Cluster stage output: the model plus the users its assignment refers to.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClusterArtifact {
    pub selection: String,
    pub user_ids: Vec<u32>,
    pub model: ClusterModel,
}

/// `epoch,optimizer,train_loss,val_loss`; several runs may share one file.
pub fn write_losses(path: &Path, runs: &[(&str, &[EpochLoss])]) -> Result<()> {
    let rows = runs.iter().flat_map(|(name, h)| {
        h.iter().map(move |e| {
            vec![
                e.epoch.to_string(),
                name.to_string(),
                e.train_loss.to_string(),
                opt(e.val_loss),
            ]
        })
    });
    write_rows(
        path,
        &["epoch", "optimizer", "train_loss", "val_loss"],
        rows,
    )
}

pub fn write_curve(path: &Path, value_name: &str, curve: &[(usize, f64)]) -> Result<()> {
    write_rows(
        path,
        &["K", value_name],
        curve
            .iter()
            .map(|(k, v)| vec![k.to_string(), v.to_string()]),
    )
}

pub fn write_predictions(path: &Path, scored: &[Scored]) -> Result<()> {
    let rows = scored.iter().map(|s| {
        vec![
            s.user_id.to_string(),
            s.item_id.to_string(),
            s.predicted.to_string(),
            s.actual.to_string(),
        ]
    });
    write_rows(path, &["user_id", "item_id", "predicted", "actual"], rows)
}

pub fn write_top_n(path: &Path, lists: &[(u32, Vec<(u32, f64)>)]) -> Result<()> {
    let rows = lists.iter().flat_map(|(u, list)| {
        list.iter().enumerate().map(move |(r, (i, s))| {
            vec![
                u.to_string(),
                (r + 1).to_string(),
                i.to_string(),
                s.to_string(),
            ]
        })
    });
    write_rows(path, &["user_id", "rank", "item_id", "score"], rows)
}

/// Per-fold rows followed by an `all` row with the aggregated values.
pub fn write_report_csv(path: &Path, r: &MetricReport) -> Result<()> {
    let header = [
        "fold",
        "n_test",
        "k",
        "rmse",
        "baseline_rmse",
        "precision",
        "recall",
        "macro_precision",
        "macro_recall",
        "config_fingerprint",
    ];
    let mut rows: Vec<Vec<String>> = r
        .folds
        .iter()
        .map(|f| {
            vec![
                f.fold.to_string(),
                f.n_test.to_string(),
                f.k.to_string(),
                f.rmse.to_string(),
                f.baseline_rmse.to_string(),
                opt(f.confusion.precision()),
                opt(f.confusion.recall()),
                opt(f.macro_precision),
                opt(f.macro_recall),
                r.config_fingerprint.clone(),
            ]
        })
        .collect();
    rows.push(vec![
        "all".into(),
        r.folds.iter().map(|f| f.n_test).sum::<usize>().to_string(),
        String::new(),
        r.rmse.to_string(),
        r.baseline_rmse.to_string(),
        opt(r.precision),
        opt(r.recall),
        opt(r.macro_precision),
        opt(r.macro_recall),
        r.config_fingerprint.clone(),
    ]);
    write_rows(path, &header, rows)
}

fn show(v: Option<f64>) -> String {
    v.map(|x| format!("{x:.4}"))
        .unwrap_or_else(|| "undefined".into())
}

/// Line-oriented `key: value` summary.
pub fn report_summary(r: &MetricReport) -> String {
    let ks: Vec<String> = r.folds.iter().map(|f| f.k.to_string()).collect();
    let mut s = String::new();
    s.push_str(&format!("config: {}\n", r.config_fingerprint));
    s.push_str(&format!(
        "alpha: {}\ndelta: {}\noptimizer: {}\nseed: {}\n",
        r.alpha, r.delta, r.optimizer, r.seed
    ));
    s.push_str(&format!(
        "folds: {}\nk per fold: {}\n",
        r.n_folds,
        ks.join(" ")
    ));
    s.push_str(&format!(
        "rmse: {:.4}\nrmse variance: {:.4e}\npooled rmse: {:.4}\n",
        r.rmse, r.rmse_variance, r.pooled_rmse
    ));
    s.push_str(&format!("global-mean rmse: {:.4}\n", r.baseline_rmse));
    s.push_str(&format!(
        "precision: {}\nrecall: {}\n",
        show(r.precision),
        show(r.recall)
    ));
    s.push_str(&format!(
        "per-user precision: {}\nper-user recall: {}\n",
        show(r.macro_precision),
        show(r.macro_recall)
    ));
    s
}

pub fn write_alpha_sweep(path: &Path, reports: &[MetricReport]) -> Result<()> {
    let rows = reports.iter().map(|r| {
        vec![
            r.alpha.to_string(),
            r.rmse.to_string(),
            r.rmse_variance.to_string(),
            r.pooled_rmse.to_string(),
            r.baseline_rmse.to_string(),
            opt(r.precision),
            opt(r.recall),
        ]
    });
    write_rows(
        path,
        &[
            "alpha",
            "rmse",
            "rmse_variance",
            "pooled_rmse",
            "baseline_rmse",
            "precision",
            "recall",
        ],
        rows,
    )
}

pub fn write_optimizer_summary(path: &Path, runs: &[OptimizerRun]) -> Result<()> {
    let rows = runs.iter().map(|r| {
        vec![
            r.kind.name().to_string(),
            r.final_train_loss.to_string(),
            opt(r.final_val_loss),
            r.rmse.to_string(),
        ]
    });
    write_rows(
        path,
        &["optimizer", "final_train_loss", "final_val_loss", "rmse"],
        rows,
    )
}

pub fn write_coldstart(path: &Path, points: &[ColdStartPoint]) -> Result<()> {
    let rows = points.iter().map(|p| {
        vec![
            p.fraction.to_string(),
            p.n_held_users.to_string(),
            p.n_test.to_string(),
            p.rmse.to_string(),
            p.baseline_rmse.to_string(),
            opt(p.precision),
            opt(p.recall),
        ]
    });
    write_rows(
        path,
        &[
            "fraction",
            "n_held_users",
            "n_test",
            "rmse",
            "baseline_rmse",
            "precision",
            "recall",
        ],
        rows,
    )
}

/// Appends one line to a text file, creating it if needed.
pub fn append_line(path: &Path, line: &str) -> Result<()> {
    let mut f = fs::OpenOptions::new()
        .create(true)
        .append(true)
        .open(path)
        .map_err(io_err(path))?;
    writeln!(f, "{line}").map_err(io_err(path))
}
