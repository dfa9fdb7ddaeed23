//! Binary user features: quantile-binned graph features concatenated with
//! one-hot demographics.
//!
//! Column layout is fixed: `[graph-feature bins | gender | age | occupation |
//! location]`. Every group is one-hot, so each row carries exactly one active
//! bit per group.

use alloc::collections::BTreeMap;
use alloc::string::{String, ToString};
use alloc::vec;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::centrality::{GraphFeatureMatrix, FEATURE_NAMES};
use crate::matrix::Matrix;
use crate::ratings::{Gender, UserProfile};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LocationMode {
    /// Two bits: zip code starts with a digit or not.
    KnownUnknown,
    /// First zip digit as one of ten regions, plus an unknown bit.
    Region,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct OccupationGroup {
    pub name: String,
    pub members: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureConfig {
    /// Quantile bins per graph feature.
    pub bins: usize,
    /// Lower bounds of the age bins after the first one.
    pub age_edges: Vec<u32>,
    pub occupation_groups: Vec<OccupationGroup>,
    /// Group receiving occupations not listed anywhere.
    pub fallback_group: String,
    pub location: LocationMode,
}

fn group(name: &str, members: &[&str]) -> OccupationGroup {
    OccupationGroup {
        name: name.to_string(),
        members: members.iter().map(|m| m.to_string()).collect(),
    }
}

impl FeatureConfig {
    /// 18 graph bits + 2 gender + 7 age + 6 occupation + 2 location = 35.
    pub fn movielens_100k() -> Self {
        FeatureConfig {
            bins: 3,
            age_edges: vec![18, 25, 35, 45, 50, 56],
            occupation_groups: vec![
                group(
                    "professional",
                    &[
                        "administrator",
                        "doctor",
                        "executive",
                        "healthcare",
                        "lawyer",
                        "marketing",
                        "salesman",
                    ],
                ),
                group(
                    "technical",
                    &["engineer", "programmer", "scientist", "technician"],
                ),
                group("academic", &["educator", "librarian", "writer"]),
                group("service", &["artist", "entertainment"]),
                group("student", &["student"]),
                group("other", &["none", "other", "retired", "homemaker"]),
            ],
            fallback_group: "other".to_string(),
            location: LocationMode::KnownUnknown,
        }
    }

    /// Same layout with a seventh occupation group for the 1M "other or not
    /// specified" code, giving 36 columns.
    pub fn movielens_1m() -> Self {
        FeatureConfig {
            bins: 3,
            age_edges: vec![18, 25, 35, 45, 50, 56],
            occupation_groups: vec![
                group(
                    "professional",
                    &[
                        "clerical/admin",
                        "doctor/health care",
                        "executive/managerial",
                        "lawyer",
                        "sales/marketing",
                    ],
                ),
                group(
                    "technical",
                    &["programmer", "scientist", "technician/engineer"],
                ),
                group("academic", &["academic/educator", "writer"]),
                group(
                    "service",
                    &[
                        "artist",
                        "customer service",
                        "farmer",
                        "self-employed",
                        "tradesman/craftsman",
                    ],
                ),
                group("student", &["college/grad student", "K-12 student"]),
                group("other", &["homemaker", "retired", "unemployed"]),
                group("unspecified", &["other or not specified"]),
            ],
            fallback_group: "unspecified".to_string(),
            location: LocationMode::KnownUnknown,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.bins == 0 {
            return Err(Error::invalid("feature bins must be at least 1"));
        }
        if self.age_edges.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::invalid("age edges must be strictly increasing"));
        }
        if !self
            .occupation_groups
            .iter()
            .any(|g| g.name == self.fallback_group)
        {
            return Err(Error::invalid(alloc::format!(
                "fallback group {:?} is not defined",
                self.fallback_group
            )));
        }
        Ok(())
    }
}

impl Default for FeatureConfig {
    fn default() -> Self {
        FeatureConfig::movielens_100k()
    }
}

/// Fitted mapping from raw user attributes to feature columns.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CategorizationScheme {
    /// Interior bin edges per graph feature; value `v` falls in bin `#{e : v > e}`.
    pub graph_edges: Vec<Vec<f64>>,
    /// Age `a` falls in bin `#{e : a ≥ e}`.
    pub age_edges: Vec<u32>,
    pub occupation_groups: Vec<String>,
    pub occupation_map: BTreeMap<String, usize>,
    pub fallback_group: usize,
    pub location: LocationMode,
}

/// `n_users × D` 0/1 matrix with labelled columns.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RawFeatureMatrix {
    pub user_ids: Vec<u32>,
    pub labels: Vec<String>,
    /// `(first column, width)` of every one-hot group.
    pub groups: Vec<(usize, usize)>,
    pub values: Matrix,
}

impl RawFeatureMatrix {
    pub fn width(&self) -> usize {
        self.values.cols()
    }

    pub fn sparsity(&self) -> f64 {
        sparsity(&self.values)
    }
}

/// Fraction of zero entries.
pub fn sparsity(m: &Matrix) -> f64 {
    let total = m.as_slice().len();
    if total == 0 {
        return 0.0;
    }
    m.as_slice().iter().filter(|&&v| v == 0.0).count() as f64 / total as f64
}

/// Linear-interpolation quantile of a sorted slice.
fn quantile(sorted: &[f64], q: f64) -> f64 {
    let pos = q * (sorted.len() - 1) as f64;
    let lo = libm::floor(pos) as usize;
    let hi = (lo + 1).min(sorted.len() - 1);
    let frac = pos - lo as f64;
    sorted[lo] + (sorted[hi] - sorted[lo]) * frac
}

/// Interior bin edges from the column's quantiles.
///
/// Duplicate edges are merged and edges at or above the maximum are dropped,
/// so every bin is non-empty on the fitting data; a constant column gets a
/// single bin.
pub fn quantile_edges(values: &[f64], bins: usize) -> Vec<f64> {
    let mut sorted: Vec<f64> = values.iter().copied().filter(|v| v.is_finite()).collect();
    if sorted.is_empty() {
        return Vec::new();
    }
    sorted.sort_by(f64::total_cmp);
    let max = sorted[sorted.len() - 1];
    let mut edges: Vec<f64> = (1..bins)
        .map(|k| quantile(&sorted, k as f64 / bins as f64))
        .collect();
    edges.dedup();
    edges.retain(|&e| e < max);
    edges
}

fn bin_of(value: f64, edges: &[f64]) -> usize {
    edges.iter().filter(|&&e| value > e).count()
}

pub fn fit_scheme(
    graph_feats: &GraphFeatureMatrix,
    config: &FeatureConfig,
) -> Result<CategorizationScheme> {
    config.validate()?;
    if graph_feats.values.rows() == 0 {
        return Err(Error::Empty("no users to fit the categorization scheme on"));
    }
    let graph_edges = (0..graph_feats.values.cols())
        .map(|c| quantile_edges(&graph_feats.column(c), config.bins))
        .collect();
    let occupation_groups: Vec<String> = config
        .occupation_groups
        .iter()
        .map(|g| g.name.clone())
        .collect();
    let mut occupation_map = BTreeMap::new();
    for (gi, g) in config.occupation_groups.iter().enumerate() {
        for m in &g.members {
            occupation_map.insert(m.to_lowercase(), gi);
        }
    }
    let fallback_group = occupation_groups
        .iter()
        .position(|g| *g == config.fallback_group)
        .unwrap_or(0);
    Ok(CategorizationScheme {
        graph_edges,
        age_edges: config.age_edges.clone(),
        occupation_groups,
        occupation_map,
        fallback_group,
        location: config.location,
    })
}

impl CategorizationScheme {
    fn location_width(&self) -> usize {
        match self.location {
            LocationMode::KnownUnknown => 2,
            LocationMode::Region => 11,
        }
    }

    pub fn groups(&self) -> Vec<(usize, usize)> {
        let mut widths: Vec<usize> = self.graph_edges.iter().map(|e| e.len() + 1).collect();
        widths.push(2);
        widths.push(self.age_edges.len() + 1);
        widths.push(self.occupation_groups.len());
        widths.push(self.location_width());
        let mut start = 0;
        widths
            .into_iter()
            .map(|w| {
                let g = (start, w);
                start += w;
                g
            })
            .collect()
    }

    pub fn width(&self) -> usize {
        self.groups().iter().map(|g| g.1).sum()
    }

    pub fn labels(&self) -> Vec<String> {
        let mut labels = Vec::new();
        for (f, edges) in self.graph_edges.iter().enumerate() {
            let name = FEATURE_NAMES.get(f).copied().unwrap_or("G");
            for b in 0..=edges.len() {
                labels.push(alloc::format!("{name}_{b}"));
            }
        }
        labels.push("gender_M".to_string());
        labels.push("gender_F".to_string());
        for b in 0..=self.age_edges.len() {
            labels.push(alloc::format!("age_{b}"));
        }
        for g in &self.occupation_groups {
            labels.push(alloc::format!("occ_{g}"));
        }
        match self.location {
            LocationMode::KnownUnknown => {
                labels.push("loc_known".to_string());
                labels.push("loc_unknown".to_string());
            }
            LocationMode::Region => {
                for d in 0..10 {
                    labels.push(alloc::format!("loc_{d}"));
                }
                labels.push("loc_unknown".to_string());
            }
        }
        labels
    }

    pub fn occupation_group(&self, occupation: &str) -> usize {
        self.occupation_map
            .get(&occupation.trim().to_lowercase())
            .copied()
            .unwrap_or(self.fallback_group)
    }

    /// Feature row for one user; `graph_row = None` marks a user outside the
    /// graph, which takes the lowest bin of every graph feature.
    pub fn encode_profile(
        &self,
        graph_row: Option<&[f64]>,
        profile: &UserProfile,
    ) -> Result<Vec<f64>> {
        if let Some(row) = graph_row {
            if row.len() != self.graph_edges.len() {
                return Err(Error::ShapeMismatch {
                    expected: self.graph_edges.len(),
                    actual: row.len(),
                });
            }
        }
        let groups = self.groups();
        let mut out = vec![0.0; self.width()];
        let mut hot = |g: usize, k: usize| out[groups[g].0 + k.min(groups[g].1 - 1)] = 1.0;
        for (f, edges) in self.graph_edges.iter().enumerate() {
            let v = graph_row.map_or(0.0, |r| r[f]);
            hot(f, bin_of(v, edges));
        }
        let base = self.graph_edges.len();
        hot(base, if profile.gender == Gender::M { 0 } else { 1 });
        hot(
            base + 1,
            self.age_edges.iter().filter(|&&e| profile.age >= e).count(),
        );
        hot(base + 2, self.occupation_group(&profile.occupation));
        let first = profile
            .zip_code
            .trim()
            .chars()
            .next()
            .and_then(|c| c.to_digit(10));
        let loc = match (self.location, first) {
            (LocationMode::KnownUnknown, Some(_)) => 0,
            (LocationMode::KnownUnknown, None) => 1,
            (LocationMode::Region, Some(d)) => d as usize,
            (LocationMode::Region, None) => 10,
        };
        hot(base + 3, loc);
        Ok(out)
    }
}

/// Encodes the listed users; users without a graph row are treated as
/// outside the graph.
pub fn encode_users(
    scheme: &CategorizationScheme,
    graph_feats: &GraphFeatureMatrix,
    user_ids: &[u32],
    profiles: &[UserProfile],
) -> Result<RawFeatureMatrix> {
    let by_id: BTreeMap<u32, &UserProfile> = profiles.iter().map(|p| (p.user_id, p)).collect();
    let width = scheme.width();
    let mut values = Matrix::zeros(user_ids.len(), width);
    for (r, &uid) in user_ids.iter().enumerate() {
        let profile = by_id.get(&uid).ok_or(Error::UnknownUser(uid))?;
        let row = scheme.encode_profile(graph_feats.row_of(uid), profile)?;
        values.row_mut(r).copy_from_slice(&row);
    }
    Ok(RawFeatureMatrix {
        user_ids: user_ids.to_vec(),
        labels: scheme.labels(),
        groups: scheme.groups(),
        values,
    })
}
