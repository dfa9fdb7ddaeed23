//! Cluster-average rating model.
//!
//! Each cluster gets one rating per item. A cell is the in-cluster mean of
//! the item's ratings when there are any, otherwise the in-cluster mean over
//! genre-similar items, otherwise the cluster's overall mean.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::vec;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::autoencoder::AutoencoderModel;
use crate::features::CategorizationScheme;
use crate::kmeans::ClusterModel;
use crate::matrix::Matrix;
use crate::ratings::{GenreSet, ItemProfile, RatingTable, UserProfile};
use crate::{Error, Result};

/// Genre similarity between items; items with the same genre set share a
/// group so lookups scale with the number of distinct genre sets.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ItemSimilarityIndex {
    item_ids: Vec<u32>,
    group_of: Vec<usize>,
    groups: Vec<GenreSet>,
    members: Vec<Vec<usize>>,
}

impl ItemSimilarityIndex {
    pub fn new(items: &[ItemProfile]) -> Result<Self> {
        let mut sorted: Vec<&ItemProfile> = items.iter().collect();
        sorted.sort_by_key(|i| i.item_id);
        if sorted.windows(2).any(|w| w[0].item_id == w[1].item_id) {
            return Err(Error::invalid("duplicate item id in similarity index"));
        }
        let mut by_mask: BTreeMap<u32, usize> = BTreeMap::new();
        let mut groups = Vec::new();
        let mut members: Vec<Vec<usize>> = Vec::new();
        let mut group_of = Vec::with_capacity(sorted.len());
        for (idx, item) in sorted.iter().enumerate() {
            let g = *by_mask.entry(item.genres.0).or_insert_with(|| {
                groups.push(item.genres);
                members.push(Vec::new());
                groups.len() - 1
            });
            members[g].push(idx);
            group_of.push(g);
        }
        Ok(ItemSimilarityIndex {
            item_ids: sorted.iter().map(|i| i.item_id).collect(),
            group_of,
            groups,
            members,
        })
    }

    pub fn item_ids(&self) -> &[u32] {
        &self.item_ids
    }

    pub fn len(&self) -> usize {
        self.item_ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.item_ids.is_empty()
    }

    pub fn index_of(&self, item_id: u32) -> Option<usize> {
        self.item_ids.binary_search(&item_id).ok()
    }

    /// Genre Jaccard similarity of two items.
    pub fn similarity(&self, a: u32, b: u32) -> Result<f64> {
        let ia = self.index_of(a).ok_or(Error::UnknownItem(a))?;
        let ib = self.index_of(b).ok_or(Error::UnknownItem(b))?;
        Ok(self.groups[self.group_of[ia]].jaccard(&self.groups[self.group_of[ib]]))
    }

    /// Every other item with positive similarity, best first, ties by item id.
    pub fn ranked(&self, item_id: u32) -> Result<Vec<(u32, f64)>> {
        let i = self.index_of(item_id).ok_or(Error::UnknownItem(item_id))?;
        let own = self.groups[self.group_of[i]];
        let mut out = Vec::new();
        for (g, set) in self.groups.iter().enumerate() {
            let s = own.jaccard(set);
            if s > 0.0 {
                out.extend(
                    self.members[g]
                        .iter()
                        .filter(|&&j| j != i)
                        .map(|&j| (self.item_ids[j], s)),
                );
            }
        }
        out.sort_by(|a, b| b.1.total_cmp(&a.1).then(a.0.cmp(&b.0)));
        Ok(out)
    }

    fn group_similarity(&self, threshold: f64) -> Vec<Vec<(usize, f64)>> {
        self.groups
            .iter()
            .map(|a| {
                self.groups
                    .iter()
                    .enumerate()
                    .filter_map(|(g, b)| {
                        let s = a.jaccard(b);
                        (s >= threshold && s > 0.0).then_some((g, s))
                    })
                    .collect()
            })
            .collect()
    }
}

/// Genre Jaccard similarity of two items from a profile list.
pub fn item_similarity(items: &[ItemProfile], a: u32, b: u32) -> Result<f64> {
    let find = |id: u32| {
        items
            .iter()
            .find(|i| i.item_id == id)
            .ok_or(Error::UnknownItem(id))
    };
    Ok(find(a)?.genres.jaccard(&find(b)?.genres))
}

/// One cluster per user, stored as the index of the single 1 in each row.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct UserClusterMatrix {
    pub k: usize,
    user_ids: Vec<u32>,
    cluster: Vec<usize>,
}

impl UserClusterMatrix {
    pub fn new(k: usize, user_ids: &[u32], clusters: &[usize]) -> Result<Self> {
        if user_ids.len() != clusters.len() {
            return Err(Error::ShapeMismatch {
                expected: user_ids.len(),
                actual: clusters.len(),
            });
        }
        if let Some(&c) = clusters.iter().find(|&&c| c >= k) {
            return Err(Error::invalid(alloc::format!("cluster {c} outside 0..{k}")));
        }
        let mut pairs: Vec<(u32, usize)> = user_ids
            .iter()
            .copied()
            .zip(clusters.iter().copied())
            .collect();
        pairs.sort_unstable();
        if pairs.windows(2).any(|w| w[0].0 == w[1].0) {
            return Err(Error::invalid("user listed twice in cluster membership"));
        }
        Ok(UserClusterMatrix {
            k,
            user_ids: pairs.iter().map(|p| p.0).collect(),
            cluster: pairs.iter().map(|p| p.1).collect(),
        })
    }

    pub fn user_ids(&self) -> &[u32] {
        &self.user_ids
    }

    pub fn clusters(&self) -> &[usize] {
        &self.cluster
    }

    pub fn cluster_of(&self, user_id: u32) -> Option<usize> {
        self.user_ids
            .binary_search(&user_id)
            .ok()
            .map(|i| self.cluster[i])
    }

    /// Dense `n × K` 0/1 form.
    pub fn to_matrix(&self) -> Matrix {
        let mut m = Matrix::zeros(self.user_ids.len(), self.k);
        for (r, &c) in self.cluster.iter().enumerate() {
            m.set(r, c, 1.0);
        }
        m
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CellSource {
    Direct,
    SimilarItems,
    ClusterMean,
    /// The cluster has no training ratings at all.
    GlobalMean,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FallbackParams {
    pub similarity_threshold: f64,
    /// Weight similar items' ratings by their similarity score.
    pub weighted: bool,
}

impl Default for FallbackParams {
    fn default() -> Self {
        FallbackParams {
            similarity_threshold: 0.5,
            weighted: false,
        }
    }
}

/// `K × m` cluster ratings, columns in item-id order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClusterItemMatrix {
    pub item_ids: Vec<u32>,
    pub values: Matrix,
    pub sources: Vec<CellSource>,
}

impl ClusterItemMatrix {
    pub fn k(&self) -> usize {
        self.values.rows()
    }

    pub fn column_of(&self, item_id: u32) -> Option<usize> {
        self.item_ids.binary_search(&item_id).ok()
    }

    pub fn get(&self, cluster: usize, item_id: u32) -> Result<f64> {
        let c = self.column_of(item_id).ok_or(Error::UnknownItem(item_id))?;
        Ok(self.values.get(cluster, c))
    }

    pub fn source(&self, cluster: usize, item_id: u32) -> Result<CellSource> {
        let c = self.column_of(item_id).ok_or(Error::UnknownItem(item_id))?;
        Ok(self.sources[cluster * self.item_ids.len() + c])
    }

    pub fn source_counts(&self) -> BTreeMap<CellSource, usize> {
        let mut out = BTreeMap::new();
        for &s in &self.sources {
            *out.entry(s).or_insert(0) += 1;
        }
        out
    }
}

impl PartialOrd for CellSource {
    fn partial_cmp(&self, other: &Self) -> Option<core::cmp::Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for CellSource {
    fn cmp(&self, other: &Self) -> core::cmp::Ordering {
        (*self as u8).cmp(&(*other as u8))
    }
}

pub fn build_cluster_item_matrix(
    train: &RatingTable,
    uc: &UserClusterMatrix,
    sim: &ItemSimilarityIndex,
    params: &FallbackParams,
) -> Result<ClusterItemMatrix> {
    let global = train
        .mean()
        .ok_or(Error::Empty("cluster ratings need training ratings"))?;
    let (k, m, ng) = (uc.k, sim.len(), sim.groups.len());
    let mut sum = vec![0.0; k * m];
    let mut cnt = vec![0u32; k * m];
    let mut gsum = vec![0.0; k * ng];
    let mut gcnt = vec![0u32; k * ng];
    let mut csum = vec![0.0; k];
    let mut ccnt = vec![0u32; k];
    for r in train.iter() {
        let c = uc
            .cluster_of(r.user_id)
            .ok_or(Error::UnknownUser(r.user_id))?;
        let i = sim
            .index_of(r.item_id)
            .ok_or(Error::UnknownItem(r.item_id))?;
        let v = f64::from(r.rating);
        sum[c * m + i] += v;
        cnt[c * m + i] += 1;
        let g = sim.group_of[i];
        gsum[c * ng + g] += v;
        gcnt[c * ng + g] += 1;
        csum[c] += v;
        ccnt[c] += 1;
    }
    let similar = sim.group_similarity(params.similarity_threshold);
    let mut values = Matrix::zeros(k, m);
    let mut sources = vec![CellSource::Direct; k * m];
    for c in 0..k {
        // tier-2 value per genre group, shared by every item in the group
        let tier2: Vec<Option<f64>> = similar
            .iter()
            .map(|near| {
                let (mut num, mut den) = (0.0, 0.0);
                for &(g, s) in near {
                    let w = if params.weighted { s } else { 1.0 };
                    num += w * gsum[c * ng + g];
                    den += w * f64::from(gcnt[c * ng + g]);
                }
                (den > 0.0).then(|| num / den)
            })
            .collect();
        for i in 0..m {
            let cell = c * m + i;
            let (v, src) = if cnt[cell] > 0 {
                (sum[cell] / f64::from(cnt[cell]), CellSource::Direct)
            } else if let Some(v) = tier2[sim.group_of[i]] {
                (v, CellSource::SimilarItems)
            } else if ccnt[c] > 0 {
                (csum[c] / f64::from(ccnt[c]), CellSource::ClusterMean)
            } else {
                (global, CellSource::GlobalMean)
            };
            debug_assert!(src != CellSource::SimilarItems || cnt[cell] == 0);
            values.set(c, i, v);
            sources[cell] = src;
        }
    }
    Ok(ClusterItemMatrix {
        item_ids: sim.item_ids.clone(),
        values,
        sources,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PredictionMatrix {
    pub user_ids: Vec<u32>,
    pub item_ids: Vec<u32>,
    pub values: Matrix,
}

/// `UC × CI`.
pub fn predict_matrix(uc: &UserClusterMatrix, ci: &ClusterItemMatrix) -> Result<PredictionMatrix> {
    if uc.k != ci.k() {
        return Err(Error::ShapeMismatch {
            expected: ci.k(),
            actual: uc.k,
        });
    }
    let values = uc.to_matrix().matmul(&ci.values)?;
    for (r, &c) in uc.cluster.iter().enumerate() {
        assert_eq!(
            values.row(r),
            ci.values.row(c),
            "one-hot product must copy the cluster row"
        );
    }
    Ok(PredictionMatrix {
        user_ids: uc.user_ids.clone(),
        item_ids: ci.item_ids.clone(),
        values,
    })
}

/// Cluster of a user known only by profile: graph features take their
/// isolated-node values, which land in the lowest bins.
pub fn assign_new_user(
    profile: &UserProfile,
    scheme: &CategorizationScheme,
    model: &AutoencoderModel,
    clusters: &ClusterModel,
) -> Result<usize> {
    let row = scheme.encode_profile(None, profile)?;
    clusters.assign(&model.encode_row(&row)?)
}

/// Best `n` items outside `rated`, ties to the lower item id.
pub fn recommend_top_n(
    predictions: &[f64],
    item_ids: &[u32],
    rated: &BTreeSet<u32>,
    n: usize,
) -> Result<Vec<(u32, f64)>> {
    if predictions.len() != item_ids.len() {
        return Err(Error::ShapeMismatch {
            expected: item_ids.len(),
            actual: predictions.len(),
        });
    }
    let mut pool: Vec<(u32, f64)> = item_ids
        .iter()
        .copied()
        .zip(predictions.iter().copied())
        .filter(|(i, _)| !rated.contains(i))
        .collect();
    pool.sort_by(|a, b| b.1.total_cmp(&a.1).then(a.0.cmp(&b.0)));
    pool.truncate(n);
    Ok(pool)
}
