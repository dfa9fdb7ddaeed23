//! Rating records, user and item profiles, and the train/test splits used by
//! cross-validation and the cold-start experiment.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::string::String;
use alloc::vec::Vec;

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// A single observed rating `r_ui`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct RatingRecord {
    pub user_id: u32,
    pub item_id: u32,
    pub rating: u8,
    pub timestamp: i64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Gender {
    M,
    F,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct UserProfile {
    pub user_id: u32,
    pub age: u32,
    pub gender: Gender,
    pub occupation: String,
    pub zip_code: String,
}

/// Genre flags of an item, one bit per genre of the dataset's vocabulary.
#[derive(
    Debug, Clone, Copy, Default, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize,
)]
pub struct GenreSet(pub u32);

impl GenreSet {
    pub fn from_flags<I: IntoIterator<Item = bool>>(flags: I) -> Self {
        let mut bits = 0u32;
        for (i, set) in flags.into_iter().enumerate() {
            if set {
                bits |= 1 << i;
            }
        }
        GenreSet(bits)
    }

    pub fn insert(&mut self, genre: usize) {
        self.0 |= 1 << genre;
    }

    pub fn contains(&self, genre: usize) -> bool {
        self.0 & (1 << genre) != 0
    }

    pub fn len(&self) -> usize {
        self.0.count_ones() as usize
    }

    pub fn is_empty(&self) -> bool {
        self.0 == 0
    }

    /// Jaccard index of the two flag sets; two empty sets score 0.
    pub fn jaccard(&self, other: &GenreSet) -> f64 {
        let union = (self.0 | other.0).count_ones();
        if union == 0 {
            return 0.0;
        }
        (self.0 & other.0).count_ones() as f64 / union as f64
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ItemProfile {
    pub item_id: u32,
    pub title: String,
    pub genres: GenreSet,
}

/// The sparse rating matrix `R`, stored as a list of records.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct RatingTable {
    records: Vec<RatingRecord>,
}

impl RatingTable {
    pub fn new(records: Vec<RatingRecord>) -> Result<Self> {
        if let Some(bad) = records.iter().find(|r| !(1..=5).contains(&r.rating)) {
            return Err(Error::invalid(alloc::format!(
                "rating {} for user {} item {} is outside [1,5]",
                bad.rating,
                bad.user_id,
                bad.item_id
            )));
        }
        Ok(RatingTable { records })
    }

    pub fn records(&self) -> &[RatingRecord] {
        &self.records
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn iter(&self) -> core::slice::Iter<'_, RatingRecord> {
        self.records.iter()
    }

    /// Distinct users that have at least one rating, ascending.
    pub fn user_ids(&self) -> BTreeSet<u32> {
        self.records.iter().map(|r| r.user_id).collect()
    }

    /// Ratings grouped by user, each list sorted by item id.
    pub fn by_user(&self) -> BTreeMap<u32, Vec<(u32, u8)>> {
        let mut out: BTreeMap<u32, Vec<(u32, u8)>> = BTreeMap::new();
        for r in &self.records {
            out.entry(r.user_id)
                .or_default()
                .push((r.item_id, r.rating));
        }
        for list in out.values_mut() {
            list.sort_unstable();
        }
        out
    }

    pub fn mean(&self) -> Option<f64> {
        if self.records.is_empty() {
            return None;
        }
        let sum: u64 = self.records.iter().map(|r| r.rating as u64).sum();
        Some(sum as f64 / self.records.len() as f64)
    }

    /// Keeps only records for which `keep` returns true.
    pub fn filter(&self, mut keep: impl FnMut(usize, &RatingRecord) -> bool) -> RatingTable {
        RatingTable {
            records: self
                .records
                .iter()
                .enumerate()
                .filter(|(i, r)| keep(*i, r))
                .map(|(_, r)| *r)
                .collect(),
        }
    }

    /// Mutable access for experiments that perturb a record in place.
    pub fn records_mut(&mut self) -> &mut [RatingRecord] {
        &mut self.records
    }
}

impl FromIterator<RatingRecord> for RatingTable {
    fn from_iter<T: IntoIterator<Item = RatingRecord>>(iter: T) -> Self {
        RatingTable {
            records: iter.into_iter().collect(),
        }
    }
}

/// Ratings plus the side information of both users and items.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Dataset {
    pub ratings: RatingTable,
    pub users: Vec<UserProfile>,
    pub items: Vec<ItemProfile>,
}

impl Dataset {
    /// Checks that every rating references a known user and item and that ids are unique.
    pub fn new(
        ratings: RatingTable,
        users: Vec<UserProfile>,
        items: Vec<ItemProfile>,
    ) -> Result<Self> {
        let mut user_ids = BTreeSet::new();
        for u in &users {
            if u.age == 0 {
                return Err(Error::invalid(alloc::format!(
                    "user {} has age 0",
                    u.user_id
                )));
            }
            if !user_ids.insert(u.user_id) {
                return Err(Error::invalid(alloc::format!(
                    "duplicate user profile {}",
                    u.user_id
                )));
            }
        }
        let mut item_ids = BTreeSet::new();
        for i in &items {
            if !item_ids.insert(i.item_id) {
                return Err(Error::invalid(alloc::format!(
                    "duplicate item profile {}",
                    i.item_id
                )));
            }
        }
        for r in ratings.iter() {
            if !user_ids.contains(&r.user_id) {
                return Err(Error::UnknownUser(r.user_id));
            }
            if !item_ids.contains(&r.item_id) {
                return Err(Error::UnknownItem(r.item_id));
            }
        }
        Ok(Dataset {
            ratings,
            users,
            items,
        })
    }

    pub fn density(&self) -> Result<f64> {
        density(&self.ratings, self.users.len(), self.items.len())
    }

    pub fn user(&self, user_id: u32) -> Option<&UserProfile> {
        self.users
            .binary_search_by_key(&user_id, |u| u.user_id)
            .ok()
            .map(|i| &self.users[i])
            .or_else(|| self.users.iter().find(|u| u.user_id == user_id))
    }

    /// Same profiles with a different rating table.
    pub fn with_ratings(&self, ratings: RatingTable) -> Dataset {
        Dataset {
            ratings,
            users: self.users.clone(),
            items: self.items.clone(),
        }
    }
}

/// Fraction of the `n_users × n_items` matrix that is observed.
pub fn density(ratings: &RatingTable, n_users: usize, n_items: usize) -> Result<f64> {
    if n_users == 0 || n_items == 0 {
        return Err(Error::invalid(
            "density needs at least one user and one item",
        ));
    }
    Ok(ratings.len() as f64 / (n_users as f64 * n_items as f64))
}

/// Assignment of every rating record to one cross-validation fold.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FoldPlan {
    pub n_folds: usize,
    pub assignments: Vec<u32>,
    pub seed: u64,
}

impl FoldPlan {
    pub fn fold_sizes(&self) -> Vec<usize> {
        let mut sizes = alloc::vec![0usize; self.n_folds];
        for &f in &self.assignments {
            sizes[f as usize] += 1;
        }
        sizes
    }

    /// `(train, test)` for fold `k`: test holds the records assigned to `k`.
    pub fn split(&self, ratings: &RatingTable, k: usize) -> Result<(RatingTable, RatingTable)> {
        if ratings.len() != self.assignments.len() {
            return Err(Error::ShapeMismatch {
                expected: self.assignments.len(),
                actual: ratings.len(),
            });
        }
        if k >= self.n_folds {
            return Err(Error::invalid(alloc::format!(
                "fold {k} out of range 0..{}",
                self.n_folds
            )));
        }
        let train = ratings.filter(|i, _| self.assignments[i] as usize != k);
        let test = ratings.filter(|i, _| self.assignments[i] as usize == k);
        Ok((train, test))
    }
}

/// Uniform random k-fold assignment over rating records.
///
/// Records are shuffled with a seeded generator and dealt round-robin, so
/// fold sizes differ by at most one.
pub fn kfold_split(ratings: &RatingTable, n_folds: usize, seed: u64) -> Result<FoldPlan> {
    if n_folds < 2 {
        return Err(Error::invalid("kfold_split needs at least 2 folds"));
    }
    if n_folds > ratings.len() {
        return Err(Error::invalid(alloc::format!(
            "{} folds for {} ratings",
            n_folds,
            ratings.len()
        )));
    }
    let mut order: Vec<usize> = (0..ratings.len()).collect();
    order.shuffle(&mut crate::rng(seed, 0xF01D));
    let mut assignments = alloc::vec![0u32; ratings.len()];
    for (pos, &idx) in order.iter().enumerate() {
        assignments[idx] = (pos % n_folds) as u32;
    }
    Ok(FoldPlan {
        n_folds,
        assignments,
        seed,
    })
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ColdStartSplit {
    pub train: RatingTable,
    pub test: RatingTable,
    pub held_users: BTreeSet<u32>,
}

/// Removes every rating of `⌊fraction × |users|⌋` randomly chosen users.
///
/// The held users keep their profiles; their ratings become the test set.
pub fn coldstart_mask(
    ratings: &RatingTable,
    users: &[u32],
    fraction: f64,
    seed: u64,
) -> Result<ColdStartSplit> {
    if !(0.0..=1.0).contains(&fraction) {
        return Err(Error::invalid("cold-start fraction must lie in [0,1]"));
    }
    let mut pool: Vec<u32> = users.to_vec();
    pool.sort_unstable();
    pool.dedup();
    let n_held = libm::floor(fraction * pool.len() as f64) as usize;
    pool.shuffle(&mut crate::rng(seed, 0xC01D));
    let held_users: BTreeSet<u32> = pool.into_iter().take(n_held).collect();
    let train = ratings.filter(|_, r| !held_users.contains(&r.user_id));
    let test = ratings.filter(|_, r| held_users.contains(&r.user_id));
    Ok(ColdStartSplit {
        train,
        test,
        held_users,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    fn table(n: usize) -> RatingTable {
        (0..n)
            .map(|i| RatingRecord {
                user_id: (i % 10) as u32 + 1,
                item_id: i as u32 + 1,
                rating: (i % 5) as u8 + 1,
                timestamp: i as i64,
            })
            .collect()
    }

    #[test]
    fn rejects_out_of_range_rating() {
        let r = RatingRecord {
            user_id: 1,
            item_id: 1,
            rating: 6,
            timestamp: 0,
        };
        assert!(RatingTable::new(vec![r]).is_err());
        let r = RatingRecord { rating: 0, ..r };
        assert!(RatingTable::new(vec![r]).is_err());
    }

    #[test]
    fn density_examples() {
        let t = table(100_000);
        assert!((density(&t, 943, 1682).unwrap() - 0.063_04).abs() < 1e-5);
        assert_eq!(density(&table(1), 1, 1).unwrap(), 1.0);
        assert_eq!(density(&RatingTable::default(), 3, 4).unwrap(), 0.0);
        assert!(density(&table(1), 0, 4).is_err());
    }

    #[test]
    fn kfold_sizes() {
        let plan = kfold_split(&table(100_000), 5, 7).unwrap();
        assert_eq!(plan.fold_sizes(), vec![20_000; 5]);
        let mut sizes = kfold_split(&table(10), 3, 1).unwrap().fold_sizes();
        sizes.sort_unstable();
        assert_eq!(sizes, vec![3, 3, 4]);
        assert!(kfold_split(&table(2), 3, 1).is_err());
        assert!(kfold_split(&table(20), 1, 1).is_err());
    }

    #[test]
    fn kfold_deterministic() {
        let t = table(500);
        assert_eq!(
            kfold_split(&t, 5, 42).unwrap(),
            kfold_split(&t, 5, 42).unwrap()
        );
        assert_ne!(
            kfold_split(&t, 5, 42).unwrap(),
            kfold_split(&t, 5, 43).unwrap()
        );
    }

    #[test]
    fn coldstart_extremes() {
        let t = table(50);
        let users: Vec<u32> = (1..=10).collect();
        let none = coldstart_mask(&t, &users, 0.0, 3).unwrap();
        assert_eq!(none.train, t);
        assert!(none.held_users.is_empty());
        let all = coldstart_mask(&t, &users, 1.0, 3).unwrap();
        assert!(all.train.is_empty());
        assert_eq!(all.test.len(), 50);
        assert!(coldstart_mask(&t, &users, 1.5, 3).is_err());
    }

    #[test]
    fn coldstart_three_of_ten() {
        let t = table(50);
        let users: Vec<u32> = (1..=10).collect();
        let split = coldstart_mask(&t, &users, 0.3, 11).unwrap();
        assert_eq!(split.held_users.len(), 3);
        assert!(split
            .train
            .iter()
            .all(|r| !split.held_users.contains(&r.user_id)));
        assert!(split
            .test
            .iter()
            .all(|r| split.held_users.contains(&r.user_id)));
        assert_eq!(split.train.len() + split.test.len(), 50);
    }

    #[test]
    fn jaccard() {
        // Comedy=5, Drama=8, Thriller=16 in the 100K vocabulary
        let a = GenreSet::from_flags((0..19).map(|g| g == 5 || g == 8));
        let b = GenreSet::from_flags((0..19).map(|g| g == 8 || g == 16));
        assert!((a.jaccard(&b) - 1.0 / 3.0).abs() < 1e-15);
        assert_eq!(a.jaccard(&a), 1.0);
        assert_eq!(GenreSet(0).jaccard(&GenreSet(0)), 0.0);
        assert_eq!(GenreSet(1).jaccard(&GenreSet(2)), 0.0);
    }
}
