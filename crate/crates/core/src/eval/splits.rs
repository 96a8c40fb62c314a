use std::collections::BTreeSet;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Reference protocol: 2190 images split 1100 train / 1090 test.
const REF_TRAIN: usize = 1100;
const REF_TOTAL: usize = 2190;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Split {
    pub train: Vec<String>,
    pub test: Vec<String>,
}

/// Seeded train/test partitions of the image ids.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SplitSpec {
    pub seed: u64,
    pub splits: Vec<Split>,
}

impl SplitSpec {
    pub fn len(&self) -> usize {
        self.splits.len()
    }

    pub fn is_empty(&self) -> bool {
        self.splits.is_empty()
    }

    /// Every split must be a disjoint cover of the same image set.
    pub fn validate(&self) -> Result<()> {
        let mut universe: Option<BTreeSet<&str>> = None;
        for (i, s) in self.splits.iter().enumerate() {
            let train: BTreeSet<&str> = s.train.iter().map(String::as_str).collect();
            let test: BTreeSet<&str> = s.test.iter().map(String::as_str).collect();
            if train.len() != s.train.len() || test.len() != s.test.len() {
                return Err(Error::Invalid(format!("split {i} repeats an image id")));
            }
            if !train.is_disjoint(&test) {
                return Err(Error::Invalid(format!("split {i}: train and test overlap")));
            }
            let all: BTreeSet<&str> = train.union(&test).copied().collect();
            match &universe {
                None => universe = Some(all),
                Some(u) if *u != all => {
                    return Err(Error::Invalid(format!("split {i} covers a different image set")))
                }
                Some(_) => {}
            }
        }
        Ok(())
    }
}

/// Train-set size for `n` images: `n · 1100/2190` rounded half up, kept
/// within `1..n`.
pub fn train_size(n: usize) -> usize {
    let t = (n * REF_TRAIN + REF_TOTAL / 2) / REF_TOTAL;
    t.clamp(1, n.saturating_sub(1).max(1))
}

/// `n` seeded random partitions of the image ids into train and test.
/// The input order does not matter.
///
/// ```
/// use factqa::eval::make_splits;
/// let ids: Vec<String> = (0..10).map(|i| format!("img{i}")).collect();
/// let spec = make_splits(&ids, 5, 7).unwrap();
/// assert!(spec.splits.iter().all(|s| s.train.len() == 5 && s.test.len() == 5));
/// ```
pub fn make_splits<S: AsRef<str>>(image_ids: &[S], n: usize, seed: u64) -> Result<SplitSpec> {
    let ids: BTreeSet<&str> = image_ids.iter().map(AsRef::as_ref).collect();
    if ids.len() < 2 {
        return Err(Error::Invalid(format!(
            "need at least 2 distinct images to split, got {}",
            ids.len()
        )));
    }
    if ids.len() != image_ids.len() {
        return Err(Error::Invalid("duplicate image ids".into()));
    }
    let sorted: Vec<&str> = ids.into_iter().collect();
    let n_train = train_size(sorted.len());
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let splits = (0..n)
        .map(|_| {
            let mut order = sorted.clone();
            order.shuffle(&mut rng);
            let (train, test) = order.split_at(n_train);
            let mut train: Vec<String> = train.iter().map(|s| s.to_string()).collect();
            let mut test: Vec<String> = test.iter().map(|s| s.to_string()).collect();
            train.sort();
            test.sort();
            Split { train, test }
        })
        .collect();
    Ok(SplitSpec { seed, splits })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn ids(n: usize) -> Vec<String> {
        (0..n).map(|i| format!("img{i:05}")).collect()
    }

    #[test]
    fn reference_sizes() {
        assert_eq!(train_size(2190), 1100);
        assert_eq!(train_size(10), 5);
        assert_eq!(train_size(2), 1);
        let spec = make_splits(&ids(2190), 5, 1).unwrap();
        assert_eq!(spec.len(), 5);
        for s in &spec.splits {
            assert_eq!((s.train.len(), s.test.len()), (1100, 1090));
        }
        spec.validate().unwrap();
    }

    #[test]
    fn splits_differ_between_rounds() {
        let spec = make_splits(&ids(100), 5, 3).unwrap();
        assert_ne!(spec.splits[0], spec.splits[1]);
    }

    #[test]
    fn too_few_images() {
        assert!(make_splits(&ids(1), 5, 0).is_err());
        assert!(make_splits(&["a", "a"], 5, 0).is_err());
    }

    proptest! {
        #[test]
        fn exact_partitions(n in 2usize..200, rounds in 1usize..6, seed in any::<u64>()) {
            let all = ids(n);
            let spec = make_splits(&all, rounds, seed).unwrap();
            prop_assert_eq!(spec.len(), rounds);
            prop_assert!(spec.validate().is_ok());
            for s in &spec.splits {
                prop_assert_eq!(s.train.len() + s.test.len(), n);
                prop_assert!(!s.train.is_empty() && !s.test.is_empty());
            }
            let mut reversed = all.clone();
            reversed.reverse();
            prop_assert_eq!(make_splits(&reversed, rounds, seed).unwrap(), spec);
        }
    }
}
