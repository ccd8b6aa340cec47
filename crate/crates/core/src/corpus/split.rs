use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::passage::Passage;
use crate::error::{Error, Result};

pub const MIN_SPLIT_SIZE: usize = 10;

/// Train / validation / test partition of the labeled passages.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DatasetSplit {
    pub seed: u64,
    pub train_ids: Vec<String>,
    pub val_ids: Vec<String>,
    pub test_ids: Vec<String>,
}

impl DatasetSplit {
    pub fn len(&self) -> usize {
        self.train_ids.len() + self.val_ids.len() + self.test_ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

/// Shuffles the labeled passages and cuts 70/30 into train-pool and test,
/// then the pool 80/20 into train and validation.
///
/// Passages are first ordered by id, then shuffled with a Fisher–Yates
/// shuffle (`rand::seq::SliceRandom`) driven by `ChaCha8Rng::seed_from_u64(seed)`.
/// The result depends only on the set of ids and the seed.
pub fn split_dataset(labeled: &[Passage], seed: u64) -> Result<DatasetSplit> {
    if let Some(p) = labeled.iter().find(|p| p.gold_labels.is_none()) {
        return Err(Error::Unlabeled(p.id.clone()));
    }
    let n = labeled.len();
    if n < MIN_SPLIT_SIZE {
        return Err(Error::SplitTooSmall(n));
    }
    let mut ids: Vec<String> = labeled.iter().map(|p| p.id.clone()).collect();
    ids.sort();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    ids.shuffle(&mut rng);

    let pool = n * 7 / 10;
    let train = pool * 8 / 10;
    let test_ids = ids.split_off(pool);
    let val_ids = ids.split_off(train);
    Ok(DatasetSplit {
        seed,
        train_ids: ids,
        val_ids,
        test_ids,
    })
}
