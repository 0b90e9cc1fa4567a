use std::collections::{BTreeSet, HashMap};

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::Sample;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SplitName {
    Train,
    Validation,
    Test,
}

impl SplitName {
    pub const ALL: [SplitName; 3] = [SplitName::Train, SplitName::Validation, SplitName::Test];

    pub fn as_str(self) -> &'static str {
        match self {
            SplitName::Train => "train",
            SplitName::Validation => "validation",
            SplitName::Test => "test",
        }
    }
}

impl std::str::FromStr for SplitName {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        SplitName::ALL
            .into_iter()
            .find(|n| n.as_str() == s)
            .ok_or_else(|| Error::Config(format!("unknown split `{s}` (train, validation, test)")))
    }
}

/// Number of word types per split.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SplitCounts {
    pub train: usize,
    pub validation: usize,
    pub test: usize,
}

impl SplitCounts {
    /// Rounds validation and test shares; the remainder goes to training.
    pub fn from_fractions(n_types: usize, validation: f64, test: f64) -> Result<Self> {
        if !(0.0..1.0).contains(&validation) || !(0.0..1.0).contains(&test) || validation + test >= 1.0 {
            return Err(Error::Config(format!("invalid split fractions {validation} / {test}")));
        }
        let v = (n_types as f64 * validation).round() as usize;
        let t = (n_types as f64 * test).round() as usize;
        let train = n_types
            .checked_sub(v + t)
            .ok_or_else(|| Error::Config("split fractions exceed the number of word types".into()))?;
        Ok(Self { train, validation: v, test: t })
    }

    pub fn total(&self) -> usize {
        self.train + self.validation + self.test
    }
}

/// Word-type disjoint train/validation/test lists.
#[derive(Debug, Clone, Default)]
pub struct DatasetSplit {
    pub train: Vec<Sample>,
    pub validation: Vec<Sample>,
    pub test: Vec<Sample>,
}

impl DatasetSplit {
    pub fn get(&self, name: SplitName) -> &[Sample] {
        match name {
            SplitName::Train => &self.train,
            SplitName::Validation => &self.validation,
            SplitName::Test => &self.test,
        }
    }

    pub fn word_types(&self, name: SplitName) -> BTreeSet<&str> {
        self.get(name).iter().map(|s| s.word_type.as_str()).collect()
    }
}

/// Shuffles the distinct word types with `seed` and assigns each to a split.
pub fn assign_word_types<'a, I>(word_types: I, counts: SplitCounts, seed: u64) -> Result<HashMap<String, SplitName>>
where
    I: IntoIterator<Item = &'a str>,
{
    let distinct: BTreeSet<&str> = word_types.into_iter().collect();
    if counts.total() != distinct.len() {
        return Err(Error::Config(format!(
            "split counts {}+{}+{} do not sum to the {} distinct word types",
            counts.train,
            counts.validation,
            counts.test,
            distinct.len()
        )));
    }
    let mut types: Vec<&str> = distinct.into_iter().collect();
    types.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    Ok(types
        .into_iter()
        .enumerate()
        .map(|(i, t)| {
            let name = if i < counts.train {
                SplitName::Train
            } else if i < counts.train + counts.validation {
                SplitName::Validation
            } else {
                SplitName::Test
            };
            (t.to_string(), name)
        })
        .collect())
}

/// Partitions samples so that no word type appears in more than one split.
pub fn split_by_word_type(samples: Vec<Sample>, counts: SplitCounts, seed: u64) -> Result<DatasetSplit> {
    let owner = assign_word_types(samples.iter().map(|s| s.word_type.as_str()), counts, seed)?;
    let mut split = DatasetSplit::default();
    for s in samples {
        match owner[&s.word_type] {
            SplitName::Train => split.train.push(s),
            SplitName::Validation => split.validation.push(s),
            SplitName::Test => split.test.push(s),
        }
    }
    Ok(split)
}
