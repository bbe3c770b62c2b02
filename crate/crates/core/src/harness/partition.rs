use rand::seq::SliceRandom;

use crate::error::{invalid, Result};
use crate::rng::SeededRng;

use super::dataset::Dataset;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PartitionMode {
    IidEqual,
    LabelSorted,
}

impl PartitionMode {
    pub fn name(self) -> &'static str {
        match self {
            PartitionMode::IidEqual => "iid",
            PartitionMode::LabelSorted => "label_sorted",
        }
    }

    pub fn from_name(name: &str) -> Option<Self> {
        match name {
            "iid" | "iid_equal" => Some(PartitionMode::IidEqual),
            "label_sorted" | "noniid" | "non_iid" => Some(PartitionMode::LabelSorted),
            _ => None,
        }
    }
}

/// Splits example indices into `n` disjoint shards covering the dataset.
/// `IidEqual` shuffles and deals round-robin; `LabelSorted` sorts stably by
/// label and cuts contiguous blocks whose sizes differ by at most one.
pub fn partition_dataset(dataset: &Dataset, mode: PartitionMode, n: usize, rng: &mut SeededRng) -> Result<Vec<Vec<usize>>> {
    if n == 0 || dataset.len() < n {
        return invalid(format!("cannot split {} examples among {n} workers", dataset.len()));
    }
    let mut idx: Vec<usize> = (0..dataset.len()).collect();
    match mode {
        PartitionMode::IidEqual => {
            idx.shuffle(rng);
            let mut shards = vec![Vec::new(); n];
            for (k, i) in idx.into_iter().enumerate() {
                shards[k % n].push(i);
            }
            Ok(shards)
        }
        PartitionMode::LabelSorted => {
            idx.sort_by_key(|&i| dataset.labels[i]);
            let (base, extra) = (dataset.len() / n, dataset.len() % n);
            let mut shards = Vec::with_capacity(n);
            let mut start = 0;
            for w in 0..n {
                let size = base + usize::from(w < extra);
                shards.push(idx[start..start + size].to_vec());
                start += size;
            }
            Ok(shards)
        }
    }
}
