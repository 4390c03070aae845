use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use super::dataset::ToyDataset;
use crate::error::{Error, Result};

/// Client-to-class assignment and the sample shards that realise it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PartitionSpec {
    pub clients: usize,
    pub classes_per_client: usize,
    /// Sorted class list per client.
    pub assignment: Vec<Vec<usize>>,
    /// Dataset row indices per client.
    pub shards: Vec<Vec<usize>>,
}

impl PartitionSpec {
    pub fn shard_sizes(&self) -> Vec<usize> {
        self.shards.iter().map(Vec::len).collect()
    }
}

const SHUFFLE_ATTEMPTS: usize = 1000;

/// Each class is held by `clients * classes_per_client / K` clients and split
/// into equal shards among them.
pub fn partition_non_iid<R: Rng + ?Sized>(
    dataset: &ToyDataset,
    clients: usize,
    classes_per_client: usize,
    rng: &mut R,
) -> Result<PartitionSpec> {
    let k = dataset.classes();
    if clients == 0 || classes_per_client == 0 {
        return Err(Error::config("need at least one client and one class per client"));
    }
    if classes_per_client > k {
        return Err(Error::config(format!(
            "{classes_per_client} classes per client but only {k} classes"
        )));
    }
    if !(clients * classes_per_client).is_multiple_of(k) {
        return Err(Error::config(format!(
            "{clients} clients x {classes_per_client} classes cannot cover {k} classes evenly"
        )));
    }
    let holders = clients * classes_per_client / k;
    let mut by_class: Vec<Vec<usize>> = vec![Vec::new(); k];
    for (i, &label) in dataset.labels.iter().enumerate() {
        by_class[label].push(i);
    }
    if let Some((c, rows)) = by_class.iter().enumerate().find(|(_, rows)| rows.len() % holders != 0) {
        return Err(Error::config(format!(
            "class {c} has {} samples, not divisible into {holders} shards",
            rows.len()
        )));
    }

    let assignment = assign_classes(clients, classes_per_client, k, holders, rng);

    let mut next_shard = vec![0usize; k];
    let mut shuffled = by_class;
    for rows in &mut shuffled {
        rows.shuffle(rng);
    }
    let mut shards = Vec::with_capacity(clients);
    for classes in &assignment {
        let mut shard = Vec::new();
        for &c in classes {
            let size = shuffled[c].len() / holders;
            let start = next_shard[c] * size;
            shard.extend_from_slice(&shuffled[c][start..start + size]);
            next_shard[c] += 1;
        }
        shard.sort_unstable();
        shards.push(shard);
    }
    Ok(PartitionSpec {
        clients,
        classes_per_client,
        assignment,
        shards,
    })
}

/// Random slot shuffles until every client holds distinct classes; falls back
/// to a cyclic layout over a random class permutation.
fn assign_classes<R: Rng + ?Sized>(
    clients: usize,
    per_client: usize,
    classes: usize,
    holders: usize,
    rng: &mut R,
) -> Vec<Vec<usize>> {
    let mut slots: Vec<usize> = (0..classes).flat_map(|c| std::iter::repeat_n(c, holders)).collect();
    for _ in 0..SHUFFLE_ATTEMPTS {
        slots.shuffle(rng);
        let candidate: Vec<Vec<usize>> = slots
            .chunks(per_client)
            .map(|chunk| {
                let mut v = chunk.to_vec();
                v.sort_unstable();
                v
            })
            .collect();
        if candidate.iter().all(|v| v.windows(2).all(|w| w[0] != w[1])) {
            return candidate;
        }
    }
    let mut perm: Vec<usize> = (0..classes).collect();
    perm.shuffle(rng);
    (0..clients)
        .map(|n| {
            let mut v: Vec<usize> = (0..per_client).map(|j| perm[(n * per_client + j) % classes]).collect();
            v.sort_unstable();
            v
        })
        .collect()
}
