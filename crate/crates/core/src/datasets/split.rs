use std::collections::BTreeSet;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::sample::GraspSample;
use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SplitMode {
    ImageWise,
    ObjectWise,
}

fn n_train(n: usize, fraction: f64) -> usize {
    ((n as f64 * fraction + 1e-9).floor() as usize).min(n)
}

/// Seeded train/validation partition. Object-wise splits keep every object on
/// one side; the fraction then applies to the number of distinct objects.
pub fn split(
    samples: Vec<GraspSample>,
    mode: SplitMode,
    train_fraction: f64,
    seed: u64,
) -> Result<(Vec<GraspSample>, Vec<GraspSample>)> {
    if !(train_fraction > 0.0 && train_fraction < 1.0) {
        return Err(Error::Config(format!("train fraction must lie in (0, 1), got {train_fraction}")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    match mode {
        SplitMode::ImageWise => {
            let mut order: Vec<usize> = (0..samples.len()).collect();
            order.shuffle(&mut rng);
            let cut = n_train(samples.len(), train_fraction);
            let mut train_idx = order[..cut].to_vec();
            train_idx.sort_unstable();
            let mut is_train = vec![false; samples.len()];
            train_idx.iter().for_each(|&i| is_train[i] = true);
            Ok(partition(samples, |i, _| is_train[i]))
        }
        SplitMode::ObjectWise => {
            if let Some(s) = samples.iter().find(|s| s.object_id.is_none()) {
                return Err(Error::Config(format!(
                    "object-wise split needs object ids, sample {} has none",
                    s.id
                )));
            }
            let objects: BTreeSet<&str> = samples.iter().filter_map(|s| s.object_id.as_deref()).collect();
            let mut objects: Vec<String> = objects.into_iter().map(str::to_owned).collect();
            objects.shuffle(&mut rng);
            let cut = n_train(objects.len(), train_fraction);
            let train_objects: BTreeSet<String> = objects[..cut].iter().cloned().collect();
            Ok(partition(samples, |_, s| train_objects.contains(s.object_id.as_deref().unwrap_or_default())))
        }
    }
}

fn partition(samples: Vec<GraspSample>, is_train: impl Fn(usize, &GraspSample) -> bool) -> (Vec<GraspSample>, Vec<GraspSample>) {
    let mut train = Vec::new();
    let mut val = Vec::new();
    for (i, s) in samples.into_iter().enumerate() {
        if is_train(i, &s) {
            train.push(s);
        } else {
            val.push(s);
        }
    }
    (train, val)
}
