use std::collections::HashSet;

use super::Dataset;
use crate::error::{Error, Result};
use crate::numerics::Rng;

/// Splits a seeded permutation of `0..ds.len()` into consecutive batches.
///
/// A short final batch is dropped when it holds fewer than two samples or a
/// single class, since such a batch gives contrastive anchors no negatives.
pub fn make_batches(ds: &Dataset, batch_size: usize, rng: &mut Rng) -> Result<Vec<Vec<usize>>> {
    if batch_size < 2 {
        return Err(Error::Contract(format!(
            "batch_size must be >= 2, got {batch_size}"
        )));
    }
    let mut order: Vec<usize> = (0..ds.len()).collect();
    rng.shuffle(&mut order);
    let samples = ds.samples();
    let mut batches: Vec<Vec<usize>> = order.chunks(batch_size).map(<[usize]>::to_vec).collect();
    if let Some(last) = batches.last() {
        let distinct: HashSet<i32> = last.iter().map(|&i| samples[i].y).collect();
        if last.len() < batch_size && (last.len() < 2 || distinct.len() < 2) {
            batches.pop();
        }
    }
    Ok(batches)
}
