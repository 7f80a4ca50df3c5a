use rand::seq::SliceRandom;

use super::LabeledDataset;
use crate::rng;
use crate::{Error, Result};

/// Train/test split at subject granularity.
///
/// Subjects are shuffled with the split stream of `seed`; the first
/// `round(test_fraction·S)` (clamped to `[1, S−1]`) go to the test set.
pub fn grouped_split(ds: &LabeledDataset, test_fraction: f64, seed: u64) -> Result<(LabeledDataset, LabeledDataset)> {
    if !(test_fraction > 0.0 && test_fraction < 1.0) {
        return Err(Error::invalid("test_fraction must lie in (0, 1)"));
    }
    let mut subjects: Vec<&str> = Vec::new();
    for id in &ds.subject_ids {
        if !subjects.contains(&id.as_str()) {
            subjects.push(id);
        }
    }
    if subjects.len() < 2 {
        return Err(Error::CannotSplit(format!("{} distinct subject(s)", subjects.len())));
    }
    subjects.shuffle(&mut rng::stream(seed, rng::STREAM_SPLIT));
    let n_test = ((test_fraction * subjects.len() as f64).round() as usize).clamp(1, subjects.len() - 1);
    let test_subjects: std::collections::HashSet<&str> = subjects[..n_test].iter().copied().collect();
    let (test_idx, train_idx): (Vec<usize>, Vec<usize>) =
        (0..ds.len()).partition(|&i| test_subjects.contains(ds.subject_ids[i].as_str()));
    Ok((ds.select(&train_idx), ds.select(&test_idx)))
}
