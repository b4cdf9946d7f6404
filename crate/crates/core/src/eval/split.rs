use std::collections::BTreeMap;

use rand::seq::SliceRandom;

use crate::error::{Result, TriageError};
use crate::labeling::LabeledEmail;
use crate::rng::seeded;

/// Stratified train/test split.
///
/// Each category contributes `floor(ratio * n)` items to train; the
/// leftover slots needed to reach `round(ratio * total)` go to the
/// categories with the largest fractional remainders (ties by category
/// name). Within a category, membership is decided by a seeded shuffle.
/// Both outputs keep the input order.
pub fn stratified_split<T: Clone>(
    items: &[T],
    label: impl Fn(&T) -> &str,
    train_ratio: f64,
    seed: u64,
) -> Result<(Vec<T>, Vec<T>)> {
    if !(train_ratio > 0.0 && train_ratio < 1.0) {
        return Err(TriageError::invalid(format!(
            "train ratio must be in (0, 1), got {train_ratio}"
        )));
    }
    let mut groups: BTreeMap<&str, Vec<usize>> = BTreeMap::new();
    for (i, item) in items.iter().enumerate() {
        groups.entry(label(item)).or_default().push(i);
    }
    if groups.is_empty() {
        return Err(TriageError::EmptyCorpus);
    }
    for (name, idx) in &groups {
        if idx.len() < 2 {
            return Err(TriageError::TooFewToSplit {
                category: name.to_string(),
                count: idx.len(),
            });
        }
    }

    const EPS: f64 = 1e-9;
    let target = (train_ratio * items.len() as f64 + EPS).round() as usize;
    let mut quota: Vec<(usize, f64)> = groups
        .values()
        .map(|idx| {
            let exact = train_ratio * idx.len() as f64;
            let base = (exact + EPS).floor();
            (base as usize, exact - base)
        })
        .collect();
    let assigned: usize = quota.iter().map(|q| q.0).sum();
    let mut by_remainder: Vec<usize> = (0..quota.len()).collect();
    by_remainder.sort_by(|&a, &b| quota[b].1.total_cmp(&quota[a].1).then(a.cmp(&b)));
    for &g in by_remainder.iter().take(target.saturating_sub(assigned)) {
        quota[g].0 += 1;
    }

    let mut rng = seeded(seed);
    let mut in_train = vec![false; items.len()];
    for (idx, (n_train, _)) in groups.values().zip(&quota) {
        let mut shuffled = idx.clone();
        shuffled.shuffle(&mut rng);
        for &i in &shuffled[..*n_train] {
            in_train[i] = true;
        }
    }
    let mut train = Vec::with_capacity(target);
    let mut test = Vec::with_capacity(items.len() - target);
    for (item, &t) in items.iter().zip(&in_train) {
        if t {
            train.push(item.clone());
        } else {
            test.push(item.clone());
        }
    }
    Ok((train, test))
}

pub fn split_labeled(
    data: &[LabeledEmail],
    train_ratio: f64,
    seed: u64,
) -> Result<(Vec<LabeledEmail>, Vec<LabeledEmail>)> {
    stratified_split(data, |e| e.category.as_str(), train_ratio, seed)
}
