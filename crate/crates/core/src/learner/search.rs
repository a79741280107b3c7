use alloc::string::ToString;
use alloc::vec;
use alloc::vec::Vec;

use rand::seq::SliceRandom;
use rand::Rng;

use super::forest::{check_training, fit_on_rows};
use super::tree::ColumnIndex;
use super::{HyperParams, LearnError, Samples, SearchSpace};
use crate::metrics::auroc;
use crate::seed;

/// Stratified fold assignment: each class is shuffled and dealt round-robin,
/// the negatives continuing where the positives stopped so fold sizes differ
/// by at most one.
pub fn stratified_folds(labels: &[bool], k: usize, seed: u64) -> Result<Vec<usize>, LearnError> {
    if k < 2 {
        return Err(LearnError::InvalidHyperParams("cross-validation needs k >= 2".into()));
    }
    let mut pos: Vec<usize> = (0..labels.len()).filter(|&i| labels[i]).collect();
    let mut neg: Vec<usize> = (0..labels.len()).filter(|&i| !labels[i]).collect();
    let minority = pos.len().min(neg.len());
    if minority < k {
        return Err(LearnError::TooFewPerClass { needed: k, got: minority });
    }
    let mut rng = seed::rng(seed);
    pos.shuffle(&mut rng);
    neg.shuffle(&mut rng);
    let mut fold = vec![0; labels.len()];
    for (j, &i) in pos.iter().chain(&neg).enumerate() {
        fold[i] = j % k;
    }
    Ok(fold)
}

fn cv_on_index(
    index: &ColumnIndex,
    samples: &Samples<'_>,
    labels: &[bool],
    folds: &[usize],
    k: usize,
    hp: &HyperParams,
    seed: u64,
) -> Result<f64, LearnError> {
    let mut total = 0.0;
    for f in 0..k {
        let train: Vec<u32> = (0..labels.len() as u32).filter(|&i| folds[i as usize] != f).collect();
        let held: Vec<usize> = (0..labels.len()).filter(|&i| folds[i] == f).collect();
        let model = fit_on_rows(index, labels, &train, hp, seed::derive(seed, &[f as u64]))?;
        let scores: Vec<f64> = held.iter().map(|&i| model.predict_row(samples.row(i))).collect();
        let truth: Vec<bool> = held.iter().map(|&i| labels[i]).collect();
        total += auroc(&scores, &truth)?;
    }
    Ok(total / k as f64)
}

/// Mean held-out AUROC over a stratified `k`-fold partition.
pub fn cross_val_auroc(samples: &Samples<'_>, labels: &[bool], hp: &HyperParams, k: usize, seed: u64) -> Result<f64, LearnError> {
    check_training(samples, labels)?;
    hp.validate()?;
    let folds = stratified_folds(labels, k, seed::derive(seed, &[seed::label("folds")]))?;
    let index = ColumnIndex::new(samples);
    cv_on_index(&index, samples, labels, &folds, k, hp, seed)
}

/// Index of the first maximum among the defined values.
pub fn argmax_first(values: &[Option<f64>]) -> Option<usize> {
    let mut best: Option<(usize, f64)> = None;
    for (i, v) in values.iter().enumerate() {
        if let Some(v) = v {
            if best.is_none_or(|(_, b)| *v > b) {
                best = Some((i, *v));
            }
        }
    }
    best.map(|(i, _)| i)
}

#[derive(Debug, Clone, PartialEq)]
pub struct SearchOutcome {
    pub best: HyperParams,
    pub best_auroc: f64,
    /// Every sampled candidate with its CV AUROC (`None` if it failed).
    pub evaluated: Vec<(HyperParams, Option<f64>)>,
}

/// Draws `space.n_iter` candidates and keeps the one with the highest mean
/// CV AUROC, the earliest draw winning ties. All candidates share one fold
/// partition.
pub fn random_search(
    samples: &Samples<'_>,
    labels: &[bool],
    space: &SearchSpace,
    k: usize,
    seed: u64,
) -> Result<SearchOutcome, LearnError> {
    space.validate()?;
    check_training(samples, labels)?;
    let folds = stratified_folds(labels, k, seed::derive(seed, &[seed::label("folds")]))?;
    let index = ColumnIndex::new(samples);

    let mut rng = seed::rng(seed::derive(seed, &[seed::label("candidates")]));
    let mut pick = |n: usize| rng.random_range(0..n);
    let candidates: Vec<HyperParams> = (0..space.n_iter)
        .map(|_| HyperParams {
            n_trees: space.n_trees[pick(space.n_trees.len())],
            max_depth: space.max_depth[pick(space.max_depth.len())],
            min_samples_leaf: space.min_samples_leaf[pick(space.min_samples_leaf.len())],
            max_features_fraction: space.max_features_fraction[pick(space.max_features_fraction.len())],
            bootstrap: space.bootstrap[pick(space.bootstrap.len())],
        })
        .collect();

    let mut last_error = None;
    let evaluated: Vec<(HyperParams, Option<f64>)> = candidates
        .iter()
        .enumerate()
        .map(|(i, hp)| {
            let forest_seed = seed::derive(seed, &[seed::label("candidate"), i as u64]);
            match cv_on_index(&index, samples, labels, &folds, k, hp, forest_seed) {
                Ok(a) => (*hp, Some(a)),
                Err(e) => {
                    last_error = Some(e);
                    (*hp, None)
                }
            }
        })
        .collect();
    let scores: Vec<Option<f64>> = evaluated.iter().map(|e| e.1).collect();
    match argmax_first(&scores) {
        Some(i) => Ok(SearchOutcome {
            best: evaluated[i].0,
            best_auroc: scores[i].unwrap_or(f64::NAN),
            evaluated,
        }),
        None => Err(LearnError::AllCandidatesFailed(
            last_error.map(|e| e.to_string()).unwrap_or_default(),
        )),
    }
}
