//! Forest, cross-validation and search behaviour.

use ehrdrift_core::learner::{
    cross_val_auroc, fit_forest, predict_proba, random_search, HyperParams, Node, Samples, SearchSpace,
};
use ehrdrift_core::metrics::auroc;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn stump() -> HyperParams {
    HyperParams {
        n_trees: 1,
        max_depth: Some(1),
        min_samples_leaf: 1,
        max_features_fraction: 1.0,
        bootstrap: false,
    }
}

/// Best impurity decrease over every column and every threshold between
/// adjacent distinct values, by direct evaluation of Gini impurity.
fn exhaustive_best_gain(x: &[f64], d: usize, y: &[bool]) -> f64 {
    let n = y.len();
    let gini = |rows: &[usize]| {
        if rows.is_empty() {
            return 0.0;
        }
        let p = rows.iter().filter(|&&r| y[r]).count() as f64 / rows.len() as f64;
        2.0 * p * (1.0 - p)
    };
    let all: Vec<usize> = (0..n).collect();
    let parent = gini(&all);
    let mut best = 0.0f64;
    for c in 0..d {
        let mut values: Vec<f64> = (0..n).map(|r| x[r * d + c]).collect();
        values.sort_by(f64::total_cmp);
        values.dedup();
        for w in values.windows(2) {
            let t = (w[0] + w[1]) / 2.0;
            let (l, r): (Vec<usize>, Vec<usize>) = all.iter().partition(|&&i| x[i * d + c] <= t);
            let child = (l.len() as f64 * gini(&l) + r.len() as f64 * gini(&r)) / n as f64;
            best = best.max(parent - child);
        }
    }
    best
}

fn separable(n: usize, seed: u64) -> (Vec<f64>, Vec<bool>) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut x = Vec::with_capacity(2 * n);
    let mut y = Vec::with_capacity(n);
    for _ in 0..n {
        let (a, b): (f64, f64) = (rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0));
        x.extend([a, b]);
        y.push(a + 0.5 * b > 0.0);
    }
    (x, y)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn stump_finds_the_best_gini_split(
        rows in prop::collection::vec((0u8..6, 0u8..6, any::<bool>()), 4..40)
    ) {
        let x: Vec<f64> = rows.iter().flat_map(|r| [f64::from(r.0), f64::from(r.1)]).collect();
        let y: Vec<bool> = rows.iter().map(|r| r.2).collect();
        let m = fit_forest(&Samples::new(&x, 2).unwrap(), &y, &stump(), 0).unwrap();
        let best = exhaustive_best_gain(&x, 2, &y);
        match m.trees[0].nodes[0] {
            Node::Split { column, threshold, .. } => {
                let n = y.len() as f64;
                let (l, r): (Vec<usize>, Vec<usize>) = (0..y.len()).partition(|&i| x[i * 2 + column as usize] <= threshold);
                let g = |rows: &[usize]| {
                    let p = rows.iter().filter(|&&i| y[i]).count() as f64 / rows.len() as f64;
                    rows.len() as f64 * 2.0 * p * (1.0 - p)
                };
                let all: Vec<usize> = (0..y.len()).collect();
                let gain = (g(&all) - g(&l) - g(&r)) / n;
                prop_assert!((gain - best).abs() < 1e-12, "{gain} vs {best}");
            }
            Node::Leaf { .. } => prop_assert!(best <= 1e-12 || m.degenerate),
        }
    }

    #[test]
    fn fitting_is_a_function_of_the_seed(seed in any::<u64>()) {
        let (x, y) = separable(60, seed);
        let s = Samples::new(&x, 2).unwrap();
        let hp = HyperParams { n_trees: 5, max_features_fraction: 0.5, ..HyperParams::default() };
        prop_assert_eq!(fit_forest(&s, &y, &hp, seed).unwrap(), fit_forest(&s, &y, &hp, seed).unwrap());
    }

    #[test]
    fn scores_are_probabilities(seed in any::<u64>()) {
        let (x, y) = separable(50, seed);
        let s = Samples::new(&x, 2).unwrap();
        let m = fit_forest(&s, &y, &HyperParams { n_trees: 7, ..HyperParams::default() }, seed).unwrap();
        prop_assert!(predict_proba(&m, &s).unwrap().iter().all(|p| (0.0..=1.0).contains(p)));
    }
}

#[test]
fn separable_task_is_learned() {
    let (x, y) = separable(400, 7);
    let s = Samples::new(&x, 2).unwrap();
    let cv = cross_val_auroc(&s, &y, &HyperParams::default(), 5, 11).unwrap();
    assert!(cv >= 0.95, "cv auroc {cv}");
}

#[test]
fn permuted_labels_are_not_learned() {
    let (x, y) = separable(400, 8);
    let mut shuffled = y.clone();
    rand::seq::SliceRandom::shuffle(shuffled.as_mut_slice(), &mut ChaCha8Rng::seed_from_u64(3));
    let s = Samples::new(&x, 2).unwrap();
    let cv = cross_val_auroc(&s, &shuffled, &HyperParams::default(), 5, 11).unwrap();
    assert!((0.4..=0.6).contains(&cv), "cv auroc {cv}");
}

#[test]
fn held_out_scores_on_separable_data() {
    let (x, y) = separable(400, 9);
    let (xt, yt) = separable(400, 10);
    let m = fit_forest(&Samples::new(&x, 2).unwrap(), &y, &HyperParams::default(), 1).unwrap();
    let p = predict_proba(&m, &Samples::new(&xt, 2).unwrap()).unwrap();
    assert!(auroc(&p, &yt).unwrap() >= 0.95);
}

#[test]
fn single_candidate_search_is_plain_cross_validation() {
    let (x, y) = separable(120, 4);
    let s = Samples::new(&x, 2).unwrap();
    let hp = HyperParams { n_trees: 10, ..HyperParams::default() };
    let out = random_search(&s, &y, &SearchSpace::single(hp), 5, 21).unwrap();
    assert_eq!(out.best, hp);
    assert_eq!(out.evaluated.len(), 1);
    assert!((0.0..=1.0).contains(&out.best_auroc));
}

#[test]
fn search_is_deterministic_and_keeps_the_best() {
    let (x, y) = separable(150, 5);
    let s = Samples::new(&x, 2).unwrap();
    let space = SearchSpace { n_trees: vec![5, 10], n_iter: 4, ..SearchSpace::default() };
    let a = random_search(&s, &y, &space, 5, 99).unwrap();
    let b = random_search(&s, &y, &space, 5, 99).unwrap();
    assert_eq!(a, b);
    let top = a.evaluated.iter().filter_map(|e| e.1).fold(f64::NEG_INFINITY, f64::max);
    assert_eq!(a.best_auroc, top);
    let first = a.evaluated.iter().position(|e| e.1 == Some(top)).unwrap();
    assert_eq!(a.best, a.evaluated[first].0);
}

#[test]
fn search_rejects_empty_spaces() {
    let (x, y) = separable(40, 1);
    let s = Samples::new(&x, 2).unwrap();
    let space = SearchSpace { max_depth: vec![], ..SearchSpace::default() };
    assert!(random_search(&s, &y, &space, 5, 0).is_err());
}
