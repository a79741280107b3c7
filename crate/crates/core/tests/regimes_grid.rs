//! Regime runs on a small cohort.

use ehrdrift_core::learner::{HyperParams, SearchSpace};
use ehrdrift_core::pipeline::{include_cohort, Representation};
use ehrdrift_core::regimes::{
    compare, plan_jobs, run_continuous, run_job, run_jobs, run_one_time, run_saturation, run_short_term,
    run_year_agnostic, sort_records, Experiment, RegimeError, RegimeKind, RegimeSpec, Task,
};
use ehrdrift_core::synthdata::{default_config, generate_cohort, SynthConfig};
use ehrdrift_core::{AggregationMap, Cohort};

fn setup() -> (Cohort, AggregationMap, SearchSpace) {
    let cfg = SynthConfig {
        year_start: 2001,
        year_end: 2005,
        changeover_year: 2004,
        patients_per_year: 80,
        ..default_config()
    };
    let cohort = include_cohort(&generate_cohort(&cfg).unwrap());
    let space = SearchSpace::single(HyperParams {
        n_trees: 8,
        max_depth: Some(4),
        min_samples_leaf: 5,
        max_features_fraction: 0.1,
        bootstrap: true,
    });
    (cohort, cfg.aggregation_map(), space)
}

fn one_time(repr: Representation) -> RegimeSpec {
    RegimeSpec {
        n_repeats: 3,
        ..RegimeSpec::new(
            RegimeKind::OneTime { train_years: vec![2001, 2002] },
            Task::Mortality,
            repr,
            vec![2003, 2004, 2005],
            7,
        )
    }
}

#[test]
fn one_time_records_cover_every_year_and_repeat() {
    let (cohort, map, space) = setup();
    let exp = Experiment { cohort: &cohort, map: &map, search: &space, cv_folds: 5 };
    let records = run_one_time(&exp, &one_time(Representation::ItemId)).unwrap();
    assert_eq!(records.len(), 9);
    for r in &records {
        assert_eq!(r.train_years, [2001, 2002]);
        assert!(r.status.is_ok(), "{:?}", r.status);
        assert!((0.0..=1.0).contains(&r.auroc.unwrap()));
        assert_eq!(r.n_train, 160);
    }
    assert_eq!(records, run_one_time(&exp, &one_time(Representation::ItemId)).unwrap());
}

#[test]
fn any_slice_of_the_grid_reproduces_the_full_run() {
    let (cohort, map, space) = setup();
    let exp = Experiment { cohort: &cohort, map: &map, search: &space, cv_folds: 5 };
    let mut spec = one_time(Representation::Aggregated);
    spec.kind = RegimeKind::Continuous;
    spec.test_years = vec![2003, 2004, 2005];
    let full = run_continuous(&exp, &spec).unwrap();
    let mut pieces = Vec::new();
    for job in plan_jobs(&spec, "continuous").into_iter().rev() {
        if let Some(job) = job.restrict(Some(2004), None) {
            pieces.extend(run_job(&exp, &job).unwrap());
        }
    }
    sort_records(&mut pieces);
    let expected: Vec<_> = full.into_iter().filter(|r| r.test_year == Some(2004)).collect();
    assert_eq!(pieces, expected);
    assert_eq!(pieces[0].train_years, [2001, 2002, 2003]);
}

#[test]
fn representations_share_partitions_and_pair_up() {
    let (cohort, map, space) = setup();
    let exp = Experiment { cohort: &cohort, map: &map, search: &space, cv_folds: 5 };
    let make = |repr| RegimeSpec {
        n_repeats: 3,
        train_fraction: 0.5,
        ..RegimeSpec::new(RegimeKind::ShortTerm, Task::Los, repr, vec![2004, 2005], 3)
    };
    let a = run_short_term(&exp, &make(Representation::ItemId)).unwrap();
    let b = run_short_term(&exp, &make(Representation::Aggregated)).unwrap();
    for (x, y) in a.iter().zip(&b) {
        assert_eq!((x.test_year, x.repeat, x.n_train, x.n_test), (y.test_year, y.repeat, y.n_train, y.n_test));
        assert_ne!(x.seed, y.seed);
    }
    let cmp = compare(&a, &b).unwrap();
    assert_eq!(cmp.iter().map(|c| c.test_year).collect::<Vec<_>>(), [Some(2004), Some(2005)]);
}

#[test]
fn year_agnostic_uses_a_pooled_holdout() {
    let (cohort, map, space) = setup();
    let exp = Experiment { cohort: &cohort, map: &map, search: &space, cv_folds: 5 };
    let spec = RegimeSpec {
        n_repeats: 2,
        ..RegimeSpec::new(RegimeKind::YearAgnostic, Task::Mortality, Representation::Aggregated, vec![], 1)
    };
    let records = run_year_agnostic(&exp, &spec).unwrap();
    assert_eq!(records.len(), 2);
    let n = cohort.stays().len();
    for r in &records {
        assert_eq!(r.test_year, None);
        assert_eq!(r.n_train + r.n_test, n);
        assert!((r.n_train as f64 - 0.8 * n as f64).abs() <= 2.0);
        assert_eq!(r.train_years, [2001, 2002, 2003, 2004, 2005]);
    }
}

#[test]
fn tiny_fractions_degrade_to_flagged_records() {
    let (cohort, map, space) = setup();
    let exp = Experiment { cohort: &cohort, map: &map, search: &space, cv_folds: 5 };
    let records = run_saturation(&exp, &one_time(Representation::Aggregated), &[0.03, 1.0]).unwrap();
    assert_eq!(records.len(), 18);
    let tiny: Vec<_> = records.iter().filter(|r| r.train_fraction == 0.03).collect();
    assert!(tiny.iter().all(|r| !r.status.is_ok() && r.auroc.is_none() && r.n_train == 4));
    assert!(records.iter().filter(|r| r.train_fraction == 1.0).all(|r| r.status.is_ok()));
}

#[test]
fn empty_training_pool_is_an_error() {
    let (cohort, map, space) = setup();
    let exp = Experiment { cohort: &cohort, map: &map, search: &space, cv_folds: 5 };
    let mut spec = one_time(Representation::ItemId);
    spec.kind = RegimeKind::OneTime { train_years: vec![1990] };
    let jobs = plan_jobs(&spec, "one_time");
    assert!(matches!(run_jobs(&exp, &jobs), Err(RegimeError::EmptyTrainPool(_))));
}
