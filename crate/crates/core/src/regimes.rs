//! Training regimes and the experiment grid.
//!
//! A regime maps each test year to a training pool: every year pooled with a
//! random 80/20 split (year-agnostic), a fixed set of early years
//! (one-time), all prior years (continuous) or only the previous year
//! (short-term). Each (pool, repeat) pair is one [`Job`]: it fits the
//! feature plan on the pool, selects hyperparameters by cross-validated
//! random search, refits, and scores every test year assigned to it.
//!
//! Seeds are derived from what a job *is*, never from scheduling, so any
//! subset of the grid can be recomputed in isolation. The partition seed
//! (splits, subsamples) leaves out the representation, which makes Item-ID
//! and aggregated runs share their stay partitions and pair cleanly in
//! [`compare`].

use alloc::collections::BTreeMap;
use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;
use core::cmp::Ordering;

use rand::seq::SliceRandom;
use thiserror::Error;

use crate::learner::{fit_forest, predict_proba, random_search, HyperParams, LearnError, Samples, SearchSpace};
use crate::metrics::{self, MetricError, TestResult};
use crate::pipeline::{AggregationMap, FeatureMatrix, FeaturePlan, PipelineError, Representation};
use crate::seed;
use crate::synthdata::{Cohort, IcuStay};

/// Repeats per regime curve.
pub const DEFAULT_REPEATS: u32 = 20;
/// Repeats per single-concept ablation.
pub const ABLATION_REPEATS: u32 = 5;
pub const DEFAULT_CV_FOLDS: usize = 5;
/// Share of pooled stays used for training in the year-agnostic regime.
pub const YEAR_AGNOSTIC_TRAIN_SHARE: f64 = 0.8;
/// Smallest training pool that is still fitted.
pub const MIN_TRAIN_STAYS: usize = 10;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum RegimeError {
    #[error("invalid regime spec: {0}")]
    InvalidSpec(String),
    #[error("empty training pool for {0}")]
    EmptyTrainPool(String),
    #[error(transparent)]
    Pipeline(#[from] PipelineError),
    #[error("records cannot be paired: {0}")]
    Unpaired(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Task {
    Mortality,
    /// Length of stay of at least three days.
    Los,
}

impl Task {
    pub fn as_str(self) -> &'static str {
        match self {
            Task::Mortality => "mortality",
            Task::Los => "los",
        }
    }

    pub fn parse(text: &str) -> Option<Self> {
        match text {
            "mortality" => Some(Task::Mortality),
            "los" => Some(Task::Los),
            _ => None,
        }
    }

    pub fn label(self, stay: &IcuStay) -> bool {
        match self {
            Task::Mortality => stay.mortality,
            Task::Los => crate::pipeline::los_label(stay.los_days),
        }
    }

    fn labels(self, m: &FeatureMatrix) -> &[bool] {
        match self {
            Task::Mortality => &m.mortality,
            Task::Los => &m.los,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum RegimeKind {
    YearAgnostic,
    OneTime { train_years: Vec<i32> },
    Continuous,
    ShortTerm,
}

impl RegimeKind {
    pub fn name(&self) -> &'static str {
        match self {
            RegimeKind::YearAgnostic => "year_agnostic",
            RegimeKind::OneTime { .. } => "one_time",
            RegimeKind::Continuous => "continuous",
            RegimeKind::ShortTerm => "short_term",
        }
    }

    /// Test years a regime can evaluate within `[first, last]`.
    pub fn default_test_years(&self, first: i32, last: i32) -> Vec<i32> {
        match self {
            RegimeKind::YearAgnostic => Vec::new(),
            RegimeKind::OneTime { train_years } => {
                let after = train_years.iter().copied().max().unwrap_or(first - 1) + 1;
                (after..=last).collect()
            }
            RegimeKind::Continuous | RegimeKind::ShortTerm => (first + 1..=last).collect(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RegimeSpec {
    pub kind: RegimeKind,
    pub task: Task,
    pub representation: Representation,
    pub n_repeats: u32,
    /// Stratified share of the training pool kept, floored.
    pub train_fraction: f64,
    /// Restricts features to these concepts (without age).
    pub feature_subset: Option<Vec<String>>,
    /// Ignored by the year-agnostic regime.
    pub test_years: Vec<i32>,
    pub master_seed: u64,
}

impl RegimeSpec {
    pub fn new(kind: RegimeKind, task: Task, representation: Representation, test_years: Vec<i32>, master_seed: u64) -> Self {
        Self {
            kind,
            task,
            representation,
            n_repeats: DEFAULT_REPEATS,
            train_fraction: 1.0,
            feature_subset: None,
            test_years,
            master_seed,
        }
    }

    /// One-time Item-ID spec for single-concept ablations.
    pub fn for_ablation(train_years: Vec<i32>, task: Task, test_years: Vec<i32>, master_seed: u64) -> Self {
        Self {
            n_repeats: ABLATION_REPEATS,
            ..Self::new(RegimeKind::OneTime { train_years }, task, Representation::ItemId, test_years, master_seed)
        }
    }

    pub fn validate(&self, cohort: &Cohort) -> Result<(), RegimeError> {
        let bad = |m: String| Err(RegimeError::InvalidSpec(m));
        if self.n_repeats == 0 {
            return bad("n_repeats must be positive".into());
        }
        if !(self.train_fraction > 0.0 && self.train_fraction <= 1.0) {
            return bad(format!("train_fraction {} outside (0, 1]", self.train_fraction));
        }
        if matches!(&self.feature_subset, Some(s) if s.is_empty()) {
            return bad("feature subset is empty".into());
        }
        let Some((first, _)) = cohort.year_range() else {
            return bad("cohort has no stays".into());
        };
        match &self.kind {
            RegimeKind::YearAgnostic => {}
            RegimeKind::OneTime { train_years } => {
                let Some(last_train) = train_years.iter().max() else {
                    return bad("one-time regime needs training years".into());
                };
                if let Some(y) = self.test_years.iter().find(|y| *y <= last_train) {
                    return bad(format!("test year {y} does not follow the training years"));
                }
            }
            RegimeKind::Continuous | RegimeKind::ShortTerm => {
                if let Some(y) = self.test_years.iter().find(|y| **y <= first) {
                    return bad(format!("test year {y} has no prior year in the cohort"));
                }
            }
        }
        if !matches!(self.kind, RegimeKind::YearAgnostic) && self.test_years.is_empty() {
            return bad("no test years".into());
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum RecordStatus {
    Ok,
    Degenerate(String),
}

impl RecordStatus {
    pub fn is_ok(&self) -> bool {
        matches!(self, RecordStatus::Ok)
    }
}

/// One evaluated (task, representation, regime, test year, repeat).
#[derive(Debug, Clone, PartialEq)]
pub struct EvalRecord {
    pub task: Task,
    pub representation: Representation,
    /// Regime label: a [`RegimeKind::name`], `saturation` or `ablation`.
    pub regime: String,
    pub train_years: Vec<i32>,
    /// `None` for the pooled year-agnostic holdout.
    pub test_year: Option<i32>,
    pub repeat: u32,
    pub train_fraction: f64,
    pub feature: Option<String>,
    pub auroc: Option<f64>,
    pub auprc: Option<f64>,
    pub n_train: usize,
    pub n_test: usize,
    pub seed: u64,
    pub best_params: Option<HyperParams>,
    pub status: RecordStatus,
}

impl EvalRecord {
    fn sort_key(&self) -> (Task, Representation, &str, Option<&str>, u64, Option<i32>, u32) {
        (
            self.task,
            self.representation,
            &self.regime,
            self.feature.as_deref(),
            self.train_fraction.to_bits(),
            self.test_year,
            self.repeat,
        )
    }
}

/// Sorts records into output order: task, representation, regime, feature,
/// train fraction, test year, repeat.
pub fn sort_records(records: &mut [EvalRecord]) {
    records.sort_by(|a, b| a.sort_key().cmp(&b.sort_key()));
}

/// Shared inputs of every job in a grid.
#[derive(Debug, Clone, Copy)]
pub struct Experiment<'a> {
    /// Already passed through the inclusion filter.
    pub cohort: &'a Cohort,
    pub map: &'a AggregationMap,
    pub search: &'a SearchSpace,
    pub cv_folds: usize,
}

/// One training pool and repeat.
#[derive(Debug, Clone, PartialEq)]
pub struct Job {
    pub label: &'static str,
    pub spec: RegimeSpec,
    pub repeat: u32,
    /// Test year defining the pool for continuous / short-term jobs.
    pub anchor_year: Option<i32>,
}

impl Job {
    pub fn partition_seed(&self) -> u64 {
        let s = &self.spec;
        seed::derive(
            s.master_seed,
            &[
                seed::label("partition"),
                seed::label(self.label),
                seed::label(s.task.as_str()),
                self.anchor_year.map_or(u64::MAX, |y| y as u64),
                u64::from(self.repeat),
                s.train_fraction.to_bits(),
            ],
        )
    }

    pub fn model_seed(&self) -> u64 {
        seed::derive(self.partition_seed(), &[seed::label(self.spec.representation.as_str())])
    }

    /// Keeps only the given test years; a job left with none is dropped.
    pub fn restrict(mut self, test_year: Option<i32>, repeat: Option<u32>) -> Option<Self> {
        if repeat.is_some_and(|r| r != self.repeat) {
            return None;
        }
        if let Some(y) = test_year {
            self.spec.test_years.retain(|t| *t == y);
            if self.spec.test_years.is_empty() {
                return None;
            }
        }
        Some(self)
    }
}

/// Expands a spec into its jobs, in a fixed order.
pub fn plan_jobs(spec: &RegimeSpec, label: &'static str) -> Vec<Job> {
    let mut jobs = Vec::new();
    for repeat in 0..spec.n_repeats {
        match spec.kind {
            RegimeKind::YearAgnostic | RegimeKind::OneTime { .. } => jobs.push(Job {
                label,
                spec: spec.clone(),
                repeat,
                anchor_year: None,
            }),
            RegimeKind::Continuous | RegimeKind::ShortTerm => {
                for &year in &spec.test_years {
                    jobs.push(Job {
                        label,
                        spec: RegimeSpec {
                            test_years: alloc::vec![year],
                            ..spec.clone()
                        },
                        repeat,
                        anchor_year: Some(year),
                    });
                }
            }
        }
    }
    jobs
}

fn stays_where(cohort: &Cohort, keep: impl Fn(&IcuStay) -> bool) -> Vec<&IcuStay> {
    cohort.stays().iter().filter(|s| keep(s)).collect()
}

/// Number of positives kept when keeping `total` of a pool with `pos`
/// positives and `neg` negatives.
fn stratified_positive_count(total: usize, pos: usize, neg: usize, share: f64) -> usize {
    let target = libm::round(share * pos as f64) as usize;
    target.min(pos).min(total).max(total.saturating_sub(neg))
}

/// Stratified subsample of `floor(fraction * n)` stays, in stay order.
pub fn stratified_subsample<'c>(pool: &[&'c IcuStay], task: Task, fraction: f64, seed: u64) -> Vec<&'c IcuStay> {
    if fraction >= 1.0 {
        return pool.to_vec();
    }
    let total = libm::floor(fraction * pool.len() as f64 + 1e-9) as usize;
    let (mut pos, mut neg): (Vec<&IcuStay>, Vec<&IcuStay>) = pool.iter().partition(|s| task.label(s));
    let n_pos = stratified_positive_count(total, pos.len(), neg.len(), fraction);
    let mut rng = seed::rng(seed);
    pos.shuffle(&mut rng);
    neg.shuffle(&mut rng);
    let mut kept: Vec<&IcuStay> = pos[..n_pos].iter().chain(&neg[..total - n_pos]).copied().collect();
    kept.sort_by_key(|s| s.stay_id);
    kept
}

/// Stratified split into (train, test) with `round(share * n_class)` of
/// each class in train.
pub fn stratified_split<'c>(pool: &[&'c IcuStay], task: Task, share: f64, seed: u64) -> (Vec<&'c IcuStay>, Vec<&'c IcuStay>) {
    let (mut pos, mut neg): (Vec<&IcuStay>, Vec<&IcuStay>) = pool.iter().partition(|s| task.label(s));
    let mut rng = seed::rng(seed);
    pos.shuffle(&mut rng);
    neg.shuffle(&mut rng);
    let cut_pos = libm::round(share * pos.len() as f64) as usize;
    let cut_neg = libm::round(share * neg.len() as f64) as usize;
    let mut train: Vec<&IcuStay> = pos[..cut_pos].iter().chain(&neg[..cut_neg]).copied().collect();
    let mut test: Vec<&IcuStay> = pos[cut_pos..].iter().chain(&neg[cut_neg..]).copied().collect();
    train.sort_by_key(|s| s.stay_id);
    test.sort_by_key(|s| s.stay_id);
    (train, test)
}

fn year_list(stays: &[&IcuStay]) -> Vec<i32> {
    let mut years: Vec<i32> = stays.iter().map(|s| s.admit_year).collect();
    years.sort_unstable();
    years.dedup();
    years
}

type TestSets<'c> = Vec<(Option<i32>, Vec<&'c IcuStay>)>;

/// Training pool and test sets of a job (before subsampling).
fn job_sets<'c>(cohort: &'c Cohort, job: &Job) -> (Vec<&'c IcuStay>, TestSets<'c>) {
    let spec = &job.spec;
    let by_year = |y: i32| stays_where(cohort, |s| s.admit_year == y);
    match &spec.kind {
        RegimeKind::YearAgnostic => {
            let all = stays_where(cohort, |_| true);
            let (train, test) = stratified_split(
                &all,
                spec.task,
                YEAR_AGNOSTIC_TRAIN_SHARE,
                seed::derive(job.partition_seed(), &[seed::label("split")]),
            );
            (train, alloc::vec![(None, test)])
        }
        RegimeKind::OneTime { train_years } => (
            stays_where(cohort, |s| train_years.contains(&s.admit_year)),
            spec.test_years.iter().map(|&y| (Some(y), by_year(y))).collect(),
        ),
        RegimeKind::Continuous => {
            let y = job.anchor_year.expect("continuous job has an anchor year");
            (stays_where(cohort, |s| s.admit_year < y), alloc::vec![(Some(y), by_year(y))])
        }
        RegimeKind::ShortTerm => {
            let y = job.anchor_year.expect("short-term job has an anchor year");
            (stays_where(cohort, |s| s.admit_year == y - 1), alloc::vec![(Some(y), by_year(y))])
        }
    }
}

/// Result of a fitted job before it is spread over test years.
enum Fitted {
    Model {
        plan: FeaturePlan,
        model: crate::learner::ForestModel,
        best: HyperParams,
    },
    Degenerate(String),
}

fn fit_job(exp: &Experiment<'_>, job: &Job, train: &[&IcuStay]) -> Result<Fitted, RegimeError> {
    let spec = &job.spec;
    let positives = train.iter().filter(|s| spec.task.label(s)).count();
    if train.len() < MIN_TRAIN_STAYS {
        return Ok(Fitted::Degenerate(format!("only {} training stays", train.len())));
    }
    if positives == 0 || positives == train.len() {
        return Ok(Fitted::Degenerate("single-class training pool".into()));
    }
    let plan = FeaturePlan::fit(
        exp.cohort,
        train,
        spec.representation,
        exp.map,
        spec.feature_subset.as_deref(),
        spec.feature_subset.is_none(),
    )?;
    if plan.width() == 0 {
        return Ok(Fitted::Degenerate("no feature columns".into()));
    }
    let matrix = plan.build(exp.cohort, train, exp.map)?;
    let samples = Samples::new(&matrix.values, matrix.n_cols()).map_err(|e| RegimeError::InvalidSpec(e.to_string()))?;
    let labels = spec.task.labels(&matrix);
    let seed = job.model_seed();
    let outcome = match random_search(&samples, labels, exp.search, exp.cv_folds, seed) {
        Ok(o) => o,
        Err(e) => return Ok(Fitted::Degenerate(learn_reason(&e))),
    };
    let model = match fit_forest(&samples, labels, &outcome.best, seed) {
        Ok(m) => m,
        Err(e) => return Ok(Fitted::Degenerate(learn_reason(&e))),
    };
    Ok(Fitted::Model {
        plan,
        model,
        best: outcome.best,
    })
}

fn learn_reason(e: &LearnError) -> String {
    e.to_string()
}

/// Runs one job: fit on its pool, score each of its test sets.
pub fn run_job(exp: &Experiment<'_>, job: &Job) -> Result<Vec<EvalRecord>, RegimeError> {
    let spec = &job.spec;
    let (pool, tests) = job_sets(exp.cohort, job);
    if pool.is_empty() {
        return Err(RegimeError::EmptyTrainPool(format!(
            "{} {} repeat {}",
            job.label,
            spec.task.as_str(),
            job.repeat
        )));
    }
    let train = stratified_subsample(
        &pool,
        spec.task,
        spec.train_fraction,
        seed::derive(job.partition_seed(), &[seed::label("subsample")]),
    );
    if train.is_empty() {
        return Err(RegimeError::EmptyTrainPool(format!(
            "{} {} repeat {} after keeping {} of {} stays",
            job.label,
            spec.task.as_str(),
            job.repeat,
            spec.train_fraction,
            pool.len()
        )));
    }
    let fitted = fit_job(exp, job, &train)?;

    let mut records = Vec::with_capacity(tests.len());
    for (test_year, test) in tests {
        let mut record = EvalRecord {
            task: spec.task,
            representation: spec.representation,
            regime: job.label.to_string(),
            train_years: year_list(&train),
            test_year,
            repeat: job.repeat,
            train_fraction: spec.train_fraction,
            feature: spec.feature_subset.as_ref().map(|f| f.join("+")),
            auroc: None,
            auprc: None,
            n_train: train.len(),
            n_test: test.len(),
            seed: job.model_seed(),
            best_params: None,
            status: RecordStatus::Ok,
        };
        match &fitted {
            Fitted::Degenerate(reason) => record.status = RecordStatus::Degenerate(reason.clone()),
            Fitted::Model { plan, model, best } => {
                record.best_params = Some(*best);
                match score(exp, plan, model, spec.task, &test) {
                    Ok((auroc, auprc)) => {
                        record.auroc = Some(auroc);
                        record.auprc = Some(auprc);
                    }
                    Err(reason) => record.status = RecordStatus::Degenerate(reason),
                }
            }
        }
        records.push(record);
    }
    Ok(records)
}

/// Records marking every test year of a job that could not run at all.
pub fn failure_records(job: &Job, reason: &str) -> Vec<EvalRecord> {
    let spec = &job.spec;
    let years: Vec<Option<i32>> = match spec.kind {
        RegimeKind::YearAgnostic => alloc::vec![None],
        _ => spec.test_years.iter().map(|y| Some(*y)).collect(),
    };
    years
        .into_iter()
        .map(|test_year| EvalRecord {
            task: spec.task,
            representation: spec.representation,
            regime: job.label.to_string(),
            train_years: Vec::new(),
            test_year,
            repeat: job.repeat,
            train_fraction: spec.train_fraction,
            feature: spec.feature_subset.as_ref().map(|f| f.join("+")),
            auroc: None,
            auprc: None,
            n_train: 0,
            n_test: 0,
            seed: job.model_seed(),
            best_params: None,
            status: RecordStatus::Degenerate(reason.to_string()),
        })
        .collect()
}

fn score(
    exp: &Experiment<'_>,
    plan: &FeaturePlan,
    model: &crate::learner::ForestModel,
    task: Task,
    test: &[&IcuStay],
) -> Result<(f64, f64), String> {
    if test.is_empty() {
        return Err("empty test set".into());
    }
    let matrix = plan.build(exp.cohort, test, exp.map).map_err(|e| e.to_string())?;
    let samples = Samples::new(&matrix.values, matrix.n_cols()).map_err(|e| e.to_string())?;
    let scores = predict_proba(model, &samples).map_err(|e| e.to_string())?;
    let labels = task.labels(&matrix);
    let auroc = metrics::auroc(&scores, labels).map_err(|e| e.to_string())?;
    let auprc = metrics::auprc(&scores, labels).map_err(|e| e.to_string())?;
    Ok((auroc, auprc))
}

/// Runs jobs in order and returns sorted records.
pub fn run_jobs(exp: &Experiment<'_>, jobs: &[Job]) -> Result<Vec<EvalRecord>, RegimeError> {
    let mut records = Vec::new();
    for job in jobs {
        records.extend(run_job(exp, job)?);
    }
    sort_records(&mut records);
    Ok(records)
}

fn expect_kind(spec: &RegimeSpec, ok: bool) -> Result<(), RegimeError> {
    if ok {
        Ok(())
    } else {
        Err(RegimeError::InvalidSpec(format!("unexpected regime kind {}", spec.kind.name())))
    }
}

pub fn run_year_agnostic(exp: &Experiment<'_>, spec: &RegimeSpec) -> Result<Vec<EvalRecord>, RegimeError> {
    expect_kind(spec, matches!(spec.kind, RegimeKind::YearAgnostic))?;
    spec.validate(exp.cohort)?;
    run_jobs(exp, &plan_jobs(spec, spec.kind.name()))
}

pub fn run_one_time(exp: &Experiment<'_>, spec: &RegimeSpec) -> Result<Vec<EvalRecord>, RegimeError> {
    expect_kind(spec, matches!(spec.kind, RegimeKind::OneTime { .. }))?;
    spec.validate(exp.cohort)?;
    run_jobs(exp, &plan_jobs(spec, spec.kind.name()))
}

pub fn run_continuous(exp: &Experiment<'_>, spec: &RegimeSpec) -> Result<Vec<EvalRecord>, RegimeError> {
    expect_kind(spec, matches!(spec.kind, RegimeKind::Continuous))?;
    spec.validate(exp.cohort)?;
    run_jobs(exp, &plan_jobs(spec, spec.kind.name()))
}

pub fn run_short_term(exp: &Experiment<'_>, spec: &RegimeSpec) -> Result<Vec<EvalRecord>, RegimeError> {
    expect_kind(spec, matches!(spec.kind, RegimeKind::ShortTerm))?;
    spec.validate(exp.cohort)?;
    run_jobs(exp, &plan_jobs(spec, spec.kind.name()))
}

/// Jobs of a train-set saturation sweep: the one-time regime once per
/// fraction.
pub fn plan_saturation(spec: &RegimeSpec, fractions: &[f64]) -> Result<Vec<Job>, RegimeError> {
    expect_kind(spec, matches!(spec.kind, RegimeKind::OneTime { .. }))?;
    let mut jobs = Vec::new();
    for &f in fractions {
        if !(f > 0.0 && f <= 1.0) {
            return Err(RegimeError::InvalidSpec(format!("fraction {f} outside (0, 1]")));
        }
        jobs.extend(plan_jobs(
            &RegimeSpec {
                train_fraction: f,
                ..spec.clone()
            },
            "saturation",
        ));
    }
    Ok(jobs)
}

pub fn run_saturation(exp: &Experiment<'_>, spec: &RegimeSpec, fractions: &[f64]) -> Result<Vec<EvalRecord>, RegimeError> {
    spec.validate(exp.cohort)?;
    run_jobs(exp, &plan_saturation(spec, fractions)?)
}

/// Jobs of single-concept ablations: Item-ID features of one concept at a
/// time, no demographics.
pub fn plan_ablation(spec: &RegimeSpec, map: &AggregationMap, concepts: &[String]) -> Result<Vec<Job>, RegimeError> {
    expect_kind(spec, matches!(spec.kind, RegimeKind::OneTime { .. }))?;
    let mut jobs = Vec::new();
    for concept in concepts {
        if map.itemids_of(concept).is_none() {
            return Err(PipelineError::UnknownConcept(concept.clone()).into());
        }
        jobs.extend(plan_jobs(
            &RegimeSpec {
                feature_subset: Some(alloc::vec![concept.clone()]),
                representation: Representation::ItemId,
                ..spec.clone()
            },
            "ablation",
        ));
    }
    Ok(jobs)
}

pub fn run_ablation(exp: &Experiment<'_>, spec: &RegimeSpec, concepts: &[String]) -> Result<Vec<EvalRecord>, RegimeError> {
    spec.validate(exp.cohort)?;
    run_jobs(exp, &plan_ablation(spec, exp.map, concepts)?)
}

/// Paired test of two record sets at one test year.
#[derive(Debug, Clone, PartialEq)]
pub struct YearComparison {
    pub test_year: Option<i32>,
    pub result: Result<TestResult, MetricError>,
}

impl YearComparison {
    pub fn significant(&self, threshold: f64) -> bool {
        matches!(&self.result, Ok(r) if r.p_value < threshold)
    }
}

/// Per shared test year, the two-sided Wilcoxon signed-rank test on AUROCs
/// paired by repeat. Pairs with a degenerate side are left out.
pub fn compare(a: &[EvalRecord], b: &[EvalRecord]) -> Result<Vec<YearComparison>, RegimeError> {
    type Keyed = BTreeMap<Option<i32>, BTreeMap<u32, Option<f64>>>;
    let key = |records: &[EvalRecord]| -> Result<Keyed, RegimeError> {
        let mut out: Keyed = BTreeMap::new();
        for r in records {
            if out.entry(r.test_year).or_default().insert(r.repeat, r.auroc).is_some() {
                return Err(RegimeError::Unpaired(format!(
                    "repeat {} of test year {:?} appears twice",
                    r.repeat, r.test_year
                )));
            }
        }
        Ok(out)
    };
    let (ka, kb) = (key(a)?, key(b)?);
    let mut out = Vec::new();
    for (year, ra) in &ka {
        let Some(rb) = kb.get(year) else { continue };
        if ra.keys().cmp(rb.keys()) != Ordering::Equal {
            return Err(RegimeError::Unpaired(format!("repeats differ at test year {year:?}")));
        }
        let (xa, xb): (Vec<f64>, Vec<f64>) = ra
            .iter()
            .filter_map(|(rep, va)| Some(((*va)?, rb[rep]?)))
            .unzip();
        let result = if xa.is_empty() {
            Err(MetricError::TooFew { needed: 1, got: 0 })
        } else {
            metrics::wilcoxon_signed_rank(&xa, &xb, true)
        };
        out.push(YearComparison {
            test_year: *year,
            result,
        });
    }
    Ok(out)
}
