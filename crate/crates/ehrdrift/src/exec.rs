//! Cohort loading and parallel execution of the experiment grid.

use std::collections::BTreeSet;

use ehrdrift_core::pipeline::{include_cohort, Representation};
use ehrdrift_core::regimes::{
    compare, failure_records, plan_ablation, plan_jobs, plan_saturation, run_job, sort_records, EvalRecord, Experiment,
    Job, RegimeError, RegimeSpec, Task,
};
use ehrdrift_core::synthdata::generate_cohort;
use ehrdrift_core::{AggregationMap, Cohort};
use rayon::prelude::*;

use crate::config::{CohortSource, ConfigError, RegimeName, RunConfig};
use crate::io::{self, ComparisonRow, IngestError};

/// Regimes compared between representations in `comparisons.csv`.
pub const COMPARED_REGIMES: [RegimeName; 4] = [
    RegimeName::YearAgnostic,
    RegimeName::OneTime,
    RegimeName::Continuous,
    RegimeName::ShortTerm,
];

#[derive(Debug)]
pub struct LoadedCohort {
    /// After the inclusion filter.
    pub cohort: Cohort,
    pub map: AggregationMap,
    pub excluded_stays: usize,
}

#[derive(Debug, thiserror::Error)]
pub enum LoadError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Ingest(#[from] IngestError),
}

pub fn load_cohort(source: &CohortSource) -> Result<LoadedCohort, LoadError> {
    let (raw, map) = match source {
        CohortSource::Synthetic(cfg) => {
            let cohort = generate_cohort(cfg).map_err(|e| ConfigError::Invalid {
                field: e.field,
                reason: e.reason,
            })?;
            (cohort, cfg.aggregation_map())
        }
        CohortSource::Files { stays, events, map } => {
            let stay_rows = io::read_stays(stays)?;
            let mut seen = BTreeSet::new();
            if let Some(dup) = stay_rows.iter().find(|s| !seen.insert(s.stay_id)) {
                return Err(IngestError::File {
                    path: stays.clone(),
                    reason: format!("stay_id {} appears more than once", dup.stay_id),
                }
                .into());
            }
            (Cohort::new(stay_rows, io::read_events(events)?), io::read_map(map)?)
        }
    };
    let cohort = include_cohort(&raw);
    Ok(LoadedCohort {
        excluded_stays: raw.stays().len() - cohort.stays().len(),
        cohort,
        map,
    })
}

/// Expands the enabled regimes into jobs, optionally restricted to one
/// test year and/or one repeat.
pub fn plan(
    cfg: &RunConfig,
    loaded: &LoadedCohort,
    test_year: Option<i32>,
    repeat: Option<u32>,
) -> Result<Vec<Job>, RegimeError> {
    let mut jobs = Vec::new();
    for task in &cfg.tasks {
        for repr in &cfg.representations {
            for entry in cfg.regimes.iter().filter(|r| r.enabled) {
                let spec = RegimeSpec {
                    n_repeats: entry.n_repeats,
                    ..RegimeSpec::new(entry.kind(), *task, *repr, entry.test_years.clone(), cfg.master_seed)
                };
                spec.validate(&loaded.cohort)?;
                let planned = match entry.name {
                    RegimeName::Saturation => plan_saturation(&spec, &entry.fractions)?,
                    // Ablations are Item-ID only; plan them once per task.
                    RegimeName::Ablation if *repr == cfg.representations[0] => {
                        plan_ablation(&spec, &loaded.map, &entry.concepts)?
                    }
                    RegimeName::Ablation => Vec::new(),
                    name => plan_jobs(&spec, name.as_str()),
                };
                jobs.extend(planned);
            }
        }
    }
    Ok(jobs.into_iter().filter_map(|j| j.restrict(test_year, repeat)).collect())
}

/// Runs jobs on `threads` workers. A job that fails outright yields
/// degenerate records so the grid still completes. Output is sorted, so
/// it does not depend on the thread count.
pub fn execute(exp: &Experiment<'_>, jobs: &[Job], threads: usize) -> Vec<EvalRecord> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads.max(1))
        .build()
        .expect("thread pool");
    let mut records: Vec<EvalRecord> = pool.install(|| {
        jobs.par_iter()
            .flat_map_iter(|job| run_job(exp, job).unwrap_or_else(|e| failure_records(job, &e.to_string())))
            .collect()
    });
    sort_records(&mut records);
    records
}

/// Paired Wilcoxon per test year between two representations, for every
/// task and compared regime where both ran.
pub fn comparisons(
    records: &[EvalRecord],
    pair: (Representation, Representation),
    threshold: f64,
) -> Result<Vec<ComparisonRow>, RegimeError> {
    let tasks: BTreeSet<Task> = records.iter().map(|r| r.task).collect();
    let mut rows = Vec::new();
    for task in tasks {
        for regime in COMPARED_REGIMES {
            let side = |repr: Representation| -> Vec<EvalRecord> {
                records
                    .iter()
                    .filter(|r| r.task == task && r.regime == regime.as_str() && r.representation == repr)
                    .cloned()
                    .collect()
            };
            let (a, b) = (side(pair.0), side(pair.1));
            if a.is_empty() || b.is_empty() {
                continue;
            }
            for c in compare(&a, &b)? {
                rows.push(ComparisonRow::new(task, regime.as_str(), &c, threshold));
            }
        }
    }
    Ok(rows)
}

/// One line per (task, representation, regime).
pub fn summary_lines(records: &[EvalRecord]) -> Vec<String> {
    let mut lines = Vec::new();
    for group in records.chunk_by(|a, b| (a.task, a.representation, &a.regime) == (b.task, b.representation, &b.regime)) {
        let r = &group[0];
        let ok: Vec<f64> = group.iter().filter_map(|r| r.auroc).collect();
        let mean = if ok.is_empty() {
            "NA".to_string()
        } else {
            format!("{:.3}", ehrdrift_core::metrics::mean(&ok))
        };
        lines.push(format!(
            "{} {} {}: {} records, {} ok, {} degenerate, mean AUROC {}",
            r.task.as_str(),
            r.representation.as_str(),
            r.regime,
            group.len(),
            ok.len(),
            group.len() - ok.len(),
            mean
        ));
    }
    lines
}
