//! CSV files: cohorts, aggregation maps, results and comparisons.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use ehrdrift_core::learner::HyperParams;
use ehrdrift_core::pipeline::Representation;
use ehrdrift_core::regimes::{EvalRecord, RecordStatus, Task, YearComparison};
use ehrdrift_core::synthdata::{ChartEvent, IcuStay, ItemId, StayId};
use ehrdrift_core::AggregationMap;
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum IngestError {
    #[error("cannot open {path}: {source}")]
    Open {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("{path}, row {row}: {reason}")]
    Row { path: PathBuf, row: u64, reason: String },
    #[error("{path}: {reason}")]
    File { path: PathBuf, reason: String },
}

pub const NA: &str = "NA";

fn reader(path: &Path) -> Result<csv::Reader<File>, IngestError> {
    let file = File::open(path).map_err(|source| IngestError::Open {
        path: path.to_path_buf(),
        source,
    })?;
    Ok(csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(file))
}

/// Deserializes every row; `row` in errors counts data rows from 1.
fn read_rows<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<Vec<T>, IngestError> {
    let mut rdr = reader(path)?;
    let mut out = Vec::new();
    for (i, row) in rdr.deserialize().enumerate() {
        out.push(row.map_err(|e: csv::Error| IngestError::Row {
            path: path.to_path_buf(),
            row: i as u64 + 1,
            reason: match e.kind() {
                csv::ErrorKind::Deserialize { err, .. } => err.to_string(),
                _ => e.to_string(),
            },
        })?);
    }
    Ok(out)
}

fn writer(path: &Path) -> std::io::Result<csv::Writer<BufWriter<File>>> {
    Ok(csv::Writer::from_writer(BufWriter::new(File::create(path)?)))
}

// ---------------------------------------------------------------- cohort

#[derive(Debug, Serialize, Deserialize)]
struct StayRow {
    stay_id: u64,
    admit_year: i32,
    age: u32,
    icu_hours: f64,
    mortality: u8,
    los_days: f64,
    #[serde(default, skip_serializing)]
    patient_id: Option<u64>,
}

#[derive(Debug, Serialize, Deserialize)]
struct EventRow {
    stay_id: u64,
    itemid: u32,
    hour: u8,
    value: f64,
}

#[derive(Debug, Serialize, Deserialize)]
struct OracleRow {
    stay_id: u64,
    latent_severity: f64,
}

#[derive(Debug, Serialize, Deserialize)]
struct MapRow {
    concept: String,
    itemid: u32,
}

pub fn write_stays(path: &Path, stays: &[IcuStay]) -> std::io::Result<()> {
    let mut w = writer(path)?;
    for s in stays {
        w.serialize(StayRow {
            stay_id: s.stay_id.0,
            admit_year: s.admit_year,
            age: s.age,
            icu_hours: s.icu_hours,
            mortality: u8::from(s.mortality),
            los_days: s.los_days,
            patient_id: None,
        })?;
    }
    w.flush()
}

pub fn write_events(path: &Path, events: &[ChartEvent]) -> std::io::Result<()> {
    let mut w = writer(path)?;
    for e in events {
        w.serialize(EventRow {
            stay_id: e.stay_id.0,
            itemid: e.itemid.0,
            hour: e.hour,
            value: e.value,
        })?;
    }
    w.flush()
}

pub fn write_oracle(path: &Path, stays: &[IcuStay]) -> std::io::Result<()> {
    let mut w = writer(path)?;
    for s in stays {
        w.serialize(OracleRow {
            stay_id: s.stay_id.0,
            latent_severity: s.latent_severity,
        })?;
    }
    w.flush()
}

pub fn write_map(path: &Path, map: &AggregationMap) -> std::io::Result<()> {
    let mut w = writer(path)?;
    for (concept, itemid) in map.pairs() {
        w.serialize(MapRow {
            concept: concept.to_string(),
            itemid: itemid.0,
        })?;
    }
    w.flush()
}

/// Reads `stays.csv`; an optional `patient_id` column is honoured.
pub fn read_stays(path: &Path) -> Result<Vec<IcuStay>, IngestError> {
    let rows: Vec<StayRow> = read_rows(path)?;
    rows.into_iter()
        .enumerate()
        .map(|(i, r)| {
            let bad = |reason: String| IngestError::Row {
                path: path.to_path_buf(),
                row: i as u64 + 1,
                reason,
            };
            if r.mortality > 1 {
                return Err(bad(format!("mortality must be 0 or 1, got {}", r.mortality)));
            }
            if !(r.icu_hours.is_finite() && r.icu_hours >= 0.0) {
                return Err(bad(format!("icu_hours must be a non-negative number, got {}", r.icu_hours)));
            }
            if !(r.los_days.is_finite() && r.los_days >= 0.0) {
                return Err(bad(format!("los_days must be a non-negative number, got {}", r.los_days)));
            }
            Ok(IcuStay {
                stay_id: StayId(r.stay_id),
                patient_id: r.patient_id,
                admit_year: r.admit_year,
                age: r.age,
                icu_hours: r.icu_hours,
                mortality: r.mortality == 1,
                los_days: r.los_days,
                latent_severity: f64::NAN,
            })
        })
        .collect()
}

/// Reads `events.csv`, rejecting hours outside 0..=23 and non-finite values.
pub fn read_events(path: &Path) -> Result<Vec<ChartEvent>, IngestError> {
    let rows: Vec<EventRow> = read_rows(path)?;
    rows.into_iter()
        .enumerate()
        .map(|(i, r)| {
            let bad = |reason: String| IngestError::Row {
                path: path.to_path_buf(),
                row: i as u64 + 1,
                reason,
            };
            if usize::from(r.hour) >= ehrdrift_core::pipeline::HOURS {
                return Err(bad(format!("hour {} outside 0..=23", r.hour)));
            }
            if !r.value.is_finite() {
                return Err(bad("value is not a finite number".into()));
            }
            Ok(ChartEvent {
                stay_id: StayId(r.stay_id),
                itemid: ItemId(r.itemid),
                hour: r.hour,
                value: r.value,
            })
        })
        .collect()
}

pub fn read_map(path: &Path) -> Result<AggregationMap, IngestError> {
    let rows: Vec<MapRow> = read_rows(path)?;
    AggregationMap::from_pairs(rows.into_iter().map(|r| (r.concept, ItemId(r.itemid)))).map_err(|e| IngestError::File {
        path: path.to_path_buf(),
        reason: e.to_string(),
    })
}

// --------------------------------------------------------------- results

/// `2001-2005` for consecutive years, `2001;2003` otherwise.
pub fn format_years(years: &[i32]) -> String {
    match years {
        [] => NA.into(),
        [y] => y.to_string(),
        [first, .., last] if years.windows(2).all(|w| w[1] == w[0] + 1) => format!("{first}-{last}"),
        _ => years.iter().map(|y| y.to_string()).collect::<Vec<_>>().join(";"),
    }
}

pub fn parse_years(text: &str) -> Option<Vec<i32>> {
    if text == NA {
        return Some(Vec::new());
    }
    if let Some((a, b)) = text.split_once('-').filter(|(a, _)| !a.is_empty()) {
        let (a, b): (i32, i32) = (a.parse().ok()?, b.parse().ok()?);
        return (a <= b).then(|| (a..=b).collect());
    }
    text.split(';').map(|y| y.parse().ok()).collect()
}

fn opt_f64(v: Option<f64>) -> String {
    v.map_or_else(|| NA.into(), |x| x.to_string())
}

fn parse_opt_f64(text: &str) -> Result<Option<f64>, String> {
    if text == NA {
        Ok(None)
    } else {
        text.parse().map(Some).map_err(|_| format!("`{text}` is not a number"))
    }
}

fn year_text(y: Option<i32>) -> String {
    y.map_or_else(|| "all".into(), |y| y.to_string())
}

#[derive(Debug, Serialize, Deserialize)]
struct ResultRow {
    task: String,
    representation: String,
    regime: String,
    train_years: String,
    test_year: String,
    repeat: u32,
    train_fraction: f64,
    feature: String,
    auroc: String,
    auprc: String,
    n_train: usize,
    n_test: usize,
    seed: u64,
    status: String,
}

pub const RESULTS_HEADER: &str =
    "task,representation,regime,train_years,test_year,repeat,train_fraction,feature,auroc,auprc,n_train,n_test,seed,status";

fn status_text(s: &RecordStatus) -> String {
    match s {
        RecordStatus::Ok => "ok".into(),
        RecordStatus::Degenerate(reason) => format!("degenerate: {reason}"),
    }
}

/// Writes records in the order given; callers sort first.
pub fn write_results(path: &Path, records: &[EvalRecord]) -> std::io::Result<()> {
    let mut w = writer(path)?;
    for r in records {
        w.serialize(ResultRow {
            task: r.task.as_str().into(),
            representation: r.representation.as_str().into(),
            regime: r.regime.clone(),
            train_years: format_years(&r.train_years),
            test_year: year_text(r.test_year),
            repeat: r.repeat,
            train_fraction: r.train_fraction,
            feature: r.feature.clone().unwrap_or_else(|| NA.into()),
            auroc: opt_f64(r.auroc),
            auprc: opt_f64(r.auprc),
            n_train: r.n_train,
            n_test: r.n_test,
            seed: r.seed,
            status: status_text(&r.status),
        })?;
    }
    w.flush()
}

pub fn read_results(path: &Path) -> Result<Vec<EvalRecord>, IngestError> {
    let rows: Vec<ResultRow> = read_rows(path)?;
    rows.into_iter()
        .enumerate()
        .map(|(i, r)| {
            let bad = |reason: String| IngestError::Row {
                path: path.to_path_buf(),
                row: i as u64 + 1,
                reason,
            };
            let task = Task::parse(&r.task).ok_or_else(|| bad(format!("unknown task `{}`", r.task)))?;
            let representation = Representation::parse(&r.representation)
                .ok_or_else(|| bad(format!("unknown representation `{}`", r.representation)))?;
            let test_year = match r.test_year.as_str() {
                "all" => None,
                y => Some(y.parse().map_err(|_| bad(format!("bad test_year `{y}`")))?),
            };
            let status = match r.status.as_str() {
                "ok" => RecordStatus::Ok,
                s => RecordStatus::Degenerate(s.strip_prefix("degenerate: ").unwrap_or(s).to_string()),
            };
            Ok(EvalRecord {
                task,
                representation,
                regime: r.regime,
                train_years: parse_years(&r.train_years).ok_or_else(|| bad(format!("bad train_years `{}`", r.train_years)))?,
                test_year,
                repeat: r.repeat,
                train_fraction: r.train_fraction,
                feature: (r.feature != NA).then_some(r.feature),
                auroc: parse_opt_f64(&r.auroc).map_err(bad)?,
                auprc: parse_opt_f64(&r.auprc).map_err(bad)?,
                n_train: r.n_train,
                n_test: r.n_test,
                seed: r.seed,
                best_params: None,
                status,
            })
        })
        .collect()
}

/// Chosen hyperparameters, one row per record that fitted a model.
pub fn write_hyperparameters(path: &Path, records: &[EvalRecord]) -> std::io::Result<()> {
    let mut w = writer(path)?;
    w.write_record([
        "task",
        "representation",
        "regime",
        "test_year",
        "repeat",
        "train_fraction",
        "feature",
        "n_trees",
        "max_depth",
        "min_samples_leaf",
        "max_features",
        "bootstrap",
    ])?;
    for r in records {
        let Some(HyperParams {
            n_trees,
            max_depth,
            min_samples_leaf,
            max_features_fraction,
            bootstrap,
        }) = r.best_params
        else {
            continue;
        };
        w.write_record([
            r.task.as_str().to_string(),
            r.representation.as_str().to_string(),
            r.regime.clone(),
            year_text(r.test_year),
            r.repeat.to_string(),
            r.train_fraction.to_string(),
            r.feature.clone().unwrap_or_else(|| NA.into()),
            n_trees.to_string(),
            max_depth.map_or_else(|| "none".into(), |d| d.to_string()),
            min_samples_leaf.to_string(),
            max_features_fraction.to_string(),
            bootstrap.to_string(),
        ])?;
    }
    w.flush()
}

/// One row of `comparisons.csv`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComparisonRow {
    pub task: String,
    pub regime: String,
    pub test_year: String,
    pub n_effective: usize,
    pub statistic: String,
    pub p_value: String,
    pub significant: bool,
}

impl ComparisonRow {
    pub fn new(task: Task, regime: &str, c: &YearComparison, threshold: f64) -> Self {
        let (n, stat, p) = match &c.result {
            Ok(r) => (r.n_effective, Some(r.statistic), Some(r.p_value)),
            Err(_) => (0, None, None),
        };
        Self {
            task: task.as_str().into(),
            regime: regime.into(),
            test_year: year_text(c.test_year),
            n_effective: n,
            statistic: opt_f64(stat),
            p_value: opt_f64(p),
            significant: c.significant(threshold),
        }
    }

    pub fn p(&self) -> Option<f64> {
        self.p_value.parse().ok()
    }
}

pub fn write_comparisons(path: &Path, rows: &[ComparisonRow]) -> std::io::Result<()> {
    let mut w = writer(path)?;
    if rows.is_empty() {
        w.write_record(["task", "regime", "test_year", "n_effective", "statistic", "p_value", "significant"])?;
    }
    for r in rows {
        w.serialize(r)?;
    }
    w.flush()
}

pub fn read_comparisons(path: &Path) -> Result<Vec<ComparisonRow>, IngestError> {
    read_rows(path)
}

/// Writes `text` to `path`, creating nothing else.
pub fn write_text(path: &Path, text: &str) -> std::io::Result<()> {
    let mut f = BufWriter::new(File::create(path)?);
    f.write_all(text.as_bytes())?;
    f.flush()
}
