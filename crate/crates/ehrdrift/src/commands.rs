//! The four subcommands. Each returns a [`CliError`] whose
//! [`exit_code`](CliError::exit_code) the binary reports.

use std::fs;
use std::path::{Path, PathBuf};

use ehrdrift_core::regimes::Experiment;
use ehrdrift_core::synthdata::generate_cohort;

use crate::config::{echo_synth, ConfigError, ReportFile, RunFile, SynthFile};
use crate::exec::{self, LoadError};
use crate::io::{self, IngestError};
use crate::report::{self, ReportError};
use crate::validate::{validate_files, Validation};

pub const EXIT_CONFIG: i32 = 3;
pub const EXIT_INGEST: i32 = 4;
pub const EXIT_RUNTIME: i32 = 5;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("config error: {0}")]
    Config(#[from] ConfigError),
    #[error("ingestion error: {0}")]
    Ingest(#[from] IngestError),
    #[error("runtime error: {0}")]
    Runtime(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => EXIT_CONFIG,
            CliError::Ingest(_) => EXIT_INGEST,
            CliError::Runtime(_) => EXIT_RUNTIME,
        }
    }
}

impl From<LoadError> for CliError {
    fn from(e: LoadError) -> Self {
        match e {
            LoadError::Config(e) => CliError::Config(e),
            LoadError::Ingest(e) => CliError::Ingest(e),
        }
    }
}

impl From<ReportError> for CliError {
    fn from(e: ReportError) -> Self {
        match e {
            ReportError::Ingest(e) => CliError::Ingest(e),
            other => CliError::Runtime(other.to_string()),
        }
    }
}

fn runtime(context: &str) -> impl Fn(std::io::Error) -> CliError + '_ {
    move |e| CliError::Runtime(format!("{context}: {e}"))
}

fn prepare_out(out: &Path) -> Result<(), CliError> {
    fs::create_dir_all(out).map_err(runtime(&format!("cannot create {}", out.display())))
}

fn base_dir(config: Option<&Path>) -> PathBuf {
    config
        .and_then(Path::parent)
        .map(Path::to_path_buf)
        .unwrap_or_else(|| PathBuf::from("."))
}

/// Writes `stays.csv`, `events.csv`, `oracle.csv`, `aggregation_map.csv`
/// and `synth_config.resolved.toml`.
pub fn synth(config: Option<&Path>, out: &Path, seed: Option<u64>) -> Result<Vec<PathBuf>, CliError> {
    let file = match config {
        Some(p) => SynthFile::load(p)?,
        None => SynthFile::default(),
    };
    let cfg = file.resolve(seed)?;
    let cohort = generate_cohort(&cfg).map_err(|e| ConfigError::Invalid {
        field: e.field,
        reason: e.reason,
    })?;
    prepare_out(out)?;
    let paths: Vec<PathBuf> = ["stays.csv", "events.csv", "oracle.csv", "aggregation_map.csv", "synth_config.resolved.toml"]
        .iter()
        .map(|n| out.join(n))
        .collect();
    let fail = runtime("cannot write cohort");
    io::write_stays(&paths[0], cohort.stays()).map_err(&fail)?;
    io::write_events(&paths[1], cohort.events()).map_err(&fail)?;
    io::write_oracle(&paths[2], cohort.stays()).map_err(&fail)?;
    io::write_map(&paths[3], &cfg.aggregation_map()).map_err(&fail)?;
    io::write_text(&paths[4], &echo_synth(&cfg)).map_err(&fail)?;
    Ok(paths)
}

#[derive(Debug, Clone, Copy, Default)]
pub struct RunOptions {
    pub seed: Option<u64>,
    pub jobs: usize,
    pub test_year: Option<i32>,
    pub repeat: Option<u32>,
}

/// Runs the configured grid; returns the per-regime summary lines.
pub fn run(config: Option<&Path>, out: &Path, opts: RunOptions) -> Result<Vec<String>, CliError> {
    let file = match config {
        Some(p) => RunFile::load(p)?,
        None => RunFile::default(),
    };
    let mut cfg = file.resolve(&base_dir(config), opts.seed)?;
    let loaded = exec::load_cohort(&cfg.cohort)?;
    let (first, last) = loaded
        .cohort
        .year_range()
        .ok_or_else(|| CliError::Runtime("no stays pass the inclusion filter".into()))?;
    cfg.materialize(first, last, &loaded.map)?;
    let jobs = exec::plan(&cfg, &loaded, opts.test_year, opts.repeat).map_err(|e| ConfigError::Invalid {
        field: "regimes".into(),
        reason: e.to_string(),
    })?;
    if jobs.is_empty() {
        return Err(CliError::Runtime("the restriction leaves no job to run".into()));
    }
    let exp = Experiment {
        cohort: &loaded.cohort,
        map: &loaded.map,
        search: &cfg.search,
        cv_folds: cfg.cv_folds,
    };
    let records = exec::execute(&exp, &jobs, opts.jobs);
    let pair = (cfg.representations[0], *cfg.representations.last().expect("non-empty"));
    let comparisons = if pair.0 == pair.1 {
        Vec::new()
    } else {
        exec::comparisons(&records, pair, ehrdrift_core::metrics::SIGNIFICANCE_LEVEL)
            .map_err(|e| CliError::Runtime(e.to_string()))?
    };

    prepare_out(out)?;
    let fail = runtime("cannot write results");
    io::write_results(&out.join("results.csv"), &records).map_err(&fail)?;
    io::write_comparisons(&out.join("comparisons.csv"), &comparisons).map_err(&fail)?;
    io::write_hyperparameters(&out.join("hyperparameters.csv"), &records).map_err(&fail)?;
    io::write_text(&out.join("run_config.resolved.toml"), &cfg.echo()).map_err(&fail)?;
    let mut lines = vec![format!(
        "cohort: {} stays after inclusion ({} excluded), {} jobs",
        loaded.cohort.stays().len(),
        loaded.excluded_stays,
        jobs.len()
    )];
    lines.extend(exec::summary_lines(&records));
    Ok(lines)
}

/// `results` overrides the config's results path; without either,
/// `<out>/results.csv` is used.
pub fn report(config: Option<&Path>, results: Option<&Path>, out: &Path) -> Result<Vec<String>, CliError> {
    let file = match config {
        Some(p) => ReportFile::load(p)?,
        None => ReportFile::default(),
    };
    let fallback = match (results, &file.results) {
        (Some(r), _) => Some(r.to_path_buf()),
        (None, None) => Some(out.join("results.csv")),
        (None, Some(_)) => None,
    };
    let spec = file.resolve(&base_dir(config), fallback)?;
    prepare_out(out)?;
    let outcome = report::run_report(&spec, out)?;
    let mut lines = vec![format!("summary.csv: {} rows", outcome.summary_rows)];
    lines.extend(outcome.charts);
    Ok(lines)
}

pub fn validate(stays: &Path, events: &Path, map: &Path) -> Result<Validation, CliError> {
    Ok(validate_files(stays, events, map)?)
}
