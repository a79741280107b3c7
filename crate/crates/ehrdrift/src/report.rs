//! `summary.csv` and the charts built from `results.csv`.

use std::collections::BTreeSet;
use std::path::Path;

use ehrdrift_core::metrics::{mean, standard_error};
use ehrdrift_core::pipeline::Representation;
use ehrdrift_core::regimes::{compare, sort_records, EvalRecord, RegimeError, Task};
use serde::Serialize;
use thiserror::Error;

use crate::config::{Chart, RegimeName, ReportSpec};
use crate::io::{self, IngestError, NA};
use crate::svg::{LineChart, Series};

#[derive(Debug, Error)]
pub enum ReportError {
    #[error(transparent)]
    Ingest(#[from] IngestError),
    #[error("{0} holds no records")]
    Empty(String),
    #[error(transparent)]
    Regime(#[from] RegimeError),
    #[error("cannot write report: {0}")]
    Io(#[from] std::io::Error),
}

/// Mean ± SE of one (task, representation, regime, feature, fraction,
/// test year) cell. Degenerate records are counted, not averaged.
#[derive(Debug, Clone, PartialEq)]
pub struct SummaryRow {
    pub task: Task,
    pub representation: Representation,
    pub regime: String,
    pub test_year: Option<i32>,
    pub train_fraction: f64,
    pub feature: Option<String>,
    pub n: usize,
    pub n_ok: usize,
    pub mean_auroc: Option<f64>,
    pub se_auroc: Option<f64>,
    pub mean_auprc: Option<f64>,
    pub se_auprc: Option<f64>,
}

#[derive(Serialize)]
struct SummaryCsv<'a> {
    task: &'a str,
    representation: &'a str,
    regime: &'a str,
    test_year: String,
    train_fraction: f64,
    feature: &'a str,
    n: usize,
    n_ok: usize,
    n_degenerate: usize,
    mean_auroc: String,
    se_auroc: String,
    mean_auprc: String,
    se_auprc: String,
}

fn stats(values: &[f64]) -> (Option<f64>, Option<f64>) {
    if values.is_empty() {
        (None, None)
    } else {
        (Some(mean(values)), standard_error(values).ok())
    }
}

/// `records` must be in [`sort_records`] order.
pub fn summarize(records: &[EvalRecord]) -> Vec<SummaryRow> {
    let key = |r: &EvalRecord| {
        (
            r.task,
            r.representation,
            r.regime.clone(),
            r.feature.clone(),
            r.train_fraction.to_bits(),
            r.test_year,
        )
    };
    records
        .chunk_by(|a, b| key(a) == key(b))
        .map(|group| {
            let ok: Vec<&EvalRecord> = group.iter().filter(|r| r.status.is_ok()).collect();
            let auroc: Vec<f64> = ok.iter().filter_map(|r| r.auroc).collect();
            let auprc: Vec<f64> = ok.iter().filter_map(|r| r.auprc).collect();
            let (mean_auroc, se_auroc) = stats(&auroc);
            let (mean_auprc, se_auprc) = stats(&auprc);
            let r = &group[0];
            SummaryRow {
                task: r.task,
                representation: r.representation,
                regime: r.regime.clone(),
                test_year: r.test_year,
                train_fraction: r.train_fraction,
                feature: r.feature.clone(),
                n: group.len(),
                n_ok: ok.len(),
                mean_auroc,
                se_auroc,
                mean_auprc,
                se_auprc,
            }
        })
        .collect()
}

pub fn write_summary(path: &Path, rows: &[SummaryRow]) -> std::io::Result<()> {
    let text = |v: Option<f64>| v.map_or_else(|| NA.to_string(), |x| x.to_string());
    let mut w = csv::Writer::from_path(path)?;
    for r in rows {
        w.serialize(SummaryCsv {
            task: r.task.as_str(),
            representation: r.representation.as_str(),
            regime: &r.regime,
            test_year: r.test_year.map_or_else(|| "all".into(), |y| y.to_string()),
            train_fraction: r.train_fraction,
            feature: r.feature.as_deref().unwrap_or(NA),
            n: r.n,
            n_ok: r.n_ok,
            n_degenerate: r.n - r.n_ok,
            mean_auroc: text(r.mean_auroc),
            se_auroc: text(r.se_auroc),
            mean_auprc: text(r.mean_auprc),
            se_auprc: text(r.se_auprc),
        })?;
    }
    w.flush()
}

fn point(row: Option<&&SummaryRow>) -> Option<(f64, Option<f64>)> {
    row.and_then(|r| r.mean_auroc.map(|m| (m, r.se_auroc)))
}

/// Representations in chart order: the compared pair first.
fn representations(records: &[&EvalRecord], pair: (Representation, Representation)) -> Vec<Representation> {
    let present: BTreeSet<Representation> = records.iter().map(|r| r.representation).collect();
    let mut out: Vec<Representation> = [pair.0, pair.1].into_iter().filter(|r| present.contains(r)).collect();
    out.extend(present.into_iter().filter(|r| *r != pair.0 && *r != pair.1));
    out
}

fn owned(records: &[&EvalRecord], keep: impl Fn(&EvalRecord) -> bool) -> Vec<EvalRecord> {
    records.iter().filter(|r| keep(r)).map(|r| (*r).clone()).collect()
}

/// Chart file names and their SVG text.
pub fn charts(records: &[EvalRecord], summary: &[SummaryRow], spec: &ReportSpec) -> Result<Vec<(String, String)>, ReportError> {
    let tasks: BTreeSet<Task> = records.iter().map(|r| r.task).collect();
    let mut out = Vec::new();
    for task in tasks {
        let of_regime = |name: &str| -> Vec<&EvalRecord> {
            records.iter().filter(|r| r.task == task && r.regime == name).collect()
        };
        let cell = |repr: Representation, regime: &str, fraction: f64, feature: Option<&str>, year: Option<i32>| {
            summary.iter().find(|s| {
                s.task == task
                    && s.representation == repr
                    && s.regime == regime
                    && s.train_fraction == fraction
                    && s.feature.as_deref() == feature
                    && s.test_year == year
            })
        };

        if spec.charts.contains(&Chart::Regimes) {
            for regime in [RegimeName::OneTime, RegimeName::Continuous, RegimeName::ShortTerm] {
                let rs = of_regime(regime.as_str());
                if rs.is_empty() {
                    continue;
                }
                let years: Vec<i32> = rs.iter().filter_map(|r| r.test_year).collect::<BTreeSet<_>>().into_iter().collect();
                let reprs = representations(&rs, spec.pair);
                let mut chart = LineChart {
                    title: format!("{} / {}", task.as_str(), regime.as_str()),
                    x_title: "test year".into(),
                    y_title: "AUROC".into(),
                    x_labels: years.iter().map(|y| y.to_string()).collect(),
                    rule: spec.changeover_year.and_then(|c| years.iter().position(|y| *y == c)),
                    ..LineChart::default()
                };
                for repr in &reprs {
                    chart.series.push(Series {
                        name: repr.as_str().into(),
                        points: years
                            .iter()
                            .map(|y| point(cell(*repr, regime.as_str(), 1.0, None, Some(*y)).as_ref()))
                            .collect(),
                    });
                    if let Some(m) = cell(*repr, RegimeName::YearAgnostic.as_str(), 1.0, None, None).and_then(|s| s.mean_auroc) {
                        chart.baselines.push((repr.as_str().into(), m));
                    }
                }
                let a = owned(&rs, |r| r.representation == spec.pair.0);
                let b = owned(&rs, |r| r.representation == spec.pair.1);
                if !a.is_empty() && !b.is_empty() {
                    for c in compare(&a, &b)? {
                        if c.significant(spec.threshold) {
                            if let Some(i) = years.iter().position(|y| Some(*y) == c.test_year) {
                                chart.shaded.push(i);
                            }
                        }
                    }
                }
                out.push((format!("{}_{}.svg", task.as_str(), regime.as_str()), chart.render()));
            }
        }

        if spec.charts.contains(&Chart::Saturation) {
            let rs = of_regime(RegimeName::Saturation.as_str());
            let year = spec.saturation_test_year.or_else(|| rs.iter().filter_map(|r| r.test_year).max());
            if let (false, Some(year)) = (rs.is_empty(), year) {
                let mut fractions: Vec<f64> = rs.iter().map(|r| r.train_fraction).collect();
                fractions.sort_by(f64::total_cmp);
                fractions.dedup();
                let mut chart = LineChart {
                    title: format!("{} / saturation, test year {year}", task.as_str()),
                    x_title: "training fraction".into(),
                    y_title: "AUROC".into(),
                    x_labels: fractions.iter().map(|f| f.to_string()).collect(),
                    ..LineChart::default()
                };
                for repr in representations(&rs, spec.pair) {
                    chart.series.push(Series {
                        name: repr.as_str().into(),
                        points: fractions
                            .iter()
                            .map(|f| point(cell(repr, RegimeName::Saturation.as_str(), *f, None, Some(year)).as_ref()))
                            .collect(),
                    });
                }
                for (i, f) in fractions.iter().enumerate() {
                    let at = |repr| owned(&rs, |r| r.representation == repr && r.train_fraction == *f && r.test_year == Some(year));
                    let (a, b) = (at(spec.pair.0), at(spec.pair.1));
                    if !a.is_empty() && !b.is_empty() && compare(&a, &b)?.iter().any(|c| c.significant(spec.threshold)) {
                        chart.shaded.push(i);
                    }
                }
                out.push((format!("{}_saturation.svg", task.as_str()), chart.render()));
            }
        }

        if spec.charts.contains(&Chart::Ablation) {
            let rs = of_regime(RegimeName::Ablation.as_str());
            if !rs.is_empty() {
                let years: Vec<i32> = rs.iter().filter_map(|r| r.test_year).collect::<BTreeSet<_>>().into_iter().collect();
                let features: BTreeSet<(Representation, &str)> =
                    rs.iter().filter_map(|r| Some((r.representation, r.feature.as_deref()?))).collect();
                let mut chart = LineChart {
                    title: format!("{} / single-concept ablation", task.as_str()),
                    x_title: "test year".into(),
                    y_title: "AUROC".into(),
                    x_labels: years.iter().map(|y| y.to_string()).collect(),
                    rule: spec.changeover_year.and_then(|c| years.iter().position(|y| *y == c)),
                    ..LineChart::default()
                };
                for (repr, feature) in features {
                    let fraction = rs.iter().find(|r| r.feature.as_deref() == Some(feature)).map_or(1.0, |r| r.train_fraction);
                    chart.series.push(Series {
                        name: feature.into(),
                        points: years
                            .iter()
                            .map(|y| point(cell(repr, RegimeName::Ablation.as_str(), fraction, Some(feature), Some(*y)).as_ref()))
                            .collect(),
                    });
                }
                out.push((format!("{}_ablation.svg", task.as_str()), chart.render()));
            }
        }
    }
    Ok(out)
}

#[derive(Debug)]
pub struct ReportOutcome {
    pub summary_rows: usize,
    pub charts: Vec<String>,
}

/// Reads the results, writes `summary.csv` and the selected charts into
/// `out_dir`.
pub fn run_report(spec: &ReportSpec, out_dir: &Path) -> Result<ReportOutcome, ReportError> {
    let mut records = io::read_results(&spec.results)?;
    if records.is_empty() {
        return Err(ReportError::Empty(spec.results.display().to_string()));
    }
    sort_records(&mut records);
    let summary = summarize(&records);
    write_summary(&out_dir.join("summary.csv"), &summary)?;
    let mut names = Vec::new();
    for (name, svg) in charts(&records, &summary, spec)? {
        io::write_text(&out_dir.join(&name), &svg)?;
        names.push(name);
    }
    Ok(ReportOutcome {
        summary_rows: summary.len(),
        charts: names,
    })
}
