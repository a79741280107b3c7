//! End-to-end checks of the `ehrdrift` binary.

use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use ehrdrift::io::read_results;
use ehrdrift_core::metrics::standard_error;

const SYNTH: &str = "[cohort]\nyear_start = 2001\nyear_end = 2005\nchangeover_year = 2004\npatients_per_year = 80\n";

const RUN: &str = r#"
tasks = ["mortality", "los"]
master_seed = 5

[cohort]
synth_config = "synth.toml"

[search]
n_trees = [6]
max_depth = [5]
min_samples_leaf = [5]
max_features = [0.1]
n_iter = 1

[year_agnostic]
n_repeats = 2
[one_time]
n_repeats = 4
[continuous]
n_repeats = 2
[short_term]
n_repeats = 2
"#;

fn bin(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_ehrdrift"))
        .current_dir(dir)
        .args(args)
        .output()
        .expect("binary runs")
}

fn setup() -> tempfile::TempDir {
    let dir = tempfile::tempdir().unwrap();
    fs::write(dir.path().join("synth.toml"), SYNTH).unwrap();
    fs::write(dir.path().join("run.toml"), RUN).unwrap();
    dir
}

fn read(dir: &Path, rel: &str) -> String {
    fs::read_to_string(dir.join(rel)).unwrap_or_else(|e| panic!("{rel}: {e}"))
}

#[test]
fn synth_is_repeatable_and_echoes_every_default() {
    let dir = setup();
    let d = dir.path();
    for out in ["a", "b"] {
        let o = bin(d, &["synth", "--config", "synth.toml", "--out", out]);
        assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    }
    for f in ["stays.csv", "events.csv", "oracle.csv", "aggregation_map.csv", "synth_config.resolved.toml"] {
        assert_eq!(read(d, &format!("a/{f}")), read(d, &format!("b/{f}")), "{f}");
    }
    assert!(read(d, "a/stays.csv").starts_with("stay_id,admit_year,age,icu_hours,mortality,los_days\n"));
    assert!(read(d, "a/events.csv").starts_with("stay_id,itemid,hour,value\n"));
    assert!(read(d, "a/oracle.csv").starts_with("stay_id,latent_severity\n"));
    assert!(read(d, "a/aggregation_map.csv").starts_with("concept,itemid\n"));
    let echo = read(d, "a/synth_config.resolved.toml");
    for key in [
        "year_start", "year_end", "changeover_year", "patients_per_year", "master_seed", "steepness", "midpoint",
        "base_days", "severity_scale", "obs_prob_pre", "unit_scale_post",
    ] {
        assert!(echo.contains(key), "echo lacks {key}");
    }
    assert_eq!(read(d, "a/stays.csv").lines().count(), 401);
}

#[test]
fn seed_flag_changes_the_cohort() {
    let dir = setup();
    let d = dir.path();
    bin(d, &["synth", "--config", "synth.toml", "--out", "a"]);
    bin(d, &["synth", "--config", "synth.toml", "--out", "b", "--seed", "99"]);
    assert_ne!(read(d, "a/events.csv"), read(d, "b/events.csv"));
    assert!(read(d, "b/synth_config.resolved.toml").contains("master_seed = 99"));
}

#[test]
fn missing_config_is_a_config_error_naming_the_path() {
    let dir = setup();
    let o = bin(dir.path(), &["synth", "--config", "nowhere.toml"]);
    assert_eq!(o.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&o.stderr).contains("nowhere.toml"));
    let o = bin(dir.path(), &["run", "--config", "nowhere.toml"]);
    assert_eq!(o.status.code(), Some(3));
}

#[test]
fn bad_config_values_are_config_errors() {
    let dir = setup();
    fs::write(dir.path().join("bad.toml"), "[cohort]\npatients_per_year = 0\n").unwrap();
    let o = bin(dir.path(), &["synth", "--config", "bad.toml"]);
    assert_eq!(o.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&o.stderr).contains("patients_per_year"));
}

#[test]
fn usage_errors_exit_with_two() {
    let dir = setup();
    assert_eq!(bin(dir.path(), &["frobnicate"]).status.code(), Some(2));
    assert_eq!(bin(dir.path(), &["run", "--jobs", "many"]).status.code(), Some(2));
}

#[test]
fn validation_contracts() {
    let dir = setup();
    let d = dir.path();
    bin(d, &["synth", "--config", "synth.toml", "--out", "c"]);
    let o = bin(d, &["validate", "--input", "c"]);
    assert!(o.status.success());
    assert!(String::from_utf8_lossy(&o.stdout).contains("warnings: 0"));

    let events = read(d, "c/events.csv");
    let mut lines: Vec<&str> = events.lines().collect();
    let unmapped = "1,424242,3,1.5";
    lines.insert(1, unmapped);
    fs::write(d.join("unmapped.csv"), lines.join("\n") + "\n").unwrap();
    let o = bin(d, &["validate", "--input", "c", "--events", "unmapped.csv"]);
    assert!(o.status.success());
    let stderr = String::from_utf8_lossy(&o.stderr);
    assert!(stderr.contains("424242") && stderr.contains("1 events"), "{stderr}");

    lines[1] = "1,220739,24,1.5";
    fs::write(d.join("late.csv"), lines.join("\n") + "\n").unwrap();
    let o = bin(d, &["validate", "--input", "c", "--events", "late.csv"]);
    assert_eq!(o.status.code(), Some(4));
    assert!(String::from_utf8_lossy(&o.stderr).contains("hour 24"));
}

#[test]
fn run_restrict_report() {
    let dir = setup();
    let d = dir.path();
    let o = bin(d, &["run", "--config", "run.toml", "--out", "full"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let stdout = String::from_utf8_lossy(&o.stdout);
    // One summary line per (task, representation, regime).
    assert_eq!(stdout.lines().filter(|l| l.contains(" records, ")).count(), 16);

    let records = read_results(&d.join("full/results.csv")).unwrap();
    for regime in ["year_agnostic", "one_time", "continuous", "short_term"] {
        assert!(records.iter().any(|r| r.regime == regime && r.status.is_ok()), "{regime}");
    }
    assert!(records.iter().all(|r| r.auroc.is_none_or(|a| (0.0..=1.0).contains(&a))));

    let again = bin(d, &["run", "--config", "run.toml", "--out", "again", "--jobs", "3"]);
    assert!(again.status.success());
    assert_eq!(read(d, "full/results.csv"), read(d, "again/results.csv"));
    assert_eq!(read(d, "full/comparisons.csv"), read(d, "again/comparisons.csv"));

    let part = bin(d, &["run", "--config", "run.toml", "--out", "part", "--test-year", "2005", "--repeat", "1"]);
    assert!(part.status.success(), "{}", String::from_utf8_lossy(&part.stderr));
    let full = read(d, "full/results.csv");
    let expected: Vec<&str> = full
        .lines()
        .skip(1)
        .filter(|l| {
            let f: Vec<&str> = l.split(',').collect();
            f[4] == "2005" && f[5] == "1"
        })
        .collect();
    let part_text = read(d, "part/results.csv");
    let got: Vec<&str> = part_text.lines().skip(1).collect();
    assert!(!expected.is_empty());
    assert_eq!(got, expected);

    fs::write(d.join("report.toml"), "changeover_year = 2004\n").unwrap();
    let o = bin(d, &["report", "--config", "report.toml", "--out", "full"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let summary = read(d, "full/summary.csv");
    let mut checked = 0;
    for line in summary.lines().skip(1) {
        let f: Vec<&str> = line.split(',').collect();
        if f[10] == "NA" {
            continue;
        }
        let values: Vec<f64> = records
            .iter()
            .filter(|r| {
                r.task.as_str() == f[0]
                    && r.representation.as_str() == f[1]
                    && r.regime == f[2]
                    && r.test_year.map_or("all".to_string(), |y| y.to_string()) == f[3]
                    && r.status.is_ok()
            })
            .filter_map(|r| r.auroc)
            .collect();
        let se: f64 = f[10].parse().unwrap();
        assert!((se - standard_error(&values).unwrap()).abs() < 1e-12, "{line}");
        checked += 1;
    }
    assert!(checked > 10);

    let svg = read(d, "full/mortality_one_time.svg");
    assert_eq!(svg.matches("<polyline").count(), 2);
    assert_eq!(svg.matches(r#"class="errorbar""#).count(), 2 * 3);
    assert_eq!(svg.matches(r#"class="changeover""#).count(), 1);
    assert!(!svg.contains("href"));
}

#[test]
fn ingested_cohort_reproduces_the_synthetic_run() {
    let dir = setup();
    let d = dir.path();
    bin(d, &["synth", "--config", "synth.toml", "--out", "c"]);
    let ingest = RUN.replace(
        "synth_config = \"synth.toml\"",
        "stays = \"c/stays.csv\"\nevents = \"c/events.csv\"\nmap = \"c/aggregation_map.csv\"",
    );
    fs::write(d.join("ingest.toml"), ingest).unwrap();
    let a = bin(d, &["run", "--config", "run.toml", "--out", "a", "--repeat", "0"]);
    let b = bin(d, &["run", "--config", "ingest.toml", "--out", "b", "--repeat", "0"]);
    assert!(a.status.success() && b.status.success(), "{}", String::from_utf8_lossy(&b.stderr));
    assert_eq!(read(d, "a/results.csv"), read(d, "b/results.csv"));
}

#[test]
fn malformed_ingested_rows_are_ingestion_errors() {
    let dir = setup();
    let d = dir.path();
    bin(d, &["synth", "--config", "synth.toml", "--out", "c"]);
    let stays = read(d, "c/stays.csv").replacen("\n1,", "\nx,", 1);
    fs::write(d.join("c/stays.csv"), stays).unwrap();
    let ingest = RUN.replace(
        "synth_config = \"synth.toml\"",
        "stays = \"c/stays.csv\"\nevents = \"c/events.csv\"\nmap = \"c/aggregation_map.csv\"",
    );
    fs::write(d.join("ingest.toml"), ingest).unwrap();
    let o = bin(d, &["run", "--config", "ingest.toml", "--out", "b"]);
    assert_eq!(o.status.code(), Some(4));
    assert!(String::from_utf8_lossy(&o.stderr).contains("row 1"));
}

#[test]
fn report_shades_significant_years_only() {
    let dir = setup();
    let d = dir.path();
    let mut text = String::from(ehrdrift::io::RESULTS_HEADER);
    text.push('\n');
    for repeat in 0..20 {
        for (year, shift) in [(2003, 0.1), (2004, 0.0)] {
            let base = 0.6 + 0.001 * f64::from(repeat);
            for (repr, v) in [("item_id", base), ("aggregated", base + shift + if shift == 0.0 { 0.0005 * f64::from(repeat % 3) - 0.0005 } else { 0.0 })] {
                text.push_str(&format!(
                    "mortality,{repr},one_time,2001-2002,{year},{repeat},1,NA,{v},0.3,100,50,1,ok\n"
                ));
            }
        }
    }
    fs::create_dir_all(d.join("r")).unwrap();
    fs::write(d.join("r/results.csv"), text).unwrap();
    fs::write(d.join("report.toml"), "threshold = 0.01\nchangeover_year = 2004\ncharts = [\"regimes\"]\n").unwrap();
    let o = bin(d, &["report", "--config", "report.toml", "--out", "r"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let svg = read(d, "r/mortality_one_time.svg");
    assert_eq!(svg.matches(r#"class="sig""#).count(), 1);
    // The shaded span sits over the first of two columns.
    let rect = svg.lines().find(|l| l.contains(r#"class="sig""#)).unwrap();
    assert!(rect.contains(r#"x="64.00""#), "{rect}");
}

#[test]
fn empty_results_are_a_report_error() {
    let dir = setup();
    let d = dir.path();
    fs::create_dir_all(d.join("r")).unwrap();
    fs::write(d.join("r/results.csv"), format!("{}\n", ehrdrift::io::RESULTS_HEADER)).unwrap();
    let o = bin(d, &["report", "--out", "r"]);
    assert_eq!(o.status.code(), Some(5));
}
