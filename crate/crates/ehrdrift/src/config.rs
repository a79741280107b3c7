//! Sectioned `key = value` configuration files (TOML syntax).
//!
//! Every key is optional. Resolution fills the defaults in, and the
//! resolved form is echoed back next to the outputs with every key spelled
//! out.

use std::fs;
use std::path::{Path, PathBuf};

use ehrdrift_core::learner::{HyperParams, SearchSpace};
use ehrdrift_core::pipeline::Representation;
use ehrdrift_core::regimes::{RegimeKind, Task, ABLATION_REPEATS, DEFAULT_CV_FOLDS, DEFAULT_REPEATS};
use ehrdrift_core::synthdata::{default_config, ConceptRole, ConceptSpec, ItemId, SynthConfig};
use ehrdrift_core::AggregationMap;
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read config file {path}: {source}")]
    Read {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("{path}: {message}")]
    Parse { path: PathBuf, message: String },
    #[error("invalid config field `{field}`: {reason}")]
    Invalid { field: String, reason: String },
}

fn invalid(field: impl Into<String>, reason: impl Into<String>) -> ConfigError {
    ConfigError::Invalid {
        field: field.into(),
        reason: reason.into(),
    }
}

fn load<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<T, ConfigError> {
    let text = fs::read_to_string(path).map_err(|source| ConfigError::Read {
        path: path.to_path_buf(),
        source,
    })?;
    toml::from_str(&text).map_err(|e| ConfigError::Parse {
        path: path.to_path_buf(),
        message: e.to_string(),
    })
}

fn echo<T: Serialize>(header: &str, value: &T) -> String {
    let body = toml::to_string(value).expect("resolved configs serialize");
    format!("# {header}\n{body}")
}

// ---------------------------------------------------------------- synth

#[derive(Debug, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SynthFile {
    #[serde(default)]
    pub cohort: CohortKeys,
    #[serde(default)]
    pub mortality: MortalityKeys,
    #[serde(default)]
    pub los: LosKeys,
    /// When present, replaces the default concept list.
    #[serde(default, rename = "concept", skip_serializing_if = "Option::is_none")]
    pub concepts: Option<Vec<ConceptKeys>>,
}

#[derive(Debug, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CohortKeys {
    pub year_start: Option<i32>,
    pub year_end: Option<i32>,
    pub changeover_year: Option<i32>,
    pub patients_per_year: Option<u32>,
    pub master_seed: Option<u64>,
}

#[derive(Debug, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MortalityKeys {
    pub steepness: Option<f64>,
    pub midpoint: Option<f64>,
}

#[derive(Debug, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LosKeys {
    pub base_days: Option<f64>,
    pub severity_scale: Option<f64>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConceptKeys {
    pub name: String,
    pub role: String,
    pub pre_era_itemids: Vec<u32>,
    pub post_era_itemids: Vec<u32>,
    pub baseline: f64,
    pub severity_slope: f64,
    pub noise_sd: f64,
    pub obs_prob_pre: f64,
    pub obs_prob_post: f64,
    #[serde(default = "one")]
    pub unit_scale_post: f64,
}

fn one() -> f64 {
    1.0
}

impl SynthFile {
    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        load(path)
    }

    /// Defaults filled in and validated.
    pub fn resolve(&self, seed_override: Option<u64>) -> Result<SynthConfig, ConfigError> {
        let d = default_config();
        let concepts = match &self.concepts {
            None => d.concepts.clone(),
            Some(list) => list
                .iter()
                .enumerate()
                .map(|(i, c)| {
                    let role = ConceptRole::parse(&c.role).ok_or_else(|| {
                        invalid(
                            format!("concept[{i}].role"),
                            format!("`{}` is not one of dominant, informative, noise", c.role),
                        )
                    })?;
                    Ok(ConceptSpec {
                        name: c.name.clone(),
                        role,
                        pre_era_itemids: c.pre_era_itemids.iter().map(|&i| ItemId(i)).collect(),
                        post_era_itemids: c.post_era_itemids.iter().map(|&i| ItemId(i)).collect(),
                        baseline: c.baseline,
                        severity_slope: c.severity_slope,
                        noise_sd: c.noise_sd,
                        obs_prob_pre: c.obs_prob_pre,
                        obs_prob_post: c.obs_prob_post,
                        unit_scale_post: c.unit_scale_post,
                    })
                })
                .collect::<Result<_, ConfigError>>()?,
        };
        let cfg = SynthConfig {
            year_start: self.cohort.year_start.unwrap_or(d.year_start),
            year_end: self.cohort.year_end.unwrap_or(d.year_end),
            changeover_year: self.cohort.changeover_year.unwrap_or(d.changeover_year),
            patients_per_year: self.cohort.patients_per_year.unwrap_or(d.patients_per_year),
            concepts,
            mortality_steepness: self.mortality.steepness.unwrap_or(d.mortality_steepness),
            mortality_midpoint: self.mortality.midpoint.unwrap_or(d.mortality_midpoint),
            los_base_days: self.los.base_days.unwrap_or(d.los_base_days),
            los_severity_scale: self.los.severity_scale.unwrap_or(d.los_severity_scale),
            master_seed: seed_override.or(self.cohort.master_seed).unwrap_or(d.master_seed),
        };
        cfg.validate().map_err(|e| invalid(e.field, e.reason))?;
        Ok(cfg)
    }

    pub fn from_config(cfg: &SynthConfig) -> Self {
        Self {
            cohort: CohortKeys {
                year_start: Some(cfg.year_start),
                year_end: Some(cfg.year_end),
                changeover_year: Some(cfg.changeover_year),
                patients_per_year: Some(cfg.patients_per_year),
                master_seed: Some(cfg.master_seed),
            },
            mortality: MortalityKeys {
                steepness: Some(cfg.mortality_steepness),
                midpoint: Some(cfg.mortality_midpoint),
            },
            los: LosKeys {
                base_days: Some(cfg.los_base_days),
                severity_scale: Some(cfg.los_severity_scale),
            },
            concepts: Some(
                cfg.concepts
                    .iter()
                    .map(|c| ConceptKeys {
                        name: c.name.clone(),
                        role: c.role.as_str().into(),
                        pre_era_itemids: c.pre_era_itemids.iter().map(|i| i.0).collect(),
                        post_era_itemids: c.post_era_itemids.iter().map(|i| i.0).collect(),
                        baseline: c.baseline,
                        severity_slope: c.severity_slope,
                        noise_sd: c.noise_sd,
                        obs_prob_pre: c.obs_prob_pre,
                        obs_prob_post: c.obs_prob_post,
                        unit_scale_post: c.unit_scale_post,
                    })
                    .collect(),
            ),
        }
    }
}

pub fn echo_synth(cfg: &SynthConfig) -> String {
    echo("resolved synthetic cohort config", &SynthFile::from_config(cfg))
}

// ------------------------------------------------------------------ run

#[derive(Debug, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunFile {
    pub master_seed: Option<u64>,
    pub tasks: Option<Vec<String>>,
    pub representations: Option<Vec<String>>,
    pub cv_folds: Option<usize>,
    #[serde(default)]
    pub cohort: CohortSourceKeys,
    #[serde(default)]
    pub search: SearchKeys,
    #[serde(default)]
    pub year_agnostic: RegimeKeys,
    #[serde(default)]
    pub one_time: RegimeKeys,
    #[serde(default)]
    pub continuous: RegimeKeys,
    #[serde(default)]
    pub short_term: RegimeKeys,
    #[serde(default)]
    pub saturation: RegimeKeys,
    #[serde(default)]
    pub ablation: RegimeKeys,
}

/// Either a synthetic config (default when nothing is given) or ingested
/// `stays` / `events` / `map` CSVs. Relative paths are taken from the
/// config file's directory.
#[derive(Debug, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CohortSourceKeys {
    pub synth_config: Option<String>,
    pub stays: Option<String>,
    pub events: Option<String>,
    pub map: Option<String>,
}

#[derive(Debug, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SearchKeys {
    pub n_trees: Option<Vec<usize>>,
    /// `0` means unlimited depth.
    pub max_depth: Option<Vec<usize>>,
    pub min_samples_leaf: Option<Vec<usize>>,
    pub max_features: Option<Vec<f64>>,
    pub bootstrap: Option<Vec<bool>>,
    pub n_iter: Option<usize>,
}

#[derive(Debug, Default, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RegimeKeys {
    pub enabled: Option<bool>,
    pub n_repeats: Option<u32>,
    pub train_years: Option<Vec<i32>>,
    pub test_years: Option<Vec<i32>>,
    pub fractions: Option<Vec<f64>>,
    pub concepts: Option<Vec<String>>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum RegimeName {
    YearAgnostic,
    OneTime,
    Continuous,
    ShortTerm,
    Saturation,
    Ablation,
}

impl RegimeName {
    pub const ALL: [RegimeName; 6] = [
        RegimeName::YearAgnostic,
        RegimeName::OneTime,
        RegimeName::Continuous,
        RegimeName::ShortTerm,
        RegimeName::Saturation,
        RegimeName::Ablation,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            RegimeName::YearAgnostic => "year_agnostic",
            RegimeName::OneTime => "one_time",
            RegimeName::Continuous => "continuous",
            RegimeName::ShortTerm => "short_term",
            RegimeName::Saturation => "saturation",
            RegimeName::Ablation => "ablation",
        }
    }

    fn uses_train_years(self) -> bool {
        matches!(self, RegimeName::OneTime | RegimeName::Saturation | RegimeName::Ablation)
    }
}

/// One regime section after resolution. Year lists stay empty until
/// [`RunConfig::materialize`] sees the cohort.
#[derive(Debug, Clone, PartialEq)]
pub struct RegimeEntry {
    pub name: RegimeName,
    pub enabled: bool,
    pub n_repeats: u32,
    pub train_years: Vec<i32>,
    pub test_years: Vec<i32>,
    pub fractions: Vec<f64>,
    pub concepts: Vec<String>,
}

impl RegimeEntry {
    /// The core regime kind this entry runs as.
    pub fn kind(&self) -> RegimeKind {
        match self.name {
            RegimeName::YearAgnostic => RegimeKind::YearAgnostic,
            RegimeName::Continuous => RegimeKind::Continuous,
            RegimeName::ShortTerm => RegimeKind::ShortTerm,
            _ => RegimeKind::OneTime {
                train_years: self.train_years.clone(),
            },
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum CohortSource {
    Synthetic(SynthConfig),
    Files { stays: PathBuf, events: PathBuf, map: PathBuf },
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub master_seed: u64,
    pub tasks: Vec<Task>,
    pub representations: Vec<Representation>,
    pub cv_folds: usize,
    pub cohort: CohortSource,
    pub search: SearchSpace,
    pub regimes: Vec<RegimeEntry>,
}

pub const DEFAULT_FRACTIONS: [f64; 9] = [0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9];

impl RunFile {
    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        load(path)
    }

    /// `base` anchors relative cohort paths.
    pub fn resolve(&self, base: &Path, seed_override: Option<u64>) -> Result<RunConfig, ConfigError> {
        let tasks = match &self.tasks {
            None => vec![Task::Mortality, Task::Los],
            Some(list) => parse_list(list, "tasks", Task::parse)?,
        };
        let representations = match &self.representations {
            None => vec![Representation::ItemId, Representation::Aggregated],
            Some(list) => parse_list(list, "representations", Representation::parse)?,
        };
        let cv_folds = self.cv_folds.unwrap_or(DEFAULT_CV_FOLDS);
        if cv_folds < 2 {
            return Err(invalid("cv_folds", "must be at least 2"));
        }

        let c = &self.cohort;
        let cohort = match (&c.synth_config, &c.stays, &c.events) {
            (Some(_), Some(_), _) | (Some(_), _, Some(_)) => {
                return Err(invalid("cohort", "give either synth_config or stays/events, not both"))
            }
            (None, Some(stays), Some(events)) => {
                let map = c
                    .map
                    .as_ref()
                    .ok_or_else(|| invalid("cohort.map", "ingested cohorts need an aggregation map"))?;
                CohortSource::Files {
                    stays: base.join(stays),
                    events: base.join(events),
                    map: base.join(map),
                }
            }
            (None, Some(_), None) | (None, None, Some(_)) => {
                return Err(invalid("cohort", "stays and events must be given together"))
            }
            (Some(path), None, None) => {
                CohortSource::Synthetic(SynthFile::load(&base.join(path))?.resolve(None)?)
            }
            (None, None, None) => CohortSource::Synthetic(SynthFile::default().resolve(None)?),
        };
        if c.map.is_some() && matches!(cohort, CohortSource::Synthetic(_)) {
            return Err(invalid("cohort.map", "synthetic cohorts derive their own map"));
        }

        let s = &self.search;
        let d = SearchSpace::default();
        let search = SearchSpace {
            n_trees: s.n_trees.clone().unwrap_or(d.n_trees),
            max_depth: match &s.max_depth {
                None => d.max_depth,
                Some(v) => v.iter().map(|&x| (x > 0).then_some(x)).collect(),
            },
            min_samples_leaf: s.min_samples_leaf.clone().unwrap_or(d.min_samples_leaf),
            max_features_fraction: s.max_features.clone().unwrap_or(d.max_features_fraction),
            bootstrap: s.bootstrap.clone().unwrap_or(d.bootstrap),
            n_iter: s.n_iter.unwrap_or(d.n_iter),
        };
        search.validate().map_err(|e| invalid("search", e.to_string()))?;
        for (i, n) in search.n_trees.iter().enumerate() {
            let hp = HyperParams {
                n_trees: *n,
                ..HyperParams::default()
            };
            hp.validate().map_err(|e| invalid(format!("search.n_trees[{i}]"), e.to_string()))?;
        }
        if search.min_samples_leaf.contains(&0) {
            return Err(invalid("search.min_samples_leaf", "must be positive"));
        }
        if let Some(f) = search.max_features_fraction.iter().find(|f| !(**f > 0.0 && **f <= 1.0)) {
            return Err(invalid("search.max_features", format!("{f} outside (0, 1]")));
        }

        let mut regimes = Vec::new();
        for name in RegimeName::ALL {
            regimes.push(self.regime(name)?);
        }
        if !regimes.iter().any(|r| r.enabled) {
            return Err(invalid("regimes", "no regime is enabled"));
        }

        Ok(RunConfig {
            master_seed: seed_override.or(self.master_seed).unwrap_or(42),
            tasks,
            representations,
            cv_folds,
            cohort,
            search,
            regimes,
        })
    }

    fn regime(&self, name: RegimeName) -> Result<RegimeEntry, ConfigError> {
        let keys = match name {
            RegimeName::YearAgnostic => &self.year_agnostic,
            RegimeName::OneTime => &self.one_time,
            RegimeName::Continuous => &self.continuous,
            RegimeName::ShortTerm => &self.short_term,
            RegimeName::Saturation => &self.saturation,
            RegimeName::Ablation => &self.ablation,
        };
        let section = name.as_str();
        let reject = |present: bool, key: &str| {
            if present {
                Err(invalid(format!("{section}.{key}"), "does not apply to this regime"))
            } else {
                Ok(())
            }
        };
        reject(keys.train_years.is_some() && !name.uses_train_years(), "train_years")?;
        reject(keys.test_years.is_some() && name == RegimeName::YearAgnostic, "test_years")?;
        reject(keys.fractions.is_some() && name != RegimeName::Saturation, "fractions")?;
        reject(keys.concepts.is_some() && name != RegimeName::Ablation, "concepts")?;

        let n_repeats = keys.n_repeats.unwrap_or(if name == RegimeName::Ablation {
            ABLATION_REPEATS
        } else {
            DEFAULT_REPEATS
        });
        if n_repeats == 0 {
            return Err(invalid(format!("{section}.n_repeats"), "must be positive"));
        }
        let fractions = keys.fractions.clone().unwrap_or_default();
        if let Some(f) = fractions.iter().find(|f| !(**f > 0.0 && **f <= 1.0)) {
            return Err(invalid(format!("{section}.fractions"), format!("{f} outside (0, 1]")));
        }
        if matches!(&keys.train_years, Some(t) if t.is_empty()) {
            return Err(invalid(format!("{section}.train_years"), "must not be empty"));
        }
        Ok(RegimeEntry {
            name,
            enabled: keys
                .enabled
                .unwrap_or(!matches!(name, RegimeName::Saturation | RegimeName::Ablation)),
            n_repeats,
            train_years: keys.train_years.clone().unwrap_or_default(),
            test_years: keys.test_years.clone().unwrap_or_default(),
            fractions,
            concepts: keys.concepts.clone().unwrap_or_default(),
        })
    }
}

fn parse_list<T: Ord>(list: &[String], field: &str, parse: impl Fn(&str) -> Option<T>) -> Result<Vec<T>, ConfigError> {
    if list.is_empty() {
        return Err(invalid(field, "must not be empty"));
    }
    let mut out = Vec::with_capacity(list.len());
    for (i, item) in list.iter().enumerate() {
        out.push(parse(item).ok_or_else(|| invalid(format!("{field}[{i}]"), format!("unknown value `{item}`")))?);
    }
    out.sort();
    out.dedup();
    Ok(out)
}

impl RunConfig {
    /// Fills the year and concept defaults that depend on the cohort.
    pub fn materialize(&mut self, first: i32, last: i32, map: &AggregationMap) -> Result<(), ConfigError> {
        for r in &mut self.regimes {
            let section = r.name.as_str();
            if r.name.uses_train_years() && r.train_years.is_empty() {
                r.train_years = vec![first, (first + 1).min(last)];
                r.train_years.dedup();
            }
            if r.name != RegimeName::YearAgnostic && r.test_years.is_empty() {
                r.test_years = r.kind().default_test_years(first, last);
            }
            if r.name == RegimeName::Saturation && r.fractions.is_empty() {
                r.fractions = DEFAULT_FRACTIONS.to_vec();
            }
            if r.name == RegimeName::Ablation {
                if r.concepts.is_empty() {
                    r.concepts = map.concepts().map(|(c, _)| c.to_string()).collect();
                }
                if let Some(c) = r.concepts.iter().find(|c| map.itemids_of(c).is_none()) {
                    return Err(invalid(format!("{section}.concepts"), format!("unknown concept `{c}`")));
                }
            }
            if r.enabled && r.name != RegimeName::YearAgnostic && r.test_years.is_empty() {
                return Err(invalid(format!("{section}.test_years"), "no test year left in the cohort"));
            }
            let out_of_range = |y: &&i32| **y < first || **y > last;
            if let Some(y) = r.train_years.iter().chain(&r.test_years).find(out_of_range) {
                return Err(invalid(section, format!("year {y} outside the cohort's {first}-{last}")));
            }
        }
        Ok(())
    }

    /// Resolved form with every key explicit.
    pub fn echo(&self) -> String {
        let names = |v: Vec<&str>| Some(v.into_iter().map(String::from).collect());
        let cohort = match &self.cohort {
            CohortSource::Synthetic(_) => CohortSourceKeys::default(),
            CohortSource::Files { stays, events, map } => CohortSourceKeys {
                synth_config: None,
                stays: Some(stays.display().to_string()),
                events: Some(events.display().to_string()),
                map: Some(map.display().to_string()),
            },
        };
        let regime = |name: RegimeName| {
            let r = self.regimes.iter().find(|r| r.name == name).expect("every regime resolved");
            RegimeKeys {
                enabled: Some(r.enabled),
                n_repeats: Some(r.n_repeats),
                train_years: name.uses_train_years().then(|| r.train_years.clone()),
                test_years: (name != RegimeName::YearAgnostic).then(|| r.test_years.clone()),
                fractions: (name == RegimeName::Saturation).then(|| r.fractions.clone()),
                concepts: (name == RegimeName::Ablation).then(|| r.concepts.clone()),
            }
        };
        let file = RunFile {
            master_seed: Some(self.master_seed),
            tasks: names(self.tasks.iter().map(|t| t.as_str()).collect()),
            representations: names(self.representations.iter().map(|r| r.as_str()).collect()),
            cv_folds: Some(self.cv_folds),
            cohort,
            search: SearchKeys {
                n_trees: Some(self.search.n_trees.clone()),
                max_depth: Some(self.search.max_depth.iter().map(|d| d.unwrap_or(0)).collect()),
                min_samples_leaf: Some(self.search.min_samples_leaf.clone()),
                max_features: Some(self.search.max_features_fraction.clone()),
                bootstrap: Some(self.search.bootstrap.clone()),
                n_iter: Some(self.search.n_iter),
            },
            year_agnostic: regime(RegimeName::YearAgnostic),
            one_time: regime(RegimeName::OneTime),
            continuous: regime(RegimeName::Continuous),
            short_term: regime(RegimeName::ShortTerm),
            saturation: regime(RegimeName::Saturation),
            ablation: regime(RegimeName::Ablation),
        };
        let mut out = echo("resolved run config", &file);
        if let CohortSource::Synthetic(cfg) = &self.cohort {
            out.push_str("\n# synthetic cohort\n");
            for line in echo_synth(cfg).lines().skip(1) {
                out.push_str("# ");
                out.push_str(line);
                out.push('\n');
            }
        }
        out
    }
}

// --------------------------------------------------------------- report

#[derive(Debug, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ReportFile {
    pub results: Option<String>,
    pub threshold: Option<f64>,
    pub charts: Option<Vec<String>>,
    pub changeover_year: Option<i32>,
    /// Representations compared for shading.
    pub pair: Option<Vec<String>>,
    /// Test year whose AUROC the saturation chart plots; latest by default.
    pub saturation_test_year: Option<i32>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum Chart {
    Regimes,
    Saturation,
    Ablation,
}

impl Chart {
    fn parse(text: &str) -> Option<Self> {
        match text {
            "regimes" => Some(Chart::Regimes),
            "saturation" => Some(Chart::Saturation),
            "ablation" => Some(Chart::Ablation),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ReportSpec {
    pub results: PathBuf,
    pub threshold: f64,
    pub charts: Vec<Chart>,
    pub changeover_year: Option<i32>,
    pub pair: (Representation, Representation),
    pub saturation_test_year: Option<i32>,
}

impl ReportFile {
    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        load(path)
    }

    /// `results` falls back to `default_results` when the file names none.
    pub fn resolve(&self, base: &Path, default_results: Option<PathBuf>) -> Result<ReportSpec, ConfigError> {
        let results = match (&self.results, default_results) {
            (_, Some(p)) => p,
            (Some(p), None) => base.join(p),
            (None, None) => return Err(invalid("results", "no results file given")),
        };
        let threshold = self.threshold.unwrap_or(ehrdrift_core::metrics::SIGNIFICANCE_LEVEL);
        if !(threshold > 0.0 && threshold < 1.0) {
            return Err(invalid("threshold", format!("{threshold} outside (0, 1)")));
        }
        let charts = match &self.charts {
            None => vec![Chart::Regimes, Chart::Saturation, Chart::Ablation],
            Some(list) => parse_list(list, "charts", Chart::parse)?,
        };
        let pair = match &self.pair {
            None => (Representation::ItemId, Representation::Aggregated),
            Some(list) => {
                let parsed: Vec<Representation> = list
                    .iter()
                    .enumerate()
                    .map(|(i, r)| {
                        Representation::parse(r).ok_or_else(|| invalid(format!("pair[{i}]"), format!("unknown representation `{r}`")))
                    })
                    .collect::<Result<_, _>>()?;
                match parsed.as_slice() {
                    [a, b] if a != b => (*a, *b),
                    _ => return Err(invalid("pair", "needs two different representations")),
                }
            }
        };
        Ok(ReportSpec {
            results,
            threshold,
            charts,
            changeover_year: Some(self.changeover_year.unwrap_or(default_config().changeover_year)),
            pair,
            saturation_test_year: self.saturation_test_year,
        })
    }
}
