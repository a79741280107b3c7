//! Synthetic ICU cohorts with a recording-vocabulary changeover.
//!
//! Each stay carries one latent severity `s ~ U[0, 1]` that drives every
//! informative concept and both outcomes. Concepts are recorded under a
//! pre-era itemid vocabulary for admissions before the changeover year and
//! under a disjoint post-era vocabulary from then on, so a model keyed by
//! raw itemids loses its inputs at the changeover while a concept-keyed
//! model does not.

use alloc::collections::BTreeSet;
use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;
use core::fmt;

use rand::Rng;
use rand_distr::{Distribution, Exp, Normal};
use thiserror::Error;

use crate::pipeline::AggregationMap;
use crate::seed;

/// Identifier of one ICU stay.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct StayId(pub u64);

impl fmt::Display for StayId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.0.fmt(f)
    }
}

/// Charting-system vocabulary identifier of a measurement.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct ItemId(pub u32);

impl fmt::Display for ItemId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.0.fmt(f)
    }
}

/// What a concept is for in the generator; informational only.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ConceptRole {
    /// The Glasgow-coma-scale analogue: slope dominates noise.
    Dominant,
    Informative,
    Noise,
}

impl ConceptRole {
    pub fn as_str(self) -> &'static str {
        match self {
            ConceptRole::Dominant => "dominant",
            ConceptRole::Informative => "informative",
            ConceptRole::Noise => "noise",
        }
    }

    pub fn parse(text: &str) -> Option<Self> {
        match text {
            "dominant" => Some(ConceptRole::Dominant),
            "informative" => Some(ConceptRole::Informative),
            "noise" => Some(ConceptRole::Noise),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConceptSpec {
    pub name: String,
    pub role: ConceptRole,
    pub pre_era_itemids: Vec<ItemId>,
    pub post_era_itemids: Vec<ItemId>,
    pub baseline: f64,
    pub severity_slope: f64,
    pub noise_sd: f64,
    pub obs_prob_pre: f64,
    pub obs_prob_post: f64,
    /// Multiplier applied to post-era recorded values.
    pub unit_scale_post: f64,
}

impl ConceptSpec {
    fn era_itemids(&self, post: bool) -> &[ItemId] {
        if post {
            &self.post_era_itemids
        } else {
            &self.pre_era_itemids
        }
    }

    pub fn itemids(&self) -> impl Iterator<Item = ItemId> + '_ {
        self.pre_era_itemids.iter().chain(&self.post_era_itemids).copied()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SynthConfig {
    pub year_start: i32,
    pub year_end: i32,
    /// First admit year recorded under the post-era vocabulary;
    /// `year_end + 1` disables the changeover.
    pub changeover_year: i32,
    pub patients_per_year: u32,
    pub concepts: Vec<ConceptSpec>,
    pub mortality_steepness: f64,
    pub mortality_midpoint: f64,
    pub los_base_days: f64,
    pub los_severity_scale: f64,
    pub master_seed: u64,
}

#[derive(Debug, Clone, PartialEq, Error)]
#[error("invalid synthetic config field `{field}`: {reason}")]
pub struct ConfigError {
    pub field: String,
    pub reason: String,
}

impl ConfigError {
    fn new(field: impl Into<String>, reason: impl Into<String>) -> Self {
        Self {
            field: field.into(),
            reason: reason.into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct IcuStay {
    pub stay_id: StayId,
    /// Present only for ingested cohorts that may hold several stays per patient.
    pub patient_id: Option<u64>,
    pub admit_year: i32,
    pub age: u32,
    pub icu_hours: f64,
    pub mortality: bool,
    pub los_days: f64,
    /// Generator ground truth; never part of any feature matrix. NaN for
    /// ingested cohorts.
    pub latent_severity: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChartEvent {
    pub stay_id: StayId,
    pub itemid: ItemId,
    /// Hour since ICU admission, 0..=23.
    pub hour: u8,
    pub value: f64,
}

/// Stays plus their events, both sorted by stay id.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Cohort {
    stays: Vec<IcuStay>,
    events: Vec<ChartEvent>,
}

impl Cohort {
    pub fn new(mut stays: Vec<IcuStay>, mut events: Vec<ChartEvent>) -> Self {
        stays.sort_by_key(|s| s.stay_id);
        events.sort_by(|a, b| {
            (a.stay_id, a.hour, a.itemid)
                .cmp(&(b.stay_id, b.hour, b.itemid))
                .then(a.value.total_cmp(&b.value))
        });
        Self { stays, events }
    }

    pub fn stays(&self) -> &[IcuStay] {
        &self.stays
    }

    pub fn events(&self) -> &[ChartEvent] {
        &self.events
    }

    /// Events of one stay, in (hour, itemid) order.
    pub fn events_for(&self, stay_id: StayId) -> &[ChartEvent] {
        let start = self.events.partition_point(|e| e.stay_id < stay_id);
        let end = self.events.partition_point(|e| e.stay_id <= stay_id);
        &self.events[start..end]
    }

    /// Inclusive (min, max) admit year, or `None` when empty.
    pub fn year_range(&self) -> Option<(i32, i32)> {
        let min = self.stays.iter().map(|s| s.admit_year).min()?;
        let max = self.stays.iter().map(|s| s.admit_year).max()?;
        Some((min, max))
    }

    pub fn into_parts(self) -> (Vec<IcuStay>, Vec<ChartEvent>) {
        (self.stays, self.events)
    }
}

impl SynthConfig {
    pub fn validate(&self) -> Result<(), ConfigError> {
        if self.year_start > self.year_end {
            return Err(ConfigError::new("year_end", "must not precede year_start"));
        }
        if self.changeover_year < self.year_start || self.changeover_year > self.year_end + 1 {
            return Err(ConfigError::new(
                "changeover_year",
                format!(
                    "{} outside [{}, {}]",
                    self.changeover_year,
                    self.year_start,
                    self.year_end + 1
                ),
            ));
        }
        if self.patients_per_year == 0 {
            return Err(ConfigError::new("patients_per_year", "must be positive"));
        }
        if self.concepts.is_empty() {
            return Err(ConfigError::new("concepts", "at least one concept is required"));
        }
        if !(self.mortality_steepness.is_finite()) {
            return Err(ConfigError::new("mortality_steepness", "must be finite"));
        }
        if !(self.mortality_midpoint > 0.0 && self.mortality_midpoint < 1.0) {
            return Err(ConfigError::new("mortality_midpoint", "must lie in (0, 1)"));
        }
        if !(self.los_base_days > 0.0 && self.los_base_days.is_finite()) {
            return Err(ConfigError::new("los_base_days", "must be positive"));
        }
        if !(self.los_severity_scale > 0.0 && self.los_severity_scale.is_finite()) {
            return Err(ConfigError::new("los_severity_scale", "must be positive"));
        }

        let mut names = BTreeSet::new();
        let mut seen = BTreeSet::new();
        for (i, c) in self.concepts.iter().enumerate() {
            let field = |f: &str| format!("concepts[{i}].{f}");
            if c.name.is_empty() {
                return Err(ConfigError::new(field("name"), "must not be empty"));
            }
            if !names.insert(c.name.as_str()) {
                return Err(ConfigError::new(field("name"), format!("duplicate concept `{}`", c.name)));
            }
            if c.pre_era_itemids.is_empty() {
                return Err(ConfigError::new(field("pre_era_itemids"), "must not be empty"));
            }
            if c.post_era_itemids.is_empty() {
                return Err(ConfigError::new(field("post_era_itemids"), "must not be empty"));
            }
            for (era, ids) in [("pre_era_itemids", &c.pre_era_itemids), ("post_era_itemids", &c.post_era_itemids)] {
                for id in ids {
                    if id.0 == 0 {
                        return Err(ConfigError::new(field(era), "itemids must be positive"));
                    }
                    if !seen.insert(*id) {
                        return Err(ConfigError::new(
                            field(era),
                            format!("itemid {id} appears more than once across concepts or eras"),
                        ));
                    }
                }
            }
            for (name, p) in [("obs_prob_pre", c.obs_prob_pre), ("obs_prob_post", c.obs_prob_post)] {
                if !(0.0..=1.0).contains(&p) {
                    return Err(ConfigError::new(field(name), "must lie in [0, 1]"));
                }
            }
            if !(c.noise_sd >= 0.0 && c.noise_sd.is_finite()) {
                return Err(ConfigError::new(field("noise_sd"), "must be a nonnegative real"));
            }
            if !(c.unit_scale_post > 0.0 && c.unit_scale_post.is_finite()) {
                return Err(ConfigError::new(field("unit_scale_post"), "must be positive"));
            }
            if !c.baseline.is_finite() || !c.severity_slope.is_finite() {
                return Err(ConfigError::new(field("baseline"), "baseline and slope must be finite"));
            }
        }
        if !self
            .concepts
            .iter()
            .any(|c| c.severity_slope.abs() > c.noise_sd)
        {
            return Err(ConfigError::new(
                "concepts",
                "no concept has a severity slope dominating its noise",
            ));
        }
        Ok(())
    }

    /// Concept-to-itemid map spanning both eras.
    pub fn aggregation_map(&self) -> AggregationMap {
        AggregationMap::new(
            self.concepts
                .iter()
                .map(|c| (c.name.clone(), c.itemids().collect::<Vec<_>>())),
        )
        .expect("validated concepts form a valid map")
    }

    pub fn concept(&self, name: &str) -> Option<&ConceptSpec> {
        self.concepts.iter().find(|c| c.name == name)
    }

    pub fn is_post_era(&self, admit_year: i32) -> bool {
        admit_year >= self.changeover_year
    }

    /// Seed of the stream that generates one admit year.
    pub fn year_seed(&self, year: i32) -> u64 {
        seed::derive(self.master_seed, &[seed::label("synth-year"), year as u64])
    }
}

/// The documented default: 2001-2012, changeover in 2008, 500 stays per year
/// and 15 concepts (one dominant, eight informative, six noise).
pub fn default_config() -> SynthConfig {
    #[allow(clippy::too_many_arguments)]
    fn concept(
        name: &str,
        role: ConceptRole,
        pre: &[u32],
        post: &[u32],
        baseline: f64,
        slope: f64,
        noise_sd: f64,
        obs: (f64, f64),
        unit_scale_post: f64,
    ) -> ConceptSpec {
        ConceptSpec {
            name: name.to_string(),
            role,
            pre_era_itemids: pre.iter().map(|&i| ItemId(i)).collect(),
            post_era_itemids: post.iter().map(|&i| ItemId(i)).collect(),
            baseline,
            severity_slope: slope,
            noise_sd,
            obs_prob_pre: obs.0,
            obs_prob_post: obs.1,
            unit_scale_post,
        }
    }
    use ConceptRole::*;
    let concepts = alloc::vec![
        concept("gcs_total", Dominant, &[198, 184, 454], &[220739], 14.0, -10.0, 1.0, (0.5, 0.5), 1.0),
        concept("heart_rate", Informative, &[211, 3494], &[220045], 80.0, 25.0, 15.0, (0.9, 0.9), 1.0),
        concept("resp_rate", Informative, &[618, 3603], &[220210], 16.0, 8.0, 5.0, (0.8, 0.85), 1.0),
        concept("systolic_bp", Informative, &[51, 455, 6701], &[220179], 125.0, -30.0, 20.0, (0.8, 0.85), 1.0),
        concept("spo2", Informative, &[646, 834], &[220277], 97.0, -5.0, 2.5, (0.85, 0.9), 1.0),
        concept("lactate", Informative, &[818, 1531], &[225668], 1.5, 4.0, 1.5, (0.15, 0.15), 1.0),
        concept("creatinine", Informative, &[791, 1525, 3750], &[220615], 1.0, 1.5, 0.6, (0.15, 0.15), 1.0),
        concept("bun", Informative, &[781, 1162], &[225624], 18.0, 20.0, 12.0, (0.15, 0.15), 1.0),
        concept("wbc", Informative, &[861, 1127, 1542], &[220546], 9.0, 6.0, 4.0, (0.15, 0.15), 1.0),
        concept("temperature", Noise, &[678, 679], &[223761], 98.6, 0.0, 1.2, (0.3, 0.35), 1.0),
        concept("sodium", Noise, &[837, 1536, 3803], &[220645], 139.0, 0.0, 4.0, (0.15, 0.15), 1.0),
        concept("potassium", Noise, &[829, 1535, 3792], &[227442], 4.1, 0.0, 0.5, (0.15, 0.15), 1.0),
        concept("glucose", Noise, &[807, 811, 1529], &[220621], 130.0, 0.0, 40.0, (0.2, 0.25), 1.0),
        concept("hematocrit", Noise, &[813, 3761], &[220545], 31.0, 0.0, 5.0, (0.15, 0.15), 1.0),
        concept("weight", Noise, &[580, 581, 763], &[224639], 180.0, 0.0, 40.0, (0.05, 0.05), 0.4536),
    ];
    SynthConfig {
        year_start: 2001,
        year_end: 2012,
        changeover_year: 2008,
        patients_per_year: 500,
        concepts,
        mortality_steepness: 12.0,
        mortality_midpoint: 0.85,
        los_base_days: 1.5,
        los_severity_scale: 3.0,
        master_seed: 42,
    }
}

fn logistic(x: f64) -> f64 {
    1.0 / (1.0 + libm::exp(-x))
}

/// Generates one admit year. Stay ids are
/// `(year - year_start) * patients_per_year + i + 1`, so concatenating years
/// in order yields a stay-sorted cohort.
pub fn generate_year(config: &SynthConfig, year: i32) -> (Vec<IcuStay>, Vec<ChartEvent>) {
    let mut rng = seed::rng(config.year_seed(year));
    let post = config.is_post_era(year);
    let per_year = u64::from(config.patients_per_year);
    let first_id = (year - config.year_start) as u64 * per_year + 1;

    let mut stays = Vec::with_capacity(config.patients_per_year as usize);
    let mut events = Vec::new();
    let mut stay_events: Vec<ChartEvent> = Vec::new();
    let noise: Vec<Normal<f64>> = config
        .concepts
        .iter()
        .map(|c| Normal::new(0.0, c.noise_sd).expect("validated noise_sd"))
        .collect();

    for i in 0..per_year {
        let stay_id = StayId(first_id + i);
        let severity: f64 = rng.random_range(0.0..=1.0);
        let age: u32 = rng.random_range(16..=90);
        let p_death = logistic(config.mortality_steepness * (severity - config.mortality_midpoint));
        let mortality = rng.random_bool(p_death.clamp(0.0, 1.0));
        let los_mean = config.los_severity_scale * severity + 0.5;
        let los_extra = Exp::new(1.0 / los_mean).expect("positive rate").sample(&mut rng);
        let los_days = config.los_base_days + los_extra;
        let icu_fraction: f64 = rng.random_range(0.3..=1.0);
        let icu_hours = (24.0 * los_days * icu_fraction).max(36.0);

        stay_events.clear();
        for hour in 0..24u8 {
            for (concept, noise) in config.concepts.iter().zip(&noise) {
                let p_obs = if post { concept.obs_prob_post } else { concept.obs_prob_pre };
                if !rng.random_bool(p_obs) {
                    continue;
                }
                let ids = concept.era_itemids(post);
                let itemid = ids[rng.random_range(0..ids.len())];
                let mut value =
                    concept.baseline + concept.severity_slope * severity + noise.sample(&mut rng);
                if post {
                    value *= concept.unit_scale_post;
                }
                stay_events.push(ChartEvent {
                    stay_id,
                    itemid,
                    hour,
                    value,
                });
            }
        }
        stay_events.sort_by_key(|e| (e.hour, e.itemid));
        events.extend_from_slice(&stay_events);

        stays.push(IcuStay {
            stay_id,
            patient_id: None,
            admit_year: year,
            age,
            icu_hours,
            mortality,
            los_days,
            latent_severity: severity,
        });
    }
    (stays, events)
}

/// Generates the full cohort, year by year.
pub fn generate_cohort(config: &SynthConfig) -> Result<Cohort, ConfigError> {
    config.validate()?;
    let mut stays = Vec::new();
    let mut events = Vec::new();
    for year in config.year_start..=config.year_end {
        let (s, e) = generate_year(config, year);
        stays.extend(s);
        events.extend(e);
    }
    Ok(Cohort { stays, events })
}

/// Assembles per-year outputs (in any order) into the cohort the serial
/// generator would produce.
pub fn merge_years(mut parts: Vec<(i32, Vec<IcuStay>, Vec<ChartEvent>)>) -> Cohort {
    parts.sort_by_key(|p| p.0);
    let mut stays = Vec::new();
    let mut events = Vec::new();
    for (_, s, e) in parts {
        stays.extend(s);
        events.extend(e);
    }
    Cohort { stays, events }
}
