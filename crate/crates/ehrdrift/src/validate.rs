//! Checks on an external cohort before it is run.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::path::Path;

use ehrdrift_core::pipeline::filter_cohort;
use ehrdrift_core::synthdata::{ItemId, StayId};

use crate::io::{self, IngestError};

/// Outcome of a validation that found no fatal problem.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Validation {
    pub stays: usize,
    pub events: usize,
    pub concepts: usize,
    /// Events per itemid that the map does not cover.
    pub unmapped: BTreeMap<ItemId, usize>,
    /// Events whose stay_id is not in the stays file.
    pub orphan_events: usize,
    /// Stays removed by the inclusion filter.
    pub excluded_stays: usize,
}

impl Validation {
    pub fn warnings(&self) -> Vec<String> {
        let mut out = Vec::new();
        if !self.unmapped.is_empty() {
            let events: usize = self.unmapped.values().sum();
            let ids: Vec<String> = self.unmapped.keys().take(10).map(|i| i.to_string()).collect();
            out.push(format!(
                "{} itemids ({events} events) are not in the map: {}{}",
                self.unmapped.len(),
                ids.join(", "),
                if self.unmapped.len() > 10 { ", ..." } else { "" }
            ));
        }
        if self.orphan_events > 0 {
            out.push(format!("{} events refer to unknown stays", self.orphan_events));
        }
        out
    }
}

impl fmt::Display for Validation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "stays: {}", self.stays)?;
        writeln!(f, "events: {}", self.events)?;
        writeln!(f, "concepts in map: {}", self.concepts)?;
        writeln!(f, "stays excluded by the inclusion filter: {}", self.excluded_stays)?;
        let warnings = self.warnings();
        writeln!(f, "warnings: {}", warnings.len())?;
        for w in warnings {
            writeln!(f, "warning: {w}")?;
        }
        Ok(())
    }
}

/// Schema, uniqueness and hour-range problems are errors; map coverage
/// gaps are warnings.
pub fn validate_files(stays: &Path, events: &Path, map: &Path) -> Result<Validation, IngestError> {
    let stay_rows = io::read_stays(stays)?;
    let mut ids: BTreeSet<StayId> = BTreeSet::new();
    for (i, s) in stay_rows.iter().enumerate() {
        if !ids.insert(s.stay_id) {
            return Err(IngestError::Row {
                path: stays.to_path_buf(),
                row: i as u64 + 1,
                reason: format!("duplicate stay_id {}", s.stay_id),
            });
        }
    }
    let event_rows = io::read_events(events)?;
    let map = io::read_map(map)?;
    let mut unmapped: BTreeMap<ItemId, usize> = BTreeMap::new();
    let mut orphan_events = 0;
    for e in &event_rows {
        if map.concept_of(e.itemid).is_none() {
            *unmapped.entry(e.itemid).or_default() += 1;
        }
        if !ids.contains(&e.stay_id) {
            orphan_events += 1;
        }
    }
    Ok(Validation {
        stays: stay_rows.len(),
        events: event_rows.len(),
        concepts: map.concepts().count(),
        unmapped,
        orphan_events,
        excluded_stays: stay_rows.len() - filter_cohort(&stay_rows).len(),
    })
}
