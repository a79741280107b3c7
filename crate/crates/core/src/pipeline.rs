//! Raw chart events to fixed-width feature rows.
//!
//! A stay's first 24 hours are bucketed into an hourly grid keyed either by
//! raw itemid or by clinical concept (all member itemids pooled before
//! averaging). Each grid cell then becomes three channels: the forward-filled
//! value, an observed-at-this-hour mask, and hours since the last
//! observation. Rows are laid out column-major by key, then hour, then
//! channel, followed by age.
//!
//! Under Item-ID keying the column universe is whatever itemids appear in the
//! training stays. Itemids first seen at test time are dropped, which is how
//! a vocabulary changeover silently blinds a model trained before it.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec;
use alloc::vec::Vec;
use core::fmt;

use thiserror::Error;

use crate::synthdata::{ChartEvent, Cohort, IcuStay, ItemId, StayId};

pub const HOURS: usize = 24;
pub const CHANNELS: usize = 3;
/// Feature slots contributed by one grid column.
pub const SLOTS_PER_COLUMN: usize = HOURS * CHANNELS;
/// Length-of-stay threshold (days) for the positive LOS label.
pub const LOS_THRESHOLD_DAYS: f64 = 3.0;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum PipelineError {
    #[error("invalid aggregation map: {0}")]
    InvalidMap(String),
    #[error("no fill default for column `{0}`")]
    MissingFill(String),
    #[error("column universes differ between matrices ({left} vs {right} columns)")]
    ColumnMismatch { left: usize, right: usize },
    #[error("unknown concept `{0}`")]
    UnknownConcept(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Representation {
    ItemId,
    Aggregated,
}

impl Representation {
    pub fn as_str(self) -> &'static str {
        match self {
            Representation::ItemId => "item_id",
            Representation::Aggregated => "aggregated",
        }
    }

    pub fn parse(text: &str) -> Option<Self> {
        match text {
            "item_id" | "itemid" => Some(Representation::ItemId),
            "aggregated" => Some(Representation::Aggregated),
            _ => None,
        }
    }
}

impl fmt::Display for Representation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Grid column key. Itemids order numerically, concepts lexicographically.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum ColumnKey {
    Item(ItemId),
    Concept(String),
}

impl fmt::Display for ColumnKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ColumnKey::Item(id) => id.fmt(f),
            ColumnKey::Concept(name) => f.write_str(name),
        }
    }
}

/// Clinical concept name to the itemids (from every era) that record it.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct AggregationMap {
    entries: BTreeMap<String, Vec<ItemId>>,
    owner: BTreeMap<ItemId, String>,
}

impl AggregationMap {
    pub fn new<I, S>(entries: I) -> Result<Self, PipelineError>
    where
        I: IntoIterator<Item = (S, Vec<ItemId>)>,
        S: Into<String>,
    {
        let mut map = Self::default();
        for (name, mut ids) in entries {
            let name = name.into();
            if name.is_empty() {
                return Err(PipelineError::InvalidMap("empty concept name".into()));
            }
            if ids.is_empty() {
                return Err(PipelineError::InvalidMap(format!("concept `{name}` has no itemids")));
            }
            if map.entries.contains_key(&name) {
                return Err(PipelineError::InvalidMap(format!("duplicate concept `{name}`")));
            }
            ids.sort_unstable();
            ids.dedup();
            for id in &ids {
                if let Some(other) = map.owner.insert(*id, name.clone()) {
                    return Err(PipelineError::InvalidMap(format!(
                        "itemid {id} belongs to both `{other}` and `{name}`"
                    )));
                }
            }
            map.entries.insert(name, ids);
        }
        Ok(map)
    }

    /// Builds a map from `(concept, itemid)` pairs, one itemid per pair.
    pub fn from_pairs<I, S>(pairs: I) -> Result<Self, PipelineError>
    where
        I: IntoIterator<Item = (S, ItemId)>,
        S: Into<String>,
    {
        let mut grouped: BTreeMap<String, Vec<ItemId>> = BTreeMap::new();
        for (name, id) in pairs {
            let ids = grouped.entry(name.into()).or_default();
            if ids.contains(&id) {
                return Err(PipelineError::InvalidMap(format!("itemid {id} listed twice")));
            }
            ids.push(id);
        }
        Self::new(grouped)
    }

    pub fn concepts(&self) -> impl Iterator<Item = (&str, &[ItemId])> {
        self.entries.iter().map(|(k, v)| (k.as_str(), v.as_slice()))
    }

    pub fn concept_of(&self, itemid: ItemId) -> Option<&str> {
        self.owner.get(&itemid).map(String::as_str)
    }

    pub fn itemids_of(&self, concept: &str) -> Option<&[ItemId]> {
        self.entries.get(concept).map(Vec::as_slice)
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// `(concept, itemid)` pairs in concept then itemid order.
    pub fn pairs(&self) -> impl Iterator<Item = (&str, ItemId)> {
        self.entries
            .iter()
            .flat_map(|(k, ids)| ids.iter().map(move |id| (k.as_str(), *id)))
    }
}

/// How events are assigned to grid columns.
#[derive(Debug, Clone, Copy)]
pub enum Keying<'a> {
    ItemId,
    Aggregated(&'a AggregationMap),
}

/// 24 hourly rows by `columns`, missing cells as `None`.
#[derive(Debug, Clone, PartialEq)]
pub struct HourlyGrid {
    pub stay_id: StayId,
    columns: Vec<ColumnKey>,
    /// Column-major: `cells[col * HOURS + hour]`.
    cells: Vec<Option<f64>>,
}

impl HourlyGrid {
    pub fn empty(stay_id: StayId, columns: Vec<ColumnKey>) -> Self {
        let cells = vec![None; columns.len() * HOURS];
        Self {
            stay_id,
            columns,
            cells,
        }
    }

    pub fn columns(&self) -> &[ColumnKey] {
        &self.columns
    }

    pub fn cell(&self, hour: usize, column: usize) -> Option<f64> {
        self.cells[column * HOURS + hour]
    }

    pub fn cell_by_key(&self, hour: usize, key: &ColumnKey) -> Option<f64> {
        let col = self.columns.binary_search(key).ok()?;
        self.cell(hour, col)
    }

    pub fn column(&self, column: usize) -> &[Option<f64>] {
        &self.cells[column * HOURS..(column + 1) * HOURS]
    }

    pub fn set(&mut self, hour: usize, column: usize, value: Option<f64>) {
        self.cells[column * HOURS + hour] = value;
    }

    /// Re-keys the grid onto `universe` (sorted). Columns outside it are
    /// discarded and their observed cells counted; columns absent from the
    /// grid come out all-missing.
    pub fn align(&self, universe: &[ColumnKey]) -> (HourlyGrid, usize) {
        let mut out = HourlyGrid::empty(self.stay_id, universe.to_vec());
        let mut dropped = 0;
        for (src, key) in self.columns.iter().enumerate() {
            match universe.binary_search(key) {
                Ok(dst) => out.cells[dst * HOURS..(dst + 1) * HOURS].copy_from_slice(self.column(src)),
                Err(_) => dropped += self.column(src).iter().filter(|c| c.is_some()).count(),
            }
        }
        (out, dropped)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Bucketed {
    pub grid: HourlyGrid,
    /// Events whose itemid had no column under the keying.
    pub dropped_events: usize,
}

/// Averages a stay's events into hourly cells.
///
/// Under [`Keying::ItemId`] the columns are the stay's distinct itemids;
/// under [`Keying::Aggregated`] they are every concept of the map, and each
/// cell pools all member-itemid values of that hour. Values are summed in
/// sorted order so the result does not depend on event order.
pub fn bucket_hourly(events: &[ChartEvent], stay: &IcuStay, keying: Keying<'_>) -> Bucketed {
    let columns: Vec<ColumnKey> = match keying {
        Keying::ItemId => events
            .iter()
            .filter(|e| e.stay_id == stay.stay_id)
            .map(|e| e.itemid)
            .collect::<BTreeSet<_>>()
            .into_iter()
            .map(ColumnKey::Item)
            .collect(),
        Keying::Aggregated(map) => map.concepts().map(|(k, _)| ColumnKey::Concept(k.to_string())).collect(),
    };

    let mut dropped_events = 0;
    let mut keyed: Vec<(usize, u8, f64)> = Vec::with_capacity(events.len());
    for e in events.iter().filter(|e| e.stay_id == stay.stay_id) {
        if usize::from(e.hour) >= HOURS {
            dropped_events += 1;
            continue;
        }
        let col = match keying {
            Keying::ItemId => columns.binary_search(&ColumnKey::Item(e.itemid)).ok(),
            Keying::Aggregated(map) => map.concept_of(e.itemid).and_then(|name| {
                columns
                    .binary_search_by(|k| match k {
                        ColumnKey::Concept(c) => c.as_str().cmp(name),
                        ColumnKey::Item(_) => core::cmp::Ordering::Less,
                    })
                    .ok()
            }),
        };
        match col {
            Some(col) => keyed.push((col, e.hour, e.value)),
            None => dropped_events += 1,
        }
    }
    keyed.sort_unstable_by(|a, b| (a.0, a.1).cmp(&(b.0, b.1)).then(a.2.total_cmp(&b.2)));

    let mut grid = HourlyGrid::empty(stay.stay_id, columns);
    for group in keyed.chunk_by(|a, b| a.0 == b.0 && a.1 == b.1) {
        let sum: f64 = group.iter().map(|g| g.2).sum();
        grid.set(usize::from(group[0].1), group[0].0, Some(sum / group.len() as f64));
    }
    Bucketed { grid, dropped_events }
}

/// Per-column default used before a column's first observation.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct FillStats {
    pub defaults: BTreeMap<ColumnKey, f64>,
}

impl FillStats {
    pub fn get(&self, key: &ColumnKey) -> Option<f64> {
        self.defaults.get(key).copied()
    }
}

/// Mean of observed cells per column across the given (training) grids;
/// 0 for columns never observed.
pub fn compute_fill_stats(grids: &[HourlyGrid]) -> FillStats {
    let mut acc: BTreeMap<ColumnKey, (f64, usize)> = BTreeMap::new();
    for grid in grids {
        for (col, key) in grid.columns.iter().enumerate() {
            let slot = acc.entry(key.clone()).or_insert((0.0, 0));
            for v in grid.column(col).iter().flatten() {
                slot.0 += v;
                slot.1 += 1;
            }
        }
    }
    FillStats {
        defaults: acc
            .into_iter()
            .map(|(k, (sum, n))| (k, if n == 0 { 0.0 } else { sum / n as f64 }))
            .collect(),
    }
}

/// Three-channel grid, stored in feature-row order
/// (`data[col * 72 + hour * 3 + channel]`).
#[derive(Debug, Clone, PartialEq)]
pub struct ImputedGrid {
    pub stay_id: StayId,
    columns: Vec<ColumnKey>,
    data: Vec<f64>,
}

impl ImputedGrid {
    pub fn columns(&self) -> &[ColumnKey] {
        &self.columns
    }

    fn at(&self, hour: usize, column: usize, channel: usize) -> f64 {
        self.data[column * SLOTS_PER_COLUMN + hour * CHANNELS + channel]
    }

    pub fn value(&self, hour: usize, column: usize) -> f64 {
        self.at(hour, column, 0)
    }

    pub fn mask(&self, hour: usize, column: usize) -> f64 {
        self.at(hour, column, 1)
    }

    pub fn delta(&self, hour: usize, column: usize) -> f64 {
        self.at(hour, column, 2)
    }

    pub fn as_flat(&self) -> &[f64] {
        &self.data
    }
}

/// Forward fill with observation mask and hours-since-observed.
///
/// Before a column's first observation the value is the fill default and
/// the delta is `hour + 1`, i.e. admission counts as hour -1.
pub fn impute_simple(grid: &HourlyGrid, fill: &FillStats) -> Result<ImputedGrid, PipelineError> {
    let mut data = vec![0.0; grid.columns.len() * SLOTS_PER_COLUMN];
    for (col, key) in grid.columns.iter().enumerate() {
        let default = fill
            .get(key)
            .ok_or_else(|| PipelineError::MissingFill(key.to_string()))?;
        impute_column(grid.column(col), default, &mut data[col * SLOTS_PER_COLUMN..(col + 1) * SLOTS_PER_COLUMN]);
    }
    Ok(ImputedGrid {
        stay_id: grid.stay_id,
        columns: grid.columns.clone(),
        data,
    })
}

fn impute_column(cells: &[Option<f64>], default: f64, out: &mut [f64]) {
    let mut last: Option<(usize, f64)> = None;
    for (hour, cell) in cells.iter().enumerate() {
        if let Some(v) = cell {
            last = Some((hour, *v));
        }
        let (value, delta) = match last {
            Some((h, v)) => (v, (hour - h) as f64),
            None => (default, (hour + 1) as f64),
        };
        out[hour * CHANNELS] = value;
        out[hour * CHANNELS + 1] = if cell.is_some() { 1.0 } else { 0.0 };
        out[hour * CHANNELS + 2] = delta;
    }
}

/// Retains stays of patients older than 15 with at least 36 ICU hours, in
/// input order. When patient ids are present only each patient's lowest
/// stay id survives.
pub fn filter_cohort(stays: &[IcuStay]) -> Vec<IcuStay> {
    let mut first_stay: BTreeMap<u64, StayId> = BTreeMap::new();
    for s in stays {
        if let Some(p) = s.patient_id {
            first_stay
                .entry(p)
                .and_modify(|id| *id = (*id).min(s.stay_id))
                .or_insert(s.stay_id);
        }
    }
    stays
        .iter()
        .filter(|s| s.age > 15 && s.icu_hours >= 36.0)
        .filter(|s| s.patient_id.is_none_or(|p| first_stay[&p] == s.stay_id))
        .cloned()
        .collect()
}

/// [`filter_cohort`] applied to a whole cohort; events of dropped stays go
/// with them.
pub fn include_cohort(cohort: &Cohort) -> Cohort {
    let stays = filter_cohort(cohort.stays());
    let kept: BTreeSet<StayId> = stays.iter().map(|s| s.stay_id).collect();
    let events = cohort.events().iter().filter(|e| kept.contains(&e.stay_id)).cloned().collect();
    Cohort::new(stays, events)
}

/// Rows of flattened 3-channel features plus age, with both task labels.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureMatrix {
    pub stay_ids: Vec<StayId>,
    pub grid_columns: Vec<ColumnKey>,
    pub column_names: Vec<String>,
    /// Row-major, `n_rows * n_cols`.
    pub values: Vec<f64>,
    pub mortality: Vec<bool>,
    pub los: Vec<bool>,
    /// Events dropped because their key had no column.
    pub dropped_events: usize,
}

impl FeatureMatrix {
    pub fn n_rows(&self) -> usize {
        self.stay_ids.len()
    }

    pub fn n_cols(&self) -> usize {
        self.column_names.len()
    }

    pub fn row(&self, i: usize) -> &[f64] {
        let w = self.n_cols();
        &self.values[i * w..(i + 1) * w]
    }

    /// Index of the first slot of a grid column.
    pub fn slot(&self, column: usize, hour: usize, channel: usize) -> usize {
        column * SLOTS_PER_COLUMN + hour * CHANNELS + channel
    }

    pub fn ensure_aligned(&self, other: &FeatureMatrix) -> Result<(), PipelineError> {
        if self.column_names != other.column_names {
            return Err(PipelineError::ColumnMismatch {
                left: self.n_cols(),
                right: other.n_cols(),
            });
        }
        Ok(())
    }
}

pub fn los_label(los_days: f64) -> bool {
    los_days >= LOS_THRESHOLD_DAYS
}

fn feature_names(columns: &[ColumnKey], include_age: bool) -> Vec<String> {
    let mut names = Vec::with_capacity(columns.len() * SLOTS_PER_COLUMN + 1);
    for key in columns {
        for hour in 0..HOURS {
            for channel in ["value", "mask", "delta"] {
                names.push(format!("{key}_h{hour:02}_{channel}"));
            }
        }
    }
    if include_age {
        names.push("age".into());
    }
    names
}

/// Everything a matrix build needs that is learned from training stays:
/// the column universe and the fill defaults.
#[derive(Debug, Clone, PartialEq)]
pub struct FeaturePlan {
    pub representation: Representation,
    pub columns: Vec<ColumnKey>,
    pub fill: FillStats,
    pub include_age: bool,
}

impl FeaturePlan {
    /// Fits the plan on training stays. `subset` restricts the columns to
    /// the named concepts (their member itemids under Item-ID keying).
    pub fn fit(
        cohort: &Cohort,
        train: &[&IcuStay],
        representation: Representation,
        map: &AggregationMap,
        subset: Option<&[String]>,
        include_age: bool,
    ) -> Result<Self, PipelineError> {
        let keying = match representation {
            Representation::ItemId => Keying::ItemId,
            Representation::Aggregated => Keying::Aggregated(map),
        };
        let allowed: Option<BTreeSet<ColumnKey>> = match subset {
            None => None,
            Some(names) => {
                let mut keys = BTreeSet::new();
                for name in names {
                    let ids = map
                        .itemids_of(name)
                        .ok_or_else(|| PipelineError::UnknownConcept(name.clone()))?;
                    match representation {
                        Representation::ItemId => keys.extend(ids.iter().map(|i| ColumnKey::Item(*i))),
                        Representation::Aggregated => {
                            keys.insert(ColumnKey::Concept(name.clone()));
                        }
                    }
                }
                Some(keys)
            }
        };

        let grids: Vec<HourlyGrid> = train
            .iter()
            .map(|s| bucket_hourly(cohort.events_for(s.stay_id), s, keying).grid)
            .collect();
        let universe: BTreeSet<ColumnKey> = match representation {
            Representation::ItemId => grids.iter().flat_map(|g| g.columns.iter().cloned()).collect(),
            Representation::Aggregated => map.concepts().map(|(k, _)| ColumnKey::Concept(k.to_string())).collect(),
        };
        let columns: Vec<ColumnKey> = universe
            .into_iter()
            .filter(|k| allowed.as_ref().is_none_or(|a| a.contains(k)))
            .collect();
        let aligned: Vec<HourlyGrid> = grids.iter().map(|g| g.align(&columns).0).collect();
        let mut fill = compute_fill_stats(&aligned);
        for key in &columns {
            fill.defaults.entry(key.clone()).or_insert(0.0);
        }
        Ok(Self {
            representation,
            columns,
            fill,
            include_age,
        })
    }

    pub fn width(&self) -> usize {
        self.columns.len() * SLOTS_PER_COLUMN + usize::from(self.include_age)
    }

    /// Builds rows for `stays` in the given order.
    pub fn build(&self, cohort: &Cohort, stays: &[&IcuStay], map: &AggregationMap) -> Result<FeatureMatrix, PipelineError> {
        let keying = match self.representation {
            Representation::ItemId => Keying::ItemId,
            Representation::Aggregated => Keying::Aggregated(map),
        };
        let width = self.width();
        let mut values = Vec::with_capacity(stays.len() * width);
        let mut dropped_events = 0;
        for stay in stays {
            let bucketed = bucket_hourly(cohort.events_for(stay.stay_id), stay, keying);
            let (grid, dropped) = bucketed.grid.align(&self.columns);
            dropped_events += bucketed.dropped_events + dropped;
            let imputed = impute_simple(&grid, &self.fill)?;
            values.extend_from_slice(&imputed.data);
            if self.include_age {
                values.push(f64::from(stay.age));
            }
        }
        Ok(FeatureMatrix {
            stay_ids: stays.iter().map(|s| s.stay_id).collect(),
            grid_columns: self.columns.clone(),
            column_names: feature_names(&self.columns, self.include_age),
            values,
            mortality: stays.iter().map(|s| s.mortality).collect(),
            los: stays.iter().map(|s| los_label(s.los_days)).collect(),
            dropped_events,
        })
    }
}

/// Builds rows for `stays` under a plan fitted on the experiment's
/// training stays.
pub fn build_matrix(
    cohort: &Cohort,
    stays: &[&IcuStay],
    map: &AggregationMap,
    plan: &FeaturePlan,
) -> Result<FeatureMatrix, PipelineError> {
    plan.build(cohort, stays, map)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn stay(id: u64, age: u32, icu_hours: f64) -> IcuStay {
        IcuStay {
            stay_id: StayId(id),
            patient_id: None,
            admit_year: 2001,
            age,
            icu_hours,
            mortality: false,
            los_days: 2.0,
            latent_severity: f64::NAN,
        }
    }

    fn ev(id: u64, itemid: u32, hour: u8, value: f64) -> ChartEvent {
        ChartEvent {
            stay_id: StayId(id),
            itemid: ItemId(itemid),
            hour,
            value,
        }
    }

    fn wbc_map() -> AggregationMap {
        AggregationMap::new([("wbc", [861, 1127, 1542, 220546].map(ItemId).to_vec())]).unwrap()
    }

    #[test]
    fn filter_boundaries() {
        let kept = filter_cohort(&[stay(1, 15, 100.0), stay(2, 16, 36.0), stay(3, 40, 35.9)]);
        assert_eq!(kept.iter().map(|s| s.stay_id.0).collect::<Vec<_>>(), [2]);
        assert!(filter_cohort(&[]).is_empty());
    }

    #[test]
    fn filter_keeps_first_stay_per_patient() {
        let mut a = stay(7, 50, 40.0);
        a.patient_id = Some(1);
        let mut b = stay(3, 50, 40.0);
        b.patient_id = Some(1);
        let c = stay(9, 50, 40.0);
        let kept = filter_cohort(&[a, b, c]);
        assert_eq!(kept.iter().map(|s| s.stay_id.0).collect::<Vec<_>>(), [3, 9]);
    }

    #[test]
    fn aggregated_cell_pools_member_itemids() {
        let events = [ev(1, 861, 3, 10.0), ev(1, 220546, 3, 14.0)];
        let map = wbc_map();
        let b = bucket_hourly(&events, &stay(1, 50, 40.0), Keying::Aggregated(&map));
        assert_eq!(b.grid.columns(), &[ColumnKey::Concept("wbc".into())]);
        assert_eq!(b.grid.cell(3, 0), Some(12.0));
        assert_eq!(b.dropped_events, 0);
    }

    #[test]
    fn item_keyed_cells_stay_separate() {
        let events = [ev(1, 861, 3, 10.0), ev(1, 220546, 3, 14.0)];
        let g = bucket_hourly(&events, &stay(1, 50, 40.0), Keying::ItemId).grid;
        assert_eq!(g.cell_by_key(3, &ColumnKey::Item(ItemId(861))), Some(10.0));
        assert_eq!(g.cell_by_key(3, &ColumnKey::Item(ItemId(220546))), Some(14.0));
        let observed = (0..2).flat_map(|c| g.column(c).iter()).filter(|c| c.is_some()).count();
        assert_eq!(observed, 2);
    }

    #[test]
    fn same_hour_values_average() {
        let events = [ev(1, 5, 0, 4.0), ev(1, 5, 0, 6.0)];
        let g = bucket_hourly(&events, &stay(1, 50, 40.0), Keying::ItemId).grid;
        assert_eq!(g.cell(0, 0), Some(5.0));
    }

    #[test]
    fn unmapped_itemids_are_dropped_and_counted() {
        let events = [ev(1, 861, 0, 4.0), ev(1, 9999, 0, 6.0), ev(1, 9998, 1, 6.0)];
        let b = bucket_hourly(&events, &stay(1, 50, 40.0), Keying::Aggregated(&wbc_map()));
        assert_eq!(b.dropped_events, 2);
        assert_eq!(b.grid.cell(0, 0), Some(4.0));
    }

    fn one_column(cells: &[Option<f64>]) -> HourlyGrid {
        let key = ColumnKey::Item(ItemId(1));
        let mut g = HourlyGrid::empty(StayId(1), alloc::vec![key]);
        for (h, c) in cells.iter().enumerate() {
            g.set(h, 0, *c);
        }
        g
    }

    fn fill_of(v: f64) -> FillStats {
        FillStats {
            defaults: [(ColumnKey::Item(ItemId(1)), v)].into_iter().collect(),
        }
    }

    #[test]
    fn forward_fill_three_channels() {
        let g = one_column(&[None, Some(5.0), None, Some(7.0)]);
        let imp = impute_simple(&g, &fill_of(9.0)).unwrap();
        let take = |f: fn(&ImputedGrid, usize, usize) -> f64| (0..4).map(|h| f(&imp, h, 0)).collect::<Vec<_>>();
        assert_eq!(take(ImputedGrid::value), [9.0, 5.0, 5.0, 7.0]);
        assert_eq!(take(ImputedGrid::mask), [0.0, 1.0, 0.0, 1.0]);
        assert_eq!(take(ImputedGrid::delta), [1.0, 0.0, 1.0, 0.0]);
    }

    #[test]
    fn fully_observed_column_is_identity() {
        let cells: Vec<_> = (0..24).map(|h| Some(h as f64 * 0.5)).collect();
        let imp = impute_simple(&one_column(&cells), &fill_of(9.0)).unwrap();
        for h in 0..24 {
            assert_eq!(imp.value(h, 0), h as f64 * 0.5);
            assert_eq!(imp.mask(h, 0), 1.0);
            assert_eq!(imp.delta(h, 0), 0.0);
        }
    }

    #[test]
    fn never_observed_column_uses_default() {
        let imp = impute_simple(&one_column(&[]), &fill_of(9.0)).unwrap();
        for h in 0..24 {
            assert_eq!(imp.value(h, 0), 9.0);
            assert_eq!(imp.mask(h, 0), 0.0);
            assert_eq!(imp.delta(h, 0), (h + 1) as f64);
        }
    }

    #[test]
    fn missing_fill_names_the_column() {
        let err = impute_simple(&one_column(&[]), &FillStats::default()).unwrap_err();
        assert_eq!(err, PipelineError::MissingFill("1".into()));
    }

    #[test]
    fn fill_stats_are_observed_means() {
        let a = one_column(&[Some(2.0)]);
        let b = one_column(&[None, Some(4.0)]);
        assert_eq!(compute_fill_stats(&[a, b]).get(&ColumnKey::Item(ItemId(1))), Some(3.0));
        assert_eq!(compute_fill_stats(&[one_column(&[])]).get(&ColumnKey::Item(ItemId(1))), Some(0.0));
    }

    #[test]
    fn los_threshold_boundary() {
        assert!(los_label(3.0));
        assert!(!los_label(2.99));
    }

    #[test]
    fn map_rejects_overlaps_and_empties() {
        assert!(AggregationMap::new([("a", alloc::vec![ItemId(1)]), ("b", alloc::vec![ItemId(1)])]).is_err());
        assert!(AggregationMap::new([("a", Vec::new())]).is_err());
        assert!(AggregationMap::new([("a", alloc::vec![ItemId(1)]), ("a", alloc::vec![ItemId(2)])]).is_err());
        let m = AggregationMap::from_pairs([("b", ItemId(2)), ("a", ItemId(1)), ("b", ItemId(3))]).unwrap();
        assert_eq!(m.pairs().collect::<Vec<_>>(), [("a", ItemId(1)), ("b", ItemId(2)), ("b", ItemId(3))]);
    }

    #[test]
    fn stay_without_events_yields_default_pattern() {
        let s = stay(1, 61, 40.0);
        let cohort = Cohort::new(alloc::vec![s.clone()], Vec::new());
        let map = wbc_map();
        let plan = FeaturePlan {
            representation: Representation::Aggregated,
            columns: alloc::vec![ColumnKey::Concept("wbc".into())],
            fill: FillStats {
                defaults: [(ColumnKey::Concept("wbc".into()), 8.5)].into_iter().collect(),
            },
            include_age: true,
        };
        let m = plan.build(&cohort, &[&s], &map).unwrap();
        assert_eq!(m.n_cols(), 73);
        let row = m.row(0);
        for h in 0..24 {
            assert_eq!(&row[h * 3..h * 3 + 3], &[8.5, 0.0, (h + 1) as f64]);
        }
        assert_eq!(row[72], 61.0);
        assert_eq!(m.column_names[0], "wbc_h00_value");
        assert_eq!(m.column_names[72], "age");
    }
}
