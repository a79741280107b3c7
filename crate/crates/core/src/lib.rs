//! Core of the temporal-drift evaluation harness.
//!
//! Everything in this crate is a pure function of its inputs and a seed:
//! cohort synthesis with a recording-vocabulary changeover, hourly 3-channel
//! feature construction under raw-itemid or concept-aggregated keying, a
//! random-forest learner with cross-validated random search, ranking metrics,
//! the Wilcoxon signed-rank test, and the training-regime orchestration that
//! ties them together.
//!
//! The crate is `no_std` (with `alloc`); file formats, the CLI and parallel
//! execution live in the `ehrdrift` companion crate.

#![cfg_attr(not(test), no_std)]

extern crate alloc;

pub mod learner;
pub mod metrics;
pub mod pipeline;
pub mod regimes;
pub mod seed;
pub mod synthdata;

pub use learner::{ForestModel, HyperParams, SearchSpace};
pub use pipeline::{AggregationMap, ColumnKey, FeatureMatrix, FillStats, HourlyGrid, Representation};
pub use regimes::{EvalRecord, RegimeKind, RegimeSpec, Task};
pub use synthdata::{ChartEvent, Cohort, ConceptSpec, IcuStay, SynthConfig};
