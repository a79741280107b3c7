//! Random-forest binary classifier, stratified k-fold cross-validation and
//! random hyperparameter search on validation AUROC.

mod forest;
mod search;
mod tree;

use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;
use core::fmt;

use thiserror::Error;

use crate::metrics::MetricError;

pub use forest::{fit_forest, predict_proba, ForestModel};
pub use search::{argmax_first, cross_val_auroc, random_search, stratified_folds, SearchOutcome};
pub use tree::{ColumnIndex, Node, Tree};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum LearnError {
    #[error("no training rows")]
    EmptyData,
    #[error("design matrix has no columns")]
    NoColumns,
    #[error("{0} values do not form rows of width {1}")]
    Ragged(usize, usize),
    #[error("{rows} rows but {labels} labels")]
    LengthMismatch { rows: usize, labels: usize },
    #[error("invalid hyperparameters: {0}")]
    InvalidHyperParams(String),
    #[error("model expects {expected} columns, got {got}")]
    WidthMismatch { expected: usize, got: usize },
    #[error("each class needs at least {needed} rows for {needed}-fold CV, minority has {got}")]
    TooFewPerClass { needed: usize, got: usize },
    #[error("search space has no candidates for `{0}`")]
    EmptySearchSpace(&'static str),
    #[error("every search candidate failed; last error: {0}")]
    AllCandidatesFailed(String),
    #[error(transparent)]
    Metric(#[from] MetricError),
    #[error("model text line {line}: {reason}")]
    Parse { line: usize, reason: String },
}

/// Borrowed row-major design matrix.
#[derive(Debug, Clone, Copy)]
pub struct Samples<'a> {
    values: &'a [f64],
    n_cols: usize,
}

impl<'a> Samples<'a> {
    pub fn new(values: &'a [f64], n_cols: usize) -> Result<Self, LearnError> {
        if n_cols == 0 {
            return Err(LearnError::NoColumns);
        }
        if !values.len().is_multiple_of(n_cols) {
            return Err(LearnError::Ragged(values.len(), n_cols));
        }
        Ok(Self { values, n_cols })
    }

    pub fn n_rows(&self) -> usize {
        self.values.len() / self.n_cols
    }

    pub fn n_cols(&self) -> usize {
        self.n_cols
    }

    pub fn row(&self, i: usize) -> &'a [f64] {
        &self.values[i * self.n_cols..(i + 1) * self.n_cols]
    }

    #[inline]
    pub fn get(&self, row: usize, col: usize) -> f64 {
        self.values[row * self.n_cols + col]
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HyperParams {
    pub n_trees: usize,
    /// `None` grows until purity or `min_samples_leaf` stops it.
    pub max_depth: Option<usize>,
    pub min_samples_leaf: usize,
    /// Share of columns sampled as split candidates at each node.
    pub max_features_fraction: f64,
    pub bootstrap: bool,
}

impl Default for HyperParams {
    fn default() -> Self {
        Self {
            n_trees: 100,
            max_depth: None,
            min_samples_leaf: 1,
            max_features_fraction: 0.33,
            bootstrap: true,
        }
    }
}

impl HyperParams {
    pub fn validate(&self) -> Result<(), LearnError> {
        let bad = |m: &str| Err(LearnError::InvalidHyperParams(m.into()));
        if self.n_trees == 0 {
            return bad("n_trees must be positive");
        }
        if self.max_depth == Some(0) {
            return bad("max_depth must be positive");
        }
        if self.min_samples_leaf == 0 {
            return bad("min_samples_leaf must be positive");
        }
        if !(self.max_features_fraction > 0.0 && self.max_features_fraction <= 1.0) {
            return bad("max_features_fraction must lie in (0, 1]");
        }
        Ok(())
    }

    /// `ceil(fraction * d)`, at least one and at most `d`.
    pub fn candidate_columns(&self, d: usize) -> usize {
        (libm::ceil(self.max_features_fraction * d as f64) as usize).clamp(1, d)
    }
}

impl fmt::Display for HyperParams {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let depth = match self.max_depth {
            Some(d) => format!("{d}"),
            None => "none".into(),
        };
        write!(
            f,
            "n_trees={} max_depth={} min_samples_leaf={} max_features={} bootstrap={}",
            self.n_trees, depth, self.min_samples_leaf, self.max_features_fraction, self.bootstrap
        )
    }
}

/// Candidate values per hyperparameter; each search draw picks one of each
/// uniformly.
#[derive(Debug, Clone, PartialEq)]
pub struct SearchSpace {
    pub n_trees: Vec<usize>,
    pub max_depth: Vec<Option<usize>>,
    pub min_samples_leaf: Vec<usize>,
    pub max_features_fraction: Vec<f64>,
    pub bootstrap: Vec<bool>,
    pub n_iter: usize,
}

impl Default for SearchSpace {
    fn default() -> Self {
        Self {
            n_trees: vec![50, 100, 200],
            max_depth: vec![Some(4), Some(8), Some(16), None],
            min_samples_leaf: vec![1, 5, 20],
            max_features_fraction: vec![0.1, 0.33, 1.0],
            bootstrap: vec![true],
            n_iter: 12,
        }
    }
}

impl SearchSpace {
    pub fn single(hp: HyperParams) -> Self {
        Self {
            n_trees: vec![hp.n_trees],
            max_depth: vec![hp.max_depth],
            min_samples_leaf: vec![hp.min_samples_leaf],
            max_features_fraction: vec![hp.max_features_fraction],
            bootstrap: vec![hp.bootstrap],
            n_iter: 1,
        }
    }

    pub fn validate(&self) -> Result<(), LearnError> {
        let checks: [(&'static str, bool); 5] = [
            ("n_trees", self.n_trees.is_empty()),
            ("max_depth", self.max_depth.is_empty()),
            ("min_samples_leaf", self.min_samples_leaf.is_empty()),
            ("max_features_fraction", self.max_features_fraction.is_empty()),
            ("bootstrap", self.bootstrap.is_empty()),
        ];
        if let Some((name, _)) = checks.iter().find(|c| c.1) {
            return Err(LearnError::EmptySearchSpace(name));
        }
        if self.n_iter == 0 {
            return Err(LearnError::InvalidHyperParams("n_iter must be positive".into()));
        }
        Ok(())
    }
}
