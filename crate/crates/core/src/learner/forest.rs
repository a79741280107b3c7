use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;
use core::fmt::Write;

use super::tree::{grow_tree, tree_rows, ColumnIndex, Node, Tree};
use super::{HyperParams, LearnError, Samples};
use crate::seed;

/// A fitted forest. Scores are the mean leaf fraction over trees.
#[derive(Debug, Clone, PartialEq)]
pub struct ForestModel {
    pub trees: Vec<Tree>,
    pub n_cols: usize,
    pub seed: u64,
    /// Set when training saw a single class; the model then predicts the
    /// training prevalence everywhere.
    pub degenerate: bool,
}

impl ForestModel {
    pub fn constant(prevalence: f64, n_cols: usize, seed: u64) -> Self {
        Self {
            trees: alloc::vec![Tree::leaf(prevalence, 0)],
            n_cols,
            seed,
            degenerate: true,
        }
    }

    pub fn predict_row(&self, row: &[f64]) -> f64 {
        self.trees.iter().map(|t| t.predict(row)).sum::<f64>() / self.trees.len() as f64
    }

    /// Debug dump: a header line per tree, then one line per node
    /// (`id split column threshold left right` or `id leaf fraction count`).
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "forest n_cols={} seed={} degenerate={}", self.n_cols, self.seed, self.degenerate);
        for (t, tree) in self.trees.iter().enumerate() {
            let _ = writeln!(out, "tree {t} nodes={}", tree.nodes.len());
            for (id, node) in tree.nodes.iter().enumerate() {
                let _ = match node {
                    Node::Split {
                        column,
                        threshold,
                        left,
                        right,
                    } => writeln!(out, "{id} split {column} {threshold} {left} {right}"),
                    Node::Leaf { fraction, count } => writeln!(out, "{id} leaf {fraction} {count}"),
                };
            }
        }
        out
    }

    pub fn from_text(text: &str) -> Result<Self, LearnError> {
        let err = |line: usize, reason: &str| LearnError::Parse {
            line: line + 1,
            reason: reason.into(),
        };
        let mut lines = text.lines().enumerate();
        let (_, header) = lines.next().ok_or_else(|| err(0, "empty input"))?;
        let mut model = ForestModel {
            trees: Vec::new(),
            n_cols: 0,
            seed: 0,
            degenerate: false,
        };
        for field in header.split_whitespace().skip(1) {
            let (key, value) = field.split_once('=').ok_or_else(|| err(0, "bad header field"))?;
            match key {
                "n_cols" => model.n_cols = value.parse().map_err(|_| err(0, "bad n_cols"))?,
                "seed" => model.seed = value.parse().map_err(|_| err(0, "bad seed"))?,
                "degenerate" => model.degenerate = value == "true",
                _ => return Err(err(0, "unknown header field")),
            }
        }
        for (i, line) in lines {
            let parts: Vec<&str> = line.split_whitespace().collect();
            match parts.as_slice() {
                ["tree", ..] => model.trees.push(Tree { nodes: Vec::new() }),
                [_, "split", c, t, l, r] => {
                    let tree = model.trees.last_mut().ok_or_else(|| err(i, "node before tree"))?;
                    tree.nodes.push(Node::Split {
                        column: c.parse().map_err(|_| err(i, "bad column"))?,
                        threshold: t.parse().map_err(|_| err(i, "bad threshold"))?,
                        left: l.parse().map_err(|_| err(i, "bad child"))?,
                        right: r.parse().map_err(|_| err(i, "bad child"))?,
                    });
                }
                [_, "leaf", f, n] => {
                    let tree = model.trees.last_mut().ok_or_else(|| err(i, "node before tree"))?;
                    tree.nodes.push(Node::Leaf {
                        fraction: f.parse().map_err(|_| err(i, "bad fraction"))?,
                        count: n.parse().map_err(|_| err(i, "bad count"))?,
                    });
                }
                [] => {}
                _ => return Err(err(i, &format!("unrecognised line `{line}`"))),
            }
        }
        Ok(model)
    }
}

pub(crate) fn check_training(samples: &Samples<'_>, labels: &[bool]) -> Result<(), LearnError> {
    if samples.n_rows() == 0 {
        return Err(LearnError::EmptyData);
    }
    if samples.n_rows() != labels.len() {
        return Err(LearnError::LengthMismatch {
            rows: samples.n_rows(),
            labels: labels.len(),
        });
    }
    Ok(())
}

/// Fits on the index rows listed in `rows`. Tree `t` draws from its own
/// stream `derive(seed, t)`, so trees are independent of each other's work.
pub(crate) fn fit_on_rows(
    index: &ColumnIndex,
    labels: &[bool],
    rows: &[u32],
    hp: &HyperParams,
    seed: u64,
) -> Result<ForestModel, LearnError> {
    hp.validate()?;
    if rows.is_empty() {
        return Err(LearnError::EmptyData);
    }
    let positives = rows.iter().filter(|&&r| labels[r as usize]).count();
    if positives == 0 || positives == rows.len() {
        let prevalence = positives as f64 / rows.len() as f64;
        return Ok(ForestModel::constant(prevalence, index.n_cols(), seed));
    }
    let trees = (0..hp.n_trees)
        .map(|t| {
            let mut rng = seed::rng(seed::derive(seed, &[t as u64]));
            let sample = tree_rows(rows, hp.bootstrap, &mut rng);
            grow_tree(index, labels, sample, hp, &mut rng)
        })
        .collect();
    Ok(ForestModel {
        trees,
        n_cols: index.n_cols(),
        seed,
        degenerate: false,
    })
}

pub fn fit_forest(samples: &Samples<'_>, labels: &[bool], hp: &HyperParams, seed: u64) -> Result<ForestModel, LearnError> {
    check_training(samples, labels)?;
    hp.validate()?;
    let index = ColumnIndex::new(samples);
    let rows: Vec<u32> = (0..samples.n_rows() as u32).collect();
    fit_on_rows(&index, labels, &rows, hp, seed)
}

pub fn predict_proba(model: &ForestModel, samples: &Samples<'_>) -> Result<Vec<f64>, LearnError> {
    if samples.n_cols() != model.n_cols {
        return Err(LearnError::WidthMismatch {
            expected: model.n_cols,
            got: samples.n_cols(),
        });
    }
    Ok((0..samples.n_rows()).map(|i| model.predict_row(samples.row(i))).collect())
}
