//! CART growth with Gini impurity over a rank-indexed design matrix.
//!
//! Every column is rank-transformed once per training matrix. A node then
//! finds its best threshold for a column either by histogramming the node's
//! ranks (few distinct values) or by sorting them, and both routes visit
//! exactly the boundaries between consecutive distinct values present in the
//! node, which is what sorting the raw values would do.

use alloc::vec;
use alloc::vec::Vec;

use rand::Rng;
use rand_chacha::ChaCha8Rng;

use super::{HyperParams, Samples};

/// Per-column ranks of a design matrix.
#[derive(Debug, Clone)]
pub struct ColumnIndex {
    n_rows: usize,
    n_cols: usize,
    /// Column-major: `ranks[col * n_rows + row]`.
    ranks: Vec<u32>,
    /// Sorted distinct values per column.
    distinct: Vec<Vec<f64>>,
    max_distinct: usize,
}

impl ColumnIndex {
    pub fn new(samples: &Samples<'_>) -> Self {
        let (n_rows, n_cols) = (samples.n_rows(), samples.n_cols());
        let mut ranks = vec![0u32; n_rows * n_cols];
        let mut distinct = Vec::with_capacity(n_cols);
        let mut order: Vec<(f64, u32)> = Vec::with_capacity(n_rows);
        let mut max_distinct = 0;
        for col in 0..n_cols {
            order.clear();
            order.extend((0..n_rows).map(|r| (samples.get(r, col), r as u32)));
            order.sort_unstable_by(|a, b| a.0.total_cmp(&b.0));
            let mut values = Vec::new();
            let column_ranks = &mut ranks[col * n_rows..(col + 1) * n_rows];
            for &(v, row) in &order {
                if values.last() != Some(&v) {
                    values.push(v);
                }
                column_ranks[row as usize] = (values.len() - 1) as u32;
            }
            max_distinct = max_distinct.max(values.len());
            distinct.push(values);
        }
        Self {
            n_rows,
            n_cols,
            ranks,
            distinct,
            max_distinct,
        }
    }

    pub fn n_rows(&self) -> usize {
        self.n_rows
    }

    pub fn n_cols(&self) -> usize {
        self.n_cols
    }

    fn column(&self, col: usize) -> &[u32] {
        &self.ranks[col * self.n_rows..(col + 1) * self.n_rows]
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Node {
    /// Rows with `row[column] <= threshold` go left.
    Split {
        column: u32,
        threshold: f64,
        left: u32,
        right: u32,
    },
    Leaf {
        /// Positive share of the training rows that reached the leaf.
        fraction: f64,
        count: u32,
    },
}

/// Binary tree in a flat node array; node 0 is the root.
#[derive(Debug, Clone, PartialEq)]
pub struct Tree {
    pub nodes: Vec<Node>,
}

impl Tree {
    pub fn leaf(fraction: f64, count: u32) -> Self {
        Self {
            nodes: vec![Node::Leaf { fraction, count }],
        }
    }

    pub fn predict(&self, row: &[f64]) -> f64 {
        let mut id = 0;
        loop {
            match self.nodes[id] {
                Node::Split {
                    column,
                    threshold,
                    left,
                    right,
                } => id = if row[column as usize] <= threshold { left } else { right } as usize,
                Node::Leaf { fraction, .. } => return fraction,
            }
        }
    }

    pub fn depth(&self) -> usize {
        fn walk(nodes: &[Node], id: usize) -> usize {
            match nodes[id] {
                Node::Split { left, right, .. } => 1 + walk(nodes, left as usize).max(walk(nodes, right as usize)),
                Node::Leaf { .. } => 0,
            }
        }
        walk(&self.nodes, 0)
    }
}

/// Weighted Gini impurity of a node: `n * gini = 2 p (n - p) / n`.
#[inline]
fn weighted_gini(n: u32, p: u32) -> f64 {
    if n == 0 {
        return 0.0;
    }
    let (n, p) = (f64::from(n), f64::from(p));
    2.0 * p * (n - p) / n
}

/// Impurity decrease of splitting `(n, p)` into `(nl, pl)` and the rest,
/// normalised by the node size.
#[inline]
pub(crate) fn gini_gain(n: u32, p: u32, nl: u32, pl: u32) -> f64 {
    (weighted_gini(n, p) - weighted_gini(nl, pl) - weighted_gini(n - nl, p - pl)) / f64::from(n)
}

fn midpoint(lo: f64, hi: f64) -> f64 {
    let mid = lo + (hi - lo) / 2.0;
    // Adjacent floats can round the midpoint up to `hi`.
    if mid < hi && mid.is_finite() {
        mid
    } else {
        lo
    }
}

const MIN_GAIN: f64 = 1e-12;

#[derive(Debug, Clone, Copy)]
struct Candidate {
    gain: f64,
    column: usize,
    threshold: f64,
    /// Highest rank sent left.
    split_rank: u32,
}

impl Candidate {
    /// Larger gain wins; ties go to the lower column, then lower threshold.
    fn beats(&self, other: &Option<Candidate>) -> bool {
        match other {
            None => true,
            Some(o) => {
                self.gain > o.gain
                    || (self.gain == o.gain
                        && (self.column < o.column || (self.column == o.column && self.threshold < o.threshold)))
            }
        }
    }
}

struct Grower<'a> {
    index: &'a ColumnIndex,
    labels: &'a [bool],
    hp: &'a HyperParams,
    hist_n: Vec<u32>,
    hist_p: Vec<u32>,
    pairs: Vec<(u32, bool)>,
}

impl Grower<'_> {
    fn scan_column(&mut self, col: usize, rows: &[u32], n: u32, p: u32, best: &mut Option<Candidate>) {
        let (index, labels) = (self.index, self.labels);
        let values = &index.distinct[col];
        let k = values.len();
        if k < 2 {
            return;
        }
        let ranks = index.column(col);
        let min_leaf = self.hp.min_samples_leaf as u32;
        let consider = |prev: u32, next: u32, nl: u32, pl: u32, best: &mut Option<Candidate>| {
            if nl < min_leaf || n - nl < min_leaf {
                return;
            }
            let gain = gini_gain(n, p, nl, pl);
            if gain <= MIN_GAIN {
                return;
            }
            let cand = Candidate {
                gain,
                column: col,
                threshold: midpoint(values[prev as usize], values[next as usize]),
                split_rank: prev,
            };
            if cand.beats(best) {
                *best = Some(cand);
            }
        };

        if k <= 4 * rows.len() {
            let (hist_n, hist_p) = (&mut self.hist_n[..k], &mut self.hist_p[..k]);
            hist_n.fill(0);
            hist_p.fill(0);
            for &r in rows {
                let rank = ranks[r as usize] as usize;
                hist_n[rank] += 1;
                hist_p[rank] += u32::from(labels[r as usize]);
            }
            let (mut nl, mut pl, mut prev) = (0u32, 0u32, None);
            for rank in 0..k {
                if hist_n[rank] == 0 {
                    continue;
                }
                if let Some(prev) = prev {
                    consider(prev, rank as u32, nl, pl, best);
                }
                nl += hist_n[rank];
                pl += hist_p[rank];
                prev = Some(rank as u32);
            }
        } else {
            self.pairs.clear();
            self.pairs
                .extend(rows.iter().map(|&r| (ranks[r as usize], labels[r as usize])));
            self.pairs.sort_unstable_by_key(|x| x.0);
            let (mut nl, mut pl) = (0u32, 0u32);
            for (i, group) in self.pairs.chunk_by(|a, b| a.0 == b.0).enumerate() {
                if i > 0 {
                    consider(self.pairs[nl as usize - 1].0, group[0].0, nl, pl, best);
                }
                nl += group.len() as u32;
                pl += group.iter().filter(|x| x.1).count() as u32;
            }
        }
    }
}

/// Grows one tree on `rows` (indices into the index, repeats allowed).
pub(crate) fn grow_tree(
    index: &ColumnIndex,
    labels: &[bool],
    mut rows: Vec<u32>,
    hp: &HyperParams,
    rng: &mut ChaCha8Rng,
) -> Tree {
    let d = index.n_cols;
    let n_candidates = hp.candidate_columns(d);
    let mut grower = Grower {
        index,
        labels,
        hp,
        hist_n: vec![0; index.max_distinct],
        hist_p: vec![0; index.max_distinct],
        pairs: Vec::new(),
    };
    let mut nodes = vec![Node::Leaf {
        fraction: 0.0,
        count: 0,
    }];
    // (node id, start, end, depth)
    let mut stack = vec![(0usize, 0usize, rows.len(), 0usize)];
    while let Some((id, start, end, depth)) = stack.pop() {
        let node_rows = &rows[start..end];
        let n = node_rows.len() as u32;
        let p = node_rows.iter().filter(|&&r| labels[r as usize]).count() as u32;
        let leaf = Node::Leaf {
            fraction: if n == 0 { 0.0 } else { f64::from(p) / f64::from(n) },
            count: n,
        };
        let can_split = p > 0
            && p < n
            && hp.max_depth.is_none_or(|m| depth < m)
            && n >= 2 * hp.min_samples_leaf as u32;
        if !can_split {
            nodes[id] = leaf;
            continue;
        }

        let mut best = None;
        let sampled = rand::seq::index::sample(rng, d, n_candidates);
        for col in sampled.iter() {
            grower.scan_column(col, node_rows, n, p, &mut best);
        }
        let Some(best) = best else {
            nodes[id] = leaf;
            continue;
        };

        let ranks = index.column(best.column);
        let slice = &mut rows[start..end];
        let mut mid = 0;
        for i in 0..slice.len() {
            if ranks[slice[i] as usize] <= best.split_rank {
                slice.swap(i, mid);
                mid += 1;
            }
        }
        let left = nodes.len();
        nodes.push(leaf);
        nodes.push(leaf);
        nodes[id] = Node::Split {
            column: best.column as u32,
            threshold: best.threshold,
            left: left as u32,
            right: left as u32 + 1,
        };
        stack.push((left + 1, start + mid, end, depth + 1));
        stack.push((left, start, start + mid, depth + 1));
    }
    Tree { nodes }
}

/// Bootstrap resample (or the rows themselves) for one tree.
pub(crate) fn tree_rows(rows: &[u32], bootstrap: bool, rng: &mut ChaCha8Rng) -> Vec<u32> {
    if bootstrap {
        (0..rows.len()).map(|_| rows[rng.random_range(0..rows.len())]).collect()
    } else {
        rows.to_vec()
    }
}
