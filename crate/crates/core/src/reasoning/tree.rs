//! Multi-target classification trees over `{Yes, No, Irrelevant}` targets.
//!
//! Split quality is the mean Gini gain over targets. Maximizing it is the same
//! as maximizing `Σ_t Σ_side Σ_k c²/n_side`, which is compared exactly with
//! integer cross-multiplication so ties are real ties.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::features::{SlotKind, Verdict};

const CLASSES: usize = 3;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TrainConfig {
    pub max_depth: usize,
    pub min_samples_leaf: usize,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self { max_depth: 12, min_samples_leaf: 2 }
    }
}

#[derive(Debug, Error, PartialEq)]
pub enum TreeError {
    #[error("training set is empty")]
    Empty,
    #[error("row {row} has {got} values, expected {expected}")]
    Arity { row: usize, got: usize, expected: usize },
    #[error("invalid train config: {0}")]
    Config(&'static str),
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "value", rename_all = "snake_case")]
pub enum Split {
    /// `x <= threshold` goes left.
    Threshold(f64),
    /// `x == label` goes left.
    Equals(f64),
}

impl Split {
    pub fn goes_left(&self, x: f64) -> bool {
        match *self {
            Split::Threshold(t) => x <= t,
            Split::Equals(v) => x == v,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum Node {
    Leaf {
        /// Per-target class counts in `[Yes, No, Irrelevant]` order.
        counts: Vec<[u32; CLASSES]>,
        labels: Vec<Verdict>,
    },
    Internal {
        slot: usize,
        split: Split,
        left: usize,
        right: usize,
    },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MultiTargetTree {
    pub inputs: Vec<String>,
    pub input_kinds: Vec<SlotKind>,
    pub targets: Vec<String>,
    /// Node arena; the root is node 0.
    pub nodes: Vec<Node>,
}

/// Training data: one row of inputs and one row of target verdicts per sample.
pub struct Dataset<'a> {
    pub x: &'a [Vec<f64>],
    pub y: &'a [Vec<Verdict>],
    pub input_names: Vec<String>,
    pub input_kinds: Vec<SlotKind>,
    pub target_names: Vec<String>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
struct Score {
    num: u128,
    den: u128,
}

impl Score {
    fn beats(self, o: Score) -> bool {
        self.num * o.den > o.num * self.den
    }
}

fn majority(c: &[u32; CLASSES]) -> Verdict {
    let mut best = 0;
    for k in 1..CLASSES {
        if c[k] > c[best] {
            best = k;
        }
    }
    Verdict::from_class(best)
}

fn sum_sq(counts: &[[u32; CLASSES]]) -> u128 {
    counts.iter().flatten().map(|&c| (c as u128) * (c as u128)).sum()
}

struct Builder<'a> {
    data: &'a Dataset<'a>,
    cfg: TrainConfig,
    nodes: Vec<Node>,
    n_targets: usize,
}

impl Builder<'_> {
    fn counts(&self, idx: &[usize]) -> Vec<[u32; CLASSES]> {
        let mut c = vec![[0u32; CLASSES]; self.n_targets];
        for &i in idx {
            for (t, v) in self.data.y[i].iter().enumerate() {
                c[t][v.class()] += 1;
            }
        }
        c
    }

    fn leaf(&mut self, counts: Vec<[u32; CLASSES]>) -> usize {
        let labels = counts.iter().map(majority).collect();
        self.nodes.push(Node::Leaf { counts, labels });
        self.nodes.len() - 1
    }

    /// Best split of `idx`, scanning slots then thresholds in ascending order
    /// and keeping only strict improvements.
    fn best_split(&self, idx: &[usize], parent: &[[u32; CLASSES]]) -> Option<(usize, Split, Score)> {
        let n = idx.len() as u128;
        let min_leaf = self.cfg.min_samples_leaf;
        let mut best: Option<(usize, Split, Score)> = None;
        let parent_score = Score { num: sum_sq(parent), den: n };
        let consider = |slot: usize, split: Split, s: Score, best: &mut Option<(usize, Split, Score)>| {
            if s.beats(parent_score) && best.is_none_or(|b| s.beats(b.2)) {
                *best = Some((slot, split, s));
            }
        };
        for slot in 0..self.data.input_kinds.len() {
            let mut order: Vec<usize> = idx.to_vec();
            let x = |i: usize| self.data.x[i][slot];
            order.sort_by(|&a, &b| x(a).total_cmp(&x(b)));
            match self.data.input_kinds[slot] {
                SlotKind::Scalar => {
                    let mut left = vec![[0u32; CLASSES]; self.n_targets];
                    for pos in 0..order.len() - 1 {
                        let i = order[pos];
                        for (t, v) in self.data.y[i].iter().enumerate() {
                            left[t][v.class()] += 1;
                        }
                        let (a, b) = (x(i), x(order[pos + 1]));
                        if a == b {
                            continue;
                        }
                        let nl = pos + 1;
                        let nr = order.len() - nl;
                        if nl < min_leaf || nr < min_leaf {
                            continue;
                        }
                        let mut thr = a + (b - a) / 2.0;
                        if !(thr >= a && thr < b) {
                            thr = a;
                        }
                        let s = self.score(&left, parent, nl, nr);
                        consider(slot, Split::Threshold(thr), s, &mut best);
                    }
                }
                SlotKind::Categorical => {
                    let mut start = 0;
                    while start < order.len() {
                        let v = x(order[start]);
                        let mut end = start;
                        while end < order.len() && x(order[end]) == v {
                            end += 1;
                        }
                        let nl = end - start;
                        let nr = order.len() - nl;
                        if nl >= min_leaf && nr >= min_leaf {
                            let left = self.counts(&order[start..end]);
                            let s = self.score(&left, parent, nl, nr);
                            consider(slot, Split::Equals(v), s, &mut best);
                        }
                        start = end;
                    }
                }
            }
        }
        best
    }

    fn score(&self, left: &[[u32; CLASSES]], parent: &[[u32; CLASSES]], nl: usize, nr: usize) -> Score {
        let a = sum_sq(left);
        let b: u128 = left
            .iter()
            .zip(parent)
            .flat_map(|(l, p)| (0..CLASSES).map(move |k| ((p[k] - l[k]) as u128).pow(2)))
            .sum();
        let (nl, nr) = (nl as u128, nr as u128);
        Score { num: a * nr + b * nl, den: nl * nr }
    }

    fn grow(&mut self, idx: Vec<usize>, depth: usize) -> usize {
        let counts = self.counts(&idx);
        let pure = counts.iter().all(|c| c.iter().filter(|&&k| k > 0).count() <= 1);
        if pure || depth >= self.cfg.max_depth || idx.len() < 2 * self.cfg.min_samples_leaf {
            return self.leaf(counts);
        }
        let Some((slot, split, _)) = self.best_split(&idx, &counts) else {
            return self.leaf(counts);
        };
        let (l, r): (Vec<usize>, Vec<usize>) = idx.iter().partition(|&&i| split.goes_left(self.data.x[i][slot]));
        let me = self.nodes.len();
        self.nodes.push(Node::Leaf { counts: Vec::new(), labels: Vec::new() });
        let left = self.grow(l, depth + 1);
        let right = self.grow(r, depth + 1);
        self.nodes[me] = Node::Internal { slot, split, left, right };
        me
    }
}

pub fn fit_tree(data: &Dataset<'_>, cfg: &TrainConfig) -> Result<MultiTargetTree, TreeError> {
    if cfg.max_depth < 1 {
        return Err(TreeError::Config("max_depth must be at least 1"));
    }
    if cfg.min_samples_leaf < 1 {
        return Err(TreeError::Config("min_samples_leaf must be at least 1"));
    }
    if data.x.is_empty() || data.x.len() != data.y.len() {
        return Err(TreeError::Empty);
    }
    let (n_in, n_out) = (data.input_kinds.len(), data.target_names.len());
    for (row, (x, y)) in data.x.iter().zip(data.y).enumerate() {
        if x.len() != n_in {
            return Err(TreeError::Arity { row, got: x.len(), expected: n_in });
        }
        if y.len() != n_out {
            return Err(TreeError::Arity { row, got: y.len(), expected: n_out });
        }
    }
    let mut b = Builder { data, cfg: *cfg, nodes: Vec::new(), n_targets: n_out };
    b.grow((0..data.x.len()).collect(), 0);
    Ok(MultiTargetTree {
        inputs: data.input_names.clone(),
        input_kinds: data.input_kinds.clone(),
        targets: data.target_names.clone(),
        nodes: b.nodes,
    })
}

impl MultiTargetTree {
    pub fn predict(&self, x: &[f64]) -> &[Verdict] {
        let mut at = 0;
        loop {
            match &self.nodes[at] {
                Node::Leaf { labels, .. } => return labels,
                Node::Internal { slot, split, left, right } => {
                    at = if split.goes_left(x[*slot]) { *left } else { *right };
                }
            }
        }
    }

    pub fn depth(&self) -> usize {
        fn d(nodes: &[Node], at: usize) -> usize {
            match &nodes[at] {
                Node::Leaf { .. } => 0,
                Node::Internal { left, right, .. } => 1 + d(nodes, *left).max(d(nodes, *right)),
            }
        }
        d(&self.nodes, 0)
    }

    pub fn leaf_count(&self) -> usize {
        self.nodes.iter().filter(|n| matches!(n, Node::Leaf { .. })).count()
    }
}
