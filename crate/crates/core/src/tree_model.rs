//! CART regression tree: greedy axis-aligned splits chosen by maximal RSS
//! reduction, leaves predicting the mean target of their region.

use std::fmt::Write as _;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::feature_lab::FeatureFrame;

/// Nodes index features by position in the owning model's feature list.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "node", rename_all = "snake_case")]
pub enum TreeNode {
    Leaf {
        value: f64,
        count: usize,
    },
    Split {
        feature: usize,
        name: String,
        threshold: f64,
        left: Box<TreeNode>,
        right: Box<TreeNode>,
    },
}

impl TreeNode {
    /// `row[feature] <= threshold` goes left.
    pub fn predict(&self, row: &[f64]) -> f64 {
        let mut node = self;
        loop {
            match node {
                TreeNode::Leaf { value, .. } => return *value,
                TreeNode::Split {
                    feature,
                    threshold,
                    left,
                    right,
                    ..
                } => {
                    node = if row[*feature] <= *threshold { left } else { right };
                }
            }
        }
    }

    /// Leaves in left-to-right order.
    pub fn leaves(&self) -> Vec<(f64, usize)> {
        let mut out = Vec::new();
        self.collect_leaves(&mut out);
        out
    }

    fn collect_leaves(&self, out: &mut Vec<(f64, usize)>) {
        match self {
            TreeNode::Leaf { value, count } => out.push((*value, *count)),
            TreeNode::Split { left, right, .. } => {
                left.collect_leaves(out);
                right.collect_leaves(out);
            }
        }
    }

    pub fn n_leaves(&self) -> usize {
        match self {
            TreeNode::Leaf { .. } => 1,
            TreeNode::Split { left, right, .. } => left.n_leaves() + right.n_leaves(),
        }
    }

    pub fn depth(&self) -> usize {
        match self {
            TreeNode::Leaf { .. } => 0,
            TreeNode::Split { left, right, .. } => 1 + left.depth().max(right.depth()),
        }
    }

    pub fn referenced_features(&self, out: &mut Vec<usize>) {
        if let TreeNode::Split {
            feature,
            left,
            right,
            ..
        } = self
        {
            out.push(*feature);
            left.referenced_features(out);
            right.referenced_features(out);
        }
    }

    /// Indented text dump, one node per line.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        self.write_text(&mut out, 0);
        out
    }

    fn write_text(&self, out: &mut String, indent: usize) {
        let pad = "  ".repeat(indent);
        match self {
            TreeNode::Leaf { value, count } => {
                let _ = writeln!(out, "{pad}leaf value={value} count={count}");
            }
            TreeNode::Split {
                name,
                threshold,
                left,
                right,
                ..
            } => {
                let _ = writeln!(out, "{pad}split {name} <= {threshold}");
                left.write_text(out, indent + 1);
                right.write_text(out, indent + 1);
            }
        }
    }
}

/// Map from model feature index to column index in some frame; errors only
/// for features the trees actually reference.
pub(crate) fn resolve_columns(
    model_names: &[String],
    referenced: &[usize],
    frame_names: &[String],
) -> Result<Vec<usize>> {
    let lookup: std::collections::HashMap<&str, usize> = frame_names
        .iter()
        .enumerate()
        .map(|(j, n)| (n.as_str(), j))
        .collect();
    let mut map = vec![usize::MAX; model_names.len()];
    for (i, name) in model_names.iter().enumerate() {
        if let Some(&j) = lookup.get(name.as_str()) {
            map[i] = j;
        }
    }
    for &f in referenced {
        if map[f] == usize::MAX {
            return Err(Error::invalid(format!(
                "input is missing feature `{}`",
                model_names[f]
            )));
        }
    }
    Ok(map)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TreeParams {
    /// `None` = unlimited.
    pub max_depth: Option<usize>,
    pub min_samples_leaf: usize,
    pub min_samples_split: usize,
}

impl Default for TreeParams {
    fn default() -> Self {
        TreeParams {
            max_depth: Some(8),
            min_samples_leaf: 20,
            min_samples_split: 40,
        }
    }
}

impl TreeParams {
    pub fn validate(&self) -> Result<()> {
        if self.min_samples_leaf < 1 {
            return Err(Error::invalid("min_samples_leaf must be at least 1"));
        }
        if self.min_samples_split < 2 {
            return Err(Error::invalid("min_samples_split must be at least 2"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SplitCandidate {
    pub threshold: f64,
    pub rss_reduction: f64,
}

/// Sum that does not depend on the order of `values`.
pub(crate) fn order_free_sum(values: impl Iterator<Item = f64>) -> f64 {
    let mut v: Vec<f64> = values.collect();
    v.sort_by(f64::total_cmp);
    v.iter().sum()
}

/// Best midpoint split of `rows` on one feature column.
///
/// Reduction = RSS(parent) − RSS(left) − RSS(right). Among equal reductions
/// the lowest threshold wins. `None` if the feature is constant over `rows`
/// or no threshold leaves `min_samples_leaf` rows on both sides.
pub fn best_split(
    x: &[f64],
    y: &[f64],
    rows: &[usize],
    min_samples_leaf: usize,
) -> Option<SplitCandidate> {
    let n = rows.len();
    let min_leaf = min_samples_leaf.max(1);
    if n < 2 * min_leaf {
        return None;
    }
    let mean = order_free_sum(rows.iter().map(|&i| y[i])) / n as f64;
    let mut pairs: Vec<(f64, f64)> = rows.iter().map(|&i| (x[i], y[i] - mean)).collect();
    pairs.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.total_cmp(&b.1)));

    let total: f64 = pairs.iter().map(|p| p.1).sum();
    let parent = total * total / n as f64;
    let mut left = 0.0;
    let mut best: Option<SplitCandidate> = None;
    for i in 1..n {
        left += pairs[i - 1].1;
        if i < min_leaf || n - i < min_leaf || pairs[i - 1].0 >= pairs[i].0 {
            continue;
        }
        let right = total - left;
        let reduction =
            left * left / i as f64 + right * right / (n - i) as f64 - parent;
        if best.is_none_or(|b| reduction > b.rss_reduction) {
            best = Some(SplitCandidate {
                threshold: 0.5 * (pairs[i - 1].0 + pairs[i].0),
                rss_reduction: reduction,
            });
        }
    }
    best
}

/// Fitted regression tree plus the feature names its nodes index into.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegressionTree {
    pub feature_names: Vec<String>,
    pub root: TreeNode,
}

impl RegressionTree {
    /// Row laid out in this tree's feature order.
    pub fn predict_row(&self, row: &[f64]) -> Result<f64> {
        if row.len() != self.feature_names.len() {
            return Err(Error::invalid(format!(
                "row has {} values, tree expects {}",
                row.len(),
                self.feature_names.len()
            )));
        }
        Ok(self.root.predict(row))
    }

    /// Row given as parallel name/value slices, in any order.
    pub fn predict_named(&self, names: &[String], values: &[f64]) -> Result<f64> {
        let mut referenced = Vec::new();
        self.root.referenced_features(&mut referenced);
        let map = resolve_columns(&self.feature_names, &referenced, names)?;
        let row: Vec<f64> = map
            .iter()
            .map(|&j| if j == usize::MAX { f64::NAN } else { values[j] })
            .collect();
        Ok(self.root.predict(&row))
    }

    pub fn predict_frame(&self, frame: &FeatureFrame) -> Result<Vec<f64>> {
        let mut referenced = Vec::new();
        self.root.referenced_features(&mut referenced);
        let map = resolve_columns(&self.feature_names, &referenced, frame.feature_names())?;
        let mut buf = vec![f64::NAN; self.feature_names.len()];
        Ok((0..frame.n_rows())
            .map(|i| {
                let src = frame.row(i);
                for (k, &j) in map.iter().enumerate() {
                    if j != usize::MAX {
                        buf[k] = src[j];
                    }
                }
                self.root.predict(&buf)
            })
            .collect())
    }

    pub fn to_text(&self) -> String {
        self.root.to_text()
    }
}

pub fn fit_tree(frame: &FeatureFrame, params: &TreeParams) -> Result<RegressionTree> {
    let columns: Vec<Vec<f64>> = (0..frame.n_features()).map(|j| frame.column(j)).collect();
    fit_tree_columns(frame.feature_names(), &columns, frame.target(), params)
}

/// Fit on column-major data.
pub fn fit_tree_columns(
    names: &[String],
    columns: &[Vec<f64>],
    y: &[f64],
    params: &TreeParams,
) -> Result<RegressionTree> {
    params.validate()?;
    if y.is_empty() {
        return Err(Error::invalid("cannot fit a tree on an empty frame"));
    }
    if columns.len() != names.len() || columns.iter().any(|c| c.len() != y.len()) {
        return Err(Error::invalid("column shapes do not match target"));
    }
    let rows: Vec<usize> = (0..y.len()).collect();
    let builder = Builder {
        names,
        columns,
        y,
        params,
    };
    Ok(RegressionTree {
        feature_names: names.to_vec(),
        root: builder.grow(rows, 0),
    })
}

struct Builder<'a> {
    names: &'a [String],
    columns: &'a [Vec<f64>],
    y: &'a [f64],
    params: &'a TreeParams,
}

const PARALLEL_WORK: usize = 20_000;

impl Builder<'_> {
    fn leaf(&self, rows: &[usize]) -> TreeNode {
        TreeNode::Leaf {
            value: order_free_sum(rows.iter().map(|&i| self.y[i])) / rows.len() as f64,
            count: rows.len(),
        }
    }

    fn choose(&self, rows: &[usize]) -> Option<(usize, SplitCandidate)> {
        let scan = |j: usize| best_split(&self.columns[j], self.y, rows, self.params.min_samples_leaf);
        let candidates: Vec<Option<SplitCandidate>> =
            if rows.len() * self.columns.len() >= PARALLEL_WORK {
                (0..self.columns.len()).into_par_iter().map(scan).collect()
            } else {
                (0..self.columns.len()).map(scan).collect()
            };
        let mut best: Option<(usize, SplitCandidate)> = None;
        for (j, c) in candidates.into_iter().enumerate() {
            if let Some(c) = c {
                if best.is_none_or(|(_, b)| c.rss_reduction > b.rss_reduction) {
                    best = Some((j, c));
                }
            }
        }
        best
    }

    fn grow(&self, rows: Vec<usize>, depth: usize) -> TreeNode {
        let stop = rows.len() < self.params.min_samples_split
            || self.params.max_depth.is_some_and(|d| depth >= d);
        if stop {
            return self.leaf(&rows);
        }
        let Some((feature, split)) = self.choose(&rows) else {
            return self.leaf(&rows);
        };
        if !(split.rss_reduction > 0.0) {
            return self.leaf(&rows);
        }
        let col = &self.columns[feature];
        let (left, right): (Vec<usize>, Vec<usize>) =
            rows.iter().partition(|&&i| col[i] <= split.threshold);
        TreeNode::Split {
            feature,
            name: self.names[feature].clone(),
            threshold: split.threshold,
            left: Box::new(self.grow(left, depth + 1)),
            right: Box::new(self.grow(right, depth + 1)),
        }
    }
}
