//! Second-order gradient-boosted trees for squared error.
//!
//! Trees are grown on quantile histograms, either leaf-wise (split the leaf
//! with the largest gain) or level-wise. Two optional accelerations:
//! gradient-based one-side sampling (GOSS), which keeps the largest-gradient
//! rows and a reweighted random sample of the rest, and exclusive feature
//! bundling (EFB), which merges rarely co-nonzero features into one binned
//! column with disjoint bin ranges.
//!
//! Every feature histogram is built the same way with or without bundling:
//! rows outside the feature's zero bin are accumulated in row order and the
//! zero bin is recovered as node total minus the rest. That makes a
//! conflict-free bundling produce bit-identical split decisions.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::feature_lab::FeatureFrame;
use crate::tree_model::{resolve_columns, TreeNode};

pub const FORMAT_NAME: &str = "policyboost-gbm";
pub const FORMAT_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GradientPair {
    pub g: f64,
    pub h: f64,
    pub weight: f64,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Growth {
    #[default]
    LeafWise,
    LevelWise,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GossConfig {
    pub top_rate: f64,
    pub other_rate: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EfbConfig {
    pub max_conflict_rate: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct BoostConfig {
    pub n_trees: usize,
    pub learning_rate: f64,
    pub max_leaves: usize,
    /// Depth cap; level-wise growth needs one.
    pub max_depth: Option<usize>,
    pub min_samples_leaf: usize,
    pub lambda_l2: f64,
    pub alpha_l1: f64,
    pub gamma_split: f64,
    pub n_bins: usize,
    pub growth: Growth,
    pub goss: Option<GossConfig>,
    pub efb: Option<EfbConfig>,
    pub seed: u64,
}

impl Default for BoostConfig {
    fn default() -> Self {
        BoostConfig {
            n_trees: 100,
            learning_rate: 0.1,
            max_leaves: 31,
            max_depth: None,
            min_samples_leaf: 20,
            lambda_l2: 1.0,
            alpha_l1: 0.0,
            gamma_split: 0.0,
            n_bins: 255,
            growth: Growth::LeafWise,
            goss: None,
            efb: None,
            seed: 42,
        }
    }
}

impl BoostConfig {
    /// Leaf-wise, 31 leaves, GOSS (0.2, 0.1), conflict-free EFB.
    pub fn lgbm() -> Self {
        BoostConfig {
            goss: Some(GossConfig {
                top_rate: 0.2,
                other_rate: 0.1,
            }),
            efb: Some(EfbConfig {
                max_conflict_rate: 0.0,
            }),
            ..BoostConfig::default()
        }
    }

    /// Level-wise to depth 6, no sampling or bundling.
    pub fn xgb() -> Self {
        BoostConfig {
            growth: Growth::LevelWise,
            max_depth: Some(6),
            max_leaves: 64,
            ..BoostConfig::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::invalid(m));
        if self.n_trees < 1 {
            return bad("n_trees must be at least 1".into());
        }
        if !(0.0..=1.0).contains(&self.learning_rate) {
            return bad(format!("learning_rate {} outside [0, 1]", self.learning_rate));
        }
        if self.max_leaves < 2 {
            return bad("max_leaves must be at least 2".into());
        }
        if self.min_samples_leaf < 1 {
            return bad("min_samples_leaf must be at least 1".into());
        }
        if !(self.lambda_l2 >= 0.0 && self.alpha_l1 >= 0.0 && self.gamma_split >= 0.0) {
            return bad("regularization terms must be non-negative".into());
        }
        if !(2..=256).contains(&self.n_bins) {
            return bad(format!("n_bins {} outside [2, 256]", self.n_bins));
        }
        if self.growth == Growth::LevelWise && self.max_depth.is_none() {
            return bad("level-wise growth requires max_depth".into());
        }
        if let Some(g) = self.goss {
            check_goss_rates(g.top_rate, g.other_rate)?;
        }
        if let Some(e) = self.efb {
            if !(0.0..1.0).contains(&e.max_conflict_rate) {
                return bad(format!(
                    "max_conflict_rate {} outside [0, 1)",
                    e.max_conflict_rate
                ));
            }
        }
        Ok(())
    }
}

fn soft_threshold(g: f64, alpha: f64) -> f64 {
    if alpha == 0.0 {
        return g;
    }
    g.signum() * (g.abs() - alpha).max(0.0)
}

/// Minimizer of G·w + ½(H+λ)w² + α|w|.
pub fn leaf_weight(g_sum: f64, h_sum: f64, lambda_l2: f64, alpha_l1: f64) -> Result<f64> {
    let denom = h_sum + lambda_l2;
    if !(denom > 0.0) {
        return Err(Error::NumericalSingularity(format!(
            "leaf curvature H + lambda = {denom} is not positive"
        )));
    }
    Ok(-soft_threshold(g_sum, alpha_l1) / denom)
}

/// Objective decrease from splitting a leaf into (L, R), minus `gamma_split`.
pub fn split_gain(
    g_left: f64,
    h_left: f64,
    g_right: f64,
    h_right: f64,
    lambda_l2: f64,
    alpha_l1: f64,
    gamma_split: f64,
) -> f64 {
    let score = |g: f64, h: f64| {
        let t = soft_threshold(g, alpha_l1);
        t * t / (h + lambda_l2)
    };
    0.5 * (score(g_left, h_left) + score(g_right, h_right)
        - score(g_left + g_right, h_left + h_right))
        - gamma_split
}

/// Ascending bin edges; value v falls in bin `#{edges < v}`.
///
/// With at most `n_bins` distinct values every distinct value gets its own
/// bin (edges at midpoints). Otherwise edges sit at the i/n_bins empirical
/// quantiles (linear interpolation), duplicates collapsed.
pub fn quantile_bins(values: &[f64], n_bins: usize) -> Vec<f64> {
    let mut sorted: Vec<f64> = values.iter().copied().filter(|v| !v.is_nan()).collect();
    sorted.sort_by(f64::total_cmp);
    let mut distinct = sorted.clone();
    distinct.dedup();
    if distinct.len() <= 1 {
        return Vec::new();
    }
    if distinct.len() <= n_bins {
        return distinct.windows(2).map(|w| 0.5 * (w[0] + w[1])).collect();
    }
    let n = sorted.len();
    let mut edges: Vec<f64> = (1..n_bins)
        .map(|i| {
            let pos = (n - 1) as f64 * i as f64 / n_bins as f64;
            let lo = pos.floor() as usize;
            let frac = pos - lo as f64;
            if lo + 1 < n {
                sorted[lo] + frac * (sorted[lo + 1] - sorted[lo])
            } else {
                sorted[lo]
            }
        })
        .collect();
    edges.dedup();
    // the largest value must stay above the last edge so every bin is reachable
    while edges.last().is_some_and(|e| *e >= sorted[n - 1]) {
        edges.pop();
    }
    edges
}

#[derive(Debug, Clone, PartialEq)]
struct BinMapper {
    edges: Vec<f64>,
    zero_bin: usize,
    bin_min: Vec<f64>,
    bin_max: Vec<f64>,
}

impl BinMapper {
    fn new(values: &[f64], n_bins: usize) -> Self {
        let edges = quantile_bins(values, n_bins);
        let nb = edges.len() + 1;
        let mut bin_min = vec![f64::INFINITY; nb];
        let mut bin_max = vec![f64::NEG_INFINITY; nb];
        let mut mapper = BinMapper {
            zero_bin: 0,
            edges,
            bin_min: Vec::new(),
            bin_max: Vec::new(),
        };
        for &v in values {
            let b = mapper.bin(v);
            bin_min[b] = bin_min[b].min(v);
            bin_max[b] = bin_max[b].max(v);
        }
        mapper.zero_bin = mapper.bin(0.0);
        mapper.bin_min = bin_min;
        mapper.bin_max = bin_max;
        mapper
    }

    fn bin(&self, v: f64) -> usize {
        self.edges.partition_point(|e| *e < v)
    }

    fn n_bins(&self) -> usize {
        self.edges.len() + 1
    }
}

fn check_goss_rates(a: f64, b: f64) -> Result<()> {
    if !(a > 0.0 && a <= 1.0) {
        return Err(Error::invalid(format!("GOSS top_rate {a} outside (0, 1]")));
    }
    if !(b >= 0.0) || a + b > 1.0 + 1e-12 {
        return Err(Error::invalid(format!(
            "GOSS rates a = {a}, b = {b} need b >= 0 and a + b <= 1"
        )));
    }
    if b == 0.0 && a < 1.0 {
        return Err(Error::invalid("GOSS other_rate must be positive when top_rate < 1"));
    }
    Ok(())
}

/// GOSS selection: the ⌈a·n⌉ rows with largest |g| (weight 1) plus ⌊b·n⌋
/// rows sampled uniformly from the rest (weight (1−a)/b). Returned as
/// `(row, weight)` sorted by row.
pub fn goss_sample(pairs: &[GradientPair], a: f64, b: f64, seed: u64) -> Result<Vec<(usize, f64)>> {
    check_goss_rates(a, b)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    Ok(goss_select(pairs, a, b, &mut rng))
}

fn goss_select(pairs: &[GradientPair], a: f64, b: f64, rng: &mut ChaCha8Rng) -> Vec<(usize, f64)> {
    let n = pairs.len();
    let n_top = ((a * n as f64 - 1e-9).ceil().max(0.0) as usize).min(n);
    if n_top >= n {
        return (0..n).map(|i| (i, 1.0)).collect();
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| pairs[j].g.abs().total_cmp(&pairs[i].g.abs()).then(i.cmp(&j)));
    let rest = &order[n_top..];
    let n_other = ((b * n as f64 + 1e-9).floor() as usize).min(rest.len());
    let amplify = (1.0 - a) / b;

    let mut out: Vec<(usize, f64)> = order[..n_top].iter().map(|&i| (i, 1.0)).collect();
    for k in rand::seq::index::sample(rng, rest.len(), n_other) {
        out.push((rest[k], amplify));
    }
    out.sort_by_key(|p| p.0);
    out
}

/// Members of one bundled column. `offsets[k]` is the first bundled bin of
/// `members[k]`; bundled bin 0 means every member sits in its zero bin.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureBundle {
    pub members: Vec<String>,
    pub member_index: Vec<usize>,
    pub offsets: Vec<u32>,
}

/// Greedy bundling of columns by non-zero overlap: columns are taken in
/// descending non-zero count and placed in the first bundle whose conflict
/// count stays within `max_conflict_rate · n_rows`.
pub fn efb_plan(frame: &FeatureFrame, max_conflict_rate: f64, n_bins: usize) -> Result<Vec<FeatureBundle>> {
    if !(0.0..1.0).contains(&max_conflict_rate) {
        return Err(Error::invalid(format!(
            "max_conflict_rate {max_conflict_rate} outside [0, 1)"
        )));
    }
    let columns: Vec<Vec<f64>> = (0..frame.n_features()).map(|j| frame.column(j)).collect();
    let mappers: Vec<BinMapper> = columns.iter().map(|c| BinMapper::new(c, n_bins)).collect();
    let groups = plan_groups(&columns, max_conflict_rate);
    Ok(groups
        .into_iter()
        .map(|members| {
            let offsets = member_offsets(&members, &mappers);
            FeatureBundle {
                members: members
                    .iter()
                    .map(|&j| frame.feature_names()[j].clone())
                    .collect(),
                member_index: members,
                offsets,
            }
        })
        .collect())
}

fn plan_groups(columns: &[Vec<f64>], max_conflict_rate: f64) -> Vec<Vec<usize>> {
    let n = columns.first().map_or(0, Vec::len);
    let budget = (max_conflict_rate * n as f64 + 1e-9).floor() as usize;
    let nonzero: Vec<Vec<bool>> = columns
        .iter()
        .map(|c| c.iter().map(|v| *v != 0.0).collect())
        .collect();
    let counts: Vec<usize> = nonzero.iter().map(|m| m.iter().filter(|b| **b).count()).collect();
    let mut order: Vec<usize> = (0..columns.len()).collect();
    order.sort_by(|&a, &b| counts[b].cmp(&counts[a]).then(a.cmp(&b)));

    struct Open {
        members: Vec<usize>,
        occupied: Vec<bool>,
        conflicts: usize,
    }
    let mut bundles: Vec<Open> = Vec::new();
    for f in order {
        let mask = &nonzero[f];
        let slot = bundles.iter().position(|b| {
            let overlap = mask
                .iter()
                .zip(&b.occupied)
                .filter(|(x, y)| **x && **y)
                .count();
            b.conflicts + overlap <= budget
        });
        match slot {
            Some(k) => {
                let b = &mut bundles[k];
                b.conflicts += mask.iter().zip(&b.occupied).filter(|(x, y)| **x && **y).count();
                for (o, m) in b.occupied.iter_mut().zip(mask) {
                    *o |= *m;
                }
                b.members.push(f);
            }
            None => bundles.push(Open {
                members: vec![f],
                occupied: mask.clone(),
                conflicts: 0,
            }),
        }
    }
    bundles.into_iter().map(|b| b.members).collect()
}

fn member_offsets(members: &[usize], mappers: &[BinMapper]) -> Vec<u32> {
    let mut next = 1u32;
    members
        .iter()
        .map(|&f| {
            let o = next;
            next += mappers[f].n_bins() as u32;
            o
        })
        .collect()
}

#[derive(Debug, Clone, Copy, Default)]
struct HistBin {
    g: f64,
    h: f64,
    count: u32,
}

impl HistBin {
    fn add(&mut self, o: &HistBin) {
        self.g += o.g;
        self.h += o.h;
        self.count += o.count;
    }

    fn minus(&self, o: &HistBin) -> HistBin {
        HistBin {
            g: self.g - o.g,
            h: self.h - o.h,
            count: self.count - o.count,
        }
    }
}

struct FeatureSlot {
    group: usize,
    offset: usize,
}

struct Group {
    bins: Vec<u32>,
    width: usize,
}

/// Training matrix in binned, grouped form plus raw columns for routing.
struct Binned {
    mappers: Vec<BinMapper>,
    slots: Vec<FeatureSlot>,
    groups: Vec<Group>,
}

impl Binned {
    fn new(columns: &[Vec<f64>], n_bins: usize, efb: Option<EfbConfig>) -> Self {
        let mappers: Vec<BinMapper> = columns.iter().map(|c| BinMapper::new(c, n_bins)).collect();
        let plan = match efb {
            Some(e) => plan_groups(columns, e.max_conflict_rate),
            None => (0..columns.len()).map(|j| vec![j]).collect(),
        };
        let n = columns.first().map_or(0, Vec::len);
        let mut slots: Vec<FeatureSlot> = (0..columns.len())
            .map(|_| FeatureSlot { group: 0, offset: 0 })
            .collect();
        let mut groups = Vec::with_capacity(plan.len());
        for (gi, members) in plan.iter().enumerate() {
            let offsets = member_offsets(members, &mappers);
            let mut bins = vec![0u32; n];
            for (&f, &off) in members.iter().zip(&offsets) {
                slots[f] = FeatureSlot {
                    group: gi,
                    offset: off as usize,
                };
                let m = &mappers[f];
                for (i, &v) in columns[f].iter().enumerate() {
                    let b = m.bin(v);
                    if b != m.zero_bin {
                        bins[i] = off + b as u32;
                    }
                }
            }
            let width = 1 + members.iter().map(|&f| mappers[f].n_bins()).sum::<usize>();
            groups.push(Group { bins, width });
        }
        Binned {
            mappers,
            slots,
            groups,
        }
    }

    fn group_histograms(&self, rows: &[u32], g: &[f64], h: &[f64]) -> Vec<Vec<HistBin>> {
        let build = |grp: &Group| {
            let mut hist = vec![HistBin::default(); grp.width];
            for &r in rows {
                let r = r as usize;
                let b = grp.bins[r] as usize;
                if b != 0 {
                    let e = &mut hist[b];
                    e.g += g[r];
                    e.h += h[r];
                    e.count += 1;
                }
            }
            hist
        };
        if rows.len() * self.groups.len() >= 50_000 {
            self.groups.par_iter().map(build).collect()
        } else {
            self.groups.iter().map(build).collect()
        }
    }

    fn feature_histogram(&self, f: usize, group_hists: &[Vec<HistBin>], total: &HistBin) -> Vec<HistBin> {
        let m = &self.mappers[f];
        let slot = &self.slots[f];
        let src = &group_hists[slot.group];
        let mut out = vec![HistBin::default(); m.n_bins()];
        let mut rest = HistBin::default();
        for (b, e) in out.iter_mut().enumerate() {
            if b != m.zero_bin {
                *e = src[slot.offset + b];
                rest.add(e);
            }
        }
        out[m.zero_bin] = total.minus(&rest);
        out
    }
}

#[derive(Debug, Clone, Copy)]
struct SplitChoice {
    gain: f64,
    feature: usize,
    threshold: f64,
}

struct Grower<'a> {
    binned: &'a Binned,
    columns: &'a [Vec<f64>],
    g: &'a [f64],
    h: &'a [f64],
    config: &'a BoostConfig,
}

struct Leaf {
    rows: Vec<u32>,
    depth: usize,
    total: HistBin,
    best: Option<SplitChoice>,
}

enum Arena {
    Leaf(Leaf),
    Split {
        feature: usize,
        threshold: f64,
        left: usize,
        right: usize,
    },
}

impl Grower<'_> {
    fn total(&self, rows: &[u32]) -> HistBin {
        let mut t = HistBin::default();
        for &r in rows {
            t.g += self.g[r as usize];
            t.h += self.h[r as usize];
        }
        t.count = rows.len() as u32;
        t
    }

    fn best_split(&self, rows: &[u32], total: &HistBin, depth: usize) -> Option<SplitChoice> {
        let cfg = self.config;
        if cfg.max_depth.is_some_and(|d| depth >= d) || rows.len() < 2 * cfg.min_samples_leaf {
            return None;
        }
        let group_hists = self.binned.group_histograms(rows, self.g, self.h);
        let min_leaf = cfg.min_samples_leaf as u32;
        let mut best: Option<SplitChoice> = None;
        for f in 0..self.binned.mappers.len() {
            let m = &self.binned.mappers[f];
            if m.n_bins() < 2 {
                continue;
            }
            let hist = self.binned.feature_histogram(f, &group_hists, total);
            let filled: Vec<usize> = (0..hist.len()).filter(|&b| hist[b].count > 0).collect();
            let mut left = HistBin::default();
            for k in 0..filled.len().saturating_sub(1) {
                let b = filled[k];
                left.add(&hist[b]);
                let right = total.minus(&left);
                if left.count < min_leaf || right.count < min_leaf {
                    continue;
                }
                let gain = split_gain(
                    left.g,
                    left.h,
                    right.g,
                    right.h,
                    cfg.lambda_l2,
                    cfg.alpha_l1,
                    cfg.gamma_split,
                );
                if best.is_none_or(|s| gain > s.gain) {
                    let c = filled[k + 1];
                    best = Some(SplitChoice {
                        gain,
                        feature: f,
                        threshold: 0.5 * (m.bin_max[b] + m.bin_min[c]),
                    });
                }
            }
        }
        best.filter(|s| s.gain > 0.0)
    }

    fn make_leaf(&self, rows: Vec<u32>, depth: usize) -> Leaf {
        let total = self.total(&rows);
        let best = self.best_split(&rows, &total, depth);
        Leaf {
            rows,
            depth,
            total,
            best,
        }
    }

    fn split(&self, arena: &mut Vec<Arena>, at: usize) {
        let Arena::Leaf(leaf) = std::mem::replace(
            &mut arena[at],
            Arena::Split {
                feature: 0,
                threshold: 0.0,
                left: 0,
                right: 0,
            },
        ) else {
            unreachable!("only leaves are split")
        };
        let choice = leaf.best.expect("split requires a candidate");
        let col = &self.columns[choice.feature];
        let (l, r): (Vec<u32>, Vec<u32>) = leaf
            .rows
            .iter()
            .partition(|&&i| col[i as usize] <= choice.threshold);
        let left = arena.len();
        arena.push(Arena::Leaf(self.make_leaf(l, leaf.depth + 1)));
        arena.push(Arena::Leaf(self.make_leaf(r, leaf.depth + 1)));
        arena[at] = Arena::Split {
            feature: choice.feature,
            threshold: choice.threshold,
            left,
            right: left + 1,
        };
    }

    fn grow(&self, rows: Vec<u32>, names: &[String]) -> Result<TreeNode> {
        let mut arena = vec![Arena::Leaf(self.make_leaf(rows, 0))];
        let mut n_leaves = 1;
        match self.config.growth {
            Growth::LeafWise => {
                while n_leaves < self.config.max_leaves {
                    let mut pick: Option<(usize, f64)> = None;
                    for (i, node) in arena.iter().enumerate() {
                        if let Arena::Leaf(Leaf { best: Some(s), .. }) = node {
                            if pick.is_none_or(|(_, g)| s.gain > g) {
                                pick = Some((i, s.gain));
                            }
                        }
                    }
                    let Some((at, _)) = pick else { break };
                    self.split(&mut arena, at);
                    n_leaves += 1;
                }
            }
            Growth::LevelWise => {
                let mut frontier = vec![0usize];
                while !frontier.is_empty() {
                    let mut next = Vec::new();
                    for at in frontier {
                        if n_leaves >= self.config.max_leaves {
                            break;
                        }
                        if matches!(&arena[at], Arena::Leaf(Leaf { best: Some(_), .. })) {
                            self.split(&mut arena, at);
                            n_leaves += 1;
                            let Arena::Split { left, right, .. } = arena[at] else {
                                unreachable!()
                            };
                            next.extend([left, right]);
                        }
                    }
                    frontier = next;
                }
            }
        }
        self.materialize(&arena, 0, names)
    }

    fn materialize(&self, arena: &[Arena], at: usize, names: &[String]) -> Result<TreeNode> {
        Ok(match &arena[at] {
            Arena::Leaf(leaf) => TreeNode::Leaf {
                value: leaf_weight(
                    leaf.total.g,
                    leaf.total.h,
                    self.config.lambda_l2,
                    self.config.alpha_l1,
                )?,
                count: leaf.rows.len(),
            },
            Arena::Split {
                feature,
                threshold,
                left,
                right,
            } => TreeNode::Split {
                feature: *feature,
                name: names[*feature].clone(),
                threshold: *threshold,
                left: Box::new(self.materialize(arena, *left, names)?),
                right: Box::new(self.materialize(arena, *right, names)?),
            },
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoostedEnsemble {
    pub base_score: f64,
    pub learning_rate: f64,
    pub feature_names: Vec<String>,
    /// Leaf values are unshrunk weights; prediction multiplies by the learning rate.
    pub trees: Vec<TreeNode>,
    pub config: BoostConfig,
    pub training_trace: Vec<f64>,
}

#[derive(Serialize, Deserialize)]
struct EnsembleDoc {
    format: String,
    version: u32,
    #[serde(flatten)]
    model: BoostedEnsemble,
}

impl BoostedEnsemble {
    fn referenced(&self) -> Vec<usize> {
        let mut out = Vec::new();
        for t in &self.trees {
            t.referenced_features(&mut out);
        }
        out.sort_unstable();
        out.dedup();
        out
    }

    /// Row in this model's feature order.
    pub fn predict_row(&self, row: &[f64]) -> f64 {
        let mut pred = self.base_score;
        for t in &self.trees {
            pred += self.learning_rate * t.predict(row);
        }
        pred
    }

    pub fn to_json(&self) -> Result<String> {
        let doc = EnsembleDoc {
            format: FORMAT_NAME.into(),
            version: FORMAT_VERSION,
            model: self.clone(),
        };
        Ok(serde_json::to_string_pretty(&doc)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let doc: EnsembleDoc = serde_json::from_str(text)?;
        if doc.format != FORMAT_NAME || doc.version != FORMAT_VERSION {
            return Err(Error::invalid(format!(
                "unsupported model document {} v{}",
                doc.format, doc.version
            )));
        }
        Ok(doc.model)
    }
}

/// Predictions for every frame row; columns are matched by name.
pub fn predict_ensemble(model: &BoostedEnsemble, frame: &FeatureFrame) -> Result<Vec<f64>> {
    let map = resolve_columns(&model.feature_names, &model.referenced(), frame.feature_names())?;
    let mut buf = vec![f64::NAN; model.feature_names.len()];
    Ok((0..frame.n_rows())
        .map(|i| {
            let src = frame.row(i);
            for (k, &j) in map.iter().enumerate() {
                if j != usize::MAX {
                    buf[k] = src[j];
                }
            }
            model.predict_row(&buf)
        })
        .collect())
}

fn rmse_of(y: &[f64], pred: &[f64]) -> f64 {
    let ss: f64 = y.iter().zip(pred).map(|(a, b)| (a - b) * (a - b)).sum();
    (ss / y.len() as f64).sqrt()
}

pub fn fit_gbm(frame: &FeatureFrame, config: &BoostConfig) -> Result<BoostedEnsemble> {
    config.validate()?;
    if frame.is_empty() {
        return Err(Error::invalid("cannot boost on an empty frame"));
    }
    let n = frame.n_rows();
    let y = frame.target();
    let columns: Vec<Vec<f64>> = (0..frame.n_features()).map(|j| frame.column(j)).collect();
    let binned = Binned::new(&columns, config.n_bins, config.efb);

    let base_score = y.iter().sum::<f64>() / n as f64;
    let mut pred = vec![base_score; n];
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut trees = Vec::with_capacity(config.n_trees);
    let mut trace = Vec::with_capacity(config.n_trees);
    let mut gw = vec![0.0; n];
    let mut hw = vec![0.0; n];

    for _ in 0..config.n_trees {
        let pairs: Vec<GradientPair> = (0..n)
            .map(|i| GradientPair {
                g: pred[i] - y[i],
                h: 1.0,
                weight: 1.0,
            })
            .collect();
        let selected = match config.goss {
            Some(gc) => goss_select(&pairs, gc.top_rate, gc.other_rate, &mut rng),
            None => (0..n).map(|i| (i, 1.0)).collect(),
        };
        for &(i, w) in &selected {
            gw[i] = pairs[i].g * w;
            hw[i] = pairs[i].h * w;
        }
        let rows: Vec<u32> = selected.iter().map(|p| p.0 as u32).collect();
        let grower = Grower {
            binned: &binned,
            columns: &columns,
            g: &gw,
            h: &hw,
            config,
        };
        let tree = grower.grow(rows, frame.feature_names())?;
        for (i, p) in pred.iter_mut().enumerate() {
            *p += config.learning_rate * tree.predict(frame.row(i));
        }
        trace.push(rmse_of(y, &pred));
        trees.push(tree);
    }

    Ok(BoostedEnsemble {
        base_score,
        learning_rate: config.learning_rate,
        feature_names: frame.feature_names().to_vec(),
        trees,
        config: config.clone(),
        training_trace: trace,
    })
}
