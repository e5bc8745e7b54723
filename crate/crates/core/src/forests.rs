//! Tree learners: CART (Gini), extremely randomized trees and their bagged
//! ensemble, and gradient-boosted regression trees under logistic loss.
//!
//! Every internal node routes a sample left iff `value < threshold`.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::derive_seed;
use crate::error::{Error, Result};
use crate::matrix::Matrix;
use crate::neural::{bce_loss, sigmoid};
use crate::preprocess::DesignMatrix;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "node", rename_all = "lowercase")]
pub enum TreeNode {
    Internal {
        feature: usize,
        threshold: f64,
        left: usize,
        right: usize,
    },
    /// Class-1 probability for classification trees, additive score for boosting trees.
    Leaf { value: f64 },
}

/// Arena-backed binary tree; `nodes[0]` is the root.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecisionTree {
    pub n_features: usize,
    pub nodes: Vec<TreeNode>,
}

impl DecisionTree {
    pub fn leaf(n_features: usize, value: f64) -> Self {
        DecisionTree {
            n_features,
            nodes: vec![TreeNode::Leaf { value }],
        }
    }

    pub fn root(&self) -> &TreeNode {
        &self.nodes[0]
    }

    #[inline]
    pub fn evaluate(&self, row: &[f64]) -> f64 {
        let mut at = 0;
        loop {
            match self.nodes[at] {
                TreeNode::Leaf { value } => return value,
                TreeNode::Internal {
                    feature,
                    threshold,
                    left,
                    right,
                } => at = if row[feature] < threshold { left } else { right },
            }
        }
    }

    pub fn predict_proba(&self, m: &Matrix) -> Result<Vec<f64>> {
        check_width(self.n_features, m)?;
        Ok((0..m.rows()).map(|r| self.evaluate(m.row(r))).collect())
    }

    pub fn depth(&self) -> usize {
        let mut max = 0;
        let mut stack = vec![(0usize, 0usize)];
        while let Some((at, d)) = stack.pop() {
            max = max.max(d);
            if let TreeNode::Internal { left, right, .. } = self.nodes[at] {
                stack.push((left, d + 1));
                stack.push((right, d + 1));
            }
        }
        max
    }

    pub fn n_leaves(&self) -> usize {
        self.nodes
            .iter()
            .filter(|n| matches!(n, TreeNode::Leaf { .. }))
            .count()
    }

    /// Structural checks: children point forward (so the arena is acyclic),
    /// features are in range and every number is finite.
    pub fn validate(&self) -> Result<()> {
        if self.nodes.is_empty() {
            return Err(Error::InvalidArtifact("tree has no nodes".into()));
        }
        for (i, n) in self.nodes.iter().enumerate() {
            match *n {
                TreeNode::Leaf { value } if !value.is_finite() => {
                    return Err(Error::InvalidArtifact(format!("leaf {i} is not finite")))
                }
                TreeNode::Internal {
                    feature,
                    threshold,
                    left,
                    right,
                } => {
                    if feature >= self.n_features
                        || !threshold.is_finite()
                        || left <= i
                        || right <= i
                        || left >= self.nodes.len()
                        || right >= self.nodes.len()
                    {
                        return Err(Error::InvalidArtifact(format!("node {i} is malformed")));
                    }
                }
                _ => {}
            }
        }
        Ok(())
    }
}

fn check_width(expected: usize, m: &Matrix) -> Result<()> {
    if m.cols() != expected {
        return Err(Error::DimensionMismatch {
            expected,
            found: m.cols(),
        });
    }
    Ok(())
}

fn threshold_labels(p: Vec<f64>) -> Vec<u8> {
    p.into_iter().map(|p| u8::from(p >= 0.5)).collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TreeParams {
    /// `None` grows until leaves are pure or unsplittable.
    pub max_depth: Option<usize>,
    pub min_samples_split: usize,
    pub min_samples_leaf: usize,
    pub seed: u64,
}

impl Default for TreeParams {
    fn default() -> Self {
        TreeParams {
            max_depth: None,
            min_samples_split: 2,
            min_samples_leaf: 1,
            seed: 0,
        }
    }
}

impl TreeParams {
    pub fn validate(&self) -> Result<()> {
        if self.min_samples_split < 2 || self.min_samples_leaf < 1 {
            return Err(Error::InvalidConfig(
                "min_samples_split must be >= 2 and min_samples_leaf >= 1".into(),
            ));
        }
        if self.max_depth == Some(0) {
            return Err(Error::InvalidConfig("max_depth must be positive".into()));
        }
        Ok(())
    }

    fn depth_allows_split(&self, depth: usize) -> bool {
        self.max_depth.is_none_or(|m| depth < m)
    }
}

fn column_major(m: &Matrix) -> Vec<Vec<f64>> {
    let mut cols = vec![Vec::with_capacity(m.rows()); m.cols()];
    for r in 0..m.rows() {
        for (c, &v) in m.row(r).iter().enumerate() {
            cols[c].push(v);
        }
    }
    cols
}

fn presort(columns: &[Vec<f64>]) -> Vec<Vec<u32>> {
    columns
        .par_iter()
        .map(|col| {
            let mut idx: Vec<u32> = (0..col.len() as u32).collect();
            idx.sort_by(|&a, &b| col[a as usize].total_cmp(&col[b as usize]).then(a.cmp(&b)));
            idx
        })
        .collect()
}

/// Midpoint of two adjacent distinct values that still separates them.
#[inline]
fn midpoint(lo: f64, hi: f64) -> f64 {
    let t = lo + (hi - lo) / 2.0;
    if t <= lo {
        hi
    } else {
        t
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Criterion {
    Gini,
    Variance,
}

#[derive(Debug, Clone, Copy, Default)]
struct Stats {
    n: usize,
    sum: f64,
    sum_sq: f64,
    sum_h: f64,
}

impl Stats {
    #[inline]
    fn add(&mut self, y: f64, h: f64) {
        self.n += 1;
        self.sum += y;
        self.sum_sq += y * y;
        self.sum_h += h;
    }

    #[inline]
    fn minus(&self, o: &Stats) -> Stats {
        Stats {
            n: self.n - o.n,
            sum: self.sum - o.sum,
            sum_sq: self.sum_sq - o.sum_sq,
            sum_h: self.sum_h - o.sum_h,
        }
    }

    /// `sum^2 / n`; a node's SSE is `sum_sq` minus this, so the best
    /// regression split maximizes its sum over the children.
    #[inline]
    fn sq_score(&self) -> f64 {
        if self.n == 0 {
            return 0.0;
        }
        self.sum * self.sum / self.n as f64
    }

    fn impure(&self, crit: Criterion) -> bool {
        match crit {
            Criterion::Gini => self.sum > 0.0 && self.sum < self.n as f64,
            Criterion::Variance => self.sse() > 1e-12,
        }
    }

    fn sse(&self) -> f64 {
        (self.sum_sq - self.sum * self.sum / self.n.max(1) as f64).max(0.0)
    }
}

/// Weighted Gini impurity of a binary label set (`pos` positives out of `n`).
pub fn gini(pos: usize, n: usize) -> f64 {
    if n == 0 {
        return 0.0;
    }
    let p = pos as f64 / n as f64;
    2.0 * p * (1.0 - p)
}

/// Split quality, larger is better. Gini scores are exact rationals over
/// the class counts, so mathematically equal splits compare equal.
#[derive(Debug, Clone, Copy)]
enum Score {
    Ratio { num: u128, den: u128 },
    Real(f64),
}

impl Score {
    fn beats(self, other: Score) -> bool {
        match (self, other) {
            (Score::Ratio { num: a, den: b }, Score::Ratio { num: c, den: d }) => a * d > c * b,
            (Score::Real(a), Score::Real(b)) => a > b,
            _ => unreachable!("one criterion per tree"),
        }
    }

    fn value(self) -> f64 {
        match self {
            Score::Ratio { num, den } => num as f64 / den as f64,
            Score::Real(v) => v,
        }
    }
}

fn split_score(crit: Criterion, left: &Stats, right: &Stats) -> Score {
    match crit {
        Criterion::Gini => {
            // (p^2 + q^2) / n per child; weighted child impurity is n minus this
            let part = |s: &Stats| {
                let n = s.n as u128;
                let p = s.sum as u128;
                let q = n - p;
                (p * p + q * q, n)
            };
            let (a, nl) = part(left);
            let (b, nr) = part(right);
            Score::Ratio {
                num: a * nr + b * nl,
                den: nl * nr,
            }
        }
        Criterion::Variance => Score::Real(left.sq_score() + right.sq_score()),
    }
}

#[derive(Clone, Copy)]
struct Candidate {
    feature: usize,
    threshold: f64,
    score: Score,
}

struct OpenNode {
    arena: usize,
    depth: usize,
    stats: Stats,
}

const NONE: u32 = u32::MAX;

/// Level-wise exact greedy builder over presorted feature columns.
/// Thresholds are midpoints between adjacent distinct values; ties resolve to
/// the lowest feature index, then the lowest threshold.
fn grow_exact(
    columns: &[Vec<f64>],
    mut sorted: Vec<Vec<u32>>,
    targets: &[f64],
    hessians: Option<&[f64]>,
    crit: Criterion,
    params: &TreeParams,
    leaf_value: impl Fn(&Stats) -> f64,
) -> DecisionTree {
    let n = targets.len();
    let d = columns.len();
    let h_of = |i: usize| hessians.map_or(0.0, |h| h[i]);

    let mut root = Stats::default();
    for i in 0..n {
        root.add(targets[i], h_of(i));
    }
    let mut nodes = vec![TreeNode::Leaf { value: 0.0 }];
    let mut open = vec![OpenNode {
        arena: 0,
        depth: 0,
        stats: root,
    }];
    let mut node_of = vec![0u32; n];

    while !open.is_empty() {
        let eligible: Vec<bool> = open
            .iter()
            .map(|o| {
                params.depth_allows_split(o.depth)
                    && o.stats.n >= params.min_samples_split
                    && o.stats.n >= 2 * params.min_samples_leaf
                    && o.stats.impure(crit)
            })
            .collect();

        let mut best: Vec<Option<Candidate>> = vec![None; open.len()];
        if eligible.iter().any(|&e| e) {
            let mut left = vec![Stats::default(); open.len()];
            let mut last = vec![f64::NAN; open.len()];
            for f in 0..d {
                let col = &columns[f];
                left.iter_mut().for_each(|s| *s = Stats::default());
                last.iter_mut().for_each(|v| *v = f64::NAN);
                for &i in &sorted[f] {
                    let i = i as usize;
                    let slot = node_of[i];
                    if slot == NONE || !eligible[slot as usize] {
                        continue;
                    }
                    let slot = slot as usize;
                    let x = col[i];
                    let prev = last[slot];
                    if x > prev {
                        let l = &left[slot];
                        let total = &open[slot].stats;
                        let nr = total.n - l.n;
                        if l.n >= params.min_samples_leaf && nr >= params.min_samples_leaf {
                            let score = split_score(crit, l, &total.minus(l));
                            if best[slot].is_none_or(|b| score.beats(b.score)) {
                                best[slot] = Some(Candidate {
                                    feature: f,
                                    threshold: midpoint(prev, x),
                                    score,
                                });
                            }
                        }
                    }
                    left[slot].add(targets[i], h_of(i));
                    last[slot] = x;
                }
            }
        }

        // decide splits and allocate children
        let mut next_open = Vec::new();
        let mut route: Vec<Option<(usize, f64, u32, u32)>> = Vec::with_capacity(open.len());
        for (slot, o) in open.iter().enumerate() {
            let accepted = match (eligible[slot], best[slot]) {
                (true, Some(c)) => match crit {
                    Criterion::Gini => Some(c),
                    Criterion::Variance => {
                        let gain = c.score.value() - o.stats.sq_score();
                        (gain > 1e-9 * o.stats.sse()).then_some(c)
                    }
                },
                _ => None,
            };
            match accepted {
                Some(c) => {
                    let l = nodes.len();
                    nodes.push(TreeNode::Leaf { value: 0.0 });
                    nodes.push(TreeNode::Leaf { value: 0.0 });
                    nodes[o.arena] = TreeNode::Internal {
                        feature: c.feature,
                        threshold: c.threshold,
                        left: l,
                        right: l + 1,
                    };
                    let ls = next_open.len() as u32;
                    for arena in [l, l + 1] {
                        next_open.push(OpenNode {
                            arena,
                            depth: o.depth + 1,
                            stats: Stats::default(),
                        });
                    }
                    route.push(Some((c.feature, c.threshold, ls, ls + 1)));
                }
                None => {
                    nodes[o.arena] = TreeNode::Leaf {
                        value: leaf_value(&o.stats),
                    };
                    route.push(None);
                }
            }
        }

        let mut active = 0;
        for i in 0..n {
            let slot = node_of[i];
            if slot == NONE {
                continue;
            }
            node_of[i] = match route[slot as usize] {
                Some((f, t, l, r)) => {
                    let child = if columns[f][i] < t { l } else { r };
                    next_open[child as usize].stats.add(targets[i], h_of(i));
                    active += 1;
                    child
                }
                None => NONE,
            };
        }
        if active * 2 < sorted.first().map_or(0, Vec::len) {
            for s in &mut sorted {
                s.retain(|&i| node_of[i as usize] != NONE);
            }
        }
        open = next_open;
    }
    DecisionTree {
        n_features: d,
        nodes,
    }
}

/// CART classification tree: every feature is considered at every node and
/// the split minimizing weighted Gini impurity is taken.
pub fn fit_decision_tree(m: &DesignMatrix, params: &TreeParams) -> Result<DecisionTree> {
    params.validate()?;
    if m.rows() == 0 {
        return Err(Error::EmptyInput);
    }
    let columns = column_major(&m.values);
    let sorted = presort(&columns);
    let targets: Vec<f64> = m.labels.iter().map(|&l| f64::from(l)).collect();
    Ok(grow_exact(
        &columns,
        sorted,
        &targets,
        None,
        Criterion::Gini,
        params,
        |s| s.sum / s.n as f64,
    ))
}

/// Features examined per node by the randomized learners: `ceil(sqrt(d))`.
pub fn features_per_split(d: usize) -> usize {
    ((d as f64).sqrt().ceil() as usize).clamp(1, d.max(1))
}

/// One extremely randomized tree. At each node, up to `ceil(sqrt(d))`
/// non-constant features are drawn without replacement, each gets one
/// uniform threshold inside its node-local range, and the best by Gini wins.
pub fn fit_extra_tree(m: &DesignMatrix, params: &TreeParams) -> Result<DecisionTree> {
    params.validate()?;
    if m.rows() == 0 {
        return Err(Error::EmptyInput);
    }
    let columns = column_major(&m.values);
    Ok(grow_extra(&columns, &m.labels, params))
}

fn grow_extra(columns: &[Vec<f64>], labels: &[u8], params: &TreeParams) -> DecisionTree {
    let d = columns.len();
    let k = features_per_split(d);
    let mut rng = ChaCha8Rng::seed_from_u64(params.seed);
    let mut idx: Vec<usize> = (0..labels.len()).collect();
    let mut features: Vec<usize> = (0..d).collect();
    let mut nodes = vec![TreeNode::Leaf { value: 0.0 }];
    let mut stack = vec![(0usize, 0usize, labels.len(), 0usize)];

    while let Some((arena, lo, hi, depth)) = stack.pop() {
        let n = hi - lo;
        let pos = idx[lo..hi].iter().filter(|&&i| labels[i] == 1).count();
        let leaf = TreeNode::Leaf {
            value: pos as f64 / n as f64,
        };
        if pos == 0
            || pos == n
            || !params.depth_allows_split(depth)
            || n < params.min_samples_split
            || n < 2 * params.min_samples_leaf
        {
            nodes[arena] = leaf;
            continue;
        }

        let mut best: Option<Candidate> = None;
        let mut visited = 0;
        for j in 0..d {
            if visited == k {
                break;
            }
            let pick = rng.random_range(j..d);
            features.swap(j, pick);
            let f = features[j];
            let col = &columns[f];
            let (mut min, mut max) = (f64::INFINITY, f64::NEG_INFINITY);
            for &i in &idx[lo..hi] {
                min = min.min(col[i]);
                max = max.max(col[i]);
            }
            if max <= min {
                continue;
            }
            visited += 1;
            let threshold = loop {
                let t = rng.random_range(min..max);
                if t > min && t <= max {
                    break t;
                }
            };
            let (mut nl, mut pl) = (0usize, 0usize);
            for &i in &idx[lo..hi] {
                if col[i] < threshold {
                    nl += 1;
                    pl += usize::from(labels[i]);
                }
            }
            let nr = n - nl;
            if nl < params.min_samples_leaf || nr < params.min_samples_leaf {
                continue;
            }
            let l = Stats {
                n: nl,
                sum: pl as f64,
                ..Stats::default()
            };
            let r = Stats {
                n: nr,
                sum: (pos - pl) as f64,
                ..Stats::default()
            };
            let score = split_score(Criterion::Gini, &l, &r);
            if best.is_none_or(|b| score.beats(b.score)) {
                best = Some(Candidate {
                    feature: f,
                    threshold,
                    score,
                });
            }
        }

        let Some(c) = best else {
            nodes[arena] = leaf;
            continue;
        };
        // in-place partition: `x < threshold` first
        let col = &columns[c.feature];
        let mut split = lo;
        for j in lo..hi {
            if col[idx[j]] < c.threshold {
                idx.swap(j, split);
                split += 1;
            }
        }
        let l = nodes.len();
        nodes.push(TreeNode::Leaf { value: 0.0 });
        nodes.push(TreeNode::Leaf { value: 0.0 });
        nodes[arena] = TreeNode::Internal {
            feature: c.feature,
            threshold: c.threshold,
            left: l,
            right: l + 1,
        };
        stack.push((l + 1, split, hi, depth + 1));
        stack.push((l, lo, split, depth + 1));
    }
    DecisionTree {
        n_features: d,
        nodes,
    }
}

/// Extremely randomized trees averaged by leaf probability.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ForestModel {
    pub trees: Vec<DecisionTree>,
    pub n_features_considered: usize,
}

impl ForestModel {
    pub fn n_features(&self) -> usize {
        self.trees[0].n_features
    }

    /// Mean leaf probability; per-row values are summed in sorted order so the
    /// result does not depend on the order of the tree list.
    pub fn predict_proba(&self, m: &Matrix) -> Result<Vec<f64>> {
        check_width(self.n_features(), m)?;
        let mut buf = vec![0.0; self.trees.len()];
        Ok((0..m.rows())
            .map(|r| {
                for (b, t) in buf.iter_mut().zip(&self.trees) {
                    *b = t.evaluate(m.row(r));
                }
                buf.sort_by(f64::total_cmp);
                buf.iter().sum::<f64>() / buf.len() as f64
            })
            .collect())
    }

    pub fn validate(&self) -> Result<()> {
        let Some(first) = self.trees.first() else {
            return Err(Error::InvalidArtifact("forest has no trees".into()));
        };
        for t in &self.trees {
            t.validate()?;
            if t.n_features != first.n_features {
                return Err(Error::InvalidArtifact("forest trees disagree on width".into()));
            }
        }
        Ok(())
    }
}

/// `n_trees` extra trees on the full sample (no bootstrap), each with its own derived seed.
pub fn fit_extra_trees_ensemble(
    m: &DesignMatrix,
    params: &TreeParams,
    n_trees: usize,
) -> Result<ForestModel> {
    params.validate()?;
    if m.rows() == 0 {
        return Err(Error::EmptyInput);
    }
    if n_trees == 0 {
        return Err(Error::InvalidConfig("ensemble needs at least one tree".into()));
    }
    let columns = column_major(&m.values);
    let trees = (0..n_trees)
        .into_par_iter()
        .map(|t| {
            let p = TreeParams {
                seed: derive_seed(params.seed, t as u64),
                ..*params
            };
            grow_extra(&columns, &m.labels, &p)
        })
        .collect();
    Ok(ForestModel {
        trees,
        n_features_considered: features_per_split(m.cols()),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct GbdtParams {
    pub rounds: usize,
    pub shrinkage: f64,
    pub tree: TreeParams,
}

impl Default for GbdtParams {
    fn default() -> Self {
        GbdtParams {
            rounds: 200,
            shrinkage: 0.1,
            tree: TreeParams {
                max_depth: Some(6),
                ..TreeParams::default()
            },
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GbdtModel {
    /// Log-odds of the training positive rate.
    pub base_score: f64,
    pub trees: Vec<DecisionTree>,
    pub shrinkage: f64,
    pub n_features: usize,
}

impl GbdtModel {
    pub fn raw_scores(&self, m: &Matrix) -> Result<Vec<f64>> {
        check_width(self.n_features, m)?;
        Ok((0..m.rows())
            .map(|r| {
                let s: f64 = self.trees.iter().map(|t| t.evaluate(m.row(r))).sum();
                self.base_score + self.shrinkage * s
            })
            .collect())
    }

    pub fn predict_proba(&self, m: &Matrix) -> Result<Vec<f64>> {
        Ok(self.raw_scores(m)?.into_iter().map(sigmoid).collect())
    }

    pub fn validate(&self) -> Result<()> {
        if !self.base_score.is_finite() || !(self.shrinkage > 0.0 && self.shrinkage <= 1.0) {
            return Err(Error::InvalidArtifact("bad boosting constants".into()));
        }
        for t in &self.trees {
            t.validate()?;
            if t.n_features != self.n_features {
                return Err(Error::InvalidArtifact("boosting tree width mismatch".into()));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GbdtFit {
    pub model: GbdtModel,
    /// Training log-loss before the first round and after each round.
    pub loss_per_round: Vec<f64>,
}

/// Logistic-loss gradient boosting. Each round fits a least-squares
/// regression tree to the residuals `y - p` and sets leaf values to the
/// one-step Newton estimate `sum(y - p) / sum(p (1 - p))`.
pub fn fit_gbdt(m: &DesignMatrix, params: &GbdtParams) -> Result<GbdtFit> {
    params.tree.validate()?;
    if !(params.shrinkage > 0.0 && params.shrinkage <= 1.0) {
        return Err(Error::InvalidConfig("shrinkage must be in (0, 1]".into()));
    }
    if params.rounds == 0 {
        return Err(Error::InvalidConfig("rounds must be at least 1".into()));
    }
    let pos = m.labels.iter().filter(|&&l| l == 1).count();
    let neg = m.rows() - pos;
    if pos == 0 || neg == 0 {
        return Err(Error::SingleClassInput);
    }
    let base_score = (pos as f64 / neg as f64).ln();
    let columns = column_major(&m.values);
    let sorted = presort(&columns);
    let y: Vec<f64> = m.labels.iter().map(|&l| f64::from(l)).collect();
    let mut raw = vec![base_score; m.rows()];
    let mut trees = Vec::with_capacity(params.rounds);
    let mut losses = Vec::with_capacity(params.rounds + 1);
    let mut residual = vec![0.0; m.rows()];
    let mut hessian = vec![0.0; m.rows()];

    let loss_of = |raw: &[f64]| {
        let p: Vec<f64> = raw.iter().map(|&z| sigmoid(z)).collect();
        bce_loss(&p, &m.labels).expect("aligned")
    };
    losses.push(loss_of(&raw));

    for _ in 0..params.rounds {
        for i in 0..m.rows() {
            let p = sigmoid(raw[i]);
            residual[i] = y[i] - p;
            hessian[i] = p * (1.0 - p);
        }
        let tree = grow_exact(
            &columns,
            sorted.clone(),
            &residual,
            Some(&hessian),
            Criterion::Variance,
            &params.tree,
            |s| {
                if s.sum_h > 1e-12 {
                    s.sum / s.sum_h
                } else {
                    0.0
                }
            },
        );
        for (i, r) in raw.iter_mut().enumerate() {
            *r += params.shrinkage * tree.evaluate(m.values.row(i));
        }
        trees.push(tree);
        losses.push(loss_of(&raw));
    }
    Ok(GbdtFit {
        model: GbdtModel {
            base_score,
            trees,
            shrinkage: params.shrinkage,
            n_features: m.cols(),
        },
        loss_per_round: losses,
    })
}

pub fn predict_tree(tree: &DecisionTree, m: &Matrix) -> Result<Vec<u8>> {
    tree.predict_proba(m).map(threshold_labels)
}

pub fn predict_forest(forest: &ForestModel, m: &Matrix) -> Result<Vec<u8>> {
    forest.predict_proba(m).map(threshold_labels)
}

pub fn predict_gbdt(model: &GbdtModel, m: &Matrix) -> Result<Vec<u8>> {
    model.predict_proba(m).map(threshold_labels)
}
