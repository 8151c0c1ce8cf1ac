//! Regression trees on gradient/curvature statistics and the two boosting
//! drivers built on them.
//!
//! Both modes minimise binary log-loss on the margin (log-odds) scale. Per
//! row the loss has gradient `g = p - y` and curvature `h = p (1 - p)`. A
//! leaf holding rows with sums `G`, `H` gets weight `-G / (H + lambda)`, and
//! a split is scored by
//!
//! ```text
//! gain = 1/2 [ G_L^2 / (H_L + lambda) + G_R^2 / (H_R + lambda) - G^2 / (H + lambda) ] - gamma
//! ```
//!
//! `FirstOrder` is the same machinery with `lambda = gamma = 0` (a Newton
//! step on the residuals); `SecondOrder` keeps the regularisation terms.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::preprocess::FeatureMatrix;

pub const PROB_CLAMP: f64 = 1e-12;

/// Gains closer than this (relative) are treated as equal, so ties resolve
/// by feature index and threshold regardless of summation order.
const GAIN_TIE_REL: f64 = 1e-12;

#[derive(Debug, Error, PartialEq)]
pub enum BoostError {
    #[error("node has no rows")]
    EmptyNode,
    #[error("training data contains a single class")]
    SingleClassDataset,
    #[error("bad hyperparameter: {0}")]
    BadHyperparameter(String),
    #[error("expected {expected} features, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BoostMode {
    FirstOrder,
    SecondOrder,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum TreeNode {
    Internal {
        feature: usize,
        threshold: f64,
        left: Box<TreeNode>,
        right: Box<TreeNode>,
    },
    Leaf {
        weight: f64,
    },
}

impl TreeNode {
    /// Leaf weight reached by `x`; `x[feature] < threshold` goes left.
    pub fn predict(&self, x: &[f64]) -> f64 {
        let mut node = self;
        loop {
            match node {
                TreeNode::Leaf { weight } => return *weight,
                TreeNode::Internal {
                    feature,
                    threshold,
                    left,
                    right,
                } => node = if x[*feature] < *threshold { left } else { right },
            }
        }
    }

    pub fn depth(&self) -> usize {
        match self {
            TreeNode::Leaf { .. } => 0,
            TreeNode::Internal { left, right, .. } => 1 + left.depth().max(right.depth()),
        }
    }

    pub fn leaves(&self) -> usize {
        match self {
            TreeNode::Leaf { .. } => 1,
            TreeNode::Internal { left, right, .. } => left.leaves() + right.leaves(),
        }
    }

    fn scale(&mut self, factor: f64) {
        match self {
            TreeNode::Leaf { weight } => *weight *= factor,
            TreeNode::Internal { left, right, .. } => {
                left.scale(factor);
                right.scale(factor);
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GradHess {
    pub g: Vec<f64>,
    pub h: Vec<f64>,
}

impl GradHess {
    pub fn from_margins(margins: &[f64], labels: &[u8]) -> Self {
        let (g, h) = margins
            .iter()
            .zip(labels)
            .map(|(&m, &y)| {
                let p = sigmoid(m);
                (p - f64::from(y), p * (1.0 - p))
            })
            .unzip();
        GradHess { g, h }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TreeParams {
    pub max_depth: usize,
    pub lambda: f64,
    pub gamma: f64,
    pub min_child_weight: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Split {
    pub feature: usize,
    pub threshold: f64,
    pub gain: f64,
}

pub fn leaf_weight(g: f64, h: f64, lambda: f64) -> f64 {
    let denom = h + lambda;
    if denom > 0.0 {
        -g / denom
    } else {
        0.0
    }
}

fn score(g: f64, h: f64, lambda: f64) -> f64 {
    let denom = h + lambda;
    if denom > 0.0 {
        g * g / denom
    } else {
        0.0
    }
}

pub fn split_gain(gl: f64, hl: f64, gr: f64, hr: f64, lambda: f64, gamma: f64) -> f64 {
    0.5 * (score(gl, hl, lambda) + score(gr, hr, lambda) - score(gl + gr, hl + hr, lambda)) - gamma
}

/// Replaces `best` when `candidate` is clearly better; near-equal gains keep
/// the earlier candidate.
pub fn improves(candidate: f64, best: Option<f64>) -> bool {
    match best {
        None => true,
        Some(b) => candidate - b > GAIN_TIE_REL * b.abs().max(candidate.abs()).max(1.0),
    }
}

/// Threshold between two consecutive distinct sorted values that sends `lo`
/// left and `hi` right.
pub fn midpoint(lo: f64, hi: f64) -> f64 {
    let mid = lo + (hi - lo) / 2.0;
    if mid > lo && mid <= hi {
        mid
    } else {
        hi
    }
}

/// Best positive-gain split of `rows`, scanning features in index order and
/// thresholds in increasing order.
pub fn best_split(m: &FeatureMatrix, rows: &[usize], gh: &GradHess, params: &TreeParams) -> Option<Split> {
    let g_total: f64 = rows.iter().map(|&i| gh.g[i]).sum();
    let h_total: f64 = rows.iter().map(|&i| gh.h[i]).sum();
    let mut best: Option<Split> = None;
    let mut sorted = rows.to_vec();
    for feature in 0..m.cols {
        sorted.sort_by(|&a, &b| m.get(a, feature).total_cmp(&m.get(b, feature)).then(a.cmp(&b)));
        let (mut gl, mut hl) = (0.0, 0.0);
        for w in 0..sorted.len().saturating_sub(1) {
            let i = sorted[w];
            gl += gh.g[i];
            hl += gh.h[i];
            let lo = m.get(i, feature);
            let hi = m.get(sorted[w + 1], feature);
            if lo == hi {
                continue;
            }
            let (gr, hr) = (g_total - gl, h_total - hl);
            if hl < params.min_child_weight || hr < params.min_child_weight {
                continue;
            }
            let gain = split_gain(gl, hl, gr, hr, params.lambda, params.gamma);
            if gain > 0.0 && improves(gain, best.map(|s| s.gain)) {
                best = Some(Split {
                    feature,
                    threshold: midpoint(lo, hi),
                    gain,
                });
            }
        }
    }
    best
}

fn grow(m: &FeatureMatrix, rows: Vec<usize>, gh: &GradHess, params: &TreeParams, depth: usize) -> TreeNode {
    if depth < params.max_depth && rows.len() > 1 {
        if let Some(split) = best_split(m, &rows, gh, params) {
            let (left, right): (Vec<usize>, Vec<usize>) =
                rows.into_iter().partition(|&i| m.get(i, split.feature) < split.threshold);
            return TreeNode::Internal {
                feature: split.feature,
                threshold: split.threshold,
                left: Box::new(grow(m, left, gh, params, depth + 1)),
                right: Box::new(grow(m, right, gh, params, depth + 1)),
            };
        }
    }
    let g: f64 = rows.iter().map(|&i| gh.g[i]).sum();
    let h: f64 = rows.iter().map(|&i| gh.h[i]).sum();
    TreeNode::Leaf {
        weight: leaf_weight(g, h, params.lambda),
    }
}

/// Exact greedy tree over all rows of `m`.
pub fn fit_tree(m: &FeatureMatrix, gh: &GradHess, params: &TreeParams) -> Result<TreeNode, BoostError> {
    if m.rows == 0 {
        return Err(BoostError::EmptyNode);
    }
    if params.max_depth == 0 {
        return Err(BoostError::BadHyperparameter("max_depth must be at least 1".into()));
    }
    Ok(grow(m, (0..m.rows).collect(), gh, params, 0))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoostConfig {
    pub mode: BoostMode,
    pub n_rounds: usize,
    pub learning_rate: f64,
    pub max_depth: usize,
    pub lambda: f64,
    pub gamma: f64,
    pub min_child_weight: f64,
}

impl BoostConfig {
    pub fn first_order() -> Self {
        BoostConfig {
            mode: BoostMode::FirstOrder,
            lambda: 0.0,
            gamma: 0.0,
            ..Self::second_order()
        }
    }

    pub fn second_order() -> Self {
        BoostConfig {
            mode: BoostMode::SecondOrder,
            n_rounds: 200,
            learning_rate: 0.1,
            max_depth: 3,
            lambda: 1.0,
            gamma: 0.0,
            min_child_weight: 1.0,
        }
    }

    pub fn validate(&self) -> Result<(), BoostError> {
        let bad = |msg: String| Err(BoostError::BadHyperparameter(msg));
        if self.n_rounds == 0 {
            return bad("n_rounds must be at least 1".into());
        }
        if !(self.learning_rate > 0.0 && self.learning_rate <= 1.0) {
            return bad(format!("learning_rate {} outside (0, 1]", self.learning_rate));
        }
        if self.max_depth == 0 {
            return bad("max_depth must be at least 1".into());
        }
        if !(self.lambda >= 0.0 && self.gamma >= 0.0 && self.min_child_weight >= 0.0) {
            return bad("lambda, gamma and min_child_weight must be non-negative".into());
        }
        Ok(())
    }

    fn tree_params(&self) -> TreeParams {
        let (lambda, gamma) = match self.mode {
            BoostMode::FirstOrder => (0.0, 0.0),
            BoostMode::SecondOrder => (self.lambda, self.gamma),
        };
        TreeParams {
            max_depth: self.max_depth,
            lambda,
            gamma,
            min_child_weight: self.min_child_weight,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoostedEnsemble {
    pub mode: BoostMode,
    pub n_features: usize,
    pub base_score: f64,
    /// Leaf weights already include the learning rate.
    pub trees: Vec<TreeNode>,
    pub learning_rate: f64,
    pub lambda: f64,
    pub gamma: f64,
    pub max_depth: usize,
    pub n_rounds: usize,
    pub min_child_weight: f64,
}

/// Logistic function evaluated without overflow for large |z|.
pub fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

pub fn clamp_prob(p: f64) -> f64 {
    p.clamp(PROB_CLAMP, 1.0 - PROB_CLAMP)
}

/// Mean binary log-loss of margins against labels (probabilities clamped).
pub fn log_loss(margins: &[f64], labels: &[u8]) -> f64 {
    let total: f64 = margins
        .iter()
        .zip(labels)
        .map(|(&m, &y)| {
            let p = clamp_prob(sigmoid(m));
            if y == 1 {
                -p.ln()
            } else {
                -(1.0 - p).ln()
            }
        })
        .sum();
    total / margins.len() as f64
}

/// Fits a boosted ensemble, calling `on_round(round, margins)` after each
/// accepted tree.
pub fn fit_boosted_with(
    m: &FeatureMatrix,
    config: &BoostConfig,
    mut on_round: impl FnMut(usize, &[f64]),
) -> Result<BoostedEnsemble, BoostError> {
    config.validate()?;
    let [neg, pos] = m.class_counts();
    if neg == 0 || pos == 0 {
        return Err(BoostError::SingleClassDataset);
    }
    let p_bar = pos as f64 / m.rows as f64;
    let base_score = (p_bar / (1.0 - p_bar)).ln();
    let params = config.tree_params();
    let mut margins = vec![base_score; m.rows];
    let mut trees = Vec::with_capacity(config.n_rounds);
    for round in 0..config.n_rounds {
        let gh = GradHess::from_margins(&margins, &m.labels);
        let mut tree = fit_tree(m, &gh, &params)?;
        if let TreeNode::Leaf { weight } = tree {
            // no split had positive gain; stop once the leaf step vanishes too
            if weight.abs() < 1e-12 {
                break;
            }
        }
        tree.scale(config.learning_rate);
        for (i, margin) in margins.iter_mut().enumerate() {
            *margin += tree.predict(m.row(i));
        }
        trees.push(tree);
        on_round(round, &margins);
    }
    Ok(BoostedEnsemble {
        mode: config.mode,
        n_features: m.cols,
        base_score,
        trees,
        learning_rate: config.learning_rate,
        lambda: params.lambda,
        gamma: params.gamma,
        max_depth: config.max_depth,
        n_rounds: config.n_rounds,
        min_child_weight: config.min_child_weight,
    })
}

pub fn fit_boosted(m: &FeatureMatrix, config: &BoostConfig) -> Result<BoostedEnsemble, BoostError> {
    fit_boosted_with(m, config, |_, _| {})
}

impl BoostedEnsemble {
    pub fn predict_margin(&self, x: &[f64]) -> Result<f64, BoostError> {
        if x.len() != self.n_features {
            return Err(BoostError::DimensionMismatch {
                expected: self.n_features,
                got: x.len(),
            });
        }
        Ok(self.base_score + self.trees.iter().map(|t| t.predict(x)).sum::<f64>())
    }

    pub fn predict_proba(&self, x: &[f64]) -> Result<f64, BoostError> {
        Ok(clamp_prob(sigmoid(self.predict_margin(x)?)))
    }
}

pub fn predict_margin(e: &BoostedEnsemble, x: &[f64]) -> Result<f64, BoostError> {
    e.predict_margin(x)
}

pub fn predict_proba_boosted(e: &BoostedEnsemble, x: &[f64]) -> Result<f64, BoostError> {
    e.predict_proba(x)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    fn params(lambda: f64) -> TreeParams {
        TreeParams {
            max_depth: 3,
            lambda,
            gamma: 0.0,
            min_child_weight: 0.0,
        }
    }

    #[test]
    fn leaf_weight_and_gain_arithmetic() {
        assert_abs_diff_eq!(leaf_weight(2.0, 4.0, 1.0), -0.4);
        assert_abs_diff_eq!(split_gain(-4.0, 4.0, 4.0, 4.0, 1.0, 0.0), 3.2, epsilon = 1e-12);
    }

    #[test]
    fn single_row_tree_is_a_leaf() {
        let m = FeatureMatrix::from_rows(&[vec![1.0]], vec![1]);
        let gh = GradHess { g: vec![2.0], h: vec![4.0] };
        let tree = fit_tree(&m, &gh, &params(1.0)).unwrap();
        assert_eq!(tree, TreeNode::Leaf { weight: -0.4 });
    }

    #[test]
    fn empty_matrix_is_rejected() {
        let m = FeatureMatrix::from_rows(&[], vec![]);
        let gh = GradHess { g: vec![], h: vec![] };
        assert_eq!(fit_tree(&m, &gh, &params(1.0)), Err(BoostError::EmptyNode));
    }

    #[test]
    fn routing_is_strictly_less_than() {
        let tree = TreeNode::Internal {
            feature: 0,
            threshold: 1.0,
            left: Box::new(TreeNode::Leaf { weight: -1.0 }),
            right: Box::new(TreeNode::Leaf { weight: 1.0 }),
        };
        assert_eq!(tree.predict(&[0.999]), -1.0);
        assert_eq!(tree.predict(&[1.0]), 1.0);
    }

    #[test]
    fn midpoint_separates_adjacent_floats() {
        let lo = 1.0f64;
        let hi = f64::from_bits(lo.to_bits() + 1);
        let t = midpoint(lo, hi);
        assert!(lo < t && t <= hi);
        assert_eq!(midpoint(1.0, 3.0), 2.0);
    }

    #[test]
    fn base_score_is_log_odds() {
        let m = FeatureMatrix::from_rows(&[vec![0.0], vec![1.0], vec![2.0], vec![3.0]], vec![1, 1, 1, 0]);
        let e = fit_boosted(&m, &BoostConfig { n_rounds: 1, ..BoostConfig::second_order() }).unwrap();
        assert_abs_diff_eq!(e.base_score, 3f64.ln(), epsilon = 1e-12);
        assert_abs_diff_eq!(e.base_score, 1.09861, epsilon = 1e-5);
    }

    #[test]
    fn hyperparameters_are_validated() {
        let m = FeatureMatrix::from_rows(&[vec![0.0], vec![1.0]], vec![0, 1]);
        let zero = BoostConfig { n_rounds: 0, ..BoostConfig::second_order() };
        assert!(matches!(fit_boosted(&m, &zero), Err(BoostError::BadHyperparameter(_))));
        let lr = BoostConfig { learning_rate: 1.5, ..BoostConfig::second_order() };
        assert!(matches!(fit_boosted(&m, &lr), Err(BoostError::BadHyperparameter(_))));
        let one = FeatureMatrix::from_rows(&[vec![0.0], vec![1.0]], vec![1, 1]);
        assert_eq!(fit_boosted(&one, &BoostConfig::second_order()), Err(BoostError::SingleClassDataset));
    }

    #[test]
    fn margins_and_probabilities() {
        let mut e = BoostedEnsemble {
            mode: BoostMode::SecondOrder,
            n_features: 1,
            base_score: 0.0,
            trees: vec![],
            learning_rate: 0.1,
            lambda: 1.0,
            gamma: 0.0,
            max_depth: 3,
            n_rounds: 1,
            min_child_weight: 1.0,
        };
        assert_eq!(e.predict_margin(&[3.0]).unwrap(), 0.0);
        assert_eq!(e.predict_proba(&[3.0]).unwrap(), 0.5);
        e.trees.push(TreeNode::Leaf { weight: -0.4 });
        assert_eq!(e.predict_margin(&[3.0]).unwrap(), -0.4);
        e.trees.clear();
        e.base_score = 3f64.ln();
        assert_abs_diff_eq!(e.predict_proba(&[0.0]).unwrap(), 0.75, epsilon = 1e-12);
        e.base_score = -50.0;
        assert!(e.predict_proba(&[0.0]).unwrap() > 0.0);
        assert!(matches!(e.predict_margin(&[0.0, 1.0]), Err(BoostError::DimensionMismatch { .. })));
    }

    #[test]
    fn separable_data_descends_every_round() {
        let rows: Vec<Vec<f64>> = (0..20).map(|i| vec![i as f64]).collect();
        let labels = (0..20).map(|i| u8::from(i >= 10)).collect();
        let m = FeatureMatrix::from_rows(&rows, labels);
        for mode_cfg in [BoostConfig::first_order(), BoostConfig::second_order()] {
            let cfg = BoostConfig {
                n_rounds: 20,
                learning_rate: 0.3,
                max_depth: 1,
                min_child_weight: 0.0,
                ..mode_cfg
            };
            let mut losses = vec![log_loss(&[0.0; 20], &m.labels)];
            let e = fit_boosted_with(&m, &cfg, |_, margins| losses.push(log_loss(margins, &m.labels))).unwrap();
            assert_eq!(e.trees.len(), 20);
            for w in losses.windows(2) {
                assert!(w[1] < w[0] - 1e-9, "{losses:?}");
            }
            let correct = (0..20).filter(|&i| (e.predict_proba(m.row(i)).unwrap() >= 0.5) == (m.labels[i] == 1)).count();
            assert_eq!(correct, 20);
        }
    }

    #[test]
    fn depth_is_bounded() {
        let rows: Vec<Vec<f64>> = (0..64).map(|i| vec![(i * 37 % 64) as f64, (i % 7) as f64]).collect();
        let labels: Vec<u8> = (0..64).map(|i| u8::from((i * 37 % 64) % 3 == 0)).collect();
        let m = FeatureMatrix::from_rows(&rows, labels);
        let gh = GradHess::from_margins(&vec![0.0; 64], &m.labels);
        for depth in 1..5 {
            let t = fit_tree(&m, &gh, &TreeParams { max_depth: depth, ..params(1.0) }).unwrap();
            assert!(t.depth() <= depth);
        }
    }

    fn objective(rows: &[usize], gh: &GradHess, lambda: f64, w: f64) -> f64 {
        rows.iter().map(|&i| gh.g[i] * w + 0.5 * (gh.h[i] + lambda / rows.len() as f64) * w * w).sum()
    }

    proptest! {
        #[test]
        fn leaf_weight_minimizes_objective(
            gs in proptest::collection::vec(-1.0f64..1.0, 1..20),
            hs in proptest::collection::vec(0.0f64..0.25, 20),
            lambda in 0.0f64..5.0,
        ) {
            let rows: Vec<usize> = (0..gs.len()).collect();
            let gh = GradHess { g: gs.clone(), h: hs[..gs.len()].to_vec() };
            let g: f64 = gs.iter().sum();
            let h: f64 = gh.h.iter().sum();
            prop_assume!(h + lambda > 1e-6);
            let w = leaf_weight(g, h, lambda);
            let at = objective(&rows, &gh, lambda, w);
            prop_assert!(objective(&rows, &gh, lambda, w + 1e-3) >= at);
            prop_assert!(objective(&rows, &gh, lambda, w - 1e-3) >= at);
        }

        #[test]
        fn larger_lambda_shrinks_weights(g in -10.0f64..10.0, h in 0.0f64..5.0, l1 in 0.0f64..5.0, dl in 0.0f64..5.0) {
            prop_assume!(h + l1 > 1e-9);
            prop_assert!(leaf_weight(g, h, l1 + dl).abs() <= leaf_weight(g, h, l1).abs());
        }

        #[test]
        fn training_loss_never_increases(
            rows in proptest::collection::vec(proptest::collection::vec(-3.0f64..3.0, 2), 8..40),
            flips in proptest::collection::vec(any::<bool>(), 40),
            lr in 0.05f64..0.3,
        ) {
            let labels: Vec<u8> = rows.iter().zip(&flips).map(|(r, &f)| u8::from((r[0] + r[1] > 0.0) ^ f)).collect();
            let m = FeatureMatrix::from_rows(&rows, labels);
            prop_assume!(m.class_counts().iter().all(|&c| c > 0));
            let cfg = BoostConfig { n_rounds: 15, learning_rate: lr, ..BoostConfig::second_order() };
            let p = m.class_counts()[1] as f64 / m.rows as f64;
            let mut prev = log_loss(&vec![(p / (1.0 - p)).ln(); m.rows], &m.labels);
            let mut ok = true;
            fit_boosted_with(&m, &cfg, |_, margins| {
                let l = log_loss(margins, &m.labels);
                ok &= l <= prev + 1e-9;
                prev = l;
            }).unwrap();
            prop_assert!(ok);
        }

        #[test]
        fn fitting_is_deterministic(
            rows in proptest::collection::vec(proptest::collection::vec(-3.0f64..3.0, 3), 6..30),
        ) {
            let labels: Vec<u8> = rows.iter().map(|r| u8::from(r[2] > r[0])).collect();
            let m = FeatureMatrix::from_rows(&rows, labels);
            prop_assume!(m.class_counts().iter().all(|&c| c > 0));
            let cfg = BoostConfig { n_rounds: 10, ..BoostConfig::second_order() };
            prop_assert_eq!(fit_boosted(&m, &cfg).unwrap(), fit_boosted(&m, &cfg).unwrap());
        }
    }
}
