//! Learned surrogate functions over coalition membership vectors: linear
//! least squares (plain and sum-constrained) and squared-loss gradient
//! boosted trees. Both families expose exact probabilistic values — a linear
//! function's values are its coefficients, a tree fit reduces to the tree
//! recursion on the 0/1 hypercube.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::sampling::Subset;
use crate::treeprob::{tree_prob_values, Tree, TreeEnsemble, TreeError, TreeNode};
use crate::weights::WeightVector;

#[derive(Debug, Error)]
pub enum RegressError {
    #[error("no training samples")]
    NoSamples,
    #[error("invalid gbt config: {0}")]
    InvalidConfig(String),
}

/// A fitted surrogate. Tree fits split membership bits at thresholds inside
/// (0, 1), so a bit routes deterministically: absent goes left, present right.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(untagged)]
pub enum FittedFunction {
    Linear { intercept: f64, coeffs: Vec<f64> },
    Tree(TreeEnsemble),
}

impl FittedFunction {
    pub fn n(&self) -> usize {
        match self {
            FittedFunction::Linear { coeffs, .. } => coeffs.len(),
            FittedFunction::Tree(ens) => ens.n_features,
        }
    }

    pub fn predict(&self, set: &Subset) -> f64 {
        match self {
            FittedFunction::Linear { intercept, coeffs } => {
                let mut v = *intercept;
                for (i, c) in coeffs.iter().enumerate() {
                    if set.contains(i) {
                        v += c;
                    }
                }
                v
            }
            FittedFunction::Tree(ens) => {
                let total: f64 = ens.trees.iter().map(|t| predict_tree_on_bits(t, set)).sum();
                total / ens.trees.len() as f64
            }
        }
    }
}

fn predict_tree_on_bits(tree: &Tree, set: &Subset) -> f64 {
    let mut idx = tree.root;
    loop {
        match &tree.nodes[idx] {
            TreeNode::Leaf { value } => return *value,
            TreeNode::Split {
                feature,
                threshold,
                left,
                right,
            } => {
                let x = if set.contains(*feature) { 1.0 } else { 0.0 };
                idx = if x < *threshold { *left } else { *right };
            }
        }
    }
}

/// Solve `gram * x = rhs` by Cholesky; on rank deficiency add a Tikhonov
/// ridge scaled by the trace to the diagonal entries from `ridge_from` on.
fn solve_normal_equations(
    mut gram: DMatrix<f64>,
    rhs: DVector<f64>,
    ridge_from: usize,
) -> (DVector<f64>, bool) {
    if let Some(ch) = gram.clone().cholesky() {
        return (ch.solve(&rhs), false);
    }
    let dim = gram.nrows();
    let trace: f64 = gram.diagonal().iter().sum();
    let lambda = (1e-8 * trace / dim as f64).max(1e-12);
    for i in ridge_from..dim {
        gram[(i, i)] += lambda;
    }
    match gram.clone().cholesky() {
        Some(ch) => (ch.solve(&rhs), true),
        None => {
            let sol = gram.lu().solve(&rhs).unwrap_or_else(|| DVector::zeros(dim));
            (sol, true)
        }
    }
}

#[derive(Debug, Clone)]
pub struct LinearFitResult {
    pub function: FittedFunction,
    /// True when the Gram matrix was rank-deficient and a ridge was applied.
    pub regularized: bool,
}

/// Unweighted least squares of the targets on membership indicators plus an
/// intercept. Rank-deficient systems fall back to a ridge on the coefficients
/// (never on the intercept), giving the minimum-norm-style solution.
pub fn fit_linear(samples: &[(Subset, f64)], n: usize) -> Result<LinearFitResult, RegressError> {
    if samples.is_empty() {
        return Err(RegressError::NoSamples);
    }
    let m = samples.len();
    let mut x = DMatrix::zeros(m, n + 1);
    let mut y = DVector::zeros(m);
    for (row, (set, target)) in samples.iter().enumerate() {
        x[(row, 0)] = 1.0;
        for i in 0..n {
            if set.contains(i) {
                x[(row, i + 1)] = 1.0;
            }
        }
        y[row] = *target;
    }
    let gram = x.transpose() * &x;
    let rhs = x.transpose() * y;
    let (beta, regularized) = solve_normal_equations(gram, rhs, 1);
    Ok(LinearFitResult {
        function: FittedFunction::Linear {
            intercept: beta[0],
            coeffs: beta.as_slice()[1..].to_vec(),
        },
        regularized,
    })
}

/// One row of a weighted regression problem.
#[derive(Debug, Clone, Copy)]
pub struct WeightedSample {
    pub set: Subset,
    pub target: f64,
    pub weight: f64,
}

/// Weighted least squares of `target - offset` on membership indicators,
/// subject to the coefficients summing to `anchor`. The constraint is
/// eliminated by substituting the last coefficient, so it holds exactly. The
/// fitted function takes value `offset` on the empty set and `offset +
/// anchor` on the full set.
pub fn fit_constrained_linear(
    samples: &[WeightedSample],
    anchor: f64,
    offset: f64,
    n: usize,
) -> Result<FittedFunction, RegressError> {
    if samples.is_empty() {
        return Err(RegressError::NoSamples);
    }
    assert!(n >= 1);
    if n == 1 {
        return Ok(FittedFunction::Linear {
            intercept: offset,
            coeffs: vec![anchor],
        });
    }
    let r = n - 1;
    let mut gram = DMatrix::zeros(r, r);
    let mut rhs = DVector::zeros(r);
    let mut row = vec![0.0; r];
    for sample in samples {
        let last = if sample.set.contains(n - 1) { 1.0 } else { 0.0 };
        for (i, slot) in row.iter_mut().enumerate() {
            let z = if sample.set.contains(i) { 1.0 } else { 0.0 };
            *slot = z - last;
        }
        let target = (sample.target - offset) - last * anchor;
        for i in 0..r {
            if row[i] == 0.0 {
                continue;
            }
            rhs[i] += sample.weight * row[i] * target;
            for j in 0..r {
                if row[j] != 0.0 {
                    gram[(i, j)] += sample.weight * row[i] * row[j];
                }
            }
        }
    }
    let (head, _) = solve_normal_equations(gram, rhs, 0);
    let mut coeffs: Vec<f64> = head.as_slice().to_vec();
    let head_sum: f64 = coeffs.iter().sum();
    coeffs.push(anchor - head_sum);
    Ok(FittedFunction::Linear {
        intercept: offset,
        coeffs,
    })
}

/// Gradient boosting hyperparameters (squared error loss only).
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(default)]
pub struct GbtConfig {
    pub rounds: usize,
    pub max_depth: usize,
    pub learning_rate: f64,
    pub min_samples_leaf: usize,
}

impl Default for GbtConfig {
    fn default() -> Self {
        GbtConfig {
            rounds: 100,
            max_depth: 3,
            learning_rate: 0.1,
            min_samples_leaf: 2,
        }
    }
}

impl GbtConfig {
    pub fn validate(&self) -> Result<(), RegressError> {
        if self.rounds < 1 {
            return Err(RegressError::InvalidConfig("rounds must be >= 1".into()));
        }
        if !(self.learning_rate > 0.0 && self.learning_rate <= 1.0) {
            return Err(RegressError::InvalidConfig(format!(
                "learning_rate must lie in (0, 1], got {}",
                self.learning_rate
            )));
        }
        if self.min_samples_leaf < 1 {
            return Err(RegressError::InvalidConfig(
                "min_samples_leaf must be >= 1".into(),
            ));
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub struct GbtFitResult {
    pub function: FittedFunction,
    /// Training MSE after each boosting round; non-increasing.
    pub round_losses: Vec<f64>,
}

struct TreeBuilder<'a> {
    bits: &'a [u128],
    resid: &'a [f64],
    cfg: &'a GbtConfig,
    n: usize,
    nodes: Vec<TreeNode>,
}

impl TreeBuilder<'_> {
    fn build(&mut self, indices: Vec<usize>, depth: usize) -> usize {
        let count = indices.len() as f64;
        let sum: f64 = indices.iter().map(|&i| self.resid[i]).sum();
        let mean = sum / count;
        if depth >= self.cfg.max_depth || indices.len() < 2 * self.cfg.min_samples_leaf {
            self.nodes.push(TreeNode::Leaf { value: mean });
            return self.nodes.len() - 1;
        }
        let parent_score = sum * sum / count;
        let mut best: Option<(usize, f64)> = None;
        for f in 0..self.n {
            let mut right_sum = 0.0;
            let mut right_count = 0usize;
            for &i in &indices {
                if self.bits[i] >> f & 1 == 1 {
                    right_sum += self.resid[i];
                    right_count += 1;
                }
            }
            let left_count = indices.len() - right_count;
            if right_count < self.cfg.min_samples_leaf || left_count < self.cfg.min_samples_leaf {
                continue;
            }
            let left_sum = sum - right_sum;
            let score = left_sum * left_sum / left_count as f64
                + right_sum * right_sum / right_count as f64;
            let gain = score - parent_score;
            if gain > 1e-12 && best.is_none_or(|(_, g)| gain > g) {
                best = Some((f, gain));
            }
        }
        let Some((feature, _)) = best else {
            self.nodes.push(TreeNode::Leaf { value: mean });
            return self.nodes.len() - 1;
        };
        let (left_idx, right_idx): (Vec<usize>, Vec<usize>) = indices
            .into_iter()
            .partition(|&i| self.bits[i] >> feature & 1 == 0);
        let idx = self.nodes.len();
        self.nodes.push(TreeNode::Leaf { value: 0.0 }); // patched below
        let left = self.build(left_idx, depth + 1);
        let right = self.build(right_idx, depth + 1);
        self.nodes[idx] = TreeNode::Split {
            feature,
            threshold: 0.5,
            left,
            right,
        };
        idx
    }
}

fn scale_leaves(tree: &mut Tree, factor: f64) {
    for node in &mut tree.nodes {
        if let TreeNode::Leaf { value } = node {
            *value *= factor;
        }
    }
}

/// Squared-loss gradient boosting on membership bits: start from the target
/// mean, then greedily add depth-limited regression trees fit to residuals.
/// The procedure has no random component, so identical inputs always produce
/// an identical ensemble.
pub fn fit_gbt(
    samples: &[(Subset, f64)],
    n: usize,
    cfg: &GbtConfig,
) -> Result<GbtFitResult, RegressError> {
    cfg.validate()?;
    if samples.is_empty() {
        return Err(RegressError::NoSamples);
    }
    let m = samples.len();
    let bits: Vec<u128> = samples.iter().map(|(s, _)| s.bits()).collect();
    let targets: Vec<f64> = samples.iter().map(|(_, t)| *t).collect();
    let base = targets.iter().sum::<f64>() / m as f64;
    let mut preds = vec![base; m];
    let mut resid: Vec<f64> = targets.iter().zip(&preds).map(|(t, p)| t - p).collect();

    let mut round_trees = Vec::with_capacity(cfg.rounds);
    let mut round_losses = Vec::with_capacity(cfg.rounds);
    for _ in 0..cfg.rounds {
        let mut builder = TreeBuilder {
            bits: &bits,
            resid: &resid,
            cfg,
            n,
            nodes: Vec::new(),
        };
        let root = builder.build((0..m).collect(), 0);
        let tree = Tree {
            root,
            nodes: builder.nodes,
        };
        for i in 0..m {
            let set = Subset::from_bits(bits[i]);
            preds[i] += cfg.learning_rate * predict_tree_on_bits(&tree, &set);
            resid[i] = targets[i] - preds[i];
        }
        round_losses.push(resid.iter().map(|r| r * r).sum::<f64>() / m as f64);
        round_trees.push(tree);
    }

    // The ensemble predicts the mean of its trees, so fold the additive
    // structure (base + rate * sum of trees) into the leaf values.
    let total = round_trees.len() + 1;
    let mut trees = Vec::with_capacity(total);
    trees.push(Tree::leaf(base * total as f64));
    for mut tree in round_trees {
        scale_leaves(&mut tree, cfg.learning_rate * total as f64);
        trees.push(tree);
    }
    Ok(GbtFitResult {
        function: FittedFunction::Tree(TreeEnsemble::new(n, trees)),
        round_losses,
    })
}

/// Exact probabilistic values of a fitted function. A linear function's
/// marginal contributions are constant, so the values are its coefficients;
/// a tree fit is evaluated by the tree recursion with all-ones explicand and
/// all-zeros baseline (membership bit present iff the player is in the set).
pub fn exact_prob_values(f: &FittedFunction, w: &WeightVector) -> Result<Vec<f64>, TreeError> {
    match f {
        FittedFunction::Linear { coeffs, .. } => Ok(coeffs.clone()),
        FittedFunction::Tree(ens) => {
            let n = ens.n_features;
            tree_prob_values(ens, &vec![1.0; n], &[vec![0.0; n]], w)
        }
    }
}
