//! Exact probabilistic values of tree ensembles under interventional
//! perturbation, plus the exhaustive-enumeration oracle used to verify them.
//!
//! The recursion decomposes the ensemble into path value functions. Along a
//! root-to-leaf path it tracks `s_p`, the number of split features forced to
//! the explicand side, and `n_p`, the number forced to the baseline side. At a
//! leaf the closed-form sums over coalition sizes give the positive (member)
//! and negative (non-member) contributions; splits where explicand and
//! baseline agree contribute exactly zero and are never branched on.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::games::Game;
use crate::numeric::BinomTable;
use crate::sampling::{enumerate_subsets, Subset};
use crate::weights::WeightVector;

/// Largest player count for the enumeration oracle.
pub const MAX_BRUTE_FORCE: usize = 20;

#[derive(Debug, Error)]
pub enum TreeError {
    #[error("tree {tree}, node {node}: child index {child} out of range")]
    DanglingChild {
        tree: usize,
        node: usize,
        child: usize,
    },
    #[error("tree {tree}, node {node}: {reason}")]
    MalformedNode {
        tree: usize,
        node: usize,
        reason: String,
    },
    #[error("tree {tree}: cycle through node {node}")]
    Cyclic { tree: usize, node: usize },
    #[error("tree {tree}: root index {root} out of range")]
    BadRoot { tree: usize, root: usize },
    #[error("feature dimension mismatch: ensemble has {expected}, input has {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("at least one baseline is required")]
    NoBaselines,
    #[error("brute force supports at most {MAX_BRUTE_FORCE} players, got {0}")]
    TooManyPlayers(usize),
    #[error("weight vector is for {weights} players but the game has {game}")]
    WeightMismatch { weights: usize, game: usize },
}

/// One node of a decision tree.
#[derive(Debug, Clone, PartialEq)]
pub enum TreeNode {
    Split {
        feature: usize,
        threshold: f64,
        left: usize,
        right: usize,
    },
    Leaf {
        value: f64,
    },
}

/// A single decision tree: a node arena plus the root index.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawTree", into = "RawTree")]
pub struct Tree {
    pub root: usize,
    pub nodes: Vec<TreeNode>,
}

/// A forest whose prediction is the unweighted mean of its trees. Per-tree
/// weighting is expressed by scaling leaf values.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TreeEnsemble {
    pub n_features: usize,
    pub trees: Vec<Tree>,
}

#[derive(Serialize, Deserialize)]
struct RawNode {
    feature: Option<usize>,
    threshold: Option<f64>,
    left: Option<usize>,
    right: Option<usize>,
    value: Option<f64>,
}

#[derive(Serialize, Deserialize)]
struct RawTree {
    root: usize,
    nodes: Vec<RawNode>,
}

impl TryFrom<RawTree> for Tree {
    type Error = String;

    fn try_from(raw: RawTree) -> Result<Self, String> {
        let nodes = raw
            .nodes
            .into_iter()
            .enumerate()
            .map(|(i, raw)| match raw {
                RawNode {
                    feature: None,
                    threshold: None,
                    left: None,
                    right: None,
                    value: Some(value),
                } => Ok(TreeNode::Leaf { value }),
                RawNode {
                    feature: Some(feature),
                    threshold: Some(threshold),
                    left: Some(left),
                    right: Some(right),
                    value: None,
                } => Ok(TreeNode::Split {
                    feature,
                    threshold,
                    left,
                    right,
                }),
                _ => Err(format!(
                    "node {i}: a node is a leaf iff value is set and all split fields are null"
                )),
            })
            .collect::<Result<Vec<_>, _>>()?;
        Ok(Tree {
            root: raw.root,
            nodes,
        })
    }
}

impl From<Tree> for RawTree {
    fn from(tree: Tree) -> RawTree {
        let nodes = tree
            .nodes
            .into_iter()
            .map(|node| match node {
                TreeNode::Leaf { value } => RawNode {
                    feature: None,
                    threshold: None,
                    left: None,
                    right: None,
                    value: Some(value),
                },
                TreeNode::Split {
                    feature,
                    threshold,
                    left,
                    right,
                } => RawNode {
                    feature: Some(feature),
                    threshold: Some(threshold),
                    left: Some(left),
                    right: Some(right),
                    value: None,
                },
            })
            .collect();
        RawTree {
            root: tree.root,
            nodes,
        }
    }
}

impl Tree {
    /// Convenience constructor for a leaf-only tree.
    pub fn leaf(value: f64) -> Self {
        Tree {
            root: 0,
            nodes: vec![TreeNode::Leaf { value }],
        }
    }

    /// Route `x` from the root to a leaf; left branch is strict `x[f] < t`.
    pub fn predict(&self, x: &[f64]) -> f64 {
        let mut idx = self.root;
        loop {
            match &self.nodes[idx] {
                TreeNode::Leaf { value } => return *value,
                TreeNode::Split {
                    feature,
                    threshold,
                    left,
                    right,
                } => {
                    idx = if x[*feature] < *threshold {
                        *left
                    } else {
                        *right
                    };
                }
            }
        }
    }

    fn validate(&self, tree_idx: usize, n_features: usize) -> Result<(), TreeError> {
        if self.root >= self.nodes.len() {
            return Err(TreeError::BadRoot {
                tree: tree_idx,
                root: self.root,
            });
        }
        for (i, node) in self.nodes.iter().enumerate() {
            if let TreeNode::Split {
                feature,
                threshold,
                left,
                right,
            } = node
            {
                if *feature >= n_features {
                    return Err(TreeError::MalformedNode {
                        tree: tree_idx,
                        node: i,
                        reason: format!("feature {feature} exceeds n_features {n_features}"),
                    });
                }
                if !threshold.is_finite() {
                    return Err(TreeError::MalformedNode {
                        tree: tree_idx,
                        node: i,
                        reason: "non-finite threshold".into(),
                    });
                }
                for child in [*left, *right] {
                    if child >= self.nodes.len() {
                        return Err(TreeError::DanglingChild {
                            tree: tree_idx,
                            node: i,
                            child,
                        });
                    }
                }
            }
        }
        // Depth-first walk with an on-path marker to reject cycles.
        let mut on_path = vec![false; self.nodes.len()];
        let mut stack = vec![(self.root, false)];
        while let Some((idx, leaving)) = stack.pop() {
            if leaving {
                on_path[idx] = false;
                continue;
            }
            if on_path[idx] {
                return Err(TreeError::Cyclic {
                    tree: tree_idx,
                    node: idx,
                });
            }
            on_path[idx] = true;
            stack.push((idx, true));
            if let TreeNode::Split { left, right, .. } = self.nodes[idx] {
                stack.push((left, false));
                stack.push((right, false));
            }
        }
        Ok(())
    }
}

impl TreeEnsemble {
    pub fn new(n_features: usize, trees: Vec<Tree>) -> Self {
        TreeEnsemble { n_features, trees }
    }

    pub fn validate(&self) -> Result<(), TreeError> {
        for (i, tree) in self.trees.iter().enumerate() {
            tree.validate(i, self.n_features)?;
        }
        Ok(())
    }

    /// Mean prediction over all trees.
    pub fn predict(&self, x: &[f64]) -> f64 {
        let sum: f64 = self.trees.iter().map(|t| t.predict(x)).sum();
        sum / self.trees.len() as f64
    }
}

/// The two leaf-level sums of the path decomposition: `pos` is the weight mass
/// a path contributes to members of the forced explicand set, `neg` the
/// (negated) mass it contributes to members of the forced baseline set.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CaseSums {
    pub pos: f64,
    pub neg: f64,
}

fn case_sums_with_table(
    s_p: usize,
    n_p: usize,
    leaf_value: f64,
    w: &WeightVector,
    binom: &BinomTable,
) -> CaseSums {
    let n = w.n();
    debug_assert!(s_p + n_p <= n);
    let width = n - n_p - s_p;
    let mut pos_mass = 0.0;
    let mut neg_mass = 0.0;
    for l in s_p..=(n - n_p) {
        let ln_c = binom.ln(width, l - s_p);
        if let Some(lp) = w.log_p_at(l as i64 - 1) {
            pos_mass += (lp + ln_c).exp();
        }
        if let Some(lp) = w.log_p_at(l as i64) {
            neg_mass += (lp + ln_c).exp();
        }
    }
    CaseSums {
        pos: leaf_value * pos_mass,
        neg: -leaf_value * neg_mass,
    }
}

/// Leaf contribution sums for a path with `s_p` explicand-forced and `n_p`
/// baseline-forced features. Binomials are evaluated through log-gamma.
pub fn path_case_sums(s_p: usize, n_p: usize, leaf_value: f64, w: &WeightVector) -> CaseSums {
    let binom = BinomTable::new(w.n());
    case_sums_with_table(s_p, n_p, leaf_value, w, &binom)
}

struct Recursion<'a> {
    tree: &'a Tree,
    explicand: &'a [f64],
    baseline: &'a [f64],
    w: &'a WeightVector,
    binom: &'a BinomTable,
    ef_seen: Vec<u32>,
    bf_seen: Vec<u32>,
    phi: Vec<f64>,
}

impl Recursion<'_> {
    fn recurse(&mut self, idx: usize, s_p: usize, n_p: usize) -> (f64, f64) {
        let (feature, threshold, left, right) = match self.tree.nodes[idx] {
            TreeNode::Leaf { value } => {
                let sums = case_sums_with_table(s_p, n_p, value, self.w, self.binom);
                return (sums.pos, sums.neg);
            }
            TreeNode::Split {
                feature,
                threshold,
                left,
                right,
            } => (feature, threshold, left, right),
        };
        let e_child = if self.explicand[feature] < threshold {
            left
        } else {
            right
        };
        let b_child = if self.baseline[feature] < threshold {
            left
        } else {
            right
        };
        if self.ef_seen[feature] > 0 {
            return self.recurse(e_child, s_p, n_p);
        }
        if self.bf_seen[feature] > 0 {
            return self.recurse(b_child, s_p, n_p);
        }
        if e_child == b_child {
            return self.recurse(e_child, s_p, n_p);
        }
        self.ef_seen[feature] += 1;
        let (pos_e, neg_e) = self.recurse(e_child, s_p + 1, n_p);
        self.ef_seen[feature] -= 1;

        self.bf_seen[feature] += 1;
        let (pos_b, neg_b) = self.recurse(b_child, s_p, n_p + 1);
        self.bf_seen[feature] -= 1;

        self.phi[feature] += pos_e + neg_b;
        (pos_e + pos_b, neg_e + neg_b)
    }
}

/// Exact probabilistic values of the interventional game induced by
/// `ensemble`, `explicand` and `baselines`, averaged over trees and baselines.
pub fn tree_prob_values(
    ensemble: &TreeEnsemble,
    explicand: &[f64],
    baselines: &[Vec<f64>],
    w: &WeightVector,
) -> Result<Vec<f64>, TreeError> {
    ensemble.validate()?;
    let n = ensemble.n_features;
    if explicand.len() != n {
        return Err(TreeError::DimensionMismatch {
            expected: n,
            got: explicand.len(),
        });
    }
    if baselines.is_empty() {
        return Err(TreeError::NoBaselines);
    }
    for b in baselines {
        if b.len() != n {
            return Err(TreeError::DimensionMismatch {
                expected: n,
                got: b.len(),
            });
        }
    }
    if w.n() != n {
        return Err(TreeError::WeightMismatch {
            weights: w.n(),
            game: n,
        });
    }
    let binom = BinomTable::new(n);
    let mut phi = vec![0.0; n];
    for tree in &ensemble.trees {
        for baseline in baselines {
            let mut rec = Recursion {
                tree,
                explicand,
                baseline,
                w,
                binom: &binom,
                ef_seen: vec![0; n],
                bf_seen: vec![0; n],
                phi: vec![0.0; n],
            };
            rec.recurse(tree.root, 0, 0);
            for (acc, part) in phi.iter_mut().zip(rec.phi) {
                *acc += part;
            }
        }
    }
    let scale = (ensemble.trees.len() * baselines.len()) as f64;
    for v in &mut phi {
        *v /= scale;
    }
    Ok(phi)
}

/// The enumeration oracle: the defining sum
/// `phi_i = sum_{S not containing i} p_{|S|} [v(S + i) - v(S)]`
/// evaluated over all `2^n` subsets with every value cached once.
pub fn brute_force_values(game: &dyn Game, w: &WeightVector) -> Result<Vec<f64>, TreeError> {
    let n = game.player_count();
    if n > MAX_BRUTE_FORCE {
        return Err(TreeError::TooManyPlayers(n));
    }
    if w.n() != n {
        return Err(TreeError::WeightMismatch {
            weights: w.n(),
            game: n,
        });
    }
    let values: Vec<f64> = enumerate_subsets(n)
        .expect("n <= 20")
        .map(|s| game.evaluate(&s))
        .collect();
    let mut phi = vec![0.0; n];
    for bits in 0..1u64 << n {
        let set = Subset::from_bits(bits as u128);
        let p = w.p(set.len() as i64);
        let base = values[bits as usize];
        for i in 0..n {
            if !set.contains(i) {
                phi[i] += p * (values[(bits | 1 << i) as usize] - base);
            }
        }
    }
    Ok(phi)
}
