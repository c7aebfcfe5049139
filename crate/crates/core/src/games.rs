//! Black-box set value functions.
//!
//! A `Game` maps coalitions to reals. The concrete games here are
//! interventional feature attribution for linear models and tree ensembles
//! (the model is evaluated on a hybrid point that takes explicand coordinates
//! for members and baseline coordinates for everyone else), synthetic games
//! for benchmarks, and wrappers that add evaluation counting, caching, and
//! optional Gaussian noise.

use std::collections::HashMap;
use std::sync::Mutex;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::numeric::stable_mix;
use crate::sampling::Subset;
use crate::treeprob::{Tree, TreeEnsemble, TreeError, TreeNode};

#[derive(Debug, Error)]
pub enum GameError {
    #[error("length mismatch: {0}")]
    LengthMismatch(String),
    #[error("noise standard deviation must be nonnegative, got {0}")]
    NegativeSigma(f64),
    #[error(transparent)]
    Tree(#[from] TreeError),
    #[error("at least one baseline is required")]
    NoBaselines,
}

/// A value function `v: 2^[n] -> R`. Implementations must be deterministic
/// for a fixed instance and defined on every subset including the empty and
/// full coalitions.
pub trait Game: Send + Sync {
    fn player_count(&self) -> usize;
    fn evaluate(&self, set: &Subset) -> f64;
}

impl<G: Game + ?Sized> Game for &G {
    fn player_count(&self) -> usize {
        (**self).player_count()
    }
    fn evaluate(&self, set: &Subset) -> f64 {
        (**self).evaluate(set)
    }
}

/// The model behind an interventional game.
#[derive(Debug, Clone)]
pub enum PredictiveModel {
    Linear { intercept: f64, coeffs: Vec<f64> },
    Tree(TreeEnsemble),
}

impl PredictiveModel {
    pub fn n_features(&self) -> usize {
        match self {
            PredictiveModel::Linear { coeffs, .. } => coeffs.len(),
            PredictiveModel::Tree(ens) => ens.n_features,
        }
    }

    pub fn predict(&self, x: &[f64]) -> f64 {
        match self {
            PredictiveModel::Linear { intercept, coeffs } => {
                intercept + coeffs.iter().zip(x).map(|(c, v)| c * v).sum::<f64>()
            }
            PredictiveModel::Tree(ens) => ens.predict(x),
        }
    }
}

/// The point whose coordinate `i` comes from `explicand` when `i` is in `set`
/// and from `baseline` otherwise.
pub fn hybrid_point(explicand: &[f64], baseline: &[f64], set: &Subset) -> Vec<f64> {
    explicand
        .iter()
        .zip(baseline)
        .enumerate()
        .map(|(i, (e, b))| if set.contains(i) { *e } else { *b })
        .collect()
}

/// Interventional feature attribution: `v(S)` is the model prediction on the
/// hybrid point, averaged over the configured baselines.
#[derive(Debug, Clone)]
pub struct InterventionalGame {
    pub model: PredictiveModel,
    pub explicand: Vec<f64>,
    pub baselines: Vec<Vec<f64>>,
}

impl InterventionalGame {
    pub fn new(
        model: PredictiveModel,
        explicand: Vec<f64>,
        baselines: Vec<Vec<f64>>,
    ) -> Result<Self, GameError> {
        let d = model.n_features();
        if explicand.len() != d {
            return Err(GameError::LengthMismatch(format!(
                "explicand has {} coordinates, model expects {d}",
                explicand.len()
            )));
        }
        if baselines.is_empty() {
            return Err(GameError::NoBaselines);
        }
        for b in &baselines {
            if b.len() != d {
                return Err(GameError::LengthMismatch(format!(
                    "baseline has {} coordinates, model expects {d}",
                    b.len()
                )));
            }
        }
        if let PredictiveModel::Tree(ens) = &model {
            ens.validate()?;
        }
        Ok(InterventionalGame {
            model,
            explicand,
            baselines,
        })
    }
}

impl Game for InterventionalGame {
    fn player_count(&self) -> usize {
        self.explicand.len()
    }

    fn evaluate(&self, set: &Subset) -> f64 {
        let total: f64 = self
            .baselines
            .iter()
            .map(|b| self.model.predict(&hybrid_point(&self.explicand, b, set)))
            .sum();
        total / self.baselines.len() as f64
    }
}

/// Linear interventional game with a single baseline.
pub fn linear_game(
    intercept: f64,
    coeffs: Vec<f64>,
    explicand: Vec<f64>,
    baseline: Vec<f64>,
) -> Result<InterventionalGame, GameError> {
    InterventionalGame::new(
        PredictiveModel::Linear { intercept, coeffs },
        explicand,
        vec![baseline],
    )
}

/// Tree-ensemble interventional game with a single baseline.
pub fn tree_game(
    ensemble: TreeEnsemble,
    explicand: Vec<f64>,
    baseline: Vec<f64>,
) -> Result<InterventionalGame, GameError> {
    InterventionalGame::new(PredictiveModel::Tree(ensemble), explicand, vec![baseline])
}

/// A game given by an explicit table of `2^n` values, indexed by bitmask.
#[derive(Debug, Clone)]
pub struct TableGame {
    n: usize,
    values: Vec<f64>,
}

impl TableGame {
    pub fn new(n: usize, values: Vec<f64>) -> Self {
        assert_eq!(values.len(), 1 << n);
        TableGame { n, values }
    }

    pub fn from_fn(n: usize, f: impl Fn(&Subset) -> f64) -> Self {
        let values = (0..1u64 << n)
            .map(|bits| f(&Subset::from_bits(bits as u128)))
            .collect();
        TableGame { n, values }
    }
}

impl Game for TableGame {
    fn player_count(&self) -> usize {
        self.n
    }
    fn evaluate(&self, set: &Subset) -> f64 {
        self.values[set.bits() as usize]
    }
}

/// A linear game over membership bits plus fixed pairwise interaction terms.
#[derive(Debug, Clone)]
pub struct LinearInteractionGame {
    pub intercept: f64,
    pub coeffs: Vec<f64>,
    pub interactions: Vec<(usize, usize, f64)>,
}

impl Game for LinearInteractionGame {
    fn player_count(&self) -> usize {
        self.coeffs.len()
    }

    fn evaluate(&self, set: &Subset) -> f64 {
        let mut v = self.intercept;
        for (i, c) in self.coeffs.iter().enumerate() {
            if set.contains(i) {
                v += c;
            }
        }
        for &(i, j, c) in &self.interactions {
            if set.contains(i) && set.contains(j) {
                v += c;
            }
        }
        v
    }
}

/// A concrete game the harness knows how to compute ground truth for.
#[derive(Debug, Clone)]
pub enum GameInstance {
    Interventional(InterventionalGame),
    Table(TableGame),
    LinearInteraction(LinearInteractionGame),
}

impl Game for GameInstance {
    fn player_count(&self) -> usize {
        match self {
            GameInstance::Interventional(g) => g.player_count(),
            GameInstance::Table(g) => g.player_count(),
            GameInstance::LinearInteraction(g) => g.player_count(),
        }
    }

    fn evaluate(&self, set: &Subset) -> f64 {
        match self {
            GameInstance::Interventional(g) => g.evaluate(set),
            GameInstance::Table(g) => g.evaluate(set),
            GameInstance::LinearInteraction(g) => g.evaluate(set),
        }
    }
}

/// Kinds of synthetic games for desk-scale benchmarks.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RandomGameKind {
    Linear,
    Forest,
    LinearPlusNoise,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default)]
pub struct RandomGameParams {
    /// Trees in a `forest` game.
    pub trees: usize,
    /// Maximum tree depth in a `forest` game.
    pub max_depth: usize,
    /// Number of pairwise interaction terms in `linear_plus_noise`.
    pub interaction_pairs: usize,
    /// Magnitude of the interaction coefficients.
    pub interaction_scale: f64,
}

impl Default for RandomGameParams {
    fn default() -> Self {
        RandomGameParams {
            trees: 5,
            max_depth: 4,
            interaction_pairs: 6,
            interaction_scale: 0.25,
        }
    }
}

fn random_tree(rng: &mut ChaCha8Rng, d: usize, depth: usize) -> Tree {
    fn grow(rng: &mut ChaCha8Rng, nodes: &mut Vec<TreeNode>, d: usize, depth: usize) -> usize {
        if depth == 0 || rng.random_bool(0.2) {
            nodes.push(TreeNode::Leaf {
                value: rng.random_range(-2.0..2.0),
            });
            return nodes.len() - 1;
        }
        let feature = rng.random_range(0..d);
        let idx = nodes.len();
        nodes.push(TreeNode::Leaf { value: 0.0 });
        let left = grow(rng, nodes, d, depth - 1);
        let right = grow(rng, nodes, d, depth - 1);
        nodes[idx] = TreeNode::Split {
            feature,
            // Binary-separable: thresholds inside (0,1) split 0/1 coordinates.
            threshold: rng.random_range(0.25..0.75),
            left,
            right,
        };
        idx
    }
    let mut nodes = Vec::new();
    let root = grow(rng, &mut nodes, d, depth);
    Tree { root, nodes }
}

/// Deterministic synthetic game for `seed`. `forest` games use an all-ones
/// explicand against an all-zeros baseline so membership drives the splits.
pub fn random_game(
    kind: RandomGameKind,
    n: usize,
    seed: u64,
    params: &RandomGameParams,
) -> GameInstance {
    assert!(n >= 1);
    let mut rng = ChaCha8Rng::seed_from_u64(stable_mix(&[seed, kind as u64]));
    match kind {
        RandomGameKind::Linear => {
            let coeffs: Vec<f64> = (0..n).map(|_| rng.random_range(-2.0..2.0)).collect();
            let intercept = rng.random_range(-1.0..1.0);
            GameInstance::Interventional(
                linear_game(intercept, coeffs, vec![1.0; n], vec![0.0; n]).unwrap(),
            )
        }
        RandomGameKind::Forest => {
            let trees = (0..params.trees.max(1))
                .map(|_| random_tree(&mut rng, n, params.max_depth))
                .collect();
            let ensemble = TreeEnsemble::new(n, trees);
            GameInstance::Interventional(tree_game(ensemble, vec![1.0; n], vec![0.0; n]).unwrap())
        }
        RandomGameKind::LinearPlusNoise => {
            let coeffs: Vec<f64> = (0..n).map(|_| rng.random_range(-2.0..2.0)).collect();
            let intercept = rng.random_range(-1.0..1.0);
            let interactions = (0..params.interaction_pairs)
                .map(|_| {
                    let i = rng.random_range(0..n);
                    let j = rng.random_range(0..n);
                    let c = rng.random_range(-params.interaction_scale..params.interaction_scale);
                    (i, j, c)
                })
                .collect();
            GameInstance::LinearInteraction(LinearInteractionGame {
                intercept,
                coeffs,
                interactions,
            })
        }
    }
}

/// Adds `N(0, sigma^2)` noise to every value. The draw for a subset depends
/// only on `(seed, subset)`, so repeated queries are consistent regardless of
/// query order; with `fresh_per_call` the memo contract is dropped and every
/// call re-draws.
pub struct NoisyGame<'a> {
    inner: &'a dyn Game,
    sigma: f64,
    seed: u64,
    fresh_per_call: bool,
    fresh_rng: Mutex<ChaCha8Rng>,
}

impl<'a> NoisyGame<'a> {
    pub fn new(inner: &'a dyn Game, sigma: f64, seed: u64) -> Result<Self, GameError> {
        if sigma.is_nan() || sigma < 0.0 {
            return Err(GameError::NegativeSigma(sigma));
        }
        Ok(NoisyGame {
            inner,
            sigma,
            seed,
            fresh_per_call: false,
            fresh_rng: Mutex::new(ChaCha8Rng::seed_from_u64(seed)),
        })
    }

    /// Re-draw noise on every call instead of memoizing per subset.
    pub fn with_fresh_noise(mut self) -> Self {
        self.fresh_per_call = true;
        self
    }
}

impl Game for NoisyGame<'_> {
    fn player_count(&self) -> usize {
        self.inner.player_count()
    }

    fn evaluate(&self, set: &Subset) -> f64 {
        let clean = self.inner.evaluate(set);
        if self.sigma == 0.0 {
            return clean;
        }
        let z: f64 = if self.fresh_per_call {
            self.fresh_rng.lock().unwrap().sample(StandardNormal)
        } else {
            let bits = set.bits();
            let s = stable_mix(&[self.seed, bits as u64, (bits >> 64) as u64]);
            ChaCha8Rng::seed_from_u64(s).sample(StandardNormal)
        };
        clean + self.sigma * z
    }
}

/// Counts distinct evaluations and replays cached values bit-identically.
pub struct CountingGame<'a> {
    inner: &'a dyn Game,
    cache: Mutex<HashMap<u128, f64>>,
}

impl<'a> CountingGame<'a> {
    pub fn new(inner: &'a dyn Game) -> Self {
        CountingGame {
            inner,
            cache: Mutex::new(HashMap::new()),
        }
    }

    /// Number of distinct subsets evaluated so far (cache misses).
    pub fn calls(&self) -> usize {
        self.cache.lock().unwrap().len()
    }
}

impl Game for CountingGame<'_> {
    fn player_count(&self) -> usize {
        self.inner.player_count()
    }

    fn evaluate(&self, set: &Subset) -> f64 {
        let mut cache = self.cache.lock().unwrap();
        if let Some(&v) = cache.get(&set.bits()) {
            return v;
        }
        let v = self.inner.evaluate(set);
        cache.insert(set.bits(), v);
        v
    }
}

pub fn with_noise(game: &dyn Game, sigma: f64, seed: u64) -> Result<NoisyGame<'_>, GameError> {
    NoisyGame::new(game, sigma, seed)
}

pub fn with_counting(game: &dyn Game) -> CountingGame<'_> {
    CountingGame::new(game)
}

/// On-disk description of an interventional game.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum GameConfig {
    Tree {
        model: TreeEnsemble,
        explicand: Vec<f64>,
        baselines: Vec<Vec<f64>>,
    },
    Linear {
        model: LinearModelConfig,
        explicand: Vec<f64>,
        baselines: Vec<Vec<f64>>,
    },
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct LinearModelConfig {
    pub intercept: f64,
    pub coeffs: Vec<f64>,
}

impl GameConfig {
    pub fn build(self) -> Result<GameInstance, GameError> {
        let game = match self {
            GameConfig::Tree {
                model,
                explicand,
                baselines,
            } => InterventionalGame::new(PredictiveModel::Tree(model), explicand, baselines)?,
            GameConfig::Linear {
                model,
                explicand,
                baselines,
            } => InterventionalGame::new(
                PredictiveModel::Linear {
                    intercept: model.intercept,
                    coeffs: model.coeffs,
                },
                explicand,
                baselines,
            )?,
        };
        Ok(GameInstance::Interventional(game))
    }
}
