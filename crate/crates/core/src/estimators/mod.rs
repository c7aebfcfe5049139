//! Budgeted estimators of probabilistic values.
//!
//! Every estimator takes a black-box game, a weight vector, an evaluation
//! budget `m` and a seed, wraps the game in a counting cache, and returns an
//! `EstimateReport`. Identical inputs produce identical reports (modulo wall
//! time); distinct evaluations never exceed the budget.

mod kernel;
mod mc;
mod msr;
mod regmsr;

pub use kernel::{kernel_shap, kernel_shap_exhaustive, leverage_shap, leverage_shap_exhaustive};
pub use mc::{monte_carlo, monte_carlo_exhaustive, permutation, wsl};
pub use msr::{arm, msr, msr_exhaustive};
pub use regmsr::{
    regression_msr, regression_msr_detailed, DistributionChoice, RegressionMsrConfig,
    RegressionMsrRun, SurrogateSpec,
};

use std::time::Instant;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::games::{CountingGame, Game};
use crate::regress::{GbtConfig, RegressError};
use crate::sampling::SamplingError;
use crate::weights::{WeightError, WeightFamily, WeightVector};

#[derive(Debug, Error)]
pub enum EstimatorError {
    #[error("budget {budget} too small for {estimator}: needs at least {minimum}")]
    BudgetTooSmall {
        estimator: &'static str,
        budget: usize,
        minimum: usize,
    },
    #[error("weight vector is for {weights} players but the game has {game}")]
    PlayerMismatch { weights: usize, game: usize },
    #[error("sampled a subset of size {0} with zero density; distribution is misconfigured")]
    ZeroDensity(usize),
    #[error("{estimator} supports Shapley weights only")]
    ShapleyOnly { estimator: &'static str },
    #[error("exhaustive mode supports at most {max} players, got {got}")]
    TooManyPlayers { max: usize, got: usize },
    #[error("fold of {got} training samples is too small to fit {model}")]
    FoldTooSmall { model: &'static str, got: usize },
    #[error("{0}")]
    InvalidInput(String),
    #[error(transparent)]
    Sampling(#[from] SamplingError),
    #[error(transparent)]
    Weights(#[from] WeightError),
    #[error(transparent)]
    Regress(#[from] RegressError),
}

/// Per-player estimates plus budget accounting for one estimator run.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EstimateReport {
    pub estimates: Vec<f64>,
    /// Distinct value-function evaluations performed.
    pub evaluations_used: usize,
    pub estimator: String,
    pub config: serde_json::Value,
    pub seed: u64,
    pub wall_time_ms: f64,
}

/// Counting wrapper plus timer shared by all estimator bodies.
pub(crate) struct RunContext<'a> {
    pub counting: CountingGame<'a>,
    start: Instant,
}

impl<'a> RunContext<'a> {
    pub(crate) fn new(game: &'a dyn Game) -> Self {
        RunContext {
            counting: CountingGame::new(game),
            start: Instant::now(),
        }
    }

    pub(crate) fn finish(
        self,
        estimator: &str,
        config: serde_json::Value,
        seed: u64,
        estimates: Vec<f64>,
    ) -> EstimateReport {
        EstimateReport {
            estimates,
            evaluations_used: self.counting.calls(),
            estimator: estimator.to_string(),
            config,
            seed,
            wall_time_ms: self.start.elapsed().as_secs_f64() * 1e3,
        }
    }
}

pub(crate) fn check_players(game: &dyn Game, w: &WeightVector) -> Result<(), EstimatorError> {
    if game.player_count() != w.n() {
        Err(EstimatorError::PlayerMismatch {
            weights: w.n(),
            game: game.player_count(),
        })
    } else {
        Ok(())
    }
}

fn default_folds() -> usize {
    10
}

fn default_true() -> bool {
    true
}

/// A named estimator configuration, as it appears in benchmark configs and on
/// the command line.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(tag = "name", rename_all = "snake_case")]
pub enum EstimatorSpec {
    MonteCarlo,
    Wsl,
    Permutation,
    Msr {
        #[serde(default = "default_true")]
        replacement: bool,
    },
    Arm,
    KernelShap,
    LeverageShap,
    LinearMsr {
        #[serde(default = "default_folds")]
        k: usize,
        #[serde(default)]
        practical: bool,
    },
    TreeMsr {
        #[serde(default = "default_folds")]
        k: usize,
        #[serde(default)]
        practical: bool,
        #[serde(default)]
        gbt: GbtConfig,
    },
}

impl EstimatorSpec {
    /// Parse a bare estimator name with default parameters.
    pub fn from_name(name: &str) -> Option<Self> {
        let spec = match name {
            "monte_carlo" => EstimatorSpec::MonteCarlo,
            "wsl" => EstimatorSpec::Wsl,
            "permutation" => EstimatorSpec::Permutation,
            "msr" => EstimatorSpec::Msr { replacement: true },
            "arm" => EstimatorSpec::Arm,
            "kernel_shap" => EstimatorSpec::KernelShap,
            "leverage_shap" => EstimatorSpec::LeverageShap,
            "linear_msr" => EstimatorSpec::LinearMsr {
                k: default_folds(),
                practical: false,
            },
            "tree_msr" => EstimatorSpec::TreeMsr {
                k: default_folds(),
                practical: false,
                gbt: GbtConfig::default(),
            },
            _ => return None,
        };
        Some(spec)
    }

    pub fn id(&self) -> &'static str {
        match self {
            EstimatorSpec::MonteCarlo => "monte_carlo",
            EstimatorSpec::Wsl => "wsl",
            EstimatorSpec::Permutation => "permutation",
            EstimatorSpec::Msr { .. } => "msr",
            EstimatorSpec::Arm => "arm",
            EstimatorSpec::KernelShap => "kernel_shap",
            EstimatorSpec::LeverageShap => "leverage_shap",
            EstimatorSpec::LinearMsr { .. } => "linear_msr",
            EstimatorSpec::TreeMsr { .. } => "tree_msr",
        }
    }

    pub fn run(
        &self,
        game: &dyn Game,
        w: &WeightVector,
        budget: usize,
        seed: u64,
    ) -> Result<EstimateReport, EstimatorError> {
        let shapley_only = |estimator| {
            if w.family() == WeightFamily::Shapley {
                Ok(())
            } else {
                Err(EstimatorError::ShapleyOnly { estimator })
            }
        };
        match self {
            EstimatorSpec::MonteCarlo => monte_carlo(game, w, budget, None, seed),
            EstimatorSpec::Wsl => wsl(game, w, budget, seed),
            EstimatorSpec::Permutation => permutation(game, w, budget, seed),
            EstimatorSpec::Msr { replacement } => msr(game, w, budget, None, *replacement, seed),
            EstimatorSpec::Arm => arm(game, w, budget, seed),
            EstimatorSpec::KernelShap => {
                shapley_only("kernel_shap")?;
                kernel_shap(game, budget, seed)
            }
            EstimatorSpec::LeverageShap => {
                shapley_only("leverage_shap")?;
                leverage_shap(game, budget, seed)
            }
            EstimatorSpec::LinearMsr { k, practical } => {
                let mut cfg = RegressionMsrConfig::linear_msr(w.family());
                cfg.folds = *k;
                cfg.practical = *practical;
                regression_msr(game, w, budget, &cfg, seed)
            }
            EstimatorSpec::TreeMsr { k, practical, gbt } => {
                let mut cfg = RegressionMsrConfig::tree_msr();
                cfg.folds = *k;
                cfg.practical = *practical;
                cfg.model = SurrogateSpec::Gbt(gbt.clone());
                regression_msr(game, w, budget, &cfg, seed)
            }
        }
    }
}
