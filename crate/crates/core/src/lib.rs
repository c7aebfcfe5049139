//! Exact and budgeted estimation of probabilistic values — Shapley, Banzhaf,
//! beta-Shapley and weighted Banzhaf — for black-box set value functions.
//!
//! The pieces fit together as follows: [`weights`] builds the size-weight
//! vectors every method shares; [`sampling`] supplies coalitions and the
//! size-stratified distributions estimators draw from; [`games`] defines the
//! value-function contract and concrete interventional/synthetic games;
//! [`treeprob`] computes exact values of tree ensembles and houses the
//! enumeration oracle; [`regress`] fits the linear and gradient-boosted
//! surrogates; [`estimators`] implements the budgeted estimators, centered on
//! regression-adjusted maximum sample reuse; [`harness`] runs reproducible
//! benchmark sweeps.

pub mod estimators;
pub mod games;
pub mod harness;
mod numeric;
pub mod regress;
pub mod sampling;
pub mod treeprob;
pub mod weights;

pub use estimators::{EstimateReport, EstimatorSpec};
pub use games::{Game, GameConfig, GameInstance};
pub use harness::{BenchmarkConfig, BenchmarkRecord, BudgetSpec};
pub use sampling::Subset;
pub use treeprob::TreeEnsemble;
pub use weights::{make_weights, WeightFamily, WeightVector};
