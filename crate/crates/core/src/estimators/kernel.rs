//! Constrained-regression Shapley estimators. Both solve the weighted least
//! squares problem over membership rows whose exact solution is the Shapley
//! vector, anchored so the coefficients sum to `v(full) - v(empty)`. They
//! differ only in how the non-trivial rows are sampled: kernel weighting
//! versus the exact row-leverage law of the weighted design.

use serde_json::json;

use super::{EstimateReport, EstimatorError, RunContext};
use crate::games::Game;
use crate::numeric::{ln_binomial, log_sum_exp};
use crate::regress::{fit_constrained_linear, FittedFunction, WeightedSample};
use crate::sampling::{enumerate_subsets, sample_subsets, SizeDistribution, Subset};
use crate::treeprob::MAX_BRUTE_FORCE;

/// `ln w(S)` for `|S| = s`: the kernel weight `(n-1) / (C(n,s) s (n-s))`.
fn ln_kernel_weight(n: usize, s: usize) -> f64 {
    ((n - 1) as f64).ln() - ln_binomial(n, s) - (s as f64).ln() - ((n - s) as f64).ln()
}

/// Size law proportional to the total kernel weight per size, `1 / (s(n-s))`.
fn kernel_size_distribution(n: usize) -> SizeDistribution {
    let raw = (0..=n)
        .map(|s| {
            if s == 0 || s == n {
                f64::NEG_INFINITY
            } else {
                -((s as f64).ln() + ((n - s) as f64).ln())
            }
        })
        .collect();
    SizeDistribution::from_log_weights(n, raw)
}

/// Per-size statistical leverage of the kernel-weighted design. The Gram
/// matrix is `a I + b 11^T` by permutation symmetry, so Sherman-Morrison
/// gives `tau_s = w_s (s/a)(1 - b s / (a + n b))` without any enumeration.
pub(crate) fn shapley_leverage_sizes(n: usize) -> Vec<f64> {
    assert!(n >= 2);
    let diag_terms: Vec<f64> = (1..n)
        .map(|s| ln_kernel_weight(n, s) + ln_binomial(n - 1, s - 1))
        .collect();
    let off_terms: Vec<f64> = (2..n)
        .map(|s| ln_kernel_weight(n, s) + ln_binomial(n - 2, s - 2))
        .collect();
    let d = log_sum_exp(&diag_terms).exp();
    let o = if off_terms.is_empty() {
        0.0
    } else {
        log_sum_exp(&off_terms).exp()
    };
    let a = d - o;
    let b = o;
    let mut taus = vec![0.0; n + 1];
    for (s, tau) in taus.iter_mut().enumerate().take(n).skip(1) {
        let w = ln_kernel_weight(n, s).exp();
        *tau = w * (s as f64 / a) * (1.0 - b * s as f64 / (a + n as f64 * b));
    }
    taus
}

/// Size law of exact leverage-score sampling: `P(|S| = s) = C(n,s) tau_s / n`.
fn leverage_size_distribution(n: usize) -> SizeDistribution {
    let taus = shapley_leverage_sizes(n);
    let raw = (0..=n)
        .map(|s| {
            if taus[s] == 0.0 {
                f64::NEG_INFINITY
            } else {
                ln_binomial(n, s) + taus[s].ln()
            }
        })
        .collect();
    SizeDistribution::from_log_weights(n, raw)
}

/// How the non-trivial rows of the regression are drawn and reweighted.
struct RowPlan {
    law: SizeDistribution,
    /// `ln` of the per-size factor dividing the kernel weight in the solve
    /// (up to a constant): zero for kernel sampling, `ln tau_s` for leverage.
    ln_scale: Vec<f64>,
}

/// Shared body: evaluate the anchors, sample `m - 2` non-trivial rows, weight
/// each row by `w(S) / scale(|S|)`, and solve the anchored regression. The
/// anchor constraint makes the estimates satisfy efficiency exactly.
fn constrained_estimator(
    game: &dyn Game,
    budget: usize,
    seed: u64,
    estimator: &'static str,
    plan: impl Fn(usize) -> RowPlan,
) -> Result<EstimateReport, EstimatorError> {
    let n = game.player_count();
    if budget < n + 2 {
        return Err(EstimatorError::BudgetTooSmall {
            estimator,
            budget,
            minimum: n + 2,
        });
    }
    let ctx = RunContext::new(game);
    let v_empty = ctx.counting.evaluate(&Subset::empty());
    let v_full = ctx.counting.evaluate(&Subset::full(n));
    let anchor = v_full - v_empty;
    let config = json!({ "budget": budget });
    if n == 1 {
        return Ok(ctx.finish(estimator, config, seed, vec![anchor]));
    }
    let plan = plan(n);
    let batch = sample_subsets(&plan.law, budget - 2, true, seed)?;
    let samples: Vec<WeightedSample> = batch
        .subsets
        .iter()
        .map(|&set| WeightedSample {
            set,
            target: ctx.counting.evaluate(&set),
            weight: (ln_kernel_weight(n, set.len()) - plan.ln_scale[set.len()]).exp(),
        })
        .collect();
    let fit = fit_constrained_linear(&samples, anchor, v_empty, n)?;
    let FittedFunction::Linear { coeffs, .. } = fit else {
        unreachable!("constrained fit is linear")
    };
    Ok(ctx.finish(estimator, config, seed, coeffs))
}

/// Kernel-weighted subsampled regression: rows drawn proportional to their
/// kernel weight and solved with the same weights.
pub fn kernel_shap(
    game: &dyn Game,
    budget: usize,
    seed: u64,
) -> Result<EstimateReport, EstimatorError> {
    constrained_estimator(game, budget, seed, "kernel_shap", |n| RowPlan {
        law: kernel_size_distribution(n),
        ln_scale: vec![0.0; n + 1],
    })
}

/// Leverage-score sampled regression: rows drawn from the exact leverage law
/// and reweighted by `w(S) / tau(S)` so the sketch targets the full problem.
pub fn leverage_shap(
    game: &dyn Game,
    budget: usize,
    seed: u64,
) -> Result<EstimateReport, EstimatorError> {
    constrained_estimator(game, budget, seed, "leverage_shap", |n| {
        let taus = shapley_leverage_sizes(n);
        let ln_scale = taus
            .iter()
            .map(|&t| if t > 0.0 { t.ln() } else { 0.0 })
            .collect();
        RowPlan {
            law: leverage_size_distribution(n),
            ln_scale,
        }
    })
}

/// Solve with every non-trivial row present exactly once at its kernel
/// weight; the exact solution of the regression, equal to the Shapley values.
fn constrained_exhaustive(
    game: &dyn Game,
    estimator: &'static str,
) -> Result<EstimateReport, EstimatorError> {
    let n = game.player_count();
    if n > MAX_BRUTE_FORCE {
        return Err(EstimatorError::TooManyPlayers {
            max: MAX_BRUTE_FORCE,
            got: n,
        });
    }
    let ctx = RunContext::new(game);
    let v_empty = ctx.counting.evaluate(&Subset::empty());
    let v_full = ctx.counting.evaluate(&Subset::full(n));
    let anchor = v_full - v_empty;
    let config = json!({ "exhaustive": true });
    if n == 1 {
        return Ok(ctx.finish(estimator, config, 0, vec![anchor]));
    }
    let samples: Vec<WeightedSample> = enumerate_subsets(n)?
        .filter(|s| !s.is_empty() && s.len() < n)
        .map(|set| WeightedSample {
            set,
            target: ctx.counting.evaluate(&set),
            weight: ln_kernel_weight(n, set.len()).exp(),
        })
        .collect();
    let fit = fit_constrained_linear(&samples, anchor, v_empty, n)?;
    let FittedFunction::Linear { coeffs, .. } = fit else {
        unreachable!()
    };
    Ok(ctx.finish(estimator, config, 0, coeffs))
}

pub fn kernel_shap_exhaustive(game: &dyn Game) -> Result<EstimateReport, EstimatorError> {
    constrained_exhaustive(game, "kernel_shap_exhaustive")
}

pub fn leverage_shap_exhaustive(game: &dyn Game) -> Result<EstimateReport, EstimatorError> {
    constrained_exhaustive(game, "leverage_shap_exhaustive")
}
