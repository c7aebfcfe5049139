//! Regression-adjusted maximum sample reuse.
//!
//! One batch of subsets is drawn and evaluated once. In the unbiased variant
//! the batch is randomly partitioned into `k` folds; for each fold a
//! surrogate is fit on the other folds' samples, its probabilistic values are
//! computed exactly, and the fold's samples correct the surrogate through the
//! reuse coefficients applied to residuals. The final estimate averages the
//! `k` fold estimates. The practical variant fits a single surrogate on all
//! samples and corrects on the same samples: faster and usually more
//! accurate, at the price of a small bias.

use rand::seq::SliceRandom;
use serde_json::json;

use super::msr::reuse_ratios;
use super::{check_players, EstimateReport, EstimatorError, RunContext};
use crate::games::Game;
use crate::numeric::{ln_binomial, stable_mix};
use crate::regress::{
    exact_prob_values, fit_constrained_linear, fit_gbt, fit_linear, FittedFunction, GbtConfig,
    WeightedSample,
};
use crate::sampling::{
    default_msr_distribution, rng_from_seed, sample_subsets, SizeDistribution, Subset,
};
use crate::weights::{WeightFamily, WeightVector};

/// Surrogate family fit to the sampled values.
#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SurrogateSpec {
    /// Plain least squares on membership bits.
    Linear,
    /// Constrained least squares anchored at `v(full) - v(empty)`, fit with
    /// kernel weights importance-corrected for the sampling law. The anchors
    /// are evaluated exactly (two budget units), which pins the surrogate's
    /// residuals at the trivial coalitions to zero.
    AnchoredLinear,
    Gbt(GbtConfig),
}

impl SurrogateSpec {
    fn name(&self) -> &'static str {
        match self {
            SurrogateSpec::Linear => "linear",
            SurrogateSpec::AnchoredLinear => "anchored_linear",
            SurrogateSpec::Gbt(_) => "gbt",
        }
    }
}

/// Which subset distribution the batch is drawn from.
#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DistributionChoice {
    /// The variance-minimizing default for the given weights.
    MsrDefault,
    /// Uniform over all subsets.
    UniformSubsets,
    /// The exact leverage law of the Shapley kernel design (non-trivial
    /// sizes only; pair with an anchored surrogate).
    ShapleyLeverage,
    /// Explicit size probabilities, length `n + 1`.
    SizeProbs(Vec<f64>),
}

impl DistributionChoice {
    fn resolve(&self, w: &WeightVector) -> Result<SizeDistribution, EstimatorError> {
        let n = w.n();
        Ok(match self {
            DistributionChoice::MsrDefault => default_msr_distribution(w),
            DistributionChoice::UniformSubsets => SizeDistribution::uniform_subsets(n),
            DistributionChoice::ShapleyLeverage => {
                if n < 2 {
                    return Err(EstimatorError::InvalidInput(
                        "leverage sampling needs at least 2 players".into(),
                    ));
                }
                let taus = super::kernel::shapley_leverage_sizes(n);
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
            DistributionChoice::SizeProbs(probs) => SizeDistribution::from_size_probs(n, probs)?,
        })
    }
}

#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct RegressionMsrConfig {
    /// Fold count `k` for the unbiased variant.
    pub folds: usize,
    pub model: SurrogateSpec,
    pub distribution: DistributionChoice,
    /// Single fit on all samples, corrected on the same samples (biased).
    pub practical: bool,
    /// Draw the batch with replacement.
    pub replacement: bool,
}

impl Default for RegressionMsrConfig {
    fn default() -> Self {
        RegressionMsrConfig {
            folds: 10,
            model: SurrogateSpec::Linear,
            distribution: DistributionChoice::MsrDefault,
            practical: false,
            replacement: true,
        }
    }
}

impl RegressionMsrConfig {
    /// The linear preset. For Shapley weights the surrogate is the anchored
    /// constrained fit on leverage-sampled data; other families use the plain
    /// linear fit on the default distribution.
    pub fn linear_msr(family: WeightFamily) -> Self {
        if family == WeightFamily::Shapley {
            RegressionMsrConfig {
                model: SurrogateSpec::AnchoredLinear,
                distribution: DistributionChoice::ShapleyLeverage,
                ..RegressionMsrConfig::default()
            }
        } else {
            RegressionMsrConfig::default()
        }
    }

    /// The gradient-boosted-tree preset on the default distribution.
    pub fn tree_msr() -> Self {
        RegressionMsrConfig {
            model: SurrogateSpec::Gbt(GbtConfig::default()),
            ..RegressionMsrConfig::default()
        }
    }
}

/// A finished run plus the fitted fold functions and the sampling law, for
/// error-bound diagnostics.
#[derive(Debug, Clone)]
pub struct RegressionMsrRun {
    pub report: EstimateReport,
    pub fold_functions: Vec<FittedFunction>,
    pub distribution: SizeDistribution,
}

struct Evaluated {
    set: Subset,
    value: f64,
}

fn fit_surrogate(
    model: &SurrogateSpec,
    train: &[&Evaluated],
    n: usize,
    dist: &SizeDistribution,
    anchors: Option<(f64, f64)>,
) -> Result<FittedFunction, EstimatorError> {
    match model {
        SurrogateSpec::Linear => {
            let samples: Vec<(Subset, f64)> = train.iter().map(|e| (e.set, e.value)).collect();
            Ok(fit_linear(&samples, n)?.function)
        }
        SurrogateSpec::Gbt(cfg) => {
            if train.len() < 2 {
                return Err(EstimatorError::FoldTooSmall {
                    model: "gbt",
                    got: train.len(),
                });
            }
            let samples: Vec<(Subset, f64)> = train.iter().map(|e| (e.set, e.value)).collect();
            Ok(fit_gbt(&samples, n, cfg)?.function)
        }
        SurrogateSpec::AnchoredLinear => {
            let (v_empty, v_full) = anchors.expect("anchored fit evaluates the anchors");
            let samples: Vec<WeightedSample> = train
                .iter()
                .map(|e| {
                    let s = e.set.len();
                    let ln_kernel = ((n - 1) as f64).ln()
                        - ln_binomial(n, s)
                        - (s as f64).ln()
                        - ((n - s) as f64).ln();
                    let ln_density = dist.log_density(s).expect("sampled size has mass");
                    WeightedSample {
                        set: e.set,
                        target: e.value,
                        weight: (ln_kernel - ln_density).exp(),
                    }
                })
                .collect();
            Ok(fit_constrained_linear(
                &samples,
                v_full - v_empty,
                v_empty,
                n,
            )?)
        }
    }
}

/// Run the estimator and keep the fitted fold functions.
pub fn regression_msr_detailed(
    game: &dyn Game,
    w: &WeightVector,
    budget: usize,
    cfg: &RegressionMsrConfig,
    seed: u64,
) -> Result<RegressionMsrRun, EstimatorError> {
    check_players(game, w)?;
    let n = w.n();
    let anchored = matches!(cfg.model, SurrogateSpec::AnchoredLinear);
    if anchored && w.family() != WeightFamily::Shapley {
        return Err(EstimatorError::ShapleyOnly {
            estimator: "anchored linear surrogate",
        });
    }
    if cfg.folds < 1 {
        return Err(EstimatorError::InvalidInput("folds must be >= 1".into()));
    }
    if !cfg.practical {
        if cfg.folds < 2 {
            return Err(EstimatorError::InvalidInput(
                "the unbiased variant needs at least 2 folds; set practical for a single fit"
                    .into(),
            ));
        }
        if budget < 2 * cfg.folds {
            return Err(EstimatorError::BudgetTooSmall {
                estimator: "regression_msr",
                budget,
                minimum: 2 * cfg.folds,
            });
        }
    }
    let anchor_cost = if anchored { 2 } else { 0 };
    if budget < anchor_cost + if cfg.practical { 1 } else { cfg.folds } {
        return Err(EstimatorError::BudgetTooSmall {
            estimator: "regression_msr",
            budget,
            minimum: anchor_cost + if cfg.practical { 1 } else { cfg.folds },
        });
    }
    let dist = cfg.distribution.resolve(w)?;
    let ctx = RunContext::new(game);
    let anchors = if anchored {
        Some((
            ctx.counting.evaluate(&Subset::empty()),
            ctx.counting.evaluate(&Subset::full(n)),
        ))
    } else {
        None
    };
    let sample_count = budget - anchor_cost;
    let batch = sample_subsets(&dist, sample_count, cfg.replacement, seed)?;
    let evaluated: Vec<Evaluated> = batch
        .subsets
        .iter()
        .map(|&set| Evaluated {
            set,
            value: ctx.counting.evaluate(&set),
        })
        .collect();
    let ratios = reuse_ratios(w, &dist, evaluated.iter().map(|e| e.set.len()))?;

    let correction = |fit: &FittedFunction, fold: &[&Evaluated]| -> Vec<f64> {
        let mut corr = vec![0.0; n];
        for e in fold {
            let resid = e.value - fit.predict(&e.set);
            let (member, outsider) = ratios[e.set.len()].expect("ratio precomputed");
            for (i, c) in corr.iter_mut().enumerate() {
                *c += resid * if e.set.contains(i) { member } else { outsider };
            }
        }
        for c in &mut corr {
            *c /= fold.len() as f64;
        }
        corr
    };

    let mut fold_functions = Vec::new();
    let mut estimates = vec![0.0; n];
    if cfg.practical {
        let all: Vec<&Evaluated> = evaluated.iter().collect();
        let fit = fit_surrogate(&cfg.model, &all, n, &dist, anchors)?;
        let phi = exact_prob_values(&fit, w).map_err(tree_error)?;
        let corr = correction(&fit, &all);
        for i in 0..n {
            estimates[i] = phi[i] + corr[i];
        }
        fold_functions.push(fit);
    } else {
        let mut order: Vec<usize> = (0..evaluated.len()).collect();
        let mut rng = rng_from_seed(stable_mix(&[seed, 0x0f01d]));
        order.shuffle(&mut rng);
        let k = cfg.folds;
        let base = order.len() / k;
        let remainder = order.len() % k;
        let mut start = 0;
        let mut folds = Vec::with_capacity(k);
        for fold_idx in 0..k {
            let len = base + usize::from(fold_idx < remainder);
            folds.push(&order[start..start + len]);
            start += len;
        }
        for (fold_idx, fold) in folds.iter().enumerate() {
            let in_fold: Vec<&Evaluated> = fold.iter().map(|&i| &evaluated[i]).collect();
            let train: Vec<&Evaluated> = folds
                .iter()
                .enumerate()
                .filter(|(other_idx, _)| *other_idx != fold_idx)
                .flat_map(|(_, other)| other.iter().map(|&i| &evaluated[i]))
                .collect();
            let fit = fit_surrogate(&cfg.model, &train, n, &dist, anchors)?;
            let phi = exact_prob_values(&fit, w).map_err(tree_error)?;
            let corr = correction(&fit, &in_fold);
            for i in 0..n {
                estimates[i] += (phi[i] + corr[i]) / k as f64;
            }
            fold_functions.push(fit);
        }
    }

    let config = json!({
        "budget": budget,
        "folds": cfg.folds,
        "model": cfg.model.name(),
        "distribution": serde_json::to_value(&cfg.distribution).unwrap(),
        "practical": cfg.practical,
        "replacement": cfg.replacement,
    });
    let report = ctx.finish("regression_msr", config, seed, estimates);
    Ok(RegressionMsrRun {
        report,
        fold_functions,
        distribution: dist,
    })
}

fn tree_error(e: crate::treeprob::TreeError) -> EstimatorError {
    EstimatorError::InvalidInput(format!("surrogate value computation failed: {e}"))
}

/// See [`regression_msr_detailed`]; this drops the per-fold functions.
pub fn regression_msr(
    game: &dyn Game,
    w: &WeightVector,
    budget: usize,
    cfg: &RegressionMsrConfig,
    seed: u64,
) -> Result<EstimateReport, EstimatorError> {
    Ok(regression_msr_detailed(game, w, budget, cfg, seed)?.report)
}
