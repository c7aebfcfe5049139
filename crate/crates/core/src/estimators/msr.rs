//! Maximum-sample-reuse estimators: every evaluated coalition updates every
//! player's estimate through the signed coefficient
//! `p_{|S|-1} 1[i in S] - p_{|S|} 1[i not in S]`.

use serde_json::json;

use super::{check_players, EstimateReport, EstimatorError, RunContext};
use crate::games::Game;
use crate::numeric::{ln_binomial, log_sum_exp, stable_mix};
use crate::sampling::{
    default_msr_distribution, enumerate_subsets, sample_subsets, SizeDistribution, MAX_ENUMERATION,
};
use crate::weights::WeightVector;

/// Per-size reuse ratios `p_{s-1} / D` (member) and `-p_s / D` (non-member),
/// formed as exp of log differences. Errors if a size in `sizes` has zero
/// sampling density.
pub(crate) fn reuse_ratios(
    w: &WeightVector,
    dist: &SizeDistribution,
    sizes: impl Iterator<Item = usize>,
) -> Result<Vec<Option<(f64, f64)>>, EstimatorError> {
    let n = w.n();
    let mut table: Vec<Option<(f64, f64)>> = vec![None; n + 1];
    for s in sizes {
        if table[s].is_some() {
            continue;
        }
        let ld = dist.log_density(s).ok_or(EstimatorError::ZeroDensity(s))?;
        let member = w.log_p_at(s as i64 - 1).map_or(0.0, |lp| (lp - ld).exp());
        let outsider = w.log_p_at(s as i64).map_or(0.0, |lp| -(lp - ld).exp());
        table[s] = Some((member, outsider));
    }
    Ok(table)
}

/// Plain maximum sample reuse over one batch of `m` subsets.
pub fn msr(
    game: &dyn Game,
    w: &WeightVector,
    budget: usize,
    dist: Option<&SizeDistribution>,
    replacement: bool,
    seed: u64,
) -> Result<EstimateReport, EstimatorError> {
    check_players(game, w)?;
    if budget == 0 {
        return Err(EstimatorError::BudgetTooSmall {
            estimator: "msr",
            budget,
            minimum: 1,
        });
    }
    let dist = match dist {
        Some(d) => {
            if d.n() != w.n() {
                return Err(EstimatorError::InvalidInput(format!(
                    "distribution is over {} players, weights over {}",
                    d.n(),
                    w.n()
                )));
            }
            d.clone()
        }
        None => default_msr_distribution(w),
    };
    let n = w.n();
    let ctx = RunContext::new(game);
    let batch = sample_subsets(&dist, budget, replacement, seed)?;
    let ratios = reuse_ratios(w, &dist, batch.subsets.iter().map(|s| s.len()))?;
    let mut estimates = vec![0.0; n];
    for set in &batch.subsets {
        let value = ctx.counting.evaluate(set);
        let (member, outsider) = ratios[set.len()].expect("ratio precomputed");
        for (i, estimate) in estimates.iter_mut().enumerate() {
            *estimate += value * if set.contains(i) { member } else { outsider };
        }
    }
    for e in &mut estimates {
        *e /= budget as f64;
    }
    let config = json!({ "budget": budget, "replacement": replacement });
    Ok(ctx.finish("msr", config, seed, estimates))
}

/// Consistency mode: the coefficient-weighted sum over every subset, with no
/// sampling or density division. Equals the defining sum exactly.
pub fn msr_exhaustive(game: &dyn Game, w: &WeightVector) -> Result<EstimateReport, EstimatorError> {
    check_players(game, w)?;
    let n = w.n();
    if n > MAX_ENUMERATION {
        return Err(EstimatorError::TooManyPlayers {
            max: MAX_ENUMERATION,
            got: n,
        });
    }
    let ctx = RunContext::new(game);
    let mut estimates = vec![0.0; n];
    for set in enumerate_subsets(n)? {
        let value = ctx.counting.evaluate(&set);
        let s = set.len() as i64;
        let member = w.p(s - 1);
        let outsider = -w.p(s);
        for (i, estimate) in estimates.iter_mut().enumerate() {
            *estimate += value * if set.contains(i) { member } else { outsider };
        }
    }
    let config = json!({ "exhaustive": true });
    Ok(ctx.finish("msr_exhaustive", config, 0, estimates))
}

/// Approximation without requesting marginals. Half the budget is drawn with
/// per-subset density proportional to `p_{|S|-1}`, half proportional to
/// `p_{|S|}`; each half feeds only the matching indicator sum, scaled by the
/// normalizers `Z+ = sum_s C(n,s) p_{s-1}` and `Z- = sum_s C(n,s) p_s`.
pub fn arm(
    game: &dyn Game,
    w: &WeightVector,
    budget: usize,
    seed: u64,
) -> Result<EstimateReport, EstimatorError> {
    check_players(game, w)?;
    if budget < 2 {
        return Err(EstimatorError::BudgetTooSmall {
            estimator: "arm",
            budget,
            minimum: 2,
        });
    }
    let n = w.n();
    let raw_plus: Vec<f64> = (0..=n)
        .map(|s| match w.log_p_at(s as i64 - 1) {
            Some(lp) => ln_binomial(n, s) + lp,
            None => f64::NEG_INFINITY,
        })
        .collect();
    let raw_minus: Vec<f64> = (0..=n)
        .map(|s| match w.log_p_at(s as i64) {
            Some(lp) => ln_binomial(n, s) + lp,
            None => f64::NEG_INFINITY,
        })
        .collect();
    let z_plus = log_sum_exp(&raw_plus).exp();
    let z_minus = log_sum_exp(&raw_minus).exp();
    let dist_plus = SizeDistribution::from_log_weights(n, raw_plus);
    let dist_minus = SizeDistribution::from_log_weights(n, raw_minus);

    let count_plus = budget / 2;
    let count_minus = budget - count_plus;
    let ctx = RunContext::new(game);
    let batch_plus = sample_subsets(&dist_plus, count_plus, true, stable_mix(&[seed, 1]))?;
    let batch_minus = sample_subsets(&dist_minus, count_minus, true, stable_mix(&[seed, 2]))?;

    let mut estimates = vec![0.0; n];
    for set in &batch_plus.subsets {
        let value = ctx.counting.evaluate(set);
        for (i, estimate) in estimates.iter_mut().enumerate() {
            if set.contains(i) {
                *estimate += value * z_plus / count_plus as f64;
            }
        }
    }
    for set in &batch_minus.subsets {
        let value = ctx.counting.evaluate(set);
        for (i, estimate) in estimates.iter_mut().enumerate() {
            if !set.contains(i) {
                *estimate -= value * z_minus / count_minus as f64;
            }
        }
    }
    let config = json!({ "budget": budget });
    Ok(ctx.finish("arm", config, seed, estimates))
}
