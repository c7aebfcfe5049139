//! Marginal-contribution estimators: the per-player Monte Carlo estimator,
//! its weighted-sampling-lift variant, and the reweighted permutation walk.

use serde_json::json;

use super::{check_players, EstimateReport, EstimatorError, RunContext};
use crate::games::Game;
use crate::numeric::ln_binomial;
use crate::sampling::{
    default_msr_distribution, enumerate_subsets, random_fixed_size_subset, rng_from_seed,
    SizeDistribution,
};
use crate::treeprob::MAX_BRUTE_FORCE;
use crate::weights::WeightVector;

/// Size law over subsets of the `n-1` players left once one is excluded,
/// induced by restricting `dist`: each size keeps its per-subset density.
fn restrict_one_player_out(dist: &SizeDistribution) -> Result<SizeDistribution, EstimatorError> {
    let n = dist.n();
    debug_assert!(n >= 1);
    let raw: Vec<f64> = (0..n)
        .map(|s| match dist.log_density(s) {
            Some(ld) => ln_binomial(n - 1, s) + ld,
            None => f64::NEG_INFINITY,
        })
        .collect();
    if raw.iter().all(|&w| w == f64::NEG_INFINITY) {
        return Err(EstimatorError::InvalidInput(
            "sampling distribution has no mass on sizes below n".into(),
        ));
    }
    Ok(SizeDistribution::from_log_weights(n - 1, raw))
}

fn mc_with_restricted_law(
    game: &dyn Game,
    w: &WeightVector,
    budget: usize,
    restricted: SizeDistribution,
    seed: u64,
    estimator: &'static str,
    config: serde_json::Value,
) -> Result<EstimateReport, EstimatorError> {
    check_players(game, w)?;
    let n = w.n();
    let pairs = budget / (2 * n);
    if pairs == 0 {
        return Err(EstimatorError::BudgetTooSmall {
            estimator,
            budget,
            minimum: 2 * n,
        });
    }
    // Reweighting factor p_s / D(S) per sampled size, in log space.
    let ratio: Vec<f64> = (0..n)
        .map(
            |s| match (w.log_p_at(s as i64), restricted.log_density(s)) {
                (Some(lp), Some(ld)) => (lp - ld).exp(),
                _ => 0.0,
            },
        )
        .collect();
    let ctx = RunContext::new(game);
    let mut rng = rng_from_seed(seed);
    let mut estimates = vec![0.0; n];
    for (i, estimate) in estimates.iter_mut().enumerate() {
        let mut candidates: Vec<usize> = (0..n).filter(|&j| j != i).collect();
        let mut acc = 0.0;
        for _ in 0..pairs {
            let s = restricted.sample_size(&mut rng);
            let set = random_fixed_size_subset(&mut rng, &mut candidates, s);
            let delta = ctx.counting.evaluate(&set.with(i)) - ctx.counting.evaluate(&set);
            acc += delta * ratio[s];
        }
        *estimate = acc / pairs as f64;
    }
    Ok(ctx.finish(estimator, config, seed, estimates))
}

/// Plain Monte Carlo: the budget is split evenly across players, each sample
/// costs the two evaluations of a marginal contribution, and subsets are
/// drawn from `dist` (default: the variance-minimizing sampling law)
/// restricted to the other players.
pub fn monte_carlo(
    game: &dyn Game,
    w: &WeightVector,
    budget: usize,
    dist: Option<&SizeDistribution>,
    seed: u64,
) -> Result<EstimateReport, EstimatorError> {
    let base = match dist {
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
    let restricted = restrict_one_player_out(&base)?;
    let config = json!({
        "budget": budget,
        "distribution": if dist.is_some() { "supplied" } else { "default" },
    });
    mc_with_restricted_law(game, w, budget, restricted, seed, "monte_carlo", config)
}

/// The defining sum evaluated term by term for every player: all subsets of
/// the others, each marginal contribution weighted once by `p_{|S|}`.
pub fn monte_carlo_exhaustive(
    game: &dyn Game,
    w: &WeightVector,
) -> Result<EstimateReport, EstimatorError> {
    check_players(game, w)?;
    let n = w.n();
    if n > MAX_BRUTE_FORCE {
        return Err(EstimatorError::TooManyPlayers {
            max: MAX_BRUTE_FORCE,
            got: n,
        });
    }
    let ctx = RunContext::new(game);
    let mut estimates = vec![0.0; n];
    for set in enumerate_subsets(n).expect("n <= 20") {
        let base = ctx.counting.evaluate(&set);
        let p = w.p(set.len() as i64);
        for (i, estimate) in estimates.iter_mut().enumerate() {
            if !set.contains(i) {
                *estimate += p * (ctx.counting.evaluate(&set.with(i)) - base);
            }
        }
    }
    let config = json!({ "exhaustive": true });
    Ok(ctx.finish("monte_carlo_exhaustive", config, 0, estimates))
}

/// Weighted sampling lift: Monte Carlo with sizes drawn uniformly (the
/// Shapley size law) and reweighted by `p_s * n * C(n-1, s)`.
pub fn wsl(
    game: &dyn Game,
    w: &WeightVector,
    budget: usize,
    seed: u64,
) -> Result<EstimateReport, EstimatorError> {
    let n = w.n();
    let restricted = SizeDistribution::from_log_weights(n.saturating_sub(1), vec![0.0; n]);
    let config = json!({ "budget": budget });
    mc_with_restricted_law(game, w, budget, restricted, seed, "wsl", config)
}

/// Per-prefix-size reweighting factor `r_s = n * C(n-1, s) * p_s`; the unique
/// correction under which a uniform random permutation walk is unbiased for
/// the probabilistic values (a prefix pair `(S, i)` appears with probability
/// `1 / (n * C(n-1, |S|))`). For Shapley weights every `r_s` is 1.
fn prefix_factors(w: &WeightVector) -> Vec<f64> {
    let n = w.n();
    (0..n)
        .map(|s| {
            let lp = w.log_p_at(s as i64).expect("in-range weight");
            ((n as f64).ln() + ln_binomial(n - 1, s) + lp).exp()
        })
        .collect()
}

/// One permutation walk: evaluates all `n + 1` prefixes and adds the
/// reweighted marginal of each player at its position.
pub(crate) fn permutation_contributions(
    game: &dyn Game,
    w: &WeightVector,
    order: &[usize],
) -> Vec<f64> {
    let factors = prefix_factors(w);
    let mut contributions = vec![0.0; w.n()];
    let mut prefix = crate::sampling::Subset::empty();
    let mut prev = game.evaluate(&prefix);
    for (pos, &player) in order.iter().enumerate() {
        prefix = prefix.with(player);
        let next = game.evaluate(&prefix);
        contributions[player] = (next - prev) * factors[pos];
        prev = next;
    }
    contributions
}

/// Permutation sampling: each drawn ordering spends `n + 1` evaluations on
/// its prefixes; estimates are means of the reweighted marginals.
pub fn permutation(
    game: &dyn Game,
    w: &WeightVector,
    budget: usize,
    seed: u64,
) -> Result<EstimateReport, EstimatorError> {
    check_players(game, w)?;
    let n = w.n();
    let walks = budget / (n + 1);
    if walks == 0 {
        return Err(EstimatorError::BudgetTooSmall {
            estimator: "permutation",
            budget,
            minimum: n + 1,
        });
    }
    let ctx = RunContext::new(game);
    let mut rng = rng_from_seed(seed);
    let mut estimates = vec![0.0; n];
    let mut order: Vec<usize> = (0..n).collect();
    for _ in 0..walks {
        use rand::seq::SliceRandom;
        order.shuffle(&mut rng);
        let contributions = permutation_contributions(&ctx.counting, w, &order);
        for (acc, c) in estimates.iter_mut().zip(contributions) {
            *acc += c;
        }
    }
    for e in &mut estimates {
        *e /= walks as f64;
    }
    let config = json!({ "budget": budget, "permutations": walks });
    Ok(ctx.finish("permutation", config, seed, estimates))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::games::{linear_game, with_counting, TableGame};
    use crate::treeprob::brute_force_values;
    use crate::weights::{make_weights, WeightFamily};

    fn example_game() -> TableGame {
        TableGame::new(2, vec![0.0, 1.0, 2.0, 4.0])
    }

    #[test]
    fn exhaustive_monte_carlo_matches_hand_sum() {
        let w = make_weights(WeightFamily::Shapley, 2).unwrap();
        let report = monte_carlo_exhaustive(&example_game(), &w).unwrap();
        assert!((report.estimates[0] - 1.5).abs() < 1e-12);
        assert!((report.estimates[1] - 2.5).abs() < 1e-12);
        assert_eq!(report.evaluations_used, 4);
    }

    #[test]
    fn constant_games_estimate_zero() {
        let game = TableGame::from_fn(4, |_| 3.25);
        let w = make_weights(WeightFamily::weighted_banzhaf(0.7), 4).unwrap();
        for report in [
            monte_carlo(&game, &w, 80, None, 5).unwrap(),
            wsl(&game, &w, 80, 5).unwrap(),
            permutation(&game, &w, 80, 5).unwrap(),
        ] {
            for e in report.estimates {
                assert_eq!(e, 0.0);
            }
        }
    }

    #[test]
    fn wsl_factor_is_constant_for_shapley() {
        let w = make_weights(WeightFamily::Shapley, 7).unwrap();
        let factors = prefix_factors(&w);
        for f in factors {
            assert!((f - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn permutation_walks_match_hand_trace() {
        let game = example_game();
        let w = make_weights(WeightFamily::Shapley, 2).unwrap();
        let forward = permutation_contributions(&game, &w, &[0, 1]);
        assert_eq!(forward, vec![1.0, 3.0]);
        let backward = permutation_contributions(&game, &w, &[1, 0]);
        assert_eq!(backward, vec![2.0, 2.0]);
        let mean: Vec<f64> = forward
            .iter()
            .zip(&backward)
            .map(|(a, b)| (a + b) / 2.0)
            .collect();
        assert_eq!(mean, vec![1.5, 2.5]);
    }

    #[test]
    fn budgets_below_floor_are_rejected() {
        let game = example_game();
        let w = make_weights(WeightFamily::Shapley, 2).unwrap();
        assert!(matches!(
            monte_carlo(&game, &w, 3, None, 0),
            Err(EstimatorError::BudgetTooSmall { .. })
        ));
        assert!(matches!(
            permutation(&game, &w, 2, 0),
            Err(EstimatorError::BudgetTooSmall { .. })
        ));
    }

    #[test]
    fn estimators_stay_within_budget() {
        let game = TableGame::from_fn(5, |s| (s.bits() as f64).sqrt());
        let w = make_weights(WeightFamily::beta(2.0, 2.0), 5).unwrap();
        for m in [10usize, 37, 64] {
            let audit = with_counting(&game);
            let report = monte_carlo(&audit, &w, m, None, 3).unwrap();
            assert!(audit.calls() <= m);
            assert_eq!(report.evaluations_used, audit.calls());

            let audit = with_counting(&game);
            permutation(&audit, &w, m, 3).unwrap();
            assert!(audit.calls() <= m);
        }
    }

    #[test]
    fn monte_carlo_mean_tracks_truth_on_small_game() {
        // Cheap in-module unbiasedness smoke test; the acceptance suite runs
        // the full-scale version.
        let game =
            linear_game(0.5, vec![1.0, -2.0, 0.5, 0.25], vec![1.0; 4], vec![0.0; 4]).unwrap();
        let w = make_weights(WeightFamily::Shapley, 4).unwrap();
        let truth = brute_force_values(&game, &w).unwrap();
        let runs = 3000;
        let mut sums = [0.0; 4];
        let mut sq = [0.0; 4];
        for seed in 0..runs {
            let r = monte_carlo(&game, &w, 16, None, seed as u64).unwrap();
            for i in 0..4 {
                sums[i] += r.estimates[i];
                sq[i] += r.estimates[i] * r.estimates[i];
            }
        }
        for i in 0..4 {
            let mean = sums[i] / runs as f64;
            let var = (sq[i] / runs as f64 - mean * mean).max(0.0);
            let se = (var / runs as f64).sqrt().max(1e-12);
            assert!(
                (mean - truth[i]).abs() <= 4.0 * se,
                "player {i}: mean {mean} truth {} se {se}",
                truth[i]
            );
        }
    }
}
