//! Acceptance suite. Each test checks one release criterion end to end and
//! prints a single pass/fail line; run with `--nocapture` to see them.

use provalue_core::estimators::{
    arm, kernel_shap, kernel_shap_exhaustive, leverage_shap, leverage_shap_exhaustive, monte_carlo,
    msr, msr_exhaustive, permutation, regression_msr, regression_msr_detailed, wsl,
    DistributionChoice, RegressionMsrConfig, SurrogateSpec,
};
use provalue_core::games::{random_game, Game, RandomGameKind, RandomGameParams, TableGame};
use provalue_core::harness::{
    error_bound_report, ground_truth, normalized_error, run_benchmark, BenchmarkConfig,
};
use provalue_core::regress::GbtConfig;
use provalue_core::sampling::enumerate_subsets;
use provalue_core::treeprob::{brute_force_values, tree_prob_values, Tree, TreeEnsemble, TreeNode};
use provalue_core::weights::{make_weights, WeightFamily, WeightVector};
use provalue_core::{GameInstance, Subset};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn report(criterion: u32, name: &str, result: Result<(), String>) {
    match result {
        Ok(()) => println!("[acceptance] criterion {criterion:02} ({name}): PASS"),
        Err(msg) => {
            println!("[acceptance] criterion {criterion:02} ({name}): FAIL - {msg}");
            panic!("criterion {criterion} ({name}) failed: {msg}");
        }
    }
}

/// The twelve weight families of the benchmark header.
fn twelve_families() -> Vec<WeightFamily> {
    vec![
        WeightFamily::beta(1.0, 1.0),
        WeightFamily::beta(2.0, 2.0),
        WeightFamily::beta(4.0, 4.0),
        WeightFamily::beta(8.0, 8.0),
        WeightFamily::beta(1.0, 2.0),
        WeightFamily::beta(1.0, 4.0),
        WeightFamily::beta(1.0, 8.0),
        WeightFamily::weighted_banzhaf(0.5),
        WeightFamily::weighted_banzhaf(0.6),
        WeightFamily::weighted_banzhaf(0.7),
        WeightFamily::weighted_banzhaf(0.8),
        WeightFamily::weighted_banzhaf(0.9),
    ]
}

/// Random ensemble with continuous thresholds and random explicand/baseline.
fn random_ensemble(rng: &mut ChaCha8Rng, d: usize, trees: usize, depth: usize) -> TreeEnsemble {
    fn grow(rng: &mut ChaCha8Rng, nodes: &mut Vec<TreeNode>, d: usize, depth: usize) -> usize {
        if depth == 0 || rng.random_bool(0.25) {
            nodes.push(TreeNode::Leaf {
                value: rng.random_range(-2.0..2.0),
            });
            return nodes.len() - 1;
        }
        let feature = rng.random_range(0..d);
        let threshold = rng.random_range(0.05..0.95);
        let idx = nodes.len();
        nodes.push(TreeNode::Leaf { value: 0.0 });
        let left = grow(rng, nodes, d, depth - 1);
        let right = grow(rng, nodes, d, depth - 1);
        nodes[idx] = TreeNode::Split {
            feature,
            threshold,
            left,
            right,
        };
        idx
    }
    let trees = (0..trees)
        .map(|_| {
            let mut nodes = Vec::new();
            let root = grow(rng, &mut nodes, d, depth);
            Tree { root, nodes }
        })
        .collect();
    TreeEnsemble::new(d, trees)
}

fn max_abs_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y).abs())
        .fold(0.0, f64::max)
}

#[test]
fn criterion_01_oracle_equivalence() {
    report(
        1,
        "tree recursion equals enumeration oracle",
        (|| {
            let families = [
                WeightFamily::Shapley,
                WeightFamily::Banzhaf,
                WeightFamily::beta(2.0, 2.0),
                WeightFamily::beta(1.0, 4.0),
                WeightFamily::weighted_banzhaf(0.7),
                WeightFamily::weighted_banzhaf(0.9),
            ];
            let mut rng = ChaCha8Rng::seed_from_u64(101);
            for case in 0..50 {
                let d = rng.random_range(2..=10);
                let trees = rng.random_range(1..=5);
                let depth = rng.random_range(1..=4);
                let ensemble = random_ensemble(&mut rng, d, trees, depth);
                let xe: Vec<f64> = (0..d).map(|_| rng.random_range(0.0..1.0)).collect();
                let xb: Vec<f64> = (0..d).map(|_| rng.random_range(0.0..1.0)).collect();
                let game =
                    provalue_core::games::tree_game(ensemble.clone(), xe.clone(), xb.clone())
                        .map_err(|e| e.to_string())?;
                for family in families {
                    let w = make_weights(family, d).map_err(|e| e.to_string())?;
                    let fast = tree_prob_values(&ensemble, &xe, std::slice::from_ref(&xb), &w)
                        .map_err(|e| e.to_string())?;
                    let slow = brute_force_values(&game, &w).map_err(|e| e.to_string())?;
                    let diff = max_abs_diff(&fast, &slow);
                    if diff >= 1e-9 {
                        return Err(format!("case {case}, {family}: max abs diff {diff:.3e}"));
                    }
                }
            }
            Ok(())
        })(),
    );
}

#[test]
fn criterion_02_weight_normalization() {
    report(
        2,
        "weight normalization and family coincidences",
        (|| {
            for family in twelve_families() {
                for n in 1..=64usize {
                    let w = make_weights(family, n).map_err(|e| e.to_string())?;
                    let r = w.normalization_residual();
                    if r >= 1e-10 {
                        return Err(format!("{family} n={n}: residual {r:.3e}"));
                    }
                }
            }
            for n in 1..=64usize {
                let beta11 = make_weights(WeightFamily::beta(1.0, 1.0), n).unwrap();
                let shapley = make_weights(WeightFamily::Shapley, n).unwrap();
                let d = max_abs_diff(&beta11.probabilities(), &shapley.probabilities());
                if d >= 1e-12 {
                    return Err(format!("beta(1,1) vs shapley n={n}: {d:.3e}"));
                }
                let wb = make_weights(WeightFamily::weighted_banzhaf(0.5), n).unwrap();
                let banzhaf = make_weights(WeightFamily::Banzhaf, n).unwrap();
                let d = max_abs_diff(&wb.probabilities(), &banzhaf.probabilities());
                if d >= 1e-12 {
                    return Err(format!("wbanzhaf(0.5) vs banzhaf n={n}: {d:.3e}"));
                }
            }
            Ok(())
        })(),
    );
}

#[test]
fn criterion_03_consistency() {
    report(
        3,
        "exhaustive estimators reproduce exact values",
        (|| {
            let n = 8;
            let games = [
                random_game(RandomGameKind::Forest, n, 301, &RandomGameParams::default()),
                random_game(
                    RandomGameKind::LinearPlusNoise,
                    n,
                    302,
                    &RandomGameParams::default(),
                ),
            ];
            for (gi, game) in games.iter().enumerate() {
                for family in twelve_families() {
                    let w = make_weights(family, n).map_err(|e| e.to_string())?;
                    let truth = brute_force_values(game, &w).map_err(|e| e.to_string())?;

                    let reuse = msr_exhaustive(game, &w).map_err(|e| e.to_string())?;
                    let diff = max_abs_diff(&reuse.estimates, &truth);
                    if diff >= 1e-8 {
                        return Err(format!("msr exhaustive game {gi} {family}: {diff:.3e}"));
                    }

                    for model in [
                        SurrogateSpec::Linear,
                        SurrogateSpec::Gbt(GbtConfig::default()),
                    ] {
                        let cfg = RegressionMsrConfig {
                            model: model.clone(),
                            distribution: DistributionChoice::UniformSubsets,
                            practical: true,
                            replacement: false,
                            ..RegressionMsrConfig::default()
                        };
                        let est =
                            regression_msr(game, &w, 1 << n, &cfg, 7).map_err(|e| e.to_string())?;
                        let diff = max_abs_diff(&est.estimates, &truth);
                        if diff >= 1e-8 {
                            return Err(format!(
                                "regression_msr({:?}) game {gi} {family}: {diff:.3e}",
                                model
                            ));
                        }
                    }
                }
            }
            Ok(())
        })(),
    );
}

#[test]
fn criterion_04_unbiasedness() {
    report(
        4,
        "20k-run means sit within 4 standard errors",
        (|| {
            let n = 6;
            let m = 32;
            let runs = 20_000usize;
            let game = random_game(RandomGameKind::Forest, n, 401, &RandomGameParams::default());
            let fast_gbt = GbtConfig {
                rounds: 15,
                max_depth: 2,
                learning_rate: 0.3,
                min_samples_leaf: 2,
            };
            type Runner<'a> = Box<dyn Fn(&GameInstance, &WeightVector, u64) -> Vec<f64> + 'a>;
            let estimators: Vec<(&str, Runner)> = vec![
                (
                    "monte_carlo",
                    Box::new(move |g: &GameInstance, w: &WeightVector, s| {
                        monte_carlo(g, w, m, None, s).unwrap().estimates
                    }),
                ),
                (
                    "wsl",
                    Box::new(move |g: &GameInstance, w: &WeightVector, s| {
                        wsl(g, w, m, s).unwrap().estimates
                    }),
                ),
                (
                    "permutation",
                    Box::new(move |g: &GameInstance, w: &WeightVector, s| {
                        permutation(g, w, m, s).unwrap().estimates
                    }),
                ),
                (
                    "msr",
                    Box::new(move |g: &GameInstance, w: &WeightVector, s| {
                        msr(g, w, m, None, true, s).unwrap().estimates
                    }),
                ),
                (
                    "arm",
                    Box::new(move |g: &GameInstance, w: &WeightVector, s| {
                        arm(g, w, m, s).unwrap().estimates
                    }),
                ),
                (
                    "regression_msr(k=2, linear)",
                    Box::new(move |g: &GameInstance, w: &WeightVector, s| {
                        let cfg = RegressionMsrConfig {
                            folds: 2,
                            ..RegressionMsrConfig::default()
                        };
                        regression_msr(g, w, m, &cfg, s).unwrap().estimates
                    }),
                ),
                (
                    "regression_msr(k=2, gbt)",
                    Box::new({
                        let fast_gbt = fast_gbt.clone();
                        move |g: &GameInstance, w: &WeightVector, s| {
                            let cfg = RegressionMsrConfig {
                                folds: 2,
                                model: SurrogateSpec::Gbt(fast_gbt.clone()),
                                ..RegressionMsrConfig::default()
                            };
                            regression_msr(g, w, m, &cfg, s).unwrap().estimates
                        }
                    }),
                ),
            ];
            for family in [WeightFamily::Shapley, WeightFamily::weighted_banzhaf(0.7)] {
                let w = make_weights(family, n).map_err(|e| e.to_string())?;
                let truth = brute_force_values(&game, &w).map_err(|e| e.to_string())?;
                for (ei, (name, run)) in estimators.iter().enumerate() {
                    let mut sums = vec![0.0; n];
                    let mut sq = vec![0.0; n];
                    for r in 0..runs {
                        let seed = (ei as u64) << 40
                            | (r as u64) << 8
                            | u64::from(family != WeightFamily::Shapley);
                        let est = run(&game, &w, seed);
                        for i in 0..n {
                            sums[i] += est[i];
                            sq[i] += est[i] * est[i];
                        }
                    }
                    for i in 0..n {
                        let mean = sums[i] / runs as f64;
                        let var = (sq[i] / runs as f64 - mean * mean).max(0.0);
                        let se = (var / runs as f64).sqrt().max(1e-12);
                        let t = (mean - truth[i]).abs() / se;
                        if t > 4.0 {
                            return Err(format!(
                            "{name} {family} player {i}: mean {mean:.6} vs truth {:.6} is {t:.2} SEs",
                            truth[i]
                        ));
                        }
                    }
                }
            }
            Ok(())
        })(),
    );
}

#[test]
fn criterion_05_variance_reduction() {
    report(
        5,
        "linear adjustment shrinks variance and error",
        (|| {
            let n = 10;
            let m = 40 * n;
            let runs = 1000usize;
            let game = random_game(
                RandomGameKind::LinearPlusNoise,
                n,
                501,
                &RandomGameParams::default(),
            );
            let w = make_weights(WeightFamily::Shapley, n).map_err(|e| e.to_string())?;
            let truth = brute_force_values(&game, &w).map_err(|e| e.to_string())?;
            let cfg = RegressionMsrConfig {
                model: SurrogateSpec::Linear,
                distribution: DistributionChoice::MsrDefault,
                practical: true,
                ..RegressionMsrConfig::default()
            };
            let mut adj_sum = vec![0.0; n];
            let mut adj_sq = vec![0.0; n];
            let mut raw_sum = vec![0.0; n];
            let mut raw_sq = vec![0.0; n];
            let mut adj_err = 0.0;
            let mut raw_err = 0.0;
            for r in 0..runs {
                let seed = 0x50_000 + r as u64;
                let adj = regression_msr(&game, &w, m, &cfg, seed)
                    .map_err(|e| e.to_string())?
                    .estimates;
                let raw = msr(&game, &w, m, None, true, seed)
                    .map_err(|e| e.to_string())?
                    .estimates;
                adj_err += normalized_error(&adj, &truth).map_err(|e| e.to_string())?;
                raw_err += normalized_error(&raw, &truth).map_err(|e| e.to_string())?;
                for i in 0..n {
                    adj_sum[i] += adj[i];
                    adj_sq[i] += adj[i] * adj[i];
                    raw_sum[i] += raw[i];
                    raw_sq[i] += raw[i] * raw[i];
                }
            }
            for i in 0..n {
                let adj_var = adj_sq[i] / runs as f64 - (adj_sum[i] / runs as f64).powi(2);
                let raw_var = raw_sq[i] / runs as f64 - (raw_sum[i] / runs as f64).powi(2);
                if adj_var > raw_var {
                    return Err(format!(
                        "player {i}: adjusted variance {adj_var:.3e} exceeds plain {raw_var:.3e}"
                    ));
                }
            }
            let ratio = adj_err / raw_err;
            if ratio >= 0.5 {
                return Err(format!("mean error ratio {ratio:.3} >= 0.5"));
            }
            Ok(())
        })(),
    );
}

#[test]
fn criterion_06_linear_exactness() {
    report(
        6,
        "regression estimators are exact on linear games",
        (|| {
            let n = 16;
            let m = 10 * n;
            let game = random_game(RandomGameKind::Linear, n, 601, &RandomGameParams::default());
            let w = make_weights(WeightFamily::Shapley, n).map_err(|e| e.to_string())?;
            let truth = ground_truth(&game, &w).map_err(|e| e.to_string())?;
            let linear_cfg = RegressionMsrConfig {
                practical: true,
                ..RegressionMsrConfig::linear_msr(WeightFamily::Shapley)
            };
            let results = [
                (
                    "kernel_shap",
                    kernel_shap(&game, m, 6).map_err(|e| e.to_string())?,
                ),
                (
                    "leverage_shap",
                    leverage_shap(&game, m, 6).map_err(|e| e.to_string())?,
                ),
                (
                    "linear_msr",
                    regression_msr(&game, &w, m, &linear_cfg, 6).map_err(|e| e.to_string())?,
                ),
            ];
            for (name, report) in results {
                let err = normalized_error(&report.estimates, &truth).map_err(|e| e.to_string())?;
                if err >= 1e-8 {
                    return Err(format!("{name}: normalized error {err:.3e}"));
                }
                if report.evaluations_used > m {
                    return Err(format!("{name}: budget exceeded"));
                }
            }
            Ok(())
        })(),
    );
}

#[test]
fn criterion_07_tree_msr_advantage() {
    report(
        7,
        "tree surrogate beats linear at scale, monotone in m",
        (|| {
            let n = 30;
            let game = random_game(RandomGameKind::Forest, n, 701, &RandomGameParams::default());
            let w = make_weights(WeightFamily::Shapley, n).map_err(|e| e.to_string())?;
            let truth = ground_truth(&game, &w).map_err(|e| e.to_string())?;
            let runs = 10;
            let tree_cfg = RegressionMsrConfig {
                practical: true,
                ..RegressionMsrConfig::tree_msr()
            };
            let linear_cfg = RegressionMsrConfig {
                practical: true,
                ..RegressionMsrConfig::linear_msr(WeightFamily::Shapley)
            };
            let mean_error = |cfg: &RegressionMsrConfig, m: usize| -> Result<f64, String> {
                let mut total = 0.0;
                for r in 0..runs {
                    let est = regression_msr(&game, &w, m, cfg, 0x700 + r as u64)
                        .map_err(|e| e.to_string())?
                        .estimates;
                    total += normalized_error(&est, &truth).map_err(|e| e.to_string())?;
                }
                Ok(total / runs as f64)
            };
            let budgets = [10 * n, 40 * n, 160 * n, 640 * n];
            let mut tree_errors = Vec::new();
            for &m in &budgets {
                tree_errors.push(mean_error(&tree_cfg, m)?);
            }
            for (i, pair) in tree_errors.windows(2).enumerate() {
                if pair[1] >= pair[0] {
                    return Err(format!(
                        "tree error not decreasing from m={} ({:.3e}) to m={} ({:.3e})",
                        budgets[i],
                        pair[0],
                        budgets[i + 1],
                        pair[1]
                    ));
                }
            }
            let linear_at_max = mean_error(&linear_cfg, 640 * n)?;
            let tree_at_max = tree_errors[3];
            if tree_at_max * 2.0 > linear_at_max {
                return Err(format!(
                    "tree {:.3e} not 2x below linear {:.3e} at 640n",
                    tree_at_max, linear_at_max
                ));
            }
            Ok(())
        })(),
    );
}

#[test]
fn criterion_08_shapley_efficiency() {
    report(
        8,
        "exact Shapley values split v(full) - v(empty)",
        (|| {
            // Fixture one: the 5-feature stump.
            let stump = TreeEnsemble::new(
                5,
                vec![Tree {
                    root: 0,
                    nodes: vec![
                        TreeNode::Split {
                            feature: 0,
                            threshold: 0.5,
                            left: 1,
                            right: 2,
                        },
                        TreeNode::Leaf { value: 0.2 },
                        TreeNode::Leaf { value: 1.0 },
                    ],
                }],
            );
            let xe = vec![1.0; 5];
            let xb = vec![0.0; 5];
            // Fixture two: the 2-player example game. Fixture three: a forest.
            let two_player = TableGame::new(2, vec![0.0, 1.0, 2.0, 4.0]);
            let forest = random_game(RandomGameKind::Forest, 9, 801, &RandomGameParams::default());

            let mut checks: Vec<(String, Vec<f64>, f64)> = Vec::new();
            let w5 = make_weights(WeightFamily::Shapley, 5).unwrap();
            let stump_game = provalue_core::games::tree_game(stump.clone(), xe.clone(), xb.clone())
                .map_err(|e| e.to_string())?;
            checks.push((
                "stump/treeprob".into(),
                tree_prob_values(&stump, &xe, std::slice::from_ref(&xb), &w5)
                    .map_err(|e| e.to_string())?,
                stump_game.evaluate(&Subset::full(5)) - stump_game.evaluate(&Subset::empty()),
            ));
            checks.push((
                "stump/brute".into(),
                brute_force_values(&stump_game, &w5).map_err(|e| e.to_string())?,
                stump_game.evaluate(&Subset::full(5)) - stump_game.evaluate(&Subset::empty()),
            ));
            let w2 = make_weights(WeightFamily::Shapley, 2).unwrap();
            checks.push((
                "two-player/brute".into(),
                brute_force_values(&two_player, &w2).map_err(|e| e.to_string())?,
                4.0,
            ));
            let w9 = make_weights(WeightFamily::Shapley, 9).unwrap();
            checks.push((
                "forest/treeprob".into(),
                ground_truth(&forest, &w9).map_err(|e| e.to_string())?,
                forest.evaluate(&Subset::full(9)) - forest.evaluate(&Subset::empty()),
            ));
            checks.push((
                "forest/brute".into(),
                brute_force_values(&forest, &w9).map_err(|e| e.to_string())?,
                forest.evaluate(&Subset::full(9)) - forest.evaluate(&Subset::empty()),
            ));
            for (name, phi, gap) in checks {
                let total: f64 = phi.iter().sum();
                if (total - gap).abs() >= 1e-9 {
                    return Err(format!("{name}: sum {total} vs gap {gap}"));
                }
            }
            Ok(())
        })(),
    );
}

#[test]
fn criterion_09_bound_coverage() {
    report(
        9,
        "realized error beats the enumerated bound",
        (|| {
            let n = 8;
            let m = 20 * n;
            let delta = 0.1;
            let runs = 1000usize;
            let game = random_game(RandomGameKind::Forest, n, 901, &RandomGameParams::default());
            let w = make_weights(WeightFamily::Shapley, n).map_err(|e| e.to_string())?;
            let truth = brute_force_values(&game, &w).map_err(|e| e.to_string())?;
            let cfg = RegressionMsrConfig {
                folds: 2,
                ..RegressionMsrConfig::default()
            };
            let mut violations = 0usize;
            for r in 0..runs {
                let run = regression_msr_detailed(&game, &w, m, &cfg, 0x900 + r as u64)
                    .map_err(|e| e.to_string())?;
                let bound = error_bound_report(
                    &game,
                    &w,
                    &run.distribution,
                    &run.fold_functions,
                    m,
                    delta,
                    &run.report.estimates,
                    &truth,
                )
                .map_err(|e| e.to_string())?;
                if bound.realized_sq_error > bound.bound_rhs {
                    violations += 1;
                }
            }
            let rate = violations as f64 / runs as f64;
            if rate > 0.13 {
                return Err(format!("violation rate {rate:.3} exceeds 0.13"));
            }
            Ok(())
        })(),
    );
}

#[test]
fn criterion_10_noise_sweep() {
    report(
        10,
        "noise sweep runs; sigma 0 matches the clean run",
        (|| {
            let game = r#"{"id": "forest6", "random": {"kind": "forest", "n": 6, "seed": 1001}}"#;
            let estimators = r#"
            {"name": "msr"},
            {"name": "tree_msr", "k": 2, "practical": true,
             "gbt": {"rounds": 20, "max_depth": 2, "learning_rate": 0.3, "min_samples_leaf": 2}}
        "#;
            let config = |sigmas: &str| -> Result<BenchmarkConfig, String> {
                serde_json::from_str(&format!(
                    r#"{{
                    "master_seed": 10,
                    "games": [{game}],
                    "families": ["shapley", "beta:2,2"],
                    "estimators": [{estimators}],
                    "budgets": ["8n"],
                    "runs": 3,
                    "noise_sigmas": {sigmas}
                }}"#
                ))
                .map_err(|e| e.to_string())
            };
            let sweep = run_benchmark(&config("[0.0, 0.1, 0.5]")?, 1).map_err(|e| e.to_string())?;
            if sweep.iter().any(|r| r.error.is_nan()) {
                return Err("sweep produced failure rows".into());
            }
            let clean = run_benchmark(&config("[0.0]")?, 1).map_err(|e| e.to_string())?;
            let zeros: Vec<_> = sweep.iter().filter(|r| r.sigma == 0.0).collect();
            if zeros.len() != clean.len() {
                return Err(format!(
                    "row count mismatch: {} vs {}",
                    zeros.len(),
                    clean.len()
                ));
            }
            // Bit-identical up to wall time, which is measured anew each run.
            for (a, b) in zeros.iter().zip(&clean) {
                let same = a.game == b.game
                    && a.family == b.family
                    && a.estimator == b.estimator
                    && a.m == b.m
                    && a.sigma.to_bits() == b.sigma.to_bits()
                    && a.run == b.run
                    && a.error.to_bits() == b.error.to_bits()
                    && a.evals == b.evals;
                if !same {
                    return Err(format!("rows differ: {a:?} vs {b:?}"));
                }
            }
            Ok(())
        })(),
    );
}

#[test]
fn exhaustive_modes_cover_all_estimators() {
    // Companion check to criterion 3 for the Shapley-only estimators: the
    // full-enumeration solves equal the oracle.
    let n = 6;
    let mut rng = ChaCha8Rng::seed_from_u64(77);
    let values: Vec<f64> = (0..1u64 << n)
        .map(|_| rng.random_range(-2.0..2.0))
        .collect();
    let game = TableGame::new(n, values);
    let w = make_weights(WeightFamily::Shapley, n).unwrap();
    let truth = brute_force_values(&game, &w).unwrap();
    for report in [
        kernel_shap_exhaustive(&game).unwrap(),
        leverage_shap_exhaustive(&game).unwrap(),
    ] {
        assert!(max_abs_diff(&report.estimates, &truth) < 1e-8);
    }
    // Exhaustive uniform sampling equals the coefficient sum exactly.
    let uniform = provalue_core::sampling::SizeDistribution::uniform_subsets(n);
    let sampled = msr(&game, &w, 1 << n, Some(&uniform), false, 3).unwrap();
    let exact = msr_exhaustive(&game, &w).unwrap();
    assert!(max_abs_diff(&sampled.estimates, &exact.estimates) < 1e-10);
    let _ = enumerate_subsets(n).unwrap();
}
