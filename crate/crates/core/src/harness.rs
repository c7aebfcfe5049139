//! Benchmark harness: ground-truth dispatch, the normalized error metric,
//! deterministic budget/noise sweeps with CSV output, and the enumerated
//! error-bound diagnostic.

use std::fmt;
use std::path::Path;
use std::str::FromStr;
use std::sync::Arc;

use serde::de::Error as _;
use serde::{Deserialize, Deserializer, Serialize, Serializer};
use thiserror::Error;

use crate::estimators::{EstimatorError, EstimatorSpec};
use crate::games::{
    with_noise, Game, GameConfig, GameError, GameInstance, PredictiveModel, RandomGameKind,
    RandomGameParams,
};
use crate::numeric::{fnv1a, stable_mix};
use crate::regress::FittedFunction;
use crate::sampling::{enumerate_subsets, SizeDistribution};
use crate::treeprob::{brute_force_values, tree_prob_values, TreeError, MAX_BRUTE_FORCE};
use crate::weights::{make_weights, WeightError, WeightFamily, WeightVector};

/// Enumeration ceiling for the error-bound diagnostic.
pub const MAX_BOUND_PLAYERS: usize = 16;

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("ground truth for a non-tree game needs n <= {MAX_BRUTE_FORCE}, got {0}")]
    TruthInfeasible(usize),
    #[error("the truth vector has zero norm; the normalized error is undefined")]
    ZeroNormTruth,
    #[error("bound diagnostic needs n <= {MAX_BOUND_PLAYERS}, got {0}")]
    BoundInfeasible(usize),
    #[error("benchmark config: {0}")]
    BadConfig(String),
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Game(#[from] GameError),
    #[error(transparent)]
    Tree(#[from] TreeError),
    #[error(transparent)]
    Weights(#[from] WeightError),
    #[error(transparent)]
    Estimator(#[from] EstimatorError),
}

/// Exact probabilistic values of a game instance: the tree recursion for tree
/// models, effective coefficients for linear models, enumeration otherwise.
pub fn ground_truth(game: &GameInstance, w: &WeightVector) -> Result<Vec<f64>, HarnessError> {
    match game {
        GameInstance::Interventional(ig) => match &ig.model {
            PredictiveModel::Tree(ensemble) => {
                Ok(tree_prob_values(ensemble, &ig.explicand, &ig.baselines, w)?)
            }
            PredictiveModel::Linear { coeffs, .. } => {
                // The membership coefficient of player i is c_i (e_i - mean_b b_i),
                // and a linear game's values are its membership coefficients.
                let k = ig.baselines.len() as f64;
                Ok(coeffs
                    .iter()
                    .enumerate()
                    .map(|(i, c)| {
                        let mean_b: f64 = ig.baselines.iter().map(|b| b[i]).sum::<f64>() / k;
                        c * (ig.explicand[i] - mean_b)
                    })
                    .collect())
            }
        },
        other => {
            let n = other.player_count();
            if n > MAX_BRUTE_FORCE {
                return Err(HarnessError::TruthInfeasible(n));
            }
            Ok(brute_force_values(other, w)?)
        }
    }
}

/// `||est - truth||^2 / ||truth||^2`.
pub fn normalized_error(est: &[f64], truth: &[f64]) -> Result<f64, HarnessError> {
    let norm: f64 = truth.iter().map(|t| t * t).sum();
    if norm == 0.0 {
        return Err(HarnessError::ZeroNormTruth);
    }
    let dist: f64 = est.iter().zip(truth).map(|(e, t)| (e - t) * (e - t)).sum();
    Ok(dist / norm)
}

/// A budget given either as an absolute evaluation count or as a per-player
/// multiple (`"640n"`).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BudgetSpec {
    Absolute(usize),
    PerPlayer(usize),
}

impl BudgetSpec {
    pub fn resolve(&self, n: usize) -> usize {
        match self {
            BudgetSpec::Absolute(m) => *m,
            BudgetSpec::PerPlayer(k) => k * n,
        }
    }
}

impl fmt::Display for BudgetSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            BudgetSpec::Absolute(m) => write!(f, "{m}"),
            BudgetSpec::PerPlayer(k) => write!(f, "{k}n"),
        }
    }
}

impl FromStr for BudgetSpec {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        let s = s.trim();
        if let Some(head) = s.strip_suffix(['n', 'N']) {
            head.trim()
                .parse()
                .map(BudgetSpec::PerPlayer)
                .map_err(|_| format!("cannot parse budget {s:?}"))
        } else {
            s.parse()
                .map(BudgetSpec::Absolute)
                .map_err(|_| format!("cannot parse budget {s:?}"))
        }
    }
}

impl Serialize for BudgetSpec {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for BudgetSpec {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw {
            Num(u64),
            Str(String),
        }
        match Raw::deserialize(deserializer)? {
            Raw::Num(m) => Ok(BudgetSpec::Absolute(m as usize)),
            Raw::Str(s) => s.parse().map_err(D::Error::custom),
        }
    }
}

/// Synthetic game description inside a benchmark config.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RandomGameSpec {
    pub kind: RandomGameKind,
    pub n: usize,
    pub seed: u64,
    #[serde(default)]
    pub params: RandomGameParams,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(untagged)]
pub enum GameSource {
    File { path: String },
    Inline { game: GameConfig },
    Random { random: RandomGameSpec },
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BenchGameSpec {
    pub id: String,
    #[serde(flatten)]
    pub source: GameSource,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BenchmarkConfig {
    #[serde(default)]
    pub master_seed: u64,
    pub games: Vec<BenchGameSpec>,
    pub families: Vec<WeightFamily>,
    pub estimators: Vec<EstimatorSpec>,
    pub budgets: Vec<BudgetSpec>,
    pub runs: usize,
    #[serde(default = "default_sigmas")]
    pub noise_sigmas: Vec<f64>,
    /// Default CSV destination; the CLI flag overrides it.
    #[serde(default)]
    pub output: Option<String>,
}

fn default_sigmas() -> Vec<f64> {
    vec![0.0]
}

impl BenchmarkConfig {
    pub fn validate(&self) -> Result<(), HarnessError> {
        if self.runs == 0 {
            return Err(HarnessError::BadConfig("runs must be >= 1".into()));
        }
        if self.games.is_empty()
            || self.families.is_empty()
            || self.estimators.is_empty()
            || self.budgets.is_empty()
            || self.noise_sigmas.is_empty()
        {
            return Err(HarnessError::BadConfig(
                "games, families, estimators, budgets and noise_sigmas must be non-empty".into(),
            ));
        }
        if self
            .budgets
            .iter()
            .any(|b| matches!(b, BudgetSpec::Absolute(0) | BudgetSpec::PerPlayer(0)))
        {
            return Err(HarnessError::BadConfig("budgets must be positive".into()));
        }
        if self.noise_sigmas.iter().any(|s| *s < 0.0) {
            return Err(HarnessError::BadConfig(
                "noise sigmas must be nonnegative".into(),
            ));
        }
        Ok(())
    }

    /// Read a config from JSON, resolving `path` game sources relative to the
    /// config file's directory.
    pub fn load_from_path(path: &Path) -> Result<Self, HarnessError> {
        let text = std::fs::read_to_string(path)?;
        let mut cfg: BenchmarkConfig =
            serde_json::from_str(&text).map_err(|e| HarnessError::BadConfig(format!("{e}")))?;
        let base = path.parent().unwrap_or_else(|| Path::new("."));
        for spec in &mut cfg.games {
            if let GameSource::File { path } = &spec.source {
                let full = base.join(path);
                let text = std::fs::read_to_string(&full)?;
                let game: GameConfig = serde_json::from_str(&text)
                    .map_err(|e| HarnessError::BadConfig(format!("{}: {e}", full.display())))?;
                spec.source = GameSource::Inline { game };
            }
        }
        Ok(cfg)
    }
}

pub fn build_game(source: &GameSource) -> Result<GameInstance, HarnessError> {
    match source {
        GameSource::File { path } => Err(HarnessError::BadConfig(format!(
            "game file {path:?} was not resolved; load the config via load_from_path"
        ))),
        GameSource::Inline { game } => Ok(game.clone().build()?),
        GameSource::Random { random } => Ok(crate::games::random_game(
            random.kind,
            random.n,
            random.seed,
            &random.params,
        )),
    }
}

/// One line of benchmark output.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct BenchmarkRecord {
    pub game: String,
    pub family: String,
    pub estimator: String,
    pub m: usize,
    pub sigma: f64,
    pub run: usize,
    /// Normalized squared error; NaN marks an estimator failure row.
    pub error: f64,
    pub evals: usize,
    pub wall_ms: f64,
}

/// Seed for one (cell, run), derived from the cell's coordinates rather than
/// its position so every row is independently recomputable and insensitive
/// to unrelated sweep-axis changes.
fn cell_seed(
    master: u64,
    game_id: &str,
    family: &WeightFamily,
    estimator: &EstimatorSpec,
    m: usize,
    sigma: f64,
    run: usize,
) -> u64 {
    let estimator_json = serde_json::to_string(estimator).expect("spec serializes");
    stable_mix(&[
        master,
        fnv1a(game_id.as_bytes()),
        fnv1a(family.to_string().as_bytes()),
        fnv1a(estimator_json.as_bytes()),
        m as u64,
        sigma.to_bits(),
        run as u64,
    ])
}

struct Cell {
    game_idx: usize,
    family_idx: usize,
    estimator: EstimatorSpec,
    m: usize,
    sigma: f64,
}

fn run_cell(
    cell: &Cell,
    cfg: &BenchmarkConfig,
    games: &[(String, Arc<GameInstance>)],
    truths: &[Vec<Vec<f64>>],
    weights: &[WeightVector],
) -> Vec<BenchmarkRecord> {
    let (game_id, game) = &games[cell.game_idx];
    let family = &cfg.families[cell.family_idx];
    let w = &weights[cell.family_idx * games.len() + cell.game_idx];
    let truth = &truths[cell.game_idx][cell.family_idx];
    let mut rows = Vec::with_capacity(cfg.runs);
    for run in 0..cfg.runs {
        let seed = cell_seed(
            cfg.master_seed,
            game_id,
            family,
            &cell.estimator,
            cell.m,
            cell.sigma,
            run,
        );
        let started = std::time::Instant::now();
        let outcome = if cell.sigma > 0.0 {
            let noisy = with_noise(game.as_ref(), cell.sigma, stable_mix(&[seed, 0x4015e]))
                .expect("sigma validated nonnegative");
            cell.estimator.run(&noisy, w, cell.m, seed)
        } else {
            cell.estimator.run(game.as_ref(), w, cell.m, seed)
        };
        let row = match outcome.and_then(|report| {
            let error = normalized_error(&report.estimates, truth)
                .map_err(|_| EstimatorError::InvalidInput("zero-norm truth".into()))?;
            Ok((report, error))
        }) {
            Ok((report, error)) => BenchmarkRecord {
                game: game_id.clone(),
                family: family.to_string(),
                estimator: cell.estimator.id().to_string(),
                m: cell.m,
                sigma: cell.sigma,
                run,
                error,
                evals: report.evaluations_used,
                wall_ms: report.wall_time_ms,
            },
            Err(_) => BenchmarkRecord {
                game: game_id.clone(),
                family: family.to_string(),
                estimator: cell.estimator.id().to_string(),
                m: cell.m,
                sigma: cell.sigma,
                run,
                error: f64::NAN,
                evals: 0,
                wall_ms: started.elapsed().as_secs_f64() * 1e3,
            },
        };
        rows.push(row);
    }
    rows
}

/// Execute the full cross product of a benchmark config. Records come back
/// in deterministic sweep order (game, family, estimator, budget, sigma,
/// run); `threads > 1` parallelizes over cells without changing the output.
pub fn run_benchmark(
    cfg: &BenchmarkConfig,
    threads: usize,
) -> Result<Vec<BenchmarkRecord>, HarnessError> {
    cfg.validate()?;
    let games: Vec<(String, Arc<GameInstance>)> = cfg
        .games
        .iter()
        .map(|spec| Ok((spec.id.clone(), Arc::new(build_game(&spec.source)?))))
        .collect::<Result<_, HarnessError>>()?;
    let mut weights = Vec::with_capacity(cfg.families.len() * games.len());
    for family in &cfg.families {
        for (_, game) in &games {
            weights.push(make_weights(*family, game.player_count())?);
        }
    }
    let truths: Vec<Vec<Vec<f64>>> = games
        .iter()
        .enumerate()
        .map(|(gi, (_, game))| {
            cfg.families
                .iter()
                .enumerate()
                .map(|(fi, _)| ground_truth(game, &weights[fi * games.len() + gi]))
                .collect::<Result<Vec<_>, _>>()
        })
        .collect::<Result<_, _>>()?;

    let mut cells = Vec::new();
    for (game_idx, (_, game)) in games.iter().enumerate() {
        for family_idx in 0..cfg.families.len() {
            for estimator in &cfg.estimators {
                for budget in &cfg.budgets {
                    for &sigma in &cfg.noise_sigmas {
                        cells.push(Cell {
                            game_idx,
                            family_idx,
                            estimator: estimator.clone(),
                            m: budget.resolve(game.player_count()),
                            sigma,
                        });
                    }
                }
            }
        }
    }

    let rows: Vec<Vec<BenchmarkRecord>> = if threads > 1 {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build()
            .map_err(|e| HarnessError::BadConfig(format!("thread pool: {e}")))?;
        pool.install(|| {
            use rayon::prelude::*;
            cells
                .par_iter()
                .map(|cell| run_cell(cell, cfg, &games, &truths, &weights))
                .collect()
        })
    } else {
        cells
            .iter()
            .map(|cell| run_cell(cell, cfg, &games, &truths, &weights))
            .collect()
    };
    Ok(rows.into_iter().flatten().collect())
}

/// Write records as CSV with the fixed header
/// `game,family,estimator,m,sigma,run,error,evals,wall_ms`.
pub fn write_records(path: &Path, records: &[BenchmarkRecord]) -> Result<(), HarnessError> {
    let mut writer = csv::Writer::from_path(path)?;
    for r in records {
        writer.serialize(r)?;
    }
    writer.flush()?;
    Ok(())
}

pub fn read_records(path: &Path) -> Result<Vec<BenchmarkRecord>, HarnessError> {
    let mut reader = csv::Reader::from_path(path)?;
    let mut out = Vec::new();
    for row in reader.deserialize() {
        out.push(row?);
    }
    Ok(out)
}

/// The enumerated right-hand side of the regression-adjustment error bound,
/// paired with the realized squared error of a run.
#[derive(Debug, Clone, Serialize)]
pub struct BoundReport {
    /// Bound evaluated for each fold's learned function.
    pub per_fold_rhs: Vec<f64>,
    /// The binding value: the worst fold (largest weighted residual sum).
    pub bound_rhs: f64,
    pub realized_sq_error: f64,
    pub m: usize,
    pub delta: f64,
}

/// Evaluate the bound exactly by enumeration: for each learned function the
/// weighted residual sum `sum_S [v(S) - f(S)]^2 (p_s^2 (1 - s/n) +
/// p_{s-1}^2 s/n) / D(S)`, scaled by `eps = k^2 n / (m delta)` with `k` the
/// number of fold functions. Residuals on zero-density sizes make the bound
/// infinite unless they vanish.
#[allow(clippy::too_many_arguments)]
pub fn error_bound_report(
    game: &dyn Game,
    w: &WeightVector,
    dist: &SizeDistribution,
    fitted: &[FittedFunction],
    m: usize,
    delta: f64,
    estimates: &[f64],
    truth: &[f64],
) -> Result<BoundReport, HarnessError> {
    let n = w.n();
    if n > MAX_BOUND_PLAYERS {
        return Err(HarnessError::BoundInfeasible(n));
    }
    assert!(delta > 0.0 && m > 0 && !fitted.is_empty());
    let k = fitted.len();
    let eps = (k * k) as f64 * n as f64 / (m as f64 * delta);
    let mix: Vec<f64> = (0..=n)
        .map(|s| {
            let frac = s as f64 / n as f64;
            let p_s = w.p(s as i64);
            let p_prev = w.p(s as i64 - 1);
            p_s * p_s * (1.0 - frac) + p_prev * p_prev * frac
        })
        .collect();
    let values: Vec<(crate::sampling::Subset, f64)> = enumerate_subsets(n)
        .expect("n <= 16")
        .map(|s| (s, game.evaluate(&s)))
        .collect();
    let per_fold_rhs: Vec<f64> = fitted
        .iter()
        .map(|f| {
            let mut total = 0.0;
            for (set, value) in &values {
                let resid = value - f.predict(set);
                if resid == 0.0 {
                    continue;
                }
                match dist.log_density(set.len()) {
                    Some(ld) => total += resid * resid * mix[set.len()] / ld.exp(),
                    None => return f64::INFINITY,
                }
            }
            eps * total
        })
        .collect();
    let bound_rhs = per_fold_rhs
        .iter()
        .copied()
        .fold(f64::NEG_INFINITY, f64::max);
    let realized_sq_error: f64 = estimates
        .iter()
        .zip(truth)
        .map(|(e, t)| (e - t) * (e - t))
        .sum();
    Ok(BoundReport {
        per_fold_rhs,
        bound_rhs,
        realized_sq_error,
        m,
        delta,
    })
}
