//! `provalue` — exact and estimated probabilistic values from the command
//! line. Subcommands: `weights`, `exact`, `estimate`, `bench`, `validate`.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use anyhow::{anyhow, Context};
use clap::error::ErrorKind;
use clap::{Parser, Subcommand};

use provalue_core::estimators::EstimatorSpec;
use provalue_core::games::GameInstance;
use provalue_core::harness::{
    ground_truth, normalized_error, run_benchmark, write_records, BenchmarkConfig, BudgetSpec,
};
use provalue_core::treeprob::brute_force_values;
use provalue_core::weights::{make_weights, WeightFamily};
use provalue_core::{Game, GameConfig};

#[derive(Parser)]
#[command(
    name = "provalue",
    version,
    about = "Exact and estimated probabilistic values (Shapley, Banzhaf, beta-Shapley, weighted Banzhaf) of black-box set value functions"
)]
struct Cli {
    /// Base RNG seed (estimate; overrides the config master seed for bench).
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Worker threads for bench sweeps. The default of 1 runs cells
    /// sequentially; higher counts do not change the results.
    #[arg(long, global = true, default_value_t = 1)]
    threads: usize,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Print the probabilistic weights p_0..p_{n-1} of a family as JSON.
    Weights {
        /// shapley | banzhaf | beta:A,B | wbanzhaf:Q
        #[arg(long)]
        family: String,
        #[arg(long)]
        n: usize,
    },
    /// Exact values of a game (tree recursion or enumeration), as JSON.
    Exact {
        /// Path to a game config JSON file.
        #[arg(long)]
        game: PathBuf,
        /// Weight family, e.g. beta:2,2.
        #[arg(long)]
        weights: String,
    },
    /// One estimator run; writes an EstimateReport as JSON.
    Estimate {
        #[arg(long)]
        game: PathBuf,
        #[arg(long)]
        weights: String,
        /// monte_carlo | wsl | permutation | msr | arm | kernel_shap |
        /// leverage_shap | linear_msr | tree_msr
        #[arg(long)]
        estimator: String,
        /// Absolute count or per-player multiple such as 40n.
        #[arg(long)]
        budget: String,
        /// Fold count for the regression estimators.
        #[arg(long, default_value_t = 10)]
        k: usize,
        /// Single-fit variant of the regression estimators (small bias).
        #[arg(long, default_value_t = false)]
        practical: bool,
        /// Write the report here instead of stdout.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run a benchmark sweep from a JSON config and emit CSV.
    Bench {
        #[arg(long)]
        config: PathBuf,
        /// CSV destination; overrides the config's `output`.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Self-test the exact engines against each other on bundled fixtures.
    Validate,
}

enum CliError {
    Usage(String),
    Runtime(anyhow::Error),
}

impl From<anyhow::Error> for CliError {
    fn from(e: anyhow::Error) -> Self {
        CliError::Runtime(e)
    }
}

fn usage(msg: impl Into<String>) -> CliError {
    CliError::Usage(msg.into())
}

fn main() {
    std::process::exit(run());
}

fn run() -> i32 {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(err) => {
            let code = match err.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                _ => 1,
            };
            let _ = err.print();
            return code;
        }
    };
    match execute(cli) {
        Ok(()) => 0,
        Err(CliError::Usage(msg)) => {
            eprintln!("error: {msg}");
            eprintln!("run `provalue --help` for flag documentation");
            1
        }
        Err(CliError::Runtime(err)) => {
            eprintln!("error: {err:#}");
            2
        }
    }
}

fn parse_family(text: &str) -> Result<WeightFamily, CliError> {
    text.parse::<WeightFamily>()
        .map_err(|e| usage(e.to_string()))
}

fn load_game(path: &Path) -> anyhow::Result<GameInstance> {
    let text = std::fs::read_to_string(path)
        .with_context(|| format!("reading game config {}", path.display()))?;
    let config: GameConfig = serde_json::from_str(&text)
        .with_context(|| format!("parsing game config {}", path.display()))?;
    Ok(config.build()?)
}

fn format_values(values: &[f64], decimals: Option<usize>) -> String {
    let mut out = String::from("[");
    for (i, v) in values.iter().enumerate() {
        if i > 0 {
            out.push_str(", ");
        }
        match decimals {
            // Fixed-point would round tiny weights (large n) to zero, so
            // fall back to scientific notation below 1e-4.
            Some(d) if *v == 0.0 || v.abs() >= 1e-4 => {
                let _ = write!(out, "{v:.d$}");
            }
            Some(d) => {
                let _ = write!(out, "{v:.d$e}");
            }
            None => {
                let _ = write!(out, "{v}");
            }
        }
    }
    out.push(']');
    out
}

fn execute(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Weights { family, n } => {
            let family = parse_family(&family)?;
            let w = make_weights(family, n).map_err(|e| usage(e.to_string()))?;
            println!("{}", format_values(&w.probabilities(), Some(10)));
            Ok(())
        }
        Command::Exact { game, weights } => {
            let family = parse_family(&weights)?;
            let game = load_game(&game)?;
            let w = make_weights(family, game.player_count())
                .map_err(|e| CliError::Runtime(anyhow!(e)))?;
            let phi = ground_truth(&game, &w).map_err(|e| CliError::Runtime(anyhow!(e)))?;
            println!("{}", format_values(&phi, None));
            Ok(())
        }
        Command::Estimate {
            game,
            weights,
            estimator,
            budget,
            k,
            practical,
            out,
        } => {
            let family = parse_family(&weights)?;
            let mut spec = EstimatorSpec::from_name(&estimator)
                .ok_or_else(|| usage(format!("unknown estimator {estimator:?}")))?;
            match &mut spec {
                EstimatorSpec::LinearMsr {
                    k: folds,
                    practical: single_fit,
                } => {
                    *folds = k;
                    *single_fit = practical;
                }
                EstimatorSpec::TreeMsr {
                    k: folds,
                    practical: single_fit,
                    ..
                } => {
                    *folds = k;
                    *single_fit = practical;
                }
                _ => {}
            }
            let budget: BudgetSpec = budget.parse().map_err(usage)?;
            let game = load_game(&game)?;
            let w = make_weights(family, game.player_count())
                .map_err(|e| CliError::Runtime(anyhow!(e)))?;
            let m = budget.resolve(game.player_count());
            let report = spec
                .run(&game, &w, m, cli.seed.unwrap_or(0))
                .map_err(|e| CliError::Runtime(anyhow!(e)))?;
            let json =
                serde_json::to_string_pretty(&report).map_err(|e| CliError::Runtime(anyhow!(e)))?;
            match out {
                Some(path) => {
                    std::fs::write(&path, json + "\n")
                        .with_context(|| format!("writing {}", path.display()))?;
                    println!("wrote report to {}", path.display());
                }
                None => println!("{json}"),
            }
            Ok(())
        }
        Command::Bench { config, out } => {
            let mut cfg = BenchmarkConfig::load_from_path(&config)
                .map_err(|e| CliError::Runtime(anyhow!(e)))?;
            if let Some(seed) = cli.seed {
                cfg.master_seed = seed;
            }
            let out = out
                .or_else(|| cfg.output.clone().map(PathBuf::from))
                .ok_or_else(|| usage("no output path: pass --out or set `output` in the config"))?;
            let records = run_benchmark(&cfg, cli.threads.max(1))
                .map_err(|e| CliError::Runtime(anyhow!(e)))?;
            write_records(&out, &records).map_err(|e| CliError::Runtime(anyhow!(e)))?;
            println!("wrote {} records to {}", records.len(), out.display());
            Ok(())
        }
        Command::Validate => validate().map_err(CliError::Runtime),
    }
}

/// Cross-check the tree recursion against the enumeration oracle on the
/// bundled fixtures, plus the Shapley efficiency identity.
fn validate() -> anyhow::Result<()> {
    let fixtures = [
        ("stump", include_str!("../fixtures/stump.json")),
        ("two_player", include_str!("../fixtures/two_player.json")),
        ("forest", include_str!("../fixtures/forest.json")),
    ];
    let families = [
        WeightFamily::Shapley,
        WeightFamily::Banzhaf,
        WeightFamily::beta(2.0, 2.0),
        WeightFamily::weighted_banzhaf(0.7),
    ];
    let mut failures = 0usize;
    for (name, text) in fixtures {
        let config: GameConfig = serde_json::from_str(text)
            .with_context(|| format!("fixture {name} is not valid JSON"))?;
        let game = config.build()?;
        let n = game.player_count();
        for family in families {
            let w = make_weights(family, n)?;
            let fast = ground_truth(&game, &w)?;
            let slow = brute_force_values(&game, &w)?;
            let err = normalized_error(&fast, &slow).unwrap_or(f64::INFINITY);
            let max_diff = fast
                .iter()
                .zip(&slow)
                .map(|(a, b)| (a - b).abs())
                .fold(0.0f64, f64::max);
            let ok = max_diff < 1e-9;
            if !ok {
                failures += 1;
            }
            println!(
                "{}: {name} {family}: recursion vs enumeration max diff {max_diff:.2e} (normalized {err:.2e})",
                if ok { "ok" } else { "FAIL" },
            );
        }
        let w = make_weights(WeightFamily::Shapley, n)?;
        let phi = ground_truth(&game, &w)?;
        let gap = game.evaluate(&provalue_core::Subset::full(n))
            - game.evaluate(&provalue_core::Subset::empty());
        let eff = (phi.iter().sum::<f64>() - gap).abs();
        let ok = eff < 1e-9;
        if !ok {
            failures += 1;
        }
        println!(
            "{}: {name}: Shapley efficiency residual {eff:.2e}",
            if ok { "ok" } else { "FAIL" },
        );
    }
    if failures > 0 {
        Err(anyhow!("{failures} validation check(s) failed"))
    } else {
        println!("all fixture checks passed");
        Ok(())
    }
}
