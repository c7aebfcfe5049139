//! Probabilistic weight vectors.
//!
//! A weight vector `p_0 .. p_{n-1}` assigns a weight to every coalition size
//! and must satisfy the normalization `sum_l C(n-1, l) * p_l = 1`. The four
//! supported families are Shapley, Banzhaf, beta-Shapley and weighted Banzhaf.
//! Weights are stored in log space so that ratios stay accurate for large `n`.

use std::fmt;
use std::str::FromStr;

use serde::de::Error as _;
use serde::{Deserialize, Deserializer, Serialize, Serializer};
use thiserror::Error;

use crate::numeric::{ln_binomial, ln_gamma, log_sum_exp};
use crate::sampling::Subset;

#[derive(Debug, Error)]
pub enum WeightError {
    #[error("invalid weight family: {0}")]
    InvalidParameter(String),
    #[error(
        "cannot parse weight family from {0:?}; expected shapley, banzhaf, beta:A,B or wbanzhaf:Q"
    )]
    Unparseable(String),
    #[error("player {player} out of range for n={n}")]
    PlayerOutOfRange { player: usize, n: usize },
}

/// A semi-value weight family.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum WeightFamily {
    Shapley,
    Banzhaf,
    /// Beta-Shapley with parameters alpha, beta >= 1.
    BetaShapley {
        alpha: f64,
        beta: f64,
    },
    /// Weighted Banzhaf with inclusion probability q in (0, 1).
    WeightedBanzhaf {
        q: f64,
    },
}

impl WeightFamily {
    pub fn beta(alpha: f64, beta: f64) -> Self {
        WeightFamily::BetaShapley { alpha, beta }
    }

    pub fn weighted_banzhaf(q: f64) -> Self {
        WeightFamily::WeightedBanzhaf { q }
    }

    fn validate(&self) -> Result<(), WeightError> {
        match *self {
            WeightFamily::Shapley | WeightFamily::Banzhaf => Ok(()),
            WeightFamily::BetaShapley { alpha, beta } => {
                if !(alpha.is_finite() && beta.is_finite() && alpha >= 1.0 && beta >= 1.0) {
                    Err(WeightError::InvalidParameter(format!(
                        "beta-Shapley requires alpha, beta >= 1, got alpha={alpha}, beta={beta}"
                    )))
                } else {
                    Ok(())
                }
            }
            WeightFamily::WeightedBanzhaf { q } => {
                if !(q.is_finite() && q > 0.0 && q < 1.0) {
                    Err(WeightError::InvalidParameter(format!(
                        "weighted Banzhaf requires q in (0,1), got q={q}"
                    )))
                } else {
                    Ok(())
                }
            }
        }
    }
}

impl fmt::Display for WeightFamily {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match *self {
            WeightFamily::Shapley => write!(f, "shapley"),
            WeightFamily::Banzhaf => write!(f, "banzhaf"),
            WeightFamily::BetaShapley { alpha, beta } => write!(f, "beta:{alpha},{beta}"),
            WeightFamily::WeightedBanzhaf { q } => write!(f, "wbanzhaf:{q}"),
        }
    }
}

impl FromStr for WeightFamily {
    type Err = WeightError;

    fn from_str(s: &str) -> Result<Self, WeightError> {
        let s = s.trim();
        let fail = || WeightError::Unparseable(s.to_string());
        let family = match s {
            "shapley" => WeightFamily::Shapley,
            "banzhaf" => WeightFamily::Banzhaf,
            _ => {
                let (head, args) = s.split_once(':').ok_or_else(fail)?;
                match head {
                    "beta" => {
                        let (a, b) = args.split_once(',').ok_or_else(fail)?;
                        WeightFamily::BetaShapley {
                            alpha: a.trim().parse().map_err(|_| fail())?,
                            beta: b.trim().parse().map_err(|_| fail())?,
                        }
                    }
                    "wbanzhaf" => WeightFamily::WeightedBanzhaf {
                        q: args.trim().parse().map_err(|_| fail())?,
                    },
                    _ => return Err(fail()),
                }
            }
        };
        family.validate()?;
        Ok(family)
    }
}

impl Serialize for WeightFamily {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for WeightFamily {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        s.parse().map_err(D::Error::custom)
    }
}

/// Probabilistic weights for a fixed player count, stored as `ln p_l`.
///
/// Queries outside `0..n` return weight exactly 0 (`p_{-1} = p_n = 0`), which
/// is the convention the size-distribution and coefficient formulas rely on.
#[derive(Debug, Clone)]
pub struct WeightVector {
    n: usize,
    log_p: Vec<f64>,
    family: WeightFamily,
}

/// Construct the weight vector of `family` for `n` players.
pub fn make_weights(family: WeightFamily, n: usize) -> Result<WeightVector, WeightError> {
    family.validate()?;
    if n == 0 {
        return Err(WeightError::InvalidParameter(
            "player count must be at least 1".into(),
        ));
    }
    let ln_beta = |a: f64, b: f64| ln_gamma(a) + ln_gamma(b) - ln_gamma(a + b);
    let log_p = (0..n)
        .map(|l| match family {
            WeightFamily::Shapley => -(n as f64).ln() - ln_binomial(n - 1, l),
            WeightFamily::Banzhaf => -((n - 1) as f64) * 2f64.ln(),
            WeightFamily::BetaShapley { alpha, beta } => {
                ln_beta(l as f64 + beta, (n - 1 - l) as f64 + alpha) - ln_beta(alpha, beta)
            }
            WeightFamily::WeightedBanzhaf { q } => {
                l as f64 * q.ln() + (n - 1 - l) as f64 * (1.0 - q).ln()
            }
        })
        .collect();
    Ok(WeightVector { n, log_p, family })
}

impl WeightVector {
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn family(&self) -> WeightFamily {
        self.family
    }

    /// Weight for coalition size `l`, with `p_{-1} = p_n = 0`.
    pub fn p(&self, l: i64) -> f64 {
        self.log_p_at(l).map_or(0.0, f64::exp)
    }

    /// `ln p_l`, or `None` where the boundary convention makes `p_l = 0`.
    pub fn log_p_at(&self, l: i64) -> Option<f64> {
        if l < 0 || l >= self.n as i64 {
            None
        } else {
            Some(self.log_p[l as usize])
        }
    }

    /// All in-range weights in linear space.
    pub fn probabilities(&self) -> Vec<f64> {
        self.log_p.iter().map(|&lp| lp.exp()).collect()
    }

    /// `|sum_l C(n-1, l) p_l - 1|`, evaluated via log-sum-exp.
    pub fn normalization_residual(&self) -> f64 {
        let terms: Vec<f64> = (0..self.n)
            .map(|l| ln_binomial(self.n - 1, l) + self.log_p[l])
            .collect();
        (log_sum_exp(&terms).exp() - 1.0).abs()
    }

    /// Signed coefficient of `v(S)` in the sample-reuse estimator:
    /// `p_{|S|-1}` when `player` is in `S`, `-p_{|S|}` otherwise.
    pub fn msr_coefficient(&self, set: &Subset, player: usize) -> Result<f64, WeightError> {
        if player >= self.n {
            return Err(WeightError::PlayerOutOfRange { player, n: self.n });
        }
        let s = set.len() as i64;
        if set.contains(player) {
            Ok(self.p(s - 1))
        } else {
            Ok(-self.p(s))
        }
    }
}
