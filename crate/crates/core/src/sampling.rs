//! Coalitions and size-stratified sampling.
//!
//! A `Subset` is a coalition stored as a 128-bit mask. A `SizeDistribution`
//! assigns a probability to each coalition size and is uniform within a size,
//! so the density of any particular subset is `q(|S|) / C(n, |S|)` and can be
//! evaluated in constant time. Sampling draws the size first, then a uniform
//! subset of that size. All randomness comes from a counter-based generator
//! seeded per batch, so identical inputs reproduce identical batches.

use std::collections::HashSet;
use std::fmt;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::de::Error as _;
use serde::{Deserialize, Deserializer, Serialize, Serializer};
use thiserror::Error;

use crate::numeric::{ln_binomial, log_sum_exp};
use crate::weights::WeightVector;

/// Widest supported coalition (bitmask width).
pub const MAX_PLAYERS: usize = 128;
/// Largest player count for exhaustive enumeration.
pub const MAX_ENUMERATION: usize = 25;

#[derive(Debug, Error)]
pub enum SamplingError {
    #[error("player index {0} exceeds the supported maximum of {MAX_PLAYERS}")]
    PlayerTooLarge(usize),
    #[error("enumeration supports at most {MAX_ENUMERATION} players, got {0}")]
    TooManyPlayers(usize),
    #[error("subset density is zero for size {0}")]
    ZeroDensity(usize),
    #[error("size probabilities must be nonnegative and sum to 1, got sum {0}")]
    NotNormalized(f64),
    #[error("size probability vector must have length n+1 = {expected}, got {got}")]
    BadLength { expected: usize, got: usize },
    #[error("sample count must be at least 1")]
    EmptyRequest,
    #[error("cannot draw {m} distinct subsets without replacement from n={n} players")]
    InfeasibleWithoutReplacement { m: usize, n: usize },
}

/// A coalition `S` of players `0..n`, with cached cardinality.
#[derive(Clone, Copy, PartialEq, Eq, Hash, Default)]
pub struct Subset {
    bits: u128,
    size: u32,
}

impl Subset {
    pub fn empty() -> Self {
        Subset::default()
    }

    /// The full coalition over `n` players. Panics if `n > 128`.
    pub fn full(n: usize) -> Self {
        assert!(n <= MAX_PLAYERS);
        if n == 0 {
            Subset::empty()
        } else {
            Subset::from_bits(u128::MAX >> (MAX_PLAYERS - n))
        }
    }

    pub fn from_bits(bits: u128) -> Self {
        Subset {
            bits,
            size: bits.count_ones(),
        }
    }

    /// Build from 0-based player indices.
    pub fn from_players(players: &[usize]) -> Result<Self, SamplingError> {
        let mut bits = 0u128;
        for &p in players {
            if p >= MAX_PLAYERS {
                return Err(SamplingError::PlayerTooLarge(p));
            }
            bits |= 1 << p;
        }
        Ok(Subset::from_bits(bits))
    }

    pub fn contains(&self, player: usize) -> bool {
        player < MAX_PLAYERS && self.bits >> player & 1 == 1
    }

    /// The coalition with `player` added.
    pub fn with(&self, player: usize) -> Self {
        debug_assert!(player < MAX_PLAYERS);
        Subset::from_bits(self.bits | 1 << player)
    }

    /// The coalition with `player` removed.
    pub fn without(&self, player: usize) -> Self {
        debug_assert!(player < MAX_PLAYERS);
        Subset::from_bits(self.bits & !(1 << player))
    }

    pub fn len(&self) -> usize {
        self.size as usize
    }

    pub fn is_empty(&self) -> bool {
        self.size == 0
    }

    pub fn bits(&self) -> u128 {
        self.bits
    }

    /// Member players in ascending order (0-based).
    pub fn players(&self) -> impl Iterator<Item = usize> + '_ {
        (0..MAX_PLAYERS).filter(move |&p| self.contains(p))
    }
}

impl fmt::Debug for Subset {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_set().entries(self.players()).finish()
    }
}

// Subsets travel in JSON as sorted 1-based player index arrays.
impl Serialize for Subset {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.collect_seq(self.players().map(|p| p as u64 + 1))
    }
}

impl<'de> Deserialize<'de> for Subset {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let one_based = Vec::<u64>::deserialize(deserializer)?;
        let mut bits = 0u128;
        for p in one_based {
            if p == 0 || p > MAX_PLAYERS as u64 {
                return Err(D::Error::custom(format!(
                    "player index {p} outside 1..={MAX_PLAYERS}"
                )));
            }
            bits |= 1 << (p - 1);
        }
        Ok(Subset::from_bits(bits))
    }
}

/// A distribution over coalition sizes `0..=n`, uniform within each size.
#[derive(Debug, Clone, PartialEq)]
pub struct SizeDistribution {
    n: usize,
    log_q: Vec<f64>,
    q: Vec<f64>,
}

impl SizeDistribution {
    /// Normalize raw log weights over sizes `0..=n`; `-inf` marks zero mass.
    pub fn from_log_weights(n: usize, raw: Vec<f64>) -> Self {
        assert_eq!(raw.len(), n + 1);
        let total = log_sum_exp(&raw);
        assert!(total.is_finite(), "size distribution has no mass");
        let log_q: Vec<f64> = raw.iter().map(|&w| w - total).collect();
        let q = log_q.iter().map(|&w| w.exp()).collect();
        SizeDistribution { n, log_q, q }
    }

    /// Build from linear-space size probabilities; must already sum to 1.
    pub fn from_size_probs(n: usize, probs: &[f64]) -> Result<Self, SamplingError> {
        if probs.len() != n + 1 {
            return Err(SamplingError::BadLength {
                expected: n + 1,
                got: probs.len(),
            });
        }
        let sum: f64 = probs.iter().sum();
        if probs.iter().any(|&p| p < 0.0) || (sum - 1.0).abs() > 1e-10 {
            return Err(SamplingError::NotNormalized(sum));
        }
        let log_q = probs
            .iter()
            .map(|&p| if p == 0.0 { f64::NEG_INFINITY } else { p.ln() })
            .collect();
        Ok(SizeDistribution {
            n,
            log_q,
            q: probs.to_vec(),
        })
    }

    /// The distribution that is uniform over all `2^n` subsets.
    pub fn uniform_subsets(n: usize) -> Self {
        let raw = (0..=n).map(|s| ln_binomial(n, s)).collect();
        SizeDistribution::from_log_weights(n, raw)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// `Pr(|S| = s)`.
    pub fn size_prob(&self, s: usize) -> f64 {
        self.q[s]
    }

    /// `ln Pr(|S| = s)`; `-inf` where the size has no mass.
    pub fn log_size_prob(&self, s: usize) -> f64 {
        self.log_q[s]
    }

    /// Log density of one subset of size `s`, or `None` if the size has no mass.
    pub fn log_density(&self, s: usize) -> Option<f64> {
        if self.log_q[s] == f64::NEG_INFINITY {
            None
        } else {
            Some(self.log_q[s] - ln_binomial(self.n, s))
        }
    }

    /// Density `D(S) = q(|S|) / C(n, |S|)` of a particular subset.
    pub fn subset_density(&self, set: &Subset) -> Result<f64, SamplingError> {
        let s = set.len();
        self.log_density(s)
            .map(f64::exp)
            .ok_or(SamplingError::ZeroDensity(s))
    }

    /// `|sum_s q(s) - 1|`.
    pub fn normalization_residual(&self) -> f64 {
        (self.q.iter().sum::<f64>() - 1.0).abs()
    }

    pub(crate) fn sample_size<R: Rng>(&self, rng: &mut R) -> usize {
        let u: f64 = rng.random();
        let mut acc = 0.0;
        for (s, &qs) in self.q.iter().enumerate() {
            acc += qs;
            if u < acc {
                return s;
            }
        }
        // Rounding pushed the cumulative sum below 1; take the last massive size.
        self.q
            .iter()
            .rposition(|&qs| qs > 0.0)
            .expect("distribution has mass")
    }
}

/// The sampling distribution that minimizes the learned-function error bound:
/// per-subset weight `sqrt(p_s^2 (1 - s/n) + p_{s-1}^2 s/n)`.
pub fn default_msr_distribution(w: &WeightVector) -> SizeDistribution {
    let n = w.n();
    let raw = (0..=n)
        .map(|s| {
            let frac = s as f64 / n as f64;
            let mut terms = Vec::with_capacity(2);
            if let Some(lp) = w.log_p_at(s as i64) {
                if frac < 1.0 {
                    terms.push(2.0 * lp + (1.0 - frac).ln());
                }
            }
            if let Some(lp) = w.log_p_at(s as i64 - 1) {
                if frac > 0.0 {
                    terms.push(2.0 * lp + frac.ln());
                }
            }
            ln_binomial(n, s) + 0.5 * log_sum_exp(&terms)
        })
        .collect();
    SizeDistribution::from_log_weights(n, raw)
}

/// An ordered batch of sampled coalitions.
#[derive(Debug, Clone)]
pub struct SampleBatch {
    pub subsets: Vec<Subset>,
    pub replacement: bool,
    pub distribution: SizeDistribution,
    pub seed: u64,
}

/// Uniform random subset of size `s` drawn from `candidates` (partial shuffle).
pub(crate) fn random_fixed_size_subset<R: Rng>(
    rng: &mut R,
    candidates: &mut [usize],
    s: usize,
) -> Subset {
    debug_assert!(s <= candidates.len());
    let mut bits = 0u128;
    for k in 0..s {
        let j = rng.random_range(k..candidates.len());
        candidates.swap(k, j);
        bits |= 1 << candidates[k];
    }
    Subset::from_bits(bits)
}

pub(crate) fn rng_from_seed(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Draw `m` subsets from `dist`, i.i.d. or distinct-by-rejection.
pub fn sample_subsets(
    dist: &SizeDistribution,
    m: usize,
    replacement: bool,
    seed: u64,
) -> Result<SampleBatch, SamplingError> {
    if m == 0 {
        return Err(SamplingError::EmptyRequest);
    }
    let n = dist.n();
    if !replacement && (n > MAX_ENUMERATION || m as u128 > 1u128 << n) {
        return Err(SamplingError::InfeasibleWithoutReplacement { m, n });
    }
    let mut rng = rng_from_seed(seed);
    let mut candidates: Vec<usize> = (0..n).collect();
    let mut subsets = Vec::with_capacity(m);
    if replacement {
        for _ in 0..m {
            let s = dist.sample_size(&mut rng);
            subsets.push(random_fixed_size_subset(&mut rng, &mut candidates, s));
        }
    } else {
        let mut seen = HashSet::with_capacity(m);
        let mut attempts = 0usize;
        let max_attempts = m.saturating_mul(1_000).max(1 << 16);
        while subsets.len() < m {
            attempts += 1;
            if attempts > max_attempts {
                return Err(SamplingError::InfeasibleWithoutReplacement { m, n });
            }
            let s = dist.sample_size(&mut rng);
            let subset = random_fixed_size_subset(&mut rng, &mut candidates, s);
            if seen.insert(subset.bits()) {
                subsets.push(subset);
            }
        }
    }
    Ok(SampleBatch {
        subsets,
        replacement,
        distribution: dist.clone(),
        seed,
    })
}

/// All `2^n` subsets in ascending bitmask order.
pub fn enumerate_subsets(n: usize) -> Result<impl Iterator<Item = Subset>, SamplingError> {
    if n > MAX_ENUMERATION {
        return Err(SamplingError::TooManyPlayers(n));
    }
    Ok((0..1u64 << n).map(|bits| Subset::from_bits(bits as u128)))
}

/// `count` uniformly random permutations of `0..n`.
pub fn sample_permutations(n: usize, count: usize, seed: u64) -> Vec<Vec<usize>> {
    let mut rng = rng_from_seed(seed);
    (0..count)
        .map(|_| {
            let mut order: Vec<usize> = (0..n).collect();
            order.shuffle(&mut rng);
            order
        })
        .collect()
}
