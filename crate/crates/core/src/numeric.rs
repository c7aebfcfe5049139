//! Shared numeric helpers: log-gamma binomials, log-sum-exp, stable seed mixing.

/// Natural log of the gamma function.
pub(crate) fn ln_gamma(x: f64) -> f64 {
    libm::lgamma(x)
}

/// Natural log of the binomial coefficient C(n, k). Requires k <= n.
pub(crate) fn ln_binomial(n: usize, k: usize) -> f64 {
    debug_assert!(k <= n);
    if k == 0 || k == n {
        return 0.0;
    }
    ln_gamma(n as f64 + 1.0) - ln_gamma(k as f64 + 1.0) - ln_gamma((n - k) as f64 + 1.0)
}

/// log(sum(exp(x))) over a slice, tolerating `-inf` entries.
pub(crate) fn log_sum_exp(values: &[f64]) -> f64 {
    let max = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if max == f64::NEG_INFINITY {
        return f64::NEG_INFINITY;
    }
    let sum: f64 = values.iter().map(|v| (v - max).exp()).sum();
    max + sum.ln()
}

/// Precomputed table of ln C(a, b) for 0 <= b <= a <= n.
pub(crate) struct BinomTable {
    rows: Vec<Vec<f64>>,
}

impl BinomTable {
    pub(crate) fn new(n: usize) -> Self {
        let rows = (0..=n)
            .map(|a| (0..=a).map(|b| ln_binomial(a, b)).collect())
            .collect();
        BinomTable { rows }
    }

    pub(crate) fn ln(&self, a: usize, b: usize) -> f64 {
        self.rows[a][b]
    }
}

pub(crate) fn splitmix64(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9e3779b97f4a7c15);
    x = (x ^ (x >> 30)).wrapping_mul(0xbf58476d1ce4e5b9);
    x = (x ^ (x >> 27)).wrapping_mul(0x94d049bb133111eb);
    x ^ (x >> 31)
}

/// Fold a sequence of words into one seed. Stable across platforms and runs.
pub(crate) fn stable_mix(parts: &[u64]) -> u64 {
    let mut acc = 0x243f6a8885a308d3u64;
    for &p in parts {
        acc = splitmix64(acc ^ splitmix64(p));
    }
    acc
}

/// FNV-1a over bytes, for hashing identifiers into seeds.
pub(crate) fn fnv1a(bytes: &[u8]) -> u64 {
    let mut h = 0xcbf29ce484222325u64;
    for &b in bytes {
        h ^= b as u64;
        h = h.wrapping_mul(0x100000001b3);
    }
    h
}
