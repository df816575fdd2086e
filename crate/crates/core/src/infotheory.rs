//! Plug-in entropy and mutual information over finite alphabets, in bits.
//!
//! Zero-probability outcomes contribute nothing (`0 * log2 0 = 0`). No
//! smoothing is applied to empirical estimates.

use std::collections::BTreeMap;

use crate::error::{Error, Result};

/// Allowed drift of a probability total away from 1.
pub const NORMALIZATION_TOLERANCE: f64 = 1e-9;

fn validate(probs: &[f64]) -> Result<()> {
    if probs.is_empty() {
        return Err(Error::InvalidDistribution("empty alphabet".into()));
    }
    if let Some(p) = probs.iter().find(|p| !p.is_finite() || **p < 0.0) {
        return Err(Error::InvalidDistribution(format!("probability {p} is not a finite non-negative value")));
    }
    let total: f64 = probs.iter().sum();
    if (total - 1.0).abs() > NORMALIZATION_TOLERANCE {
        return Err(Error::InvalidDistribution(format!("probabilities sum to {total}")));
    }
    Ok(())
}

fn plogp_sum(probs: &[f64]) -> f64 {
    -probs.iter().filter(|&&p| p > 0.0).map(|&p| p * p.log2()).sum::<f64>()
}

fn normalize(counts: &[u64]) -> Result<Vec<f64>> {
    let total: u64 = counts.iter().sum();
    if total == 0 {
        return Err(Error::EmptySample);
    }
    let total = total as f64;
    Ok(counts.iter().map(|&c| c as f64 / total).collect())
}

/// Probability mass over the outcomes `0..len`.
#[derive(Debug, Clone, PartialEq)]
pub struct Distribution {
    probs: Vec<f64>,
}

impl Distribution {
    pub fn new(probs: Vec<f64>) -> Result<Self> {
        validate(&probs)?;
        Ok(Distribution { probs })
    }

    pub fn uniform(len: usize) -> Result<Self> {
        if len == 0 {
            return Err(Error::InvalidDistribution("empty alphabet".into()));
        }
        Ok(Distribution { probs: vec![1.0 / len as f64; len] })
    }

    pub fn from_counts(counts: &[u64]) -> Result<Self> {
        Ok(Distribution { probs: normalize(counts)? })
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn len(&self) -> usize {
        self.probs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.probs.is_empty()
    }
}

/// Joint mass `P(x, y)` stored row-major, rows indexing `x`.
#[derive(Debug, Clone, PartialEq)]
pub struct JointDistribution {
    rows: usize,
    cols: usize,
    probs: Vec<f64>,
}

impl JointDistribution {
    pub fn new(rows: usize, cols: usize, probs: Vec<f64>) -> Result<Self> {
        if probs.len() != rows * cols {
            return Err(Error::InvalidDistribution(format!("{} cells for a {rows}x{cols} table", probs.len())));
        }
        validate(&probs)?;
        Ok(JointDistribution { rows, cols, probs })
    }

    pub fn from_counts(rows: usize, cols: usize, counts: &[u64]) -> Result<Self> {
        if counts.len() != rows * cols {
            return Err(Error::InvalidDistribution(format!("{} cells for a {rows}x{cols} table", counts.len())));
        }
        Ok(JointDistribution { rows, cols, probs: normalize(counts)? })
    }

    /// The product distribution `P(x) P(y)`.
    pub fn product(x: &Distribution, y: &Distribution) -> Self {
        let probs = x.probs.iter().flat_map(|&px| y.probs.iter().map(move |&py| px * py)).collect();
        JointDistribution { rows: x.len(), cols: y.len(), probs }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn get(&self, row: usize, col: usize) -> f64 {
        self.probs[row * self.cols + col]
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    /// Marginal over rows, `P(x)`.
    pub fn row_marginal(&self) -> Distribution {
        let probs = self.probs.chunks(self.cols).map(|r| r.iter().sum()).collect();
        Distribution { probs }
    }

    /// Marginal over columns, `P(y)`.
    pub fn col_marginal(&self) -> Distribution {
        let mut probs = vec![0.0; self.cols];
        for row in self.probs.chunks(self.cols) {
            for (acc, p) in probs.iter_mut().zip(row) {
                *acc += p;
            }
        }
        Distribution { probs }
    }

    pub fn transpose(&self) -> Self {
        let mut probs = vec![0.0; self.probs.len()];
        for r in 0..self.rows {
            for c in 0..self.cols {
                probs[c * self.rows + r] = self.probs[r * self.cols + c];
            }
        }
        JointDistribution { rows: self.cols, cols: self.rows, probs }
    }
}

/// Counts of observed outcomes, feeding [`estimate_distribution`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FrequencyCounter<K: Ord> {
    counts: BTreeMap<K, u64>,
    total: u64,
}

impl<K: Ord> Default for FrequencyCounter<K> {
    fn default() -> Self {
        FrequencyCounter { counts: BTreeMap::new(), total: 0 }
    }
}

impl<K: Ord> FrequencyCounter<K> {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add(&mut self, key: K) {
        self.add_many(key, 1);
    }

    pub fn add_many(&mut self, key: K, count: u64) {
        *self.counts.entry(key).or_insert(0) += count;
        self.total += count;
    }

    pub fn total(&self) -> u64 {
        self.total
    }

    pub fn count(&self, key: &K) -> u64 {
        self.counts.get(key).copied().unwrap_or(0)
    }

    /// Outcomes in ascending key order with their counts.
    pub fn iter(&self) -> impl Iterator<Item = (&K, u64)> {
        self.counts.iter().map(|(k, &c)| (k, c))
    }
}

impl<K: Ord> FromIterator<K> for FrequencyCounter<K> {
    fn from_iter<I: IntoIterator<Item = K>>(iter: I) -> Self {
        let mut c = FrequencyCounter::new();
        for k in iter {
            c.add(k);
        }
        c
    }
}

/// Relative frequencies of the observed outcomes, in ascending key order.
pub fn estimate_distribution<K: Ord>(samples: &FrequencyCounter<K>) -> Result<Distribution> {
    let counts: Vec<u64> = samples.counts.values().copied().collect();
    Distribution::from_counts(&counts)
}

/// `H(X) = -sum p log2 p`.
pub fn entropy(d: &Distribution) -> f64 {
    plogp_sum(&d.probs)
}

/// `H(X, Y) = -sum sum p_ij log2 p_ij`.
pub fn joint_entropy(j: &JointDistribution) -> f64 {
    plogp_sum(&j.probs)
}

/// `H(X | Y) = H(X, Y) - H(Y)`, with `Y` the column variable.
pub fn conditional_entropy(j: &JointDistribution) -> f64 {
    joint_entropy(j) - entropy(&j.col_marginal())
}

/// `I(X; Y) = H(X) + H(Y) - H(X, Y)`.
pub fn mutual_information(j: &JointDistribution) -> f64 {
    entropy(&j.row_marginal()) + entropy(&j.col_marginal()) - joint_entropy(j)
}

/// Empirical byte entropy of a stream, in bits per byte.
pub fn byte_entropy(data: &[u8]) -> Result<f64> {
    let mut counts = [0u64; 256];
    for &b in data {
        counts[b as usize] += 1;
    }
    Ok(entropy(&Distribution::from_counts(&counts)?))
}
