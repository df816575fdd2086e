//! Differential, linear and avalanche profiles of a bijective table.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::sbox::{BitPermutation, SBox};

/// Largest word width for which the `N x N` tables are built.
pub const MAX_SPECTRAL_BITS: u32 = 12;

fn permutation(s: &SBox) -> Result<BitPermutation> {
    let p = s.bit_permutation()?;
    if p.bits() > MAX_SPECTRAL_BITS {
        return Err(Error::TableTooLarge { n: p.len(), max: 1 << MAX_SPECTRAL_BITS });
    }
    Ok(p)
}

fn table_csv<T: std::fmt::Display>(n: usize, cells: &[T]) -> String {
    let mut out = String::new();
    for row in cells.chunks(n) {
        for (i, v) in row.iter().enumerate() {
            if i > 0 {
                out.push(',');
            }
            let _ = write!(out, "{v}");
        }
        out.push('\n');
    }
    out
}

/// Difference distribution table: `ddt[a][b] = #{x : S(x) ^ S(x ^ a) = b}`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Ddt {
    n: usize,
    table: Vec<u32>,
    delta_uniformity: u32,
}

impl Ddt {
    pub fn size(&self) -> usize {
        self.n
    }

    pub fn get(&self, a: usize, b: usize) -> u32 {
        self.table[a * self.n + b]
    }

    pub fn row(&self, a: usize) -> &[u32] {
        &self.table[a * self.n..(a + 1) * self.n]
    }

    /// Largest entry over all nonzero input differences.
    pub fn delta_uniformity(&self) -> u32 {
        self.delta_uniformity
    }

    pub fn to_csv(&self) -> String {
        table_csv(self.n, &self.table)
    }
}

pub fn compute_ddt(s: &SBox) -> Result<Ddt> {
    let p = permutation(s)?;
    Ok(ddt_of(&p))
}

pub(crate) fn ddt_of(p: &BitPermutation) -> Ddt {
    let n = p.len();
    let mut table = vec![0u32; n * n];
    for a in 0..n {
        let row = &mut table[a * n..(a + 1) * n];
        for x in 0..n {
            let b = p.apply(x) ^ p.apply(x ^ a);
            row[b as usize] += 1;
        }
    }
    let delta_uniformity = table[n..].iter().copied().max().unwrap_or(0);
    Ddt { n, table, delta_uniformity }
}

/// Linear approximation table of signed correlations,
/// `lat[a][b] = sum_x (-1)^(<a, x> ^ <b, S(x)>)`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Lat {
    n: usize,
    table: Vec<i32>,
    max_abs_bias: u32,
}

impl Lat {
    pub fn size(&self) -> usize {
        self.n
    }

    pub fn get(&self, a: usize, b: usize) -> i32 {
        self.table[a * self.n + b]
    }

    /// Largest `|lat[a][b]|` over nonzero output masks.
    pub fn max_abs_bias(&self) -> u32 {
        self.max_abs_bias
    }

    /// Distance to the nearest affine function among all component functions.
    pub fn nonlinearity(&self) -> u32 {
        (self.n as u32 - self.max_abs_bias) / 2
    }

    pub fn to_csv(&self) -> String {
        table_csv(self.n, &self.table)
    }
}

/// In-place fast Walsh-Hadamard transform.
fn walsh_hadamard(v: &mut [i32]) {
    let n = v.len();
    let mut h = 1;
    while h < n {
        for block in (0..n).step_by(2 * h) {
            for i in block..block + h {
                let (a, b) = (v[i], v[i + h]);
                v[i] = a + b;
                v[i + h] = a - b;
            }
        }
        h *= 2;
    }
}

pub fn compute_lat(s: &SBox) -> Result<Lat> {
    let p = permutation(s)?;
    let n = p.len();
    let mut table = vec![0i32; n * n];
    let mut spectrum = vec![0i32; n];
    // One transform per output mask b fills column b.
    for b in 0..n as u32 {
        for (x, slot) in spectrum.iter_mut().enumerate() {
            *slot = if (b & p.apply(x)).count_ones() & 1 == 0 { 1 } else { -1 };
        }
        walsh_hadamard(&mut spectrum);
        for (a, &w) in spectrum.iter().enumerate() {
            table[a * n + b as usize] = w;
        }
    }
    let max_abs_bias =
        (0..n).flat_map(|a| (1..n).map(move |b| a * n + b)).map(|i| table[i].unsigned_abs()).max().unwrap_or(0);
    Ok(Lat { n, table, max_abs_bias })
}

/// Summary of an avalanche matrix.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AvalancheSummary {
    pub min: f64,
    pub mean: f64,
    pub max: f64,
}

/// `probs[i][j]`: probability that output bit `j` flips when input bit `i`
/// flips, over all inputs.
#[derive(Debug, Clone, PartialEq)]
pub struct AvalancheMatrix {
    bits: usize,
    probs: Vec<f64>,
}

impl AvalancheMatrix {
    pub fn bits(&self) -> usize {
        self.bits
    }

    pub fn get(&self, input_bit: usize, output_bit: usize) -> f64 {
        self.probs[input_bit * self.bits + output_bit]
    }

    pub fn rows(&self) -> impl Iterator<Item = &[f64]> {
        self.probs.chunks(self.bits)
    }

    pub fn summary(&self) -> AvalancheSummary {
        let min = self.probs.iter().copied().fold(f64::INFINITY, f64::min);
        let max = self.probs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let mean = self.probs.iter().sum::<f64>() / self.probs.len() as f64;
        AvalancheSummary { min, mean, max }
    }
}

pub fn compute_avalanche(s: &SBox) -> Result<AvalancheMatrix> {
    let p = permutation(s)?;
    let n = p.len();
    let bits = p.bits() as usize;
    let mut probs = vec![0.0; bits * bits];
    for i in 0..bits {
        let mut flips = vec![0u32; bits];
        for x in 0..n {
            let d = p.apply(x) ^ p.apply(x ^ (1 << i));
            for (j, f) in flips.iter_mut().enumerate() {
                *f += (d >> j) & 1;
            }
        }
        for (j, f) in flips.into_iter().enumerate() {
            probs[i * bits + j] = f64::from(f) / n as f64;
        }
    }
    Ok(AvalancheMatrix { bits, probs })
}
