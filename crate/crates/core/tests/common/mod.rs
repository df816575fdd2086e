//! Reference computations for the integration tests. Nothing here calls into
//! the library's analysis code; each quantity is tabulated straight from its
//! definition.

#![allow(dead_code, clippy::needless_range_loop)]

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use sboxlab_core::SBox;

/// Carry-less multiply modulo `x^8 + x^4 + x^3 + x + 1`, bit by bit.
pub fn gf_mul(mut a: u8, mut b: u8) -> u8 {
    let mut acc = 0u8;
    while b != 0 {
        if b & 1 == 1 {
            acc ^= a;
        }
        let carry = a & 0x80 != 0;
        a <<= 1;
        if carry {
            a ^= 0x1b;
        }
        b >>= 1;
    }
    acc
}

/// Multiplicative inverse by exhaustive search; 0 maps to 0.
pub fn gf_inv(a: u8) -> u8 {
    if a == 0 {
        return 0;
    }
    (1..=255u8).find(|&b| gf_mul(a, b) == 1).expect("field element has an inverse")
}

/// The AES S-box from the bitwise affine map
/// `b'_i = b_i ^ b_{i+4} ^ b_{i+5} ^ b_{i+6} ^ b_{i+7} ^ c_i` (indices mod 8).
pub fn aes_oracle() -> Vec<u32> {
    const C: u8 = 0x63;
    (0..=255u8)
        .map(|x| {
            let b = gf_inv(x);
            let mut out = 0u8;
            for i in 0..8 {
                let bit = |k: usize| (b >> ((i + k) % 8)) & 1;
                let v = bit(0) ^ bit(4) ^ bit(5) ^ bit(6) ^ bit(7) ^ ((C >> i) & 1);
                out |= v << i;
            }
            u32::from(out)
        })
        .collect()
}

pub fn aes_oracle_box() -> SBox {
    SBox::from_table(&aes_oracle()).unwrap()
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn random_permutation(n: usize, rng: &mut ChaCha8Rng) -> Vec<u32> {
    let mut t: Vec<u32> = (0..n as u32).collect();
    t.shuffle(rng);
    t
}

pub fn random_box(n: usize, rng: &mut ChaCha8Rng) -> SBox {
    SBox::from_table(&random_permutation(n, rng)).unwrap()
}

pub fn random_bytes(len: usize, rng: &mut ChaCha8Rng) -> Vec<u8> {
    use rand::RngCore;
    let mut v = vec![0u8; len];
    rng.fill_bytes(&mut v);
    v
}

/// Which variables a brute-force independence run conditions on and measures.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Roles {
    InputOutput,
    OutputInput,
    OutputOutput,
    DiffInputOutput,
    DiffOutputInput,
    /// grouped by the full input difference
    DiffOutputOutput,
}

/// One `(context, conditioning word, target word)` observation.
pub type Sample = (u32, u32, u32);

/// All observations of the exhaustive universe for `roles`.
pub fn exhaustive_samples(table: &[u32], roles: Roles) -> Vec<Sample> {
    let n = table.len();
    let mut out = Vec::new();
    match roles {
        Roles::InputOutput | Roles::OutputInput | Roles::OutputOutput => {
            for x in 0..n {
                let (xi, y) = (x as u32, table[x]);
                out.push(match roles {
                    Roles::InputOutput => (0, xi, y),
                    Roles::OutputInput => (0, y, xi),
                    _ => (0, y, y),
                });
            }
        }
        _ => {
            for x in 0..n {
                for x2 in 0..n {
                    if x == x2 {
                        continue;
                    }
                    let dx = (x ^ x2) as u32;
                    let dy = table[x] ^ table[x2];
                    out.push(match roles {
                        Roles::DiffInputOutput => (0, dx, dy),
                        Roles::DiffOutputInput => (0, dy, dx),
                        _ => (dx, dy, dy),
                    });
                }
            }
        }
    }
    out
}

/// Brute-force record: `(mask, target bit, max deviation, mutual information)`.
pub type OracleRecord = (u32, u32, f64, f64);

/// Direct tabulation of every conditional probability. Patterns with fewer
/// than `min_support` samples are dropped; marginals use the retained samples.
pub fn brute_force(
    samples: &[Sample],
    bits: u32,
    r: u32,
    exclude_target_from_mask: bool,
    min_support: usize,
) -> Vec<OracleRecord> {
    let words = 1u32 << bits;
    let mut contexts: std::collections::BTreeMap<u32, Vec<&Sample>> = Default::default();
    for s in samples {
        contexts.entry(s.0).or_default().push(s);
    }

    let mut out = Vec::new();
    for mask in (0..words).filter(|m| m.count_ones() == r) {
        for j in 0..bits {
            if exclude_target_from_mask && (mask >> j) & 1 == 1 {
                continue;
            }
            let mut worst: f64 = 0.0;
            let mut joint_terms = 0.0;
            let mut total_kept = 0usize;
            for in_ctx in contexts.values() {
                let patterns: Vec<u32> = (0..words).filter(|v| v & !mask == 0).collect();
                let kept: Vec<(u32, Vec<&Sample>)> = patterns
                    .iter()
                    .map(|&p| (p, in_ctx.iter().copied().filter(|s| s.1 & mask == p).collect::<Vec<_>>()))
                    .filter(|(_, v)| v.len() >= min_support.max(1))
                    .collect();
                let n_kept: usize = kept.iter().map(|(_, v)| v.len()).sum();
                if n_kept == 0 {
                    continue;
                }
                let ones_kept = kept.iter().flat_map(|(_, v)| v.iter()).filter(|s| (s.2 >> j) & 1 == 1).count();
                let p_one = ones_kept as f64 / n_kept as f64;
                for (_, group) in &kept {
                    let ones = group.iter().filter(|s| (s.2 >> j) & 1 == 1).count();
                    let cond = ones as f64 / group.len() as f64;
                    worst = worst.max((cond - p_one).abs());
                    let p_pattern = group.len() as f64 / n_kept as f64;
                    for (count, p_bit) in [(group.len() - ones, 1.0 - p_one), (ones, p_one)] {
                        if count == 0 {
                            continue;
                        }
                        let p_cell = count as f64 / n_kept as f64;
                        joint_terms += n_kept as f64 * p_cell * (p_cell / (p_pattern * p_bit)).log2();
                    }
                }
                total_kept += n_kept;
            }
            if total_kept > 0 {
                out.push((mask, j, worst, joint_terms / total_kept as f64));
            }
        }
    }
    out
}

pub fn direct_ddt(table: &[u32]) -> Vec<Vec<u32>> {
    let n = table.len();
    let mut ddt = vec![vec![0u32; n]; n];
    for a in 0..n {
        for x in 0..n {
            ddt[a][(table[x] ^ table[x ^ a]) as usize] += 1;
        }
    }
    ddt
}

pub fn direct_lat(table: &[u32]) -> Vec<Vec<i32>> {
    let n = table.len();
    let parity = |v: u32| (v.count_ones() & 1) as i32;
    (0..n)
        .map(|a| {
            (0..n)
                .map(|b| (0..n).map(|x| 1 - 2 * (parity(a as u32 & x as u32) ^ parity(b as u32 & table[x]))).sum())
                .collect()
        })
        .collect()
}

/// Flip counts `#{x : bit j of S(x) ^ S(x ^ 2^i) is 1}`.
pub fn direct_avalanche_counts(table: &[u32], bits: usize) -> Vec<Vec<u32>> {
    (0..bits)
        .map(|i| {
            (0..bits)
                .map(|j| (0..table.len()).filter(|&x| ((table[x] ^ table[x ^ (1 << i)]) >> j) & 1 == 1).count() as u32)
                .collect()
        })
        .collect()
}
