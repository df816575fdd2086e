//! Inputs shared by the benchmarks.

use sboxlab_core::SBox;

/// Deterministic byte stream from a xorshift generator.
pub fn stream(len: usize, seed: u64) -> Vec<u8> {
    let mut state = seed | 1;
    (0..len)
        .map(|_| {
            state ^= state << 13;
            state ^= state >> 7;
            state ^= state << 17;
            (state >> 24) as u8
        })
        .collect()
}

/// A pseudo-random permutation of `0..n`, shuffled with the same generator.
pub fn random_box(n: usize, seed: u64) -> SBox {
    let mut table: Vec<u32> = (0..n as u32).collect();
    let noise = stream(n * 8, seed);
    for i in (1..n).rev() {
        let word = u64::from_le_bytes(noise[i * 8..i * 8 + 8].try_into().unwrap());
        table.swap(i, (word % (i as u64 + 1)) as usize);
    }
    SBox::from_table(&table).expect("square permutation")
}
