//! The AES S-box, the reference table every report is compared against.
//!
//! The table is derived here from GF(2^8) arithmetic rather than typed in;
//! the bundled text fixture is checked against this derivation in tests.

use crate::sbox::{parse_sbox, SBox};

/// The bundled fixture in the comma-separated text format.
pub const FIXTURE_TEXT: &str = include_str!("../fixtures/aes_sbox.txt");

const AFFINE_CONSTANT: u8 = 0x63;

/// Exponent and logarithm tables for GF(2^8) modulo `x^8 + x^4 + x^3 + x + 1`,
/// generated by powers of `x + 1` (0x03).
fn log_tables() -> ([u8; 256], [u8; 256]) {
    let mut exp = [0u8; 256];
    let mut log = [0u8; 256];
    let mut v: u8 = 1;
    for i in 0..255u8 {
        exp[i as usize] = v;
        log[v as usize] = i;
        // v *= 3, i.e. v ^ xtime(v)
        let xtime = (v << 1) ^ if v & 0x80 != 0 { 0x1b } else { 0 };
        v ^= xtime;
    }
    exp[255] = exp[0];
    (exp, log)
}

/// The 256 forward AES substitution values.
pub fn forward_table() -> [u8; 256] {
    let (exp, log) = log_tables();
    let mut out = [0u8; 256];
    for (x, slot) in out.iter_mut().enumerate() {
        let inv = if x == 0 { 0 } else { exp[(255 - log[x] as usize) % 255] };
        *slot =
            inv ^ inv.rotate_left(1) ^ inv.rotate_left(2) ^ inv.rotate_left(3) ^ inv.rotate_left(4) ^ AFFINE_CONSTANT;
    }
    out
}

/// The AES S-box as a 16x16 table.
pub fn sbox() -> SBox {
    let table: Vec<u32> = forward_table().iter().map(|&v| u32::from(v)).collect();
    SBox::from_table(&table).expect("generated AES table is well formed")
}

/// The bundled fixture, parsed.
pub fn fixture() -> SBox {
    parse_sbox(FIXTURE_TEXT).expect("bundled AES fixture parses")
}
