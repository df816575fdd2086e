//! The S-box data model: a square `d x d` table over `N = d^2` values.
//!
//! Cell `(row, col)` holds the image of the flat input `row * d + col`, so a
//! 16x16 AES table puts the high nibble on the row. Cells may be empty when a
//! table is loaded from text; the completeness check reports on that.

use std::fmt::Write as _;

use sha2::{Digest, Sha256};

use crate::error::{Error, Result};

/// Position of a cell inside the table.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct CellRef {
    pub row: usize,
    pub col: usize,
}

impl CellRef {
    pub fn new(row: usize, col: usize) -> Self {
        CellRef { row, col }
    }

    /// Flat input value addressed by this cell in a table of dimension `dim`.
    pub fn flat(self, dim: usize) -> usize {
        self.row * dim + self.col
    }

    pub fn from_flat(index: usize, dim: usize) -> Self {
        CellRef { row: index / dim, col: index % dim }
    }
}

/// A square substitution table, possibly with empty cells.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct SBox {
    dim: usize,
    cells: Vec<Option<u32>>,
}

impl SBox {
    /// Builds a table from row-major cells. `cells.len()` must be `dim * dim`
    /// and every present value must lie in `[0, dim * dim)`.
    pub fn new(dim: usize, cells: Vec<Option<u32>>) -> Result<Self> {
        if dim < 2 {
            return Err(Error::TooSmall(dim));
        }
        let n = dim * dim;
        if cells.len() != n {
            return Err(Error::NotSquare { rows: dim, row: cells.len() / dim, cols: cells.len() % dim });
        }
        for (i, v) in cells.iter().enumerate() {
            if let Some(v) = *v {
                if v as usize >= n {
                    let at = CellRef::from_flat(i, dim);
                    return Err(Error::ValueOutOfRange { row: at.row, col: at.col, value: v.to_string(), n });
                }
            }
        }
        Ok(SBox { dim, cells })
    }

    /// Builds a complete table from its lookup values `S(0), S(1), ...`.
    pub fn from_table(table: &[u32]) -> Result<Self> {
        let dim = integer_sqrt(table.len());
        if dim * dim != table.len() {
            return Err(Error::NotSquare { rows: dim, row: dim, cols: table.len() - dim * dim });
        }
        SBox::new(dim, table.iter().map(|&v| Some(v)).collect())
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Number of cells, `N = d^2`.
    pub fn len(&self) -> usize {
        self.cells.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cells.is_empty()
    }

    /// `log2(N)` when `N` is a power of two.
    pub fn bit_width(&self) -> Option<u32> {
        let n = self.len();
        n.is_power_of_two().then(|| n.trailing_zeros())
    }

    pub fn cell(&self, at: CellRef) -> Option<u32> {
        self.cells.get(at.flat(self.dim)).copied().flatten()
    }

    /// `S(x)`, or `None` for an empty cell or an input outside the table.
    pub fn lookup(&self, x: usize) -> Option<u32> {
        self.cells.get(x).copied().flatten()
    }

    pub fn cells(&self) -> &[Option<u32>] {
        &self.cells
    }

    /// The lookup values of a complete table.
    pub fn table(&self) -> Result<Vec<u32>> {
        self.cells.iter().map(|c| c.ok_or(Error::IncompleteBox)).collect()
    }

    /// Validates the table as a permutation of `N = 2^m` values.
    pub fn bit_permutation(&self) -> Result<BitPermutation> {
        let bits = self.bit_width().ok_or(Error::NotPowerOfTwo(self.len()))?;
        let table = self.table()?;
        if let Some(value) = first_duplicate(&table) {
            return Err(Error::DuplicateValue { value });
        }
        Ok(BitPermutation { bits, table })
    }

    /// SHA-256 over the canonical text, with empty cells rendered as blank
    /// tokens. Complete tables hash exactly what [`serialize_sbox`] writes.
    pub fn digest(&self) -> String {
        hex::encode(Sha256::digest(render(self).as_bytes()))
    }
}

/// A complete, bijective table over `m`-bit words.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BitPermutation {
    bits: u32,
    table: Vec<u32>,
}

impl BitPermutation {
    pub fn bits(&self) -> u32 {
        self.bits
    }

    pub fn len(&self) -> usize {
        self.table.len()
    }

    pub fn is_empty(&self) -> bool {
        self.table.is_empty()
    }

    #[inline]
    pub fn apply(&self, x: usize) -> u32 {
        self.table[x]
    }

    pub fn table(&self) -> &[u32] {
        &self.table
    }

    pub fn inverse(&self) -> BitPermutation {
        let mut inv = vec![0u32; self.table.len()];
        for (x, &y) in self.table.iter().enumerate() {
            inv[y as usize] = x as u32;
        }
        BitPermutation { bits: self.bits, table: inv }
    }
}

fn integer_sqrt(n: usize) -> usize {
    let mut d = (n as f64).sqrt() as usize;
    while d * d > n {
        d -= 1;
    }
    while (d + 1) * (d + 1) <= n {
        d += 1;
    }
    d
}

fn first_duplicate(table: &[u32]) -> Option<u32> {
    let mut seen = vec![false; table.len()];
    for &v in table {
        let slot = &mut seen[v as usize];
        if *slot {
            return Some(v);
        }
        *slot = true;
    }
    None
}

/// Parses the comma-separated text form of a table.
///
/// Each line is a row. Tokens are decimal, `0x`-prefixed hex, or blank for an
/// empty cell; spaces around tokens, CRLF endings and one trailing newline are
/// accepted.
pub fn parse_sbox(text: &str) -> Result<SBox> {
    let body = text.strip_suffix('\n').unwrap_or(text);
    let body = body.strip_suffix('\r').unwrap_or(body);
    if body.trim().is_empty() {
        return Err(Error::EmptyInput);
    }
    let lines: Vec<&str> = body.split('\n').map(|l| l.strip_suffix('\r').unwrap_or(l)).collect();
    let dim = lines.len();
    let n = dim * dim;

    let mut cells = Vec::with_capacity(n);
    for (row, line) in lines.iter().enumerate() {
        let tokens: Vec<&str> = line.split(',').collect();
        if tokens.len() != dim {
            return Err(Error::NotSquare { rows: dim, row, cols: tokens.len() });
        }
        for (col, token) in tokens.iter().enumerate() {
            cells.push(parse_token(token.trim(), row, col, n)?);
        }
    }
    SBox::new(dim, cells)
}

fn parse_token(token: &str, row: usize, col: usize, n: usize) -> Result<Option<u32>> {
    if token.is_empty() {
        return Ok(None);
    }
    let bad = || Error::BadToken { row, col, token: token.to_string() };
    let out_of_range = || Error::ValueOutOfRange { row, col, value: token.to_string(), n };

    let (negative, magnitude) = match token.strip_prefix('-') {
        Some(rest) => (true, rest),
        None => (false, token.strip_prefix('+').unwrap_or(token)),
    };
    let (digits, radix) = match magnitude.strip_prefix("0x").or_else(|| magnitude.strip_prefix("0X")) {
        Some(hex) => (hex, 16),
        None => (magnitude, 10),
    };
    if digits.is_empty() || !digits.chars().all(|c| c.is_digit(radix)) {
        return Err(bad());
    }
    // Well-formed digits that overflow are still out of range rather than bad.
    let value = u64::from_str_radix(digits, radix).map_err(|_| out_of_range())?;
    if negative && value != 0 {
        return Err(out_of_range());
    }
    if value >= n as u64 {
        return Err(out_of_range());
    }
    Ok(Some(value as u32))
}

fn render(s: &SBox) -> String {
    let mut out = String::with_capacity(s.len() * 4);
    for (row, chunk) in s.cells.chunks(s.dim).enumerate() {
        if row > 0 {
            out.push('\n');
        }
        for (col, cell) in chunk.iter().enumerate() {
            if col > 0 {
                out.push(',');
            }
            if let Some(v) = cell {
                let _ = write!(out, "{v}");
            }
        }
    }
    out
}

/// Writes `d` lines of `d` comma-separated decimal values, LF-separated.
pub fn serialize_sbox(s: &SBox) -> Result<String> {
    if let Some(i) = s.cells.iter().position(Option::is_none) {
        let at = CellRef::from_flat(i, s.dim);
        return Err(Error::EmptyCell { row: at.row, col: at.col });
    }
    Ok(render(s))
}

/// True iff every cell holds a value.
pub fn check_completeness(s: &SBox) -> bool {
    s.cells.iter().all(Option::is_some)
}

/// True iff no value appears twice. Range checks at construction make this
/// equivalent to the table being a permutation of `[0, N)`.
pub fn check_non_contradiction(s: &SBox) -> Result<bool> {
    let table = s.table()?;
    Ok(first_duplicate(&table).is_none())
}

/// Builds the inverse table: for every cell holding `v`, the inverse cell at
/// flat index `v` receives the cell's own flat index.
pub fn invert_sbox(s: &SBox) -> Result<SBox> {
    let table = s.table()?;
    let mut inv: Vec<Option<u32>> = vec![None; table.len()];
    for (x, &v) in table.iter().enumerate() {
        let slot = &mut inv[v as usize];
        if slot.is_some() {
            return Err(Error::DuplicateValue { value: v });
        }
        *slot = Some(x as u32);
    }
    SBox::new(s.dim, inv)
}
