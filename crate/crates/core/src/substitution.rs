//! Byte-stream substitution through a 16x16 table.

use std::io::{self, Read, Write};

use crate::error::{Error, Result};
use crate::sbox::{invert_sbox, SBox};

const CHUNK: usize = 64 * 1024;

/// A complete 256-entry table ready to substitute bytes.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ByteSubstitution {
    table: [u8; 256],
}

impl ByteSubstitution {
    pub fn new(s: &SBox) -> Result<Self> {
        if s.len() != 256 {
            return Err(Error::NotByteBox { n: s.len() });
        }
        let mut table = [0u8; 256];
        for (slot, v) in table.iter_mut().zip(s.table()?) {
            *slot = v as u8;
        }
        Ok(ByteSubstitution { table })
    }

    /// The table for undoing `s`; fails unless `s` is a bijection.
    pub fn inverse_of(s: &SBox) -> Result<Self> {
        if s.len() != 256 {
            return Err(Error::NotByteBox { n: s.len() });
        }
        ByteSubstitution::new(&invert_sbox(s)?)
    }

    #[inline]
    pub fn byte(&self, b: u8) -> u8 {
        self.table[b as usize]
    }

    pub fn apply_in_place(&self, buf: &mut [u8]) {
        for b in buf {
            *b = self.table[*b as usize];
        }
    }

    pub fn apply(&self, input: &[u8]) -> Vec<u8> {
        input.iter().map(|&b| self.table[b as usize]).collect()
    }

    /// Substitutes `reader` into `writer` in fixed-size chunks and returns the
    /// number of bytes processed.
    pub fn apply_reader<R: Read, W: Write>(&self, mut reader: R, mut writer: W) -> io::Result<u64> {
        let mut buf = vec![0u8; CHUNK];
        let mut total = 0u64;
        loop {
            let n = match reader.read(&mut buf) {
                Ok(0) => break,
                Ok(n) => n,
                Err(e) if e.kind() == io::ErrorKind::Interrupted => continue,
                Err(e) => return Err(e),
            };
            self.apply_in_place(&mut buf[..n]);
            writer.write_all(&buf[..n])?;
            total += n as u64;
        }
        writer.flush()?;
        Ok(total)
    }
}

/// `output[k] = S(input[k])` for every position.
pub fn apply_stream(s: &SBox, input: &[u8]) -> Result<Vec<u8>> {
    Ok(ByteSubstitution::new(s)?.apply(input))
}

/// Undoes [`apply_stream`] for a bijective table.
pub fn unapply_stream(s: &SBox, output: &[u8]) -> Result<Vec<u8>> {
    Ok(ByteSubstitution::inverse_of(s)?.apply(output))
}
