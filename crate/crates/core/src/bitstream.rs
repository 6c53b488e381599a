//! ±1 bit-streams and their on-disk forms.
//!
//! Packed layout (little-endian), 40-byte header then payload:
//!
//! ```text
//! offset  size  field
//!      0     4  magic "TSDB"
//!      4     1  version (1)
//!      5     3  reserved, zero
//!      8     8  f_ck (f64, Hz)
//!     16     8  scale (f64, g per bit level)
//!     24     8  length (u64, bits)
//!     32     8  seed (u64)
//!     40     …  ceil(length / 8) bytes, bit i in byte i/8 at position i%8
//!               (LSB first); 1 = +1, 0 = −1
//! ```
//!
//! The text form is one `0`/`1` per line, preceded by `#` metadata lines.

use std::io::{BufRead, Read, Write};

use bitvec::prelude::*;

use crate::error::{Error, Result};

pub const MAGIC: &[u8; 4] = b"TSDB";
pub const FORMAT_VERSION: u8 = 1;
pub const HEADER_LEN: usize = 40;

/// Modulator output: a sequence of ±1 decisions at `f_ck`, each worth
/// `scale` g.
#[derive(Debug, Clone, PartialEq)]
pub struct BitStream {
    bits: BitVec<u64, Lsb0>,
    pub f_ck: f64,
    pub scale: f64,
    pub seed: u64,
}

impl BitStream {
    pub fn new(f_ck: f64, scale: f64, seed: u64) -> Self {
        Self::with_capacity(f_ck, scale, seed, 0)
    }

    pub fn with_capacity(f_ck: f64, scale: f64, seed: u64, n: usize) -> Self {
        Self {
            bits: BitVec::with_capacity(n),
            f_ck,
            scale,
            seed,
        }
    }

    pub fn from_bits(f_ck: f64, scale: f64, seed: u64, bits: impl IntoIterator<Item = i8>) -> Self {
        let mut s = Self::new(f_ck, scale, seed);
        for b in bits {
            s.push(b);
        }
        s
    }

    /// Appends a decision; any non-negative value counts as +1.
    #[inline]
    pub fn push(&mut self, bit: i8) {
        self.bits.push(bit >= 0);
    }

    pub fn len(&self) -> usize {
        self.bits.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bits.is_empty()
    }

    pub fn get(&self, i: usize) -> Option<i8> {
        self.bits.get(i).map(|b| if *b { 1 } else { -1 })
    }

    pub fn iter(&self) -> impl Iterator<Item = i8> + '_ {
        self.bits.iter().by_vals().map(|b| if b { 1 } else { -1 })
    }

    /// Bits scaled to acceleration (g).
    pub fn values(&self) -> impl Iterator<Item = f64> + '_ {
        let s = self.scale;
        self.iter().map(move |b| f64::from(b) * s)
    }

    pub fn to_values(&self) -> Vec<f64> {
        self.values().collect()
    }

    /// Mean of the ±1 sequence.
    pub fn mean(&self) -> f64 {
        if self.is_empty() {
            return 0.0;
        }
        let ones = self.bits.count_ones() as f64;
        (2.0 * ones - self.len() as f64) / self.len() as f64
    }

    pub fn count_high(&self) -> usize {
        self.bits.count_ones()
    }

    /// Duration covered by the stream (s).
    pub fn duration(&self) -> f64 {
        self.len() as f64 / self.f_ck
    }

    pub fn write_packed<W: Write>(&self, w: W) -> Result<()> {
        let mut pw = PackedWriter::new(w, self.f_ck, self.scale, self.len() as u64, self.seed)?;
        for b in self.iter() {
            pw.push(b)?;
        }
        pw.finish()?;
        Ok(())
    }

    pub fn read_packed<R: Read>(mut r: R) -> Result<Self> {
        let mut header = [0u8; HEADER_LEN];
        r.read_exact(&mut header)?;
        if &header[0..4] != MAGIC {
            return Err(Error::Format("bad magic".into()));
        }
        if header[4] != FORMAT_VERSION {
            return Err(Error::Format(format!("unsupported version {}", header[4])));
        }
        let f64_at = |o: usize| f64::from_le_bytes(header[o..o + 8].try_into().unwrap());
        let u64_at = |o: usize| u64::from_le_bytes(header[o..o + 8].try_into().unwrap());
        let f_ck = f64_at(8);
        let scale = f64_at(16);
        let len = usize::try_from(u64_at(24))
            .map_err(|_| Error::Format("length does not fit in memory".into()))?;
        let seed = u64_at(32);

        let mut payload = vec![0u8; len.div_ceil(8)];
        r.read_exact(&mut payload)?;
        let mut bits: BitVec<u64, Lsb0> = BitVec::with_capacity(len);
        for i in 0..len {
            bits.push(payload[i / 8] >> (i % 8) & 1 == 1);
        }
        Ok(Self {
            bits,
            f_ck,
            scale,
            seed,
        })
    }

    pub fn write_text<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "# f_ck = {}", self.f_ck)?;
        writeln!(w, "# scale = {}", self.scale)?;
        writeln!(w, "# seed = {}", self.seed)?;
        for b in self.iter() {
            w.write_all(if b > 0 { b"1\n" } else { b"0\n" })?;
        }
        Ok(())
    }

    pub fn read_text<R: BufRead>(r: R) -> Result<Self> {
        let mut s = Self::new(0.0, 1.0, 0);
        for (lineno, line) in r.lines().enumerate() {
            let line = line?;
            let line = line.trim();
            if let Some(meta) = line.strip_prefix('#') {
                if let Some((k, v)) = meta.split_once('=') {
                    let v = v.trim();
                    let bad = || Error::Format(format!("line {}: bad value {v:?}", lineno + 1));
                    match k.trim() {
                        "f_ck" => s.f_ck = v.parse().map_err(|_| bad())?,
                        "scale" => s.scale = v.parse().map_err(|_| bad())?,
                        "seed" => s.seed = v.parse().map_err(|_| bad())?,
                        _ => {}
                    }
                }
                continue;
            }
            match line {
                "" => {}
                "1" => s.push(1),
                "0" => s.push(-1),
                other => {
                    return Err(Error::Format(format!(
                        "line {}: expected 0 or 1, got {other:?}",
                        lineno + 1
                    )))
                }
            }
        }
        Ok(s)
    }
}

/// Writes a packed stream incrementally without holding it in memory.
pub struct PackedWriter<W: Write> {
    inner: W,
    expected: u64,
    written: u64,
    byte: u8,
}

impl<W: Write> PackedWriter<W> {
    pub fn new(mut inner: W, f_ck: f64, scale: f64, length: u64, seed: u64) -> Result<Self> {
        let mut header = [0u8; HEADER_LEN];
        header[0..4].copy_from_slice(MAGIC);
        header[4] = FORMAT_VERSION;
        header[8..16].copy_from_slice(&f_ck.to_le_bytes());
        header[16..24].copy_from_slice(&scale.to_le_bytes());
        header[24..32].copy_from_slice(&length.to_le_bytes());
        header[32..40].copy_from_slice(&seed.to_le_bytes());
        inner.write_all(&header)?;
        Ok(Self {
            inner,
            expected: length,
            written: 0,
            byte: 0,
        })
    }

    #[inline]
    pub fn push(&mut self, bit: i8) -> Result<()> {
        if self.written == self.expected {
            return Err(Error::Format("more bits than declared in header".into()));
        }
        if bit >= 0 {
            self.byte |= 1 << (self.written % 8);
        }
        self.written += 1;
        if self.written.is_multiple_of(8) {
            self.inner.write_all(&[self.byte])?;
            self.byte = 0;
        }
        Ok(())
    }

    pub fn finish(mut self) -> Result<W> {
        if self.written != self.expected {
            return Err(Error::Format(format!(
                "declared {} bits, wrote {}",
                self.expected, self.written
            )));
        }
        if !self.written.is_multiple_of(8) {
            self.inner.write_all(&[self.byte])?;
        }
        self.inner.flush()?;
        Ok(self.inner)
    }
}
