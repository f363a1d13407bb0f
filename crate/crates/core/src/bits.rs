//! Packed bit strings.
//!
//! Bits are stored little-endian in 64-bit words: bit `i` lives in word
//! `i / 64` at position `i % 64`. Unused high bits of the last word are kept
//! zero so that word-level popcount and equality are exact.

use std::fmt;
use std::str::FromStr;

use rand::Rng;

use crate::error::{ensure_len, Error, Result};

/// Fixed-length binary word.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct BitString {
    words: Vec<u64>,
    len: usize,
}

impl BitString {
    pub fn zeros(len: usize) -> Self {
        BitString {
            words: vec![0; len.div_ceil(64)],
            len,
        }
    }

    pub fn ones(len: usize) -> Self {
        let mut s = BitString {
            words: vec![u64::MAX; len.div_ceil(64)],
            len,
        };
        s.clear_tail();
        s
    }

    /// Uniformly random string.
    pub fn random<R: Rng + ?Sized>(len: usize, rng: &mut R) -> Self {
        let mut s = BitString {
            words: (0..len.div_ceil(64)).map(|_| rng.random()).collect(),
            len,
        };
        s.clear_tail();
        s
    }

    pub fn from_bools(bits: &[bool]) -> Self {
        let mut s = BitString::zeros(bits.len());
        for (i, &b) in bits.iter().enumerate() {
            if b {
                s.set(i, true);
            }
        }
        s
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn words(&self) -> &[u64] {
        &self.words
    }

    #[inline]
    pub fn get(&self, i: usize) -> bool {
        assert!(i < self.len, "bit index {i} out of range {}", self.len);
        (self.words[i >> 6] >> (i & 63)) & 1 == 1
    }

    #[inline]
    pub fn set(&mut self, i: usize, value: bool) {
        assert!(i < self.len, "bit index {i} out of range {}", self.len);
        let mask = 1u64 << (i & 63);
        if value {
            self.words[i >> 6] |= mask;
        } else {
            self.words[i >> 6] &= !mask;
        }
    }

    #[inline]
    pub fn flip(&mut self, i: usize) {
        assert!(i < self.len, "bit index {i} out of range {}", self.len);
        self.words[i >> 6] ^= 1u64 << (i & 63);
    }

    /// Number of ones.
    pub fn weight(&self) -> usize {
        self.words.iter().map(|w| w.count_ones() as usize).sum()
    }

    pub fn parity(&self) -> bool {
        self.words.iter().fold(0u32, |acc, w| acc ^ w.count_ones()) & 1 == 1
    }

    pub fn xor(&self, other: &BitString) -> Result<BitString> {
        ensure_len(self.len, other.len)?;
        Ok(BitString {
            words: self
                .words
                .iter()
                .zip(&other.words)
                .map(|(a, b)| a ^ b)
                .collect(),
            len: self.len,
        })
    }

    pub fn xor_assign(&mut self, other: &BitString) -> Result<()> {
        ensure_len(self.len, other.len)?;
        for (a, b) in self.words.iter_mut().zip(&other.words) {
            *a ^= b;
        }
        Ok(())
    }

    pub fn iter(&self) -> impl Iterator<Item = bool> + '_ {
        (0..self.len).map(move |i| self.get(i))
    }

    /// Indices of the set bits, in increasing order.
    pub fn ones_positions(&self) -> Vec<usize> {
        let mut out = Vec::with_capacity(self.weight());
        for (wi, &w) in self.words.iter().enumerate() {
            let mut w = w;
            while w != 0 {
                out.push(wi * 64 + w.trailing_zeros() as usize);
                w &= w - 1;
            }
        }
        out
    }

    /// Serializes as an 8-byte little-endian bit count followed by
    /// `ceil(len / 8)` bytes, bit `i` at position `i % 8` of byte `i / 8`.
    pub fn to_bytes(&self) -> Vec<u8> {
        let nbytes = self.len.div_ceil(8);
        let mut out = Vec::with_capacity(8 + nbytes);
        out.extend_from_slice(&(self.len as u64).to_le_bytes());
        out.extend(
            self.words
                .iter()
                .flat_map(|w| w.to_le_bytes())
                .take(nbytes),
        );
        out
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<BitString> {
        let header: [u8; 8] = bytes
            .get(..8)
            .and_then(|h| h.try_into().ok())
            .ok_or(Error::LengthMismatch {
                expected: 8,
                actual: bytes.len(),
            })?;
        let len = u64::from_le_bytes(header) as usize;
        let body = &bytes[8..];
        ensure_len(len.div_ceil(8), body.len())?;
        let mut words = vec![0u64; len.div_ceil(64)];
        for (i, &b) in body.iter().enumerate() {
            words[i / 8] |= (b as u64) << (8 * (i % 8));
        }
        let s = BitString { words, len };
        let mut cleaned = s.clone();
        cleaned.clear_tail();
        if cleaned != s {
            return Err(Error::Parse {
                line: 0,
                message: "nonzero padding bits after the last bit".into(),
            });
        }
        Ok(s)
    }

    fn clear_tail(&mut self) {
        let rem = self.len % 64;
        if rem != 0 {
            if let Some(last) = self.words.last_mut() {
                *last &= (1u64 << rem) - 1;
            }
        }
    }
}

/// Number of positions where `a` and `b` differ.
pub fn hamming_distance(a: &BitString, b: &BitString) -> Result<usize> {
    ensure_len(a.len, b.len)?;
    Ok(a.words
        .iter()
        .zip(&b.words)
        .map(|(x, y)| (x ^ y).count_ones() as usize)
        .sum())
}

impl fmt::Display for BitString {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for b in self.iter() {
            f.write_str(if b { "1" } else { "0" })?;
        }
        Ok(())
    }
}

impl fmt::Debug for BitString {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.len <= 128 {
            write!(f, "BitString({self})")
        } else {
            write!(f, "BitString(len={}, weight={})", self.len, self.weight())
        }
    }
}

impl FromStr for BitString {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let bits = s
            .chars()
            .enumerate()
            .map(|(i, c)| match c {
                '0' => Ok(false),
                '1' => Ok(true),
                other => Err(Error::Parse {
                    line: 1,
                    message: format!("unexpected character {other:?} at column {}", i + 1),
                }),
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(BitString::from_bools(&bits))
    }
}
