//! Fixed-capacity bit strings: the universal action and type carrier.
//!
//! Equality is bit-exact and length-sensitive (`"01" != "010"`); the capacity
//! bound `max_len` is a construction-time constraint and does not participate
//! in equality, ordering, or hashing.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A finite sequence of bits with an explicit maximum length.
///
/// Bits are packed MSB-first; unused trailing bits of the last byte are kept
/// zero so that equality and hashing can work on the raw bytes.
#[derive(Clone)]
pub struct BitString {
    len: usize,
    max_len: usize,
    bytes: Vec<u8>,
}

impl BitString {
    /// Empty bit string with room for `max_len` bits.
    pub fn new(max_len: usize) -> Self {
        BitString {
            len: 0,
            max_len,
            bytes: Vec::with_capacity(max_len.div_ceil(8)),
        }
    }

    /// The empty bit string with zero capacity (the singleton-type carrier).
    pub fn empty() -> Self {
        BitString::new(0)
    }

    /// Builds from explicit bits; capacity equals the length.
    pub fn from_bits<I: IntoIterator<Item = bool>>(bits: I) -> Self {
        let bits: Vec<bool> = bits.into_iter().collect();
        let mut bs = BitString::new(bits.len());
        for b in bits {
            bs.push(b).expect("capacity equals length");
        }
        bs
    }

    /// All-zero string of the given width.
    pub fn zeros(width: usize) -> Self {
        let mut bs = BitString::new(width);
        for _ in 0..width {
            bs.push(false).expect("capacity equals width");
        }
        bs
    }

    /// Encodes the low `width` bits of `value`, most significant first, so
    /// that numeric order on `value` coincides with lexicographic order.
    pub fn from_u64_msb(value: u64, width: usize) -> Result<Self> {
        if width > 64 {
            return Err(Error::Argument(format!(
                "width {width} exceeds 64 bits for integer encoding"
            )));
        }
        if width < 64 && value >> width != 0 {
            return Err(Error::Argument(format!(
                "value {value} does not fit in {width} bits"
            )));
        }
        let mut bs = BitString::new(width);
        for i in (0..width).rev() {
            bs.push((value >> i) & 1 == 1)?;
        }
        Ok(bs)
    }

    /// Reads the bits back as an integer (MSB-first); `None` beyond 64 bits.
    pub fn to_u64_msb(&self) -> Option<u64> {
        if self.len > 64 {
            return None;
        }
        let mut v = 0u64;
        for b in self.iter() {
            v = (v << 1) | u64::from(b);
        }
        Some(v)
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn max_len(&self) -> usize {
        self.max_len
    }

    /// Returns a copy with a new capacity bound (`>= len`).
    pub fn with_max_len(mut self, max_len: usize) -> Result<Self> {
        if max_len < self.len {
            return Err(Error::Argument(format!(
                "max_len {max_len} below current length {}",
                self.len
            )));
        }
        self.max_len = max_len;
        Ok(self)
    }

    /// Appends a bit; errors once `max_len` is reached.
    pub fn push(&mut self, bit: bool) -> Result<()> {
        if self.len >= self.max_len {
            return Err(Error::Argument(format!(
                "bit string full: max_len = {}",
                self.max_len
            )));
        }
        let byte = self.len / 8;
        if byte == self.bytes.len() {
            self.bytes.push(0);
        }
        if bit {
            self.bytes[byte] |= 0x80 >> (self.len % 8);
        }
        self.len += 1;
        Ok(())
    }

    /// The bit at `index`; panics out of range.
    pub fn bit(&self, index: usize) -> bool {
        assert!(index < self.len, "bit index {index} out of range {}", self.len);
        self.bytes[index / 8] & (0x80 >> (index % 8)) != 0
    }

    pub fn iter(&self) -> impl Iterator<Item = bool> + '_ {
        (0..self.len).map(move |i| self.bit(i))
    }

    /// Concatenation; the result's capacity is the sum of lengths.
    pub fn concat(parts: &[&BitString]) -> Self {
        let total: usize = parts.iter().map(|p| p.len()).sum();
        let mut out = BitString::new(total);
        for p in parts {
            for b in p.iter() {
                out.push(b).expect("capacity equals total length");
            }
        }
        out
    }

    /// Copies out `bits[start..start+width]` as a new string.
    pub fn slice(&self, start: usize, width: usize) -> Result<Self> {
        if start + width > self.len {
            return Err(Error::Argument(format!(
                "slice {start}..{} out of range {}",
                start + width,
                self.len
            )));
        }
        let mut out = BitString::new(width);
        for i in 0..width {
            out.push(self.bit(start + i))?;
        }
        Ok(out)
    }

    /// Packed bytes, MSB-first, unused trailing bits zero.
    pub fn as_bytes(&self) -> &[u8] {
        &self.bytes
    }

    /// Lowercase hex of the packed bytes (empty string for zero length).
    pub fn to_hex(&self) -> String {
        self.bytes.iter().map(|b| format!("{b:02x}")).collect()
    }

    /// Parses packed hex produced by [`BitString::to_hex`] for a known bit
    /// length; trailing pad bits must be zero.
    pub fn from_hex(len: usize, hex: &str) -> Result<Self> {
        let expected_bytes = len.div_ceil(8);
        if hex.len() != expected_bytes * 2 {
            return Err(Error::Parse(format!(
                "hex length {} does not match {len} bits",
                hex.len()
            )));
        }
        let mut bytes = Vec::with_capacity(expected_bytes);
        for i in 0..expected_bytes {
            let pair = &hex[2 * i..2 * i + 2];
            let b = u8::from_str_radix(pair, 16)
                .map_err(|_| Error::Parse(format!("invalid hex {pair:?}")))?;
            bytes.push(b);
        }
        if len % 8 != 0 {
            if let Some(last) = bytes.last() {
                let mask = 0xffu8 >> (len % 8);
                if last & mask != 0 {
                    return Err(Error::Parse(
                        "nonzero padding bits in hex encoding".to_string(),
                    ));
                }
            }
        }
        Ok(BitString {
            len,
            max_len: len,
            bytes,
        })
    }
}

impl PartialEq for BitString {
    fn eq(&self, other: &Self) -> bool {
        self.len == other.len && self.bytes == other.bytes
    }
}

impl Eq for BitString {}

impl std::hash::Hash for BitString {
    fn hash<H: std::hash::Hasher>(&self, state: &mut H) {
        self.len.hash(state);
        self.bytes.hash(state);
    }
}

impl PartialOrd for BitString {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for BitString {
    /// Lexicographic on bits, with a proper prefix ordered first.
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        let common = self.len.min(other.len);
        for i in 0..common {
            match (self.bit(i), other.bit(i)) {
                (false, true) => return std::cmp::Ordering::Less,
                (true, false) => return std::cmp::Ordering::Greater,
                _ => {}
            }
        }
        self.len.cmp(&other.len)
    }
}

impl fmt::Display for BitString {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for b in self.iter() {
            write!(f, "{}", if b { '1' } else { '0' })?;
        }
        Ok(())
    }
}

impl fmt::Debug for BitString {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "BitString(\"{self}\")")
    }
}

impl FromStr for BitString {
    type Err = Error;

    /// Parses a `"0101"`-style string of ASCII bits.
    fn from_str(s: &str) -> Result<Self> {
        let mut bs = BitString::new(s.len());
        for c in s.chars() {
            match c {
                '0' => bs.push(false)?,
                '1' => bs.push(true)?,
                _ => return Err(Error::Parse(format!("invalid bit character {c:?}"))),
            }
        }
        Ok(bs)
    }
}

/// Wire form: bit length plus packed hex, per the documented JSON schema.
#[derive(Serialize, Deserialize)]
struct BitStringRepr {
    len: usize,
    hex: String,
}

impl Serialize for BitString {
    fn serialize<S: serde::Serializer>(&self, ser: S) -> std::result::Result<S::Ok, S::Error> {
        BitStringRepr {
            len: self.len,
            hex: self.to_hex(),
        }
        .serialize(ser)
    }
}

impl<'de> Deserialize<'de> for BitString {
    fn deserialize<D: serde::Deserializer<'de>>(de: D) -> std::result::Result<Self, D::Error> {
        let repr = BitStringRepr::deserialize(de)?;
        BitString::from_hex(repr.len, &repr.hex).map_err(serde::de::Error::custom)
    }
}

/// Enumerates all bit strings of exactly `width` bits in lexicographic order.
///
/// Intended for desk-scale spaces; errors above 2^20 strings.
pub fn all_of_width(width: usize) -> Result<Vec<BitString>> {
    if width > 20 {
        return Err(Error::Argument(format!(
            "refusing to enumerate 2^{width} bit strings"
        )));
    }
    (0..(1u64 << width))
        .map(|v| BitString::from_u64_msb(v, width))
        .collect()
}
