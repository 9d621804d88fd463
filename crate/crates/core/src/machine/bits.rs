//! Bit strings and their text and packed-binary renderings.

use std::fmt;
use std::io::{self, Read, Write};
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// An ordered, finite sequence of bits. The empty string is allowed.
#[derive(Clone, Default, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct BitString(Vec<bool>);

#[derive(Debug, Error, PartialEq, Eq)]
pub enum BitParseError {
    #[error("invalid character {ch:?} at offset {offset}, expected '0' or '1'")]
    InvalidChar { ch: char, offset: usize },
}

impl BitString {
    pub fn new() -> Self {
        BitString(Vec::new())
    }

    pub fn from_bits(bits: Vec<bool>) -> Self {
        BitString(bits)
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn bits(&self) -> &[bool] {
        &self.0
    }

    pub fn into_bits(self) -> Vec<bool> {
        self.0
    }

    pub fn get(&self, i: usize) -> Option<bool> {
        self.0.get(i).copied()
    }

    pub fn push(&mut self, bit: bool) {
        self.0.push(bit);
    }

    pub fn pop(&mut self) -> Option<bool> {
        self.0.pop()
    }

    pub fn truncate(&mut self, len: usize) {
        self.0.truncate(len);
    }

    pub fn extend_from(&mut self, other: &BitString) {
        self.0.extend_from_slice(&other.0);
    }

    pub fn concat(&self, other: &BitString) -> BitString {
        let mut out = self.clone();
        out.extend_from(other);
        out
    }

    pub fn slice(&self, start: usize, end: usize) -> BitString {
        BitString(self.0[start..end].to_vec())
    }

    pub fn is_prefix_of(&self, other: &BitString) -> bool {
        other.0.starts_with(&self.0)
    }

    /// Unsigned binary expansion, most significant bit first. Zero is "0".
    pub fn from_uint(mut n: u64) -> BitString {
        if n == 0 {
            return BitString(vec![false]);
        }
        let mut bits = Vec::new();
        while n > 0 {
            bits.push(n & 1 == 1);
            n >>= 1;
        }
        bits.reverse();
        BitString(bits)
    }

    /// Inverse of [`BitString::from_uint`]; `None` on overflow or empty input.
    pub fn to_uint(&self) -> Option<u64> {
        if self.is_empty() || self.len() > 64 {
            return None;
        }
        Some(self.0.iter().fold(0u64, |acc, &b| (acc << 1) | b as u64))
    }

    /// All bit strings of length exactly `len`, in lexicographic order.
    pub fn all_of_len(len: usize) -> impl Iterator<Item = BitString> {
        assert!(len < 64, "exhaustive listing limited to < 64 bits");
        (0u64..(1u64 << len)).map(move |v| {
            BitString((0..len).rev().map(|i| (v >> i) & 1 == 1).collect())
        })
    }

    /// MSB-first packing, zero padded in the last byte.
    pub fn to_packed(&self) -> Vec<u8> {
        let mut out = vec![0u8; self.len().div_ceil(8)];
        for (i, &b) in self.0.iter().enumerate() {
            if b {
                out[i / 8] |= 0x80 >> (i % 8);
            }
        }
        out
    }

    pub fn from_packed(bytes: &[u8], len: usize) -> BitString {
        assert!(len <= bytes.len() * 8, "bit length exceeds packed payload");
        BitString(
            (0..len)
                .map(|i| bytes[i / 8] & (0x80 >> (i % 8)) != 0)
                .collect(),
        )
    }

    pub fn to_hex(&self) -> String {
        self.to_packed().iter().map(|b| format!("{b:02x}")).collect()
    }

    pub fn from_hex(hex: &str, len: usize) -> Option<BitString> {
        if !hex.len().is_multiple_of(2) || hex.len() / 2 < len.div_ceil(8) {
            return None;
        }
        let bytes = (0..hex.len() / 2)
            .map(|i| u8::from_str_radix(&hex[2 * i..2 * i + 2], 16).ok())
            .collect::<Option<Vec<u8>>>()?;
        Some(BitString::from_packed(&bytes, len))
    }

    /// Human rendering: "ε" for the empty string, otherwise the bits.
    pub fn display_or_epsilon(&self) -> String {
        if self.is_empty() {
            "ε".to_string()
        } else {
            self.to_string()
        }
    }
}

impl fmt::Display for BitString {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for &b in &self.0 {
            f.write_str(if b { "1" } else { "0" })?;
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
    type Err = BitParseError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        s.chars()
            .enumerate()
            .map(|(offset, ch)| match ch {
                '0' => Ok(false),
                '1' => Ok(true),
                ch => Err(BitParseError::InvalidChar { ch, offset }),
            })
            .collect::<Result<Vec<_>, _>>()
            .map(BitString)
    }
}

impl From<Vec<bool>> for BitString {
    fn from(bits: Vec<bool>) -> Self {
        BitString(bits)
    }
}

impl FromIterator<bool> for BitString {
    fn from_iter<I: IntoIterator<Item = bool>>(iter: I) -> Self {
        BitString(iter.into_iter().collect())
    }
}

impl Serialize for BitString {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&self.to_string())
    }
}

impl<'de> Deserialize<'de> for BitString {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// Magic bytes opening a packed corpus file.
pub const CORPUS_MAGIC: &[u8; 4] = b"OCB1";

/// Writes a packed corpus: the magic, then for each record a 4-byte
/// big-endian bit count followed by the MSB-first packed bits.
pub fn write_corpus<W: Write>(mut w: W, items: &[BitString]) -> io::Result<()> {
    w.write_all(CORPUS_MAGIC)?;
    for item in items {
        let len = u32::try_from(item.len())
            .map_err(|_| io::Error::new(io::ErrorKind::InvalidInput, "bit string too long"))?;
        w.write_all(&len.to_be_bytes())?;
        w.write_all(&item.to_packed())?;
    }
    Ok(())
}

pub fn read_corpus<R: Read>(mut r: R) -> io::Result<Vec<BitString>> {
    let mut buf = Vec::new();
    r.read_to_end(&mut buf)?;
    if buf.len() < 4 || &buf[..4] != CORPUS_MAGIC {
        return Err(io::Error::new(io::ErrorKind::InvalidData, "missing OCB1 magic"));
    }
    let mut pos = 4;
    let mut out = Vec::new();
    while pos < buf.len() {
        if pos + 4 > buf.len() {
            return Err(io::Error::new(io::ErrorKind::UnexpectedEof, "truncated length header"));
        }
        let len = u32::from_be_bytes(buf[pos..pos + 4].try_into().unwrap()) as usize;
        pos += 4;
        let nbytes = len.div_ceil(8);
        if pos + nbytes > buf.len() {
            return Err(io::Error::new(io::ErrorKind::UnexpectedEof, "truncated record"));
        }
        out.push(BitString::from_packed(&buf[pos..pos + nbytes], len));
        pos += nbytes;
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn bs(s: &str) -> BitString {
        s.parse().unwrap()
    }

    #[test]
    fn text_round_trip_and_errors() {
        assert_eq!(bs("0110").to_string(), "0110");
        assert_eq!(bs("").len(), 0);
        assert_eq!(
            "01x".parse::<BitString>(),
            Err(BitParseError::InvalidChar { ch: 'x', offset: 2 })
        );
    }

    #[test]
    fn packing_is_msb_first() {
        assert_eq!(bs("1").to_packed(), vec![0x80]);
        assert_eq!(bs("000000011").to_packed(), vec![0x01, 0x80]);
        assert_eq!(BitString::from_packed(&[0x01, 0x80], 9), bs("000000011"));
        assert_eq!(bs("10100000").to_hex(), "a0");
        assert_eq!(BitString::from_hex("a0", 3), Some(bs("101")));
    }

    #[test]
    fn corpus_golden_bytes() {
        let mut out = Vec::new();
        write_corpus(&mut out, &[bs(""), bs("101")]).unwrap();
        assert_eq!(
            out,
            vec![b'O', b'C', b'B', b'1', 0, 0, 0, 0, 0, 0, 0, 3, 0xa0]
        );
        assert_eq!(read_corpus(&out[..]).unwrap(), vec![bs(""), bs("101")]);
        assert!(read_corpus(&out[..out.len() - 1]).is_err());
    }

    #[test]
    fn uint_expansion() {
        assert_eq!(BitString::from_uint(0), bs("0"));
        assert_eq!(BitString::from_uint(20), bs("10100"));
        assert_eq!(bs("10100").to_uint(), Some(20));
    }

    #[test]
    fn all_of_len_is_lexicographic() {
        let v: Vec<String> = BitString::all_of_len(2).map(|b| b.to_string()).collect();
        assert_eq!(v, ["00", "01", "10", "11"]);
        assert_eq!(BitString::all_of_len(0).count(), 1);
    }
}
