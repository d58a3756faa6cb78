//! Fixed-length packed bit strings.

use std::fmt;

use crate::{Error, Result};

/// A fixed-length bit string packed into 64-bit words.
///
/// Unused high bits of the last word are always zero, so derived equality and
/// hashing compare exactly the `len` meaningful bits.
#[derive(Clone, PartialEq, Eq, Hash, Default)]
pub struct BitString {
    len: usize,
    words: Vec<u64>,
}

impl BitString {
    pub fn zeros(len: usize) -> Self {
        Self {
            len,
            words: vec![0; len.div_ceil(64)],
        }
    }

    pub fn ones(len: usize) -> Self {
        let mut bits = Self::zeros(len);
        for i in 0..len {
            bits.set(i, true);
        }
        bits
    }

    pub fn from_bools<I: IntoIterator<Item = bool>>(iter: I) -> Self {
        let values: Vec<bool> = iter.into_iter().collect();
        let mut bits = Self::zeros(values.len());
        for (i, v) in values.into_iter().enumerate() {
            bits.set(i, v);
        }
        bits
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    #[inline]
    pub fn get(&self, i: usize) -> bool {
        assert!(i < self.len, "bit index {i} out of range for length {}", self.len);
        self.words[i / 64] >> (i % 64) & 1 == 1
    }

    #[inline]
    pub fn set(&mut self, i: usize, value: bool) {
        assert!(i < self.len, "bit index {i} out of range for length {}", self.len);
        let mask = 1u64 << (i % 64);
        if value {
            self.words[i / 64] |= mask;
        } else {
            self.words[i / 64] &= !mask;
        }
    }

    pub fn count_ones(&self) -> usize {
        self.words.iter().map(|w| w.count_ones() as usize).sum()
    }

    pub fn iter(&self) -> impl Iterator<Item = bool> + '_ {
        (0..self.len).map(move |i| self.get(i))
    }

    /// Bitwise XOR. Panics when lengths differ.
    pub fn xor(&self, other: &Self) -> Self {
        assert_eq!(self.len, other.len, "xor of bit strings with different lengths");
        Self {
            len: self.len,
            words: self
                .words
                .iter()
                .zip(&other.words)
                .map(|(a, b)| a ^ b)
                .collect(),
        }
    }

    /// Popcount of the XOR, without allocating. Panics when lengths differ.
    pub fn hamming(&self, other: &Self) -> usize {
        assert_eq!(self.len, other.len, "hamming distance of bit strings with different lengths");
        self.words
            .iter()
            .zip(&other.words)
            .map(|(a, b)| (a ^ b).count_ones() as usize)
            .sum()
    }

    /// Hex encoding, most significant bit first within each byte: bit `i` lives
    /// in byte `i / 8` under mask `0x80 >> (i % 8)`. Trailing pad bits are zero.
    pub fn to_hex(&self) -> String {
        let mut bytes = vec![0u8; self.len.div_ceil(8)];
        for i in 0..self.len {
            if self.get(i) {
                bytes[i / 8] |= 0x80 >> (i % 8);
            }
        }
        hex::encode(bytes)
    }

    /// Inverse of [`BitString::to_hex`]. Rejects wrong lengths and non-zero pad bits.
    pub fn from_hex(text: &str, len: usize) -> Result<Self> {
        let bytes = hex::decode(text).map_err(|e| Error::invalid(format!("bad hex bit string: {e}")))?;
        if bytes.len() != len.div_ceil(8) {
            return Err(Error::invalid(format!(
                "hex bit string has {} bytes, expected {} for {len} bits",
                bytes.len(),
                len.div_ceil(8)
            )));
        }
        let mut bits = Self::zeros(len);
        for (b, byte) in bytes.iter().enumerate() {
            for off in 0..8 {
                if byte & (0x80 >> off) != 0 {
                    let i = b * 8 + off;
                    if i >= len {
                        return Err(Error::invalid("non-zero pad bits in hex bit string"));
                    }
                    bits.set(i, true);
                }
            }
        }
        Ok(bits)
    }
}

impl fmt::Debug for BitString {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "BitString[{}](", self.len)?;
        for b in self.iter() {
            f.write_str(if b { "1" } else { "0" })?;
        }
        f.write_str(")")
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn hex_bit_order_is_msb_first() {
        let bits = BitString::from_bools([true, false, false, false, false, false, false, false, false, true]);
        assert_eq!(bits.to_hex(), "8040");
    }

    #[test]
    fn pad_bits_rejected() {
        assert!(BitString::from_hex("01", 7).is_err());
        assert!(BitString::from_hex("80", 12).is_err());
    }

    #[test]
    fn hamming_counts_differing_bits() {
        let a = BitString::zeros(130);
        let mut b = a.clone();
        b.set(0, true);
        b.set(64, true);
        b.set(129, true);
        assert_eq!(a.hamming(&b), 3);
        assert_eq!(a.xor(&b).count_ones(), 3);
    }

    proptest! {
        #[test]
        fn hex_round_trip(v in proptest::collection::vec(any::<bool>(), 0..300)) {
            let bits = BitString::from_bools(v.iter().copied());
            let back = BitString::from_hex(&bits.to_hex(), v.len()).unwrap();
            prop_assert_eq!(&back, &bits);
            prop_assert_eq!(back.iter().collect::<Vec<_>>(), v);
        }
    }
}
