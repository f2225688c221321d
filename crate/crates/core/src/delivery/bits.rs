use std::fmt;

/// Fixed-length bit string. Bits past `len` in the last word are always zero.
#[derive(Clone, PartialEq, Eq, Hash, Default)]
pub struct Bits {
    len: usize,
    words: Vec<u64>,
}

impl Bits {
    pub fn zeros(len: usize) -> Self {
        Self {
            len,
            words: vec![0; len.div_ceil(64)],
        }
    }

    pub fn ones(len: usize) -> Self {
        let mut b = Self {
            len,
            words: vec![u64::MAX; len.div_ceil(64)],
        };
        b.clear_tail();
        b
    }

    pub fn from_fn(len: usize, mut f: impl FnMut(usize) -> bool) -> Self {
        let mut b = Self::zeros(len);
        for i in 0..len {
            if f(i) {
                b.set(i, true);
            }
        }
        b
    }

    fn clear_tail(&mut self) {
        let rem = self.len % 64;
        if rem != 0 {
            if let Some(last) = self.words.last_mut() {
                *last &= (1u64 << rem) - 1;
            }
        }
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn get(&self, i: usize) -> bool {
        assert!(i < self.len, "bit {i} out of range for length {}", self.len);
        self.words[i / 64] >> (i % 64) & 1 == 1
    }

    pub fn set(&mut self, i: usize, value: bool) {
        assert!(i < self.len, "bit {i} out of range for length {}", self.len);
        let mask = 1u64 << (i % 64);
        if value {
            self.words[i / 64] |= mask;
        } else {
            self.words[i / 64] &= !mask;
        }
    }

    pub fn is_zero(&self) -> bool {
        self.words.iter().all(|&w| w == 0)
    }

    pub fn count_ones(&self) -> usize {
        self.words.iter().map(|w| w.count_ones() as usize).sum()
    }

    pub fn xor_assign(&mut self, other: &Bits) {
        assert_eq!(self.len, other.len, "XOR of bit strings with different lengths");
        for (a, b) in self.words.iter_mut().zip(&other.words) {
            *a ^= b;
        }
    }

    pub fn slice(&self, start: usize, len: usize) -> Bits {
        assert!(start + len <= self.len);
        Bits::from_fn(len, |i| self.get(start + i))
    }

    pub fn extend_from(&mut self, other: &Bits) {
        let start = self.len;
        self.len += other.len;
        self.words.resize(self.len.div_ceil(64), 0);
        for i in 0..other.len {
            if other.get(i) {
                self.set(start + i, true);
            }
        }
    }

    /// Lowercase hex, bit 0 as the most significant bit of the first byte,
    /// zero-padded to a whole byte.
    pub fn to_hex(&self) -> String {
        let mut out = String::with_capacity(self.len.div_ceil(4));
        for chunk in 0..self.len.div_ceil(8) {
            let mut byte = 0u8;
            for j in 0..8 {
                let i = chunk * 8 + j;
                if i < self.len && self.get(i) {
                    byte |= 0x80 >> j;
                }
            }
            out.push_str(&format!("{byte:02x}"));
        }
        out
    }
}

impl fmt::Debug for Bits {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Bits({}; ", self.len)?;
        for i in 0..self.len.min(128) {
            f.write_str(if self.get(i) { "1" } else { "0" })?;
        }
        if self.len > 128 {
            f.write_str("...")?;
        }
        f.write_str(")")
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn hex_layout() {
        let b = Bits::from_fn(12, |i| i == 0 || i == 11);
        assert_eq!(b.to_hex(), "8010");
        assert_eq!(Bits::zeros(0).to_hex(), "");
        assert_eq!(Bits::ones(4).to_hex(), "f0");
    }

    #[test]
    fn ones_keeps_tail_clear() {
        let b = Bits::ones(70);
        assert_eq!(b.count_ones(), 70);
        let mut c = Bits::zeros(70);
        c.xor_assign(&b);
        assert_eq!(b, c);
    }

    proptest! {
        #[test]
        fn slice_and_extend_round_trip(bits in proptest::collection::vec(any::<bool>(), 0..300), cut in 0usize..300) {
            let b = Bits::from_fn(bits.len(), |i| bits[i]);
            let cut = cut.min(bits.len());
            let mut joined = b.slice(0, cut);
            joined.extend_from(&b.slice(cut, bits.len() - cut));
            prop_assert_eq!(joined, b);
        }

        #[test]
        fn xor_is_involutive(bits in proptest::collection::vec(any::<(bool, bool)>(), 0..200)) {
            let a = Bits::from_fn(bits.len(), |i| bits[i].0);
            let k = Bits::from_fn(bits.len(), |i| bits[i].1);
            let mut c = a.clone();
            c.xor_assign(&k);
            c.xor_assign(&k);
            prop_assert_eq!(c, a);
        }
    }
}
