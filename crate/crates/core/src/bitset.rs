//! Fixed-width bitsets over 1-based path indices.
//!
//! Bit `n` (1-based, least significant first) corresponds to the prime path
//! with index `n`. Storage is 64-bit words, least-significant word first, so
//! bit 1 is bit 0 of word 0 regardless of the instrumentation word size.

/// A bitset with a fixed number of meaningful bits; all higher bits stay zero.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Bitset {
    len: usize,
    words: Vec<u64>,
}

impl Bitset {
    /// An all-zero bitset with `len` meaningful bits.
    pub fn new(len: usize) -> Self {
        Bitset {
            len,
            words: vec![0; len.div_ceil(64)],
        }
    }

    /// Reconstructs a bitset from raw words (least-significant first).
    ///
    /// Fails if the word count does not match `len` or if any bit above
    /// `len` is set.
    pub fn from_words(len: usize, words: Vec<u64>) -> Result<Self, BitsetLayoutError> {
        if words.len() != len.div_ceil(64) {
            return Err(BitsetLayoutError::WordCount {
                expected: len.div_ceil(64),
                found: words.len(),
            });
        }
        let set = Bitset { len, words };
        if set.trailing_bits_set() {
            return Err(BitsetLayoutError::TrailingBits { len });
        }
        Ok(set)
    }

    fn trailing_bits_set(&self) -> bool {
        let rem = self.len % 64;
        if rem == 0 {
            return false;
        }
        match self.words.last() {
            Some(&w) => w >> rem != 0,
            None => false,
        }
    }

    /// Number of meaningful bits.
    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    /// Sets bit `index` (1-based). Panics when out of range.
    pub fn set(&mut self, index: usize) {
        assert!(index >= 1 && index <= self.len, "bit index out of range");
        self.words[(index - 1) / 64] |= 1 << ((index - 1) % 64);
    }

    /// Tests bit `index` (1-based). Out-of-range indices read as unset.
    pub fn contains(&self, index: usize) -> bool {
        if index == 0 || index > self.len {
            return false;
        }
        self.words[(index - 1) / 64] >> ((index - 1) % 64) & 1 == 1
    }

    pub fn count_ones(&self) -> usize {
        self.words.iter().map(|w| w.count_ones() as usize).sum()
    }

    pub fn is_zero(&self) -> bool {
        self.words.iter().all(|&w| w == 0)
    }

    /// Ascending iterator over the set bit indices (1-based).
    pub fn ones(&self) -> impl Iterator<Item = usize> + '_ {
        (1..=self.len).filter(move |&i| self.contains(i))
    }

    /// `self |= other`. Both sets must have the same length.
    pub fn or_assign(&mut self, other: &Bitset) {
        debug_assert_eq!(self.len, other.len);
        for (w, o) in self.words.iter_mut().zip(&other.words) {
            *w |= o;
        }
    }

    /// `self &= !other` — removes `other`'s members.
    pub fn and_not_assign(&mut self, other: &Bitset) {
        debug_assert_eq!(self.len, other.len);
        for (w, o) in self.words.iter_mut().zip(&other.words) {
            *w &= !o;
        }
    }

    /// `self & other` as a new set.
    pub fn and(&self, other: &Bitset) -> Bitset {
        debug_assert_eq!(self.len, other.len);
        Bitset {
            len: self.len,
            words: self
                .words
                .iter()
                .zip(&other.words)
                .map(|(a, b)| a & b)
                .collect(),
        }
    }

    /// True when every member of `self` is also in `other`.
    pub fn is_subset(&self, other: &Bitset) -> bool {
        debug_assert_eq!(self.len, other.len);
        self.words.iter().zip(&other.words).all(|(a, b)| a & !b == 0)
    }

    /// Raw words, least-significant first.
    pub fn words(&self) -> &[u64] {
        &self.words
    }

    /// Value of the `w`-bit bin `bin`, where bin `j` covers bit indices
    /// `j*w+1 ..= (j+1)*w` and the bin's least significant bit is the lowest
    /// covered index.
    pub fn bin(&self, bin: usize, w: u32) -> u64 {
        debug_assert!(w > 0 && w <= 64 && 64 % w == 0, "bins must not straddle words");
        let start = bin * w as usize; // 0-based bit offset
        let word = start / 64;
        if word >= self.words.len() {
            return 0;
        }
        let shift = start % 64;
        let value = self.words[word] >> shift;
        if w == 64 {
            value
        } else {
            value & ((1u64 << w) - 1)
        }
    }

    /// Sets `bin` to `self_bin | value`.
    pub fn or_bin(&mut self, bin: usize, w: u32, value: u64) {
        let start = bin * w as usize;
        let word = start / 64;
        if word >= self.words.len() {
            return;
        }
        self.words[word] |= value << (start % 64);
    }

    /// Sets `bin` to `self_bin & !value`.
    pub fn and_not_bin(&mut self, bin: usize, w: u32, value: u64) {
        let start = bin * w as usize;
        let word = start / 64;
        if word >= self.words.len() {
            return;
        }
        self.words[word] &= !(value << (start % 64));
    }

    /// Binary rendering over the meaningful bits, most significant first,
    /// matching the conventional textual form of the mask tables.
    pub fn render_binary(&self) -> String {
        (1..=self.len)
            .rev()
            .map(|i| if self.contains(i) { '1' } else { '0' })
            .collect()
    }
}

/// Renders a bin value as `width` binary digits, most significant first.
pub fn render_bin_value(value: u64, width: u32) -> String {
    (0..width)
        .rev()
        .map(|b| if value >> b & 1 == 1 { '1' } else { '0' })
        .collect()
}

#[derive(Debug, thiserror::Error, PartialEq, Eq)]
pub enum BitsetLayoutError {
    #[error("expected {expected} words, found {found}")]
    WordCount { expected: usize, found: usize },
    #[error("bits set beyond the {len} meaningful bits")]
    TrailingBits { len: usize },
}
