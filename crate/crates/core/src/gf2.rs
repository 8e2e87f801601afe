//! Packed GF(2) vectors and matrices.
//!
//! Bits are stored little-endian inside `u64` words: bit `i` of a word lives
//! in word `i / 64` at position `i % 64`. Unused high bits of the last word
//! are always zero, so word-wise equality and popcount are exact.

use std::fmt;
use std::ops::BitXor;
use std::str::FromStr;

use rand::Rng;
use thiserror::Error;

const WORD_BITS: usize = 64;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum Gf2Error {
    #[error("bit vectors and matrices must have at least one bit (got {rows}x{cols})")]
    Empty { rows: usize, cols: usize },
    #[error("dimension mismatch: expected {expected}, got {found}")]
    Dimension { expected: usize, found: usize },
    #[error("invalid bit character {0:?}, expected '0' or '1'")]
    InvalidBit(char),
}

#[inline]
fn words_for(len: usize) -> usize {
    len.div_ceil(WORD_BITS)
}

#[inline]
fn tail_mask(len: usize) -> u64 {
    match len % WORD_BITS {
        0 => u64::MAX,
        r => (1u64 << r) - 1,
    }
}

/// A fixed-length binary word.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct BitWord {
    len: usize,
    words: Vec<u64>,
}

impl BitWord {
    /// All-zero word of `len` bits.
    pub fn zeros(len: usize) -> Result<Self, Gf2Error> {
        if len == 0 {
            return Err(Gf2Error::Empty { rows: 1, cols: 0 });
        }
        Ok(BitWord {
            len,
            words: vec![0; words_for(len)],
        })
    }

    /// Word with ones exactly at `positions`.
    pub fn from_positions(len: usize, positions: &[usize]) -> Result<Self, Gf2Error> {
        let mut w = Self::zeros(len)?;
        for &p in positions {
            if p >= len {
                return Err(Gf2Error::Dimension {
                    expected: len,
                    found: p + 1,
                });
            }
            w.flip(p);
        }
        Ok(w)
    }

    /// Builds a word from a slice of booleans.
    pub fn from_bools(bits: &[bool]) -> Result<Self, Gf2Error> {
        let mut w = Self::zeros(bits.len())?;
        for (i, &b) in bits.iter().enumerate() {
            if b {
                w.set(i, true);
            }
        }
        Ok(w)
    }

    /// Builds a word from bytes that must each be 0 or 1.
    pub fn from_bits(bits: &[u8]) -> Result<Self, Gf2Error> {
        let mut w = Self::zeros(bits.len())?;
        for (i, &b) in bits.iter().enumerate() {
            match b {
                0 => {}
                1 => w.set(i, true),
                other => {
                    return Err(Gf2Error::InvalidBit(
                        char::from_digit(u32::from(other), 10).unwrap_or('?'),
                    ))
                }
            }
        }
        Ok(w)
    }

    /// Uniformly random word; each bit is an independent fair coin.
    pub fn random<R: Rng + ?Sized>(len: usize, rng: &mut R) -> Result<Self, Gf2Error> {
        let mut w = Self::zeros(len)?;
        for word in &mut w.words {
            *word = rng.random();
        }
        w.clear_tail();
        Ok(w)
    }

    fn clear_tail(&mut self) {
        let mask = tail_mask(self.len);
        if let Some(last) = self.words.last_mut() {
            *last &= mask;
        }
    }

    pub fn len(&self) -> usize {
        self.len
    }

    /// Always false: a word has at least one bit.
    pub fn is_empty(&self) -> bool {
        false
    }

    #[inline]
    pub fn get(&self, i: usize) -> bool {
        assert!(
            i < self.len,
            "bit index {i} out of range for length {}",
            self.len
        );
        (self.words[i / WORD_BITS] >> (i % WORD_BITS)) & 1 == 1
    }

    #[inline]
    pub fn set(&mut self, i: usize, value: bool) {
        assert!(
            i < self.len,
            "bit index {i} out of range for length {}",
            self.len
        );
        let mask = 1u64 << (i % WORD_BITS);
        if value {
            self.words[i / WORD_BITS] |= mask;
        } else {
            self.words[i / WORD_BITS] &= !mask;
        }
    }

    #[inline]
    pub fn flip(&mut self, i: usize) {
        assert!(
            i < self.len,
            "bit index {i} out of range for length {}",
            self.len
        );
        self.words[i / WORD_BITS] ^= 1u64 << (i % WORD_BITS);
    }

    /// Number of ones.
    pub fn weight(&self) -> usize {
        self.words.iter().map(|w| w.count_ones() as usize).sum()
    }

    pub fn is_zero(&self) -> bool {
        self.words.iter().all(|&w| w == 0)
    }

    /// Packed storage, least significant bit first.
    pub fn as_words(&self) -> &[u64] {
        &self.words
    }

    /// In-place XOR with another word of the same length.
    pub fn xor_assign(&mut self, other: &BitWord) -> Result<(), Gf2Error> {
        self.check_len(other.len)?;
        for (a, b) in self.words.iter_mut().zip(&other.words) {
            *a ^= b;
        }
        Ok(())
    }

    /// XOR of two words of the same length.
    pub fn xor(&self, other: &BitWord) -> Result<BitWord, Gf2Error> {
        let mut out = self.clone();
        out.xor_assign(other)?;
        Ok(out)
    }

    /// Parity of the bitwise AND, i.e. the GF(2) inner product.
    pub fn dot(&self, other: &BitWord) -> Result<bool, Gf2Error> {
        self.check_len(other.len)?;
        let ones: u32 = self
            .words
            .iter()
            .zip(&other.words)
            .map(|(a, b)| (a & b).count_ones())
            .sum();
        Ok(ones % 2 == 1)
    }

    /// Bits `start..start + len` as a new word.
    pub fn slice(&self, start: usize, len: usize) -> Result<BitWord, Gf2Error> {
        if start + len > self.len {
            return Err(Gf2Error::Dimension {
                expected: self.len,
                found: start + len,
            });
        }
        let mut out = BitWord::zeros(len)?;
        for i in 0..len {
            if self.get(start + i) {
                out.set(i, true);
            }
        }
        Ok(out)
    }

    /// Concatenation `self || other`.
    pub fn concat(&self, other: &BitWord) -> BitWord {
        let mut out = BitWord {
            len: self.len + other.len,
            words: vec![0; words_for(self.len + other.len)],
        };
        out.words[..self.words.len()].copy_from_slice(&self.words);
        for i in other.ones() {
            out.set(self.len + i, true);
        }
        out
    }

    /// Indices of the set bits in increasing order.
    pub fn ones(&self) -> impl Iterator<Item = usize> + '_ {
        self.words.iter().enumerate().flat_map(|(wi, &w)| {
            let mut rest = w;
            std::iter::from_fn(move || {
                if rest == 0 {
                    return None;
                }
                let tz = rest.trailing_zeros() as usize;
                rest &= rest - 1;
                Some(wi * WORD_BITS + tz)
            })
        })
    }

    pub fn iter(&self) -> impl Iterator<Item = bool> + '_ {
        (0..self.len).map(move |i| self.get(i))
    }

    fn check_len(&self, other: usize) -> Result<(), Gf2Error> {
        if self.len != other {
            return Err(Gf2Error::Dimension {
                expected: self.len,
                found: other,
            });
        }
        Ok(())
    }
}

impl BitXor for &BitWord {
    type Output = BitWord;

    /// Panics on length mismatch; use [`BitWord::xor`] for a checked variant.
    fn bitxor(self, rhs: &BitWord) -> BitWord {
        self.xor(rhs).expect("XOR of words with different lengths")
    }
}

impl fmt::Display for BitWord {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for b in self.iter() {
            f.write_str(if b { "1" } else { "0" })?;
        }
        Ok(())
    }
}

impl fmt::Debug for BitWord {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "BitWord({self})")
    }
}

impl FromStr for BitWord {
    type Err = Gf2Error;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let s = s.trim();
        let mut w = BitWord::zeros(s.chars().count())?;
        for (i, c) in s.chars().enumerate() {
            match c {
                '0' => {}
                '1' => w.set(i, true),
                other => return Err(Gf2Error::InvalidBit(other)),
            }
        }
        Ok(w)
    }
}

/// Dense binary matrix stored as packed rows.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct BitMatrix {
    rows: usize,
    cols: usize,
    data: Vec<BitWord>,
}

impl BitMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Result<Self, Gf2Error> {
        if rows == 0 || cols == 0 {
            return Err(Gf2Error::Empty { rows, cols });
        }
        Ok(BitMatrix {
            rows,
            cols,
            data: vec![BitWord::zeros(cols)?; rows],
        })
    }

    pub fn identity(size: usize) -> Result<Self, Gf2Error> {
        let mut m = Self::zeros(size, size)?;
        for i in 0..size {
            m.set(i, i, true);
        }
        Ok(m)
    }

    /// Matrix with i.i.d. uniform entries drawn from `rng`.
    pub fn random<R: Rng + ?Sized>(
        rows: usize,
        cols: usize,
        rng: &mut R,
    ) -> Result<Self, Gf2Error> {
        if rows == 0 || cols == 0 {
            return Err(Gf2Error::Empty { rows, cols });
        }
        let data = (0..rows)
            .map(|_| BitWord::random(cols, rng))
            .collect::<Result<Vec<_>, _>>()?;
        Ok(BitMatrix { rows, cols, data })
    }

    /// Builds a matrix from equal-length rows.
    pub fn from_rows(rows: Vec<BitWord>) -> Result<Self, Gf2Error> {
        let cols = rows
            .first()
            .map(BitWord::len)
            .ok_or(Gf2Error::Empty { rows: 0, cols: 0 })?;
        if let Some(bad) = rows.iter().find(|r| r.len() != cols) {
            return Err(Gf2Error::Dimension {
                expected: cols,
                found: bad.len(),
            });
        }
        Ok(BitMatrix {
            rows: rows.len(),
            cols,
            data: rows,
        })
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn get(&self, r: usize, c: usize) -> bool {
        self.data[r].get(c)
    }

    pub fn set(&mut self, r: usize, c: usize, value: bool) {
        self.data[r].set(c, value);
    }

    pub fn row(&self, r: usize) -> &BitWord {
        &self.data[r]
    }

    pub fn column(&self, c: usize) -> BitWord {
        let mut out = BitWord::zeros(self.rows).expect("rows > 0");
        for r in 0..self.rows {
            if self.get(r, c) {
                out.set(r, true);
            }
        }
        out
    }

    pub fn transpose(&self) -> BitMatrix {
        let mut t = BitMatrix::zeros(self.cols, self.rows).expect("non-empty");
        for (r, row) in self.data.iter().enumerate() {
            for c in row.ones() {
                t.set(c, r, true);
            }
        }
        t
    }

    /// Horizontal concatenation `[self | right]`.
    pub fn hstack(&self, right: &BitMatrix) -> Result<BitMatrix, Gf2Error> {
        if self.rows != right.rows {
            return Err(Gf2Error::Dimension {
                expected: self.rows,
                found: right.rows,
            });
        }
        let data = self
            .data
            .iter()
            .zip(&right.data)
            .map(|(a, b)| a.concat(b))
            .collect();
        Ok(BitMatrix {
            rows: self.rows,
            cols: self.cols + right.cols,
            data,
        })
    }

    /// Row-vector product `v · M` (used for encoding, `x = a·G`).
    pub fn row_vec_mul(&self, v: &BitWord) -> Result<BitWord, Gf2Error> {
        if v.len() != self.rows {
            return Err(Gf2Error::Dimension {
                expected: self.rows,
                found: v.len(),
            });
        }
        let mut out = BitWord::zeros(self.cols)?;
        for r in v.ones() {
            out.xor_assign(&self.data[r])?;
        }
        Ok(out)
    }

    /// Column-vector product `M · vᵀ` (used for syndromes, `s = H·yᵀ`).
    pub fn mul_col_vec(&self, v: &BitWord) -> Result<BitWord, Gf2Error> {
        if v.len() != self.cols {
            return Err(Gf2Error::Dimension {
                expected: self.cols,
                found: v.len(),
            });
        }
        let mut out = BitWord::zeros(self.rows)?;
        for (r, row) in self.data.iter().enumerate() {
            if row.dot(v)? {
                out.set(r, true);
            }
        }
        Ok(out)
    }

    /// Matrix product `self · other`.
    pub fn mul(&self, other: &BitMatrix) -> Result<BitMatrix, Gf2Error> {
        let data = self
            .data
            .iter()
            .map(|row| other.row_vec_mul(row))
            .collect::<Result<Vec<_>, _>>()?;
        Ok(BitMatrix {
            rows: self.rows,
            cols: other.cols,
            data,
        })
    }

    pub fn is_zero(&self) -> bool {
        self.data.iter().all(BitWord::is_zero)
    }

    pub fn count_ones(&self) -> usize {
        self.data.iter().map(BitWord::weight).sum()
    }
}

impl fmt::Display for BitMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for row in &self.data {
            writeln!(f, "{row}")?;
        }
        Ok(())
    }
}

impl fmt::Debug for BitMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "BitMatrix {}x{}", self.rows, self.cols)?;
        fmt::Display::fmt(self, f)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn word(s: &str) -> BitWord {
        s.parse().unwrap()
    }

    #[test]
    fn zero_vector_annihilates() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let m = BitMatrix::random(2, 4, &mut rng).unwrap();
        assert_eq!(m.row_vec_mul(&word("00")).unwrap(), word("0000"));
    }

    #[test]
    fn identity_is_neutral() {
        let id = BitMatrix::identity(3).unwrap();
        assert_eq!(id.count_ones(), 3);
        assert_eq!(id.row_vec_mul(&word("101")).unwrap(), word("101"));
    }

    #[test]
    fn hand_computed_row_product() {
        let m = BitMatrix::from_rows(vec![word("1010"), word("1101")]).unwrap();
        assert_eq!(m.row_vec_mul(&word("11")).unwrap(), word("0111"));
    }

    #[test]
    fn dimension_mismatch_is_an_error() {
        let m = BitMatrix::identity(3).unwrap();
        assert!(matches!(
            m.row_vec_mul(&word("10")),
            Err(Gf2Error::Dimension {
                expected: 3,
                found: 2
            })
        ));
        assert!(m.mul_col_vec(&word("1011")).is_err());
        assert!(word("10").xor(&word("100")).is_err());
    }

    #[test]
    fn empty_shapes_rejected() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        assert!(BitMatrix::random(0, 3, &mut rng).is_err());
        assert!(BitMatrix::random(3, 0, &mut rng).is_err());
        assert!(BitWord::zeros(0).is_err());
        assert!("".parse::<BitWord>().is_err());
        assert_eq!("0102".parse::<BitWord>(), Err(Gf2Error::InvalidBit('2')));
    }

    #[test]
    fn random_matrix_is_reproducible() {
        let a = BitMatrix::random(25, 103, &mut ChaCha8Rng::seed_from_u64(9)).unwrap();
        let b = BitMatrix::random(25, 103, &mut ChaCha8Rng::seed_from_u64(9)).unwrap();
        let c = BitMatrix::random(25, 103, &mut ChaCha8Rng::seed_from_u64(10)).unwrap();
        assert_eq!(a, b);
        assert_ne!(a, c);
    }

    #[test]
    fn random_bits_are_fair() {
        // 4 sigma of Binomial(10^4, 1/2) is 0.02 in fraction
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let ones: usize = (0..10_000)
            .map(|_| BitMatrix::random(1, 1, &mut rng).unwrap().count_ones())
            .sum();
        let frac = ones as f64 / 1e4;
        assert!((0.48..=0.52).contains(&frac), "fraction of ones {frac}");
    }

    #[test]
    fn weights() {
        assert_eq!(BitWord::zeros(8).unwrap().weight(), 0);
        assert_eq!(word("1111").weight(), 4);
        let long = BitWord::from_positions(200, &[0, 63, 64, 127, 199]).unwrap();
        assert_eq!(long.weight(), 5);
        assert_eq!(long.ones().collect::<Vec<_>>(), vec![0, 63, 64, 127, 199]);
    }

    #[test]
    fn column_product_and_transpose_agree() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let m = BitMatrix::random(7, 130, &mut rng).unwrap();
        let v = BitWord::random(130, &mut rng).unwrap();
        assert_eq!(
            m.mul_col_vec(&v).unwrap(),
            m.transpose().row_vec_mul(&v).unwrap()
        );
        assert_eq!(m.transpose().transpose(), m);
    }

    #[test]
    fn slicing_and_concat() {
        let w = word("1100101");
        assert_eq!(w.slice(2, 3).unwrap(), word("001"));
        assert_eq!(w.slice(0, 7).unwrap(), w);
        assert!(w.slice(5, 3).is_err());
        let joined = word("10").concat(&BitWord::from_positions(70, &[69]).unwrap());
        assert_eq!(joined.len(), 72);
        assert_eq!(joined.ones().collect::<Vec<_>>(), vec![0, 71]);
    }

    fn arb_pair(max_len: usize) -> impl Strategy<Value = (Vec<bool>, Vec<bool>)> {
        (1..max_len).prop_flat_map(|len| {
            (
                proptest::collection::vec(any::<bool>(), len),
                proptest::collection::vec(any::<bool>(), len),
            )
        })
    }

    proptest! {
        #[test]
        fn xor_self_is_zero(bits in proptest::collection::vec(any::<bool>(), 1..300)) {
            let w = BitWord::from_bools(&bits).unwrap();
            prop_assert!((&w ^ &w).is_zero());
        }

        #[test]
        fn weight_of_xor_counts_disagreements((a, b) in arb_pair(300)) {
            let wa = BitWord::from_bools(&a).unwrap();
            let wb = BitWord::from_bools(&b).unwrap();
            let disagree = a.iter().zip(&b).filter(|(x, y)| x != y).count();
            let d = (&wa ^ &wb).weight();
            prop_assert_eq!(d, disagree);
            prop_assert!(d <= wa.weight() + wb.weight());
        }

        #[test]
        fn row_product_is_linear(seed in any::<u64>(), rows in 1usize..80, cols in 1usize..150) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let m = BitMatrix::random(rows, cols, &mut rng).unwrap();
            let v1 = BitWord::random(rows, &mut rng).unwrap();
            let v2 = BitWord::random(rows, &mut rng).unwrap();
            let lhs = m.row_vec_mul(&(&v1 ^ &v2)).unwrap();
            let rhs = &m.row_vec_mul(&v1).unwrap() ^ &m.row_vec_mul(&v2).unwrap();
            prop_assert_eq!(lhs, rhs);
            let id = BitMatrix::identity(rows).unwrap();
            prop_assert_eq!(id.row_vec_mul(&v1).unwrap(), v1);
        }
    }
}
