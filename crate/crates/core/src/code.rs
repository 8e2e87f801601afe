//! Systematic random linear codes.
//!
//! A code is drawn as `G = [P | I_k]` with `P` uniform over `F2^{k×(n-k)}`,
//! and checked through its dual `H = [I_{n-k} | Pᵀ]`. Codewords carry the
//! message verbatim in their last `k` positions.

use std::fmt::Write as _;

use rand::Rng;
use thiserror::Error;

use crate::gf2::{BitMatrix, BitWord, Gf2Error};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum CodeError {
    #[error("invalid code dimensions n={n}, k={k}: need 0 < k < n")]
    Dimensions { n: usize, k: usize },
    #[error("expected a word of {expected} bits, got {found}")]
    Length { expected: usize, found: usize },
    #[error("generator is not in systematic [P | I_k] form")]
    NotSystematic,
    #[error("malformed code text: {0}")]
    Format(String),
    #[error(transparent)]
    Gf2(#[from] Gf2Error),
}

/// An `(n, k)` binary linear code in systematic form.
#[derive(Clone, PartialEq, Eq)]
pub struct RlcCode {
    n: usize,
    k: usize,
    generator: BitMatrix,
    parity: BitMatrix,
    /// Column `j` of the parity matrix, packed into `syndrome_words` words.
    column_syndromes: Vec<u64>,
    syndrome_words: usize,
}

impl RlcCode {
    /// Draws a fresh random `(n, k)` code from `rng`.
    pub fn generate<R: Rng + ?Sized>(n: usize, k: usize, rng: &mut R) -> Result<Self, CodeError> {
        check_dimensions(n, k)?;
        let p = BitMatrix::random(k, n - k, rng)?;
        Self::from_parity_part(&p)
    }

    /// Builds the code whose generator is `[p | I_k]`.
    pub fn from_parity_part(p: &BitMatrix) -> Result<Self, CodeError> {
        let k = p.rows();
        let n = k + p.cols();
        check_dimensions(n, k)?;
        let generator = p.hstack(&BitMatrix::identity(k)?)?;
        let parity = BitMatrix::identity(n - k)?.hstack(&p.transpose())?;

        let syndrome_words = (n - k).div_ceil(64);
        let mut column_syndromes = Vec::with_capacity(n * syndrome_words);
        for j in 0..n {
            column_syndromes.extend_from_slice(parity.column(j).as_words());
        }
        Ok(RlcCode {
            n,
            k,
            generator,
            parity,
            column_syndromes,
            syndrome_words,
        })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn rate(&self) -> f64 {
        self.k as f64 / self.n as f64
    }

    /// Generator matrix `[P | I_k]`, `k × n`.
    pub fn generator(&self) -> &BitMatrix {
        &self.generator
    }

    /// Parity-check matrix `[I_{n-k} | Pᵀ]`, `(n-k) × n`.
    pub fn parity(&self) -> &BitMatrix {
        &self.parity
    }

    /// Number of `u64` words in a packed syndrome.
    pub fn syndrome_words(&self) -> usize {
        self.syndrome_words
    }

    /// Packed syndrome of the unit vector at position `j`.
    #[inline]
    pub fn column_syndrome(&self, j: usize) -> &[u64] {
        let w = self.syndrome_words;
        &self.column_syndromes[j * w..(j + 1) * w]
    }

    /// `x = a·G`.
    pub fn encode(&self, message: &BitWord) -> Result<BitWord, CodeError> {
        self.check(message, self.k)?;
        Ok(self.generator.row_vec_mul(message)?)
    }

    /// `s = H·yᵀ`, of length `n - k`.
    pub fn syndrome(&self, word: &BitWord) -> Result<BitWord, CodeError> {
        self.check(word, self.n)?;
        Ok(self.parity.mul_col_vec(word)?)
    }

    /// Membership test: true iff the syndrome vanishes.
    pub fn is_codeword(&self, word: &BitWord) -> Result<bool, CodeError> {
        Ok(self.syndrome(word)?.is_zero())
    }

    /// Message carried by a codeword (its last `k` bits).
    pub fn extract_message(&self, word: &BitWord) -> Result<BitWord, CodeError> {
        self.check(word, self.n)?;
        Ok(word.slice(self.n - self.k, self.k)?)
    }

    fn check(&self, word: &BitWord, expected: usize) -> Result<(), CodeError> {
        if word.len() != expected {
            return Err(CodeError::Length {
                expected,
                found: word.len(),
            });
        }
        Ok(())
    }

    /// Plain-text dump: `"n k"` then the `k` generator rows as `0`/`1` strings.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "{} {}", self.n, self.k);
        out.push_str(&self.generator.to_string());
        out
    }

    /// Parses the format written by [`RlcCode::to_text`].
    pub fn from_text(text: &str) -> Result<Self, CodeError> {
        let mut lines = text.lines().map(str::trim).filter(|l| !l.is_empty());
        let header = lines
            .next()
            .ok_or_else(|| CodeError::Format("missing \"n k\" header".into()))?;
        let dims: Vec<usize> = header
            .split_whitespace()
            .map(|t| t.parse::<usize>())
            .collect::<Result<_, _>>()
            .map_err(|e| CodeError::Format(format!("header {header:?}: {e}")))?;
        let [n, k] = dims[..] else {
            return Err(CodeError::Format(format!(
                "header {header:?} must hold two integers"
            )));
        };
        check_dimensions(n, k)?;

        let rows = lines
            .map(|l| l.parse::<BitWord>())
            .collect::<Result<Vec<_>, _>>()?;
        if rows.len() != k {
            return Err(CodeError::Format(format!(
                "expected {k} generator rows, found {}",
                rows.len()
            )));
        }
        if let Some(bad) = rows.iter().find(|r| r.len() != n) {
            return Err(CodeError::Length {
                expected: n,
                found: bad.len(),
            });
        }
        let generator = BitMatrix::from_rows(rows)?;
        for r in 0..k {
            for c in 0..k {
                if generator.get(r, n - k + c) != (r == c) {
                    return Err(CodeError::NotSystematic);
                }
            }
        }
        let mut p = BitMatrix::zeros(k, n - k)?;
        for r in 0..k {
            for c in generator.row(r).ones().filter(|&c| c < n - k) {
                p.set(r, c, true);
            }
        }
        Self::from_parity_part(&p)
    }
}

impl std::fmt::Debug for RlcCode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("RlcCode")
            .field("n", &self.n)
            .field("k", &self.k)
            .finish_non_exhaustive()
    }
}

fn check_dimensions(n: usize, k: usize) -> Result<(), CodeError> {
    if k == 0 || k >= n {
        return Err(CodeError::Dimensions { n, k });
    }
    Ok(())
}
