//! Hard-decision GRAND.
//!
//! Candidate noise patterns are tried in nondecreasing Hamming weight, and
//! within one weight in lexicographic order of the flipped positions. The
//! first pattern that turns the received word into a codeword wins. Each
//! candidate is one membership query; the syndrome of `y ⊕ e` is obtained by
//! XOR-ing the parity columns at the flipped positions onto `H·yᵀ`.

use thiserror::Error;

use crate::code::{CodeError, RlcCode};
use crate::gf2::BitWord;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum DecoderError {
    #[error("pattern weight {weight} exceeds word length {n}")]
    Weight { n: usize, weight: usize },
    #[error("query cap must be at least 1")]
    ZeroCap,
    #[error(transparent)]
    Code(#[from] CodeError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct GrandConfig {
    /// Largest pattern weight tried (`n_b`).
    pub max_weight: usize,
    /// Optional hard cap on membership queries.
    pub query_cap: Option<u64>,
}

impl GrandConfig {
    pub fn new(max_weight: usize) -> Self {
        GrandConfig {
            max_weight,
            query_cap: None,
        }
    }

    pub fn with_query_cap(mut self, cap: u64) -> Result<Self, DecoderError> {
        if cap == 0 {
            return Err(DecoderError::ZeroCap);
        }
        self.query_cap = Some(cap);
        Ok(self)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DecodeStatus {
    Decoded,
    Abandoned,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DecodeOutcome {
    pub status: DecodeStatus,
    /// The decoded codeword, or the received word on abandonment.
    pub codeword: BitWord,
    /// `received ⊕ codeword`; all-zero on abandonment.
    pub inferred_error: BitWord,
    /// Membership tests performed, including the test of the received word.
    pub queries: u64,
}

impl DecodeOutcome {
    pub fn is_decoded(&self) -> bool {
        self.status == DecodeStatus::Decoded
    }
}

/// Binomial coefficient; saturates at `u128::MAX`.
pub fn binomial(n: usize, k: usize) -> u128 {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    let mut acc: u128 = 1;
    for i in 0..k {
        // acc * (n - i) / (i + 1) stays integral at every step
        acc = match acc.checked_mul((n - i) as u128) {
            Some(v) => v / (i as u128 + 1),
            None => return u128::MAX,
        };
    }
    acc
}

/// `Σ_{t=1}^{n_b} C(n, t)`: worst-case number of non-trivial queries.
/// The decoder can issue one more, for the received word itself.
pub fn query_upper_bound(n: usize, max_weight: usize) -> u128 {
    (1..=max_weight.min(n)).fold(0u128, |acc, t| acc.saturating_add(binomial(n, t)))
}

/// Streams all weight-`w` patterns of length `n` in lexicographic order of
/// their position tuples.
#[derive(Debug, Clone)]
pub struct ErrorPatterns {
    n: usize,
    positions: Vec<usize>,
    done: bool,
}

impl ErrorPatterns {
    pub fn new(n: usize, weight: usize) -> Result<Self, DecoderError> {
        if weight > n || n == 0 {
            return Err(DecoderError::Weight { n, weight });
        }
        Ok(ErrorPatterns {
            n,
            positions: (0..weight).collect(),
            done: false,
        })
    }

    fn advance(&mut self) -> bool {
        let w = self.positions.len();
        let n = self.n;
        let mut i = w;
        while i > 0 {
            i -= 1;
            if self.positions[i] < n - w + i {
                self.positions[i] += 1;
                for j in i + 1..w {
                    self.positions[j] = self.positions[j - 1] + 1;
                }
                return true;
            }
        }
        false
    }
}

impl Iterator for ErrorPatterns {
    type Item = BitWord;

    fn next(&mut self) -> Option<BitWord> {
        if self.done {
            return None;
        }
        let word = BitWord::from_positions(self.n, &self.positions).expect("positions in range");
        if !self.advance() {
            self.done = true;
        }
        Some(word)
    }
}

struct Search<'a> {
    code: &'a RlcCode,
    words: usize,
    /// `partial[d]` holds the syndrome after flipping the first `d` positions.
    partial: Vec<u64>,
    positions: Vec<usize>,
    queries: u64,
    cap: u64,
}

enum Step {
    Found,
    Exhausted,
    Capped,
}

impl Search<'_> {
    /// Try every completion of `positions[..depth]` with indices `>= start`.
    fn run(&mut self, depth: usize, start: usize, weight: usize) -> Step {
        let n = self.code.n();
        let w = self.words;
        let last = depth + 1 == weight;
        for pos in start..=n - (weight - depth) {
            let col = self.code.column_syndrome(pos);
            let (head, tail) = self.partial.split_at_mut((depth + 1) * w);
            let current = &head[depth * w..];
            if last {
                if self.queries >= self.cap {
                    return Step::Capped;
                }
                self.queries += 1;
                if current.iter().zip(col).all(|(a, b)| a == b) {
                    self.positions[depth] = pos;
                    return Step::Found;
                }
            } else {
                for ((dst, a), b) in tail[..w].iter_mut().zip(current).zip(col) {
                    *dst = a ^ b;
                }
                self.positions[depth] = pos;
                match self.run(depth + 1, pos + 1, weight) {
                    Step::Exhausted => {}
                    other => return other,
                }
            }
        }
        Step::Exhausted
    }
}

/// Decodes `received` by guessing the noise up to weight `config.max_weight`.
pub fn grand_decode(
    code: &RlcCode,
    received: &BitWord,
    config: &GrandConfig,
) -> Result<DecodeOutcome, DecoderError> {
    let n = code.n();
    if config.max_weight > n {
        return Err(DecoderError::Weight {
            n,
            weight: config.max_weight,
        });
    }
    if config.query_cap == Some(0) {
        return Err(DecoderError::ZeroCap);
    }
    let syndrome = code.syndrome(received)?;
    let zero = BitWord::zeros(n).expect("n > 0");
    let mut queries = 1u64;
    if syndrome.is_zero() {
        return Ok(DecodeOutcome {
            status: DecodeStatus::Decoded,
            codeword: received.clone(),
            inferred_error: zero,
            queries,
        });
    }

    let words = code.syndrome_words();
    let depth = config.max_weight.max(1);
    let mut search = Search {
        code,
        words,
        partial: vec![0; depth * words],
        positions: vec![0; depth],
        queries,
        cap: config.query_cap.unwrap_or(u64::MAX),
    };
    search.partial[..words].copy_from_slice(syndrome.as_words());

    for weight in 1..=config.max_weight {
        match search.run(0, 0, weight) {
            Step::Found => {
                let error = BitWord::from_positions(n, &search.positions[..weight])
                    .expect("positions in range");
                return Ok(DecodeOutcome {
                    status: DecodeStatus::Decoded,
                    codeword: received ^ &error,
                    inferred_error: error,
                    queries: search.queries,
                });
            }
            Step::Capped => break,
            Step::Exhausted => {}
        }
    }
    queries = search.queries;
    Ok(DecodeOutcome {
        status: DecodeStatus::Abandoned,
        codeword: received.clone(),
        inferred_error: zero,
        queries,
    })
}
