//! Square M-QAM built from two PAM axes.
//!
//! A codeword of `n` bits is split in half: the first `n/2` bits drive the
//! in-phase PAM component of the symbol sequence, the remaining `n/2` bits
//! the quadrature component. Within each half, consecutive groups of
//! `log2(M)/2` bits (MSB first) select the level of consecutive symbols.

use std::fmt;
use std::str::FromStr;

use nalgebra::Complex;
use thiserror::Error;

use crate::gf2::BitWord;

pub type Complex64 = Complex<f64>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ModemError {
    #[error("unsupported constellation order {0}: must be an even power of two >= 4")]
    Order(usize),
    #[error(
        "n={n} does not fill a whole number of {m}-QAM symbols ({antennas:.2} antennas); \
         nearest valid lengths are {below} and {above}"
    )]
    NonIntegerAntennas {
        n: usize,
        m: usize,
        antennas: f64,
        below: usize,
        above: usize,
    },
    #[error("bit count {len} is not a multiple of {bits_per_symbol} bits per symbol")]
    BitCount { len: usize, bits_per_symbol: usize },
    #[error("cannot demap an empty symbol vector")]
    NoSymbols,
    #[error("unknown mapping {0:?} (expected \"natural\" or \"gray\")")]
    Mapping(String),
}

/// Bit-to-level labeling on each PAM axis.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Mapping {
    /// Binary counting order.
    Natural,
    /// Reflected binary Gray code.
    Gray,
}

impl fmt::Display for Mapping {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Mapping::Natural => "natural",
            Mapping::Gray => "gray",
        })
    }
}

impl FromStr for Mapping {
    type Err = ModemError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "natural" => Ok(Mapping::Natural),
            "gray" => Ok(Mapping::Gray),
            other => Err(ModemError::Mapping(other.to_string())),
        }
    }
}

fn order_bits(m: usize) -> Result<usize, ModemError> {
    if m < 4 || !m.is_power_of_two() || !m.trailing_zeros().is_multiple_of(2) {
        return Err(ModemError::Order(m));
    }
    Ok(m.trailing_zeros() as usize)
}

/// Number of transmit antennas carrying one codeword in a single channel use.
pub fn required_antennas(n: usize, m: usize) -> Result<usize, ModemError> {
    let bits = order_bits(m)?;
    if n == 0 || !n.is_multiple_of(bits) {
        let below = (n / bits) * bits;
        return Err(ModemError::NonIntegerAntennas {
            n,
            m,
            antennas: n as f64 / bits as f64,
            below,
            above: below + bits,
        });
    }
    Ok(n / bits)
}

/// A square QAM alphabet with unit average symbol energy.
#[derive(Debug, Clone, PartialEq)]
pub struct Constellation {
    m: usize,
    bits_per_symbol: usize,
    mapping: Mapping,
    /// Unnormalized levels `-(L-1), ..., -1, 1, ..., L-1`.
    pam_levels: Vec<f64>,
    norm: f64,
    /// Axis label of level `i`.
    labels: Vec<usize>,
    /// Level index carrying label `l`.
    level_of_label: Vec<usize>,
}

impl Constellation {
    pub fn new(m: usize, mapping: Mapping) -> Result<Self, ModemError> {
        let bits_per_symbol = order_bits(m)?;
        let levels = 1usize << (bits_per_symbol / 2);
        let pam_levels = (0..levels)
            .map(|i| 2.0 * i as f64 - (levels as f64 - 1.0))
            .collect();
        // average energy of square QAM with odd-integer levels is 2(M-1)/3
        let norm = (3.0 / (2.0 * (m as f64 - 1.0))).sqrt();
        let labels: Vec<usize> = (0..levels)
            .map(|i| match mapping {
                Mapping::Natural => i,
                Mapping::Gray => i ^ (i >> 1),
            })
            .collect();
        let mut level_of_label = vec![0; levels];
        for (i, &l) in labels.iter().enumerate() {
            level_of_label[l] = i;
        }
        Ok(Constellation {
            m,
            bits_per_symbol,
            mapping,
            pam_levels,
            norm,
            labels,
            level_of_label,
        })
    }

    pub fn order(&self) -> usize {
        self.m
    }

    pub fn bits_per_symbol(&self) -> usize {
        self.bits_per_symbol
    }

    pub fn bits_per_axis(&self) -> usize {
        self.bits_per_symbol / 2
    }

    pub fn mapping(&self) -> Mapping {
        self.mapping
    }

    pub fn pam_levels(&self) -> &[f64] {
        &self.pam_levels
    }

    pub fn norm(&self) -> f64 {
        self.norm
    }

    /// Axis label (bit group read MSB first) assigned to PAM level `index`.
    pub fn label(&self, index: usize) -> usize {
        self.labels[index]
    }

    /// All `M` normalized points, indexed by `I-level * L + Q-level`.
    pub fn points(&self) -> Vec<Complex64> {
        let mut pts = Vec::with_capacity(self.m);
        for &i in &self.pam_levels {
            for &q in &self.pam_levels {
                pts.push(Complex64::new(i, q) * self.norm);
            }
        }
        pts
    }

    fn read_label(bits: &BitWord, start: usize, width: usize) -> usize {
        (0..width).fold(0, |acc, b| (acc << 1) | usize::from(bits.get(start + b)))
    }

    pub fn map_bits(&self, bits: &BitWord) -> Result<SymbolVector, ModemError> {
        let len = bits.len();
        if !len.is_multiple_of(self.bits_per_symbol) {
            return Err(ModemError::BitCount {
                len,
                bits_per_symbol: self.bits_per_symbol,
            });
        }
        let count = len / self.bits_per_symbol;
        let half = len / 2;
        let width = self.bits_per_axis();
        let symbols = (0..count)
            .map(|s| {
                let li = self.level_of_label[Self::read_label(bits, s * width, width)];
                let lq = self.level_of_label[Self::read_label(bits, half + s * width, width)];
                Complex64::new(self.pam_levels[li], self.pam_levels[lq]) * self.norm
            })
            .collect();
        Ok(SymbolVector(symbols))
    }

    /// Nearest level index on one axis; exact midpoints go to the lower level.
    #[inline]
    pub fn slice_axis(&self, value: f64) -> usize {
        let levels = self.pam_levels.len();
        let t = (value / self.norm + (levels as f64 - 1.0)) / 2.0;
        let idx = (t - 0.5).ceil();
        if idx <= 0.0 {
            0
        } else {
            (idx as usize).min(levels - 1)
        }
    }

    /// Hard slicer followed by the inverse bit mapping.
    pub fn demap_symbols(&self, received: &[Complex64]) -> Result<BitWord, ModemError> {
        if received.is_empty() {
            return Err(ModemError::NoSymbols);
        }
        let width = self.bits_per_axis();
        let half = received.len() * width;
        let mut bits = BitWord::zeros(2 * half).expect("non-empty");
        for (s, z) in received.iter().enumerate() {
            let li = self.labels[self.slice_axis(z.re)];
            let lq = self.labels[self.slice_axis(z.im)];
            for b in 0..width {
                let shift = width - 1 - b;
                if (li >> shift) & 1 == 1 {
                    bits.set(s * width + b, true);
                }
                if (lq >> shift) & 1 == 1 {
                    bits.set(half + s * width + b, true);
                }
            }
        }
        Ok(bits)
    }
}

/// Transmit vector, one constellation point per antenna.
#[derive(Debug, Clone, PartialEq)]
pub struct SymbolVector(pub Vec<Complex64>);

impl SymbolVector {
    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn as_slice(&self) -> &[Complex64] {
        &self.0
    }
}
