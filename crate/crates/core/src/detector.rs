//! Zero-forcing detection and the post-filter noise diagnostics.

use nalgebra::{Cholesky, DVector};
use thiserror::Error;

use crate::channel::{CMatrix, CVector, ChannelRealization};
use crate::modem::Complex64;

/// Gram matrices whose 1-norm condition number exceeds this are rejected.
pub const MAX_CONDITION: f64 = 1e12;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum DetectorError {
    #[error("channel Gram matrix is numerically singular (condition estimate {condition:e})")]
    Singular { condition: f64 },
    #[error("expected a received vector of {expected} entries, got {found}")]
    Length { expected: usize, found: usize },
    #[error(
        "Neumann series diverges (spectral radius {radius:.4} >= 1); use the exact inverse instead"
    )]
    NeumannDivergent { radius: f64 },
    #[error("Neumann expansion needs at least one term")]
    NoTerms,
    #[error("matrix must be square with a positive real diagonal")]
    NotGram,
}

fn norm1(m: &CMatrix) -> f64 {
    m.column_iter()
        .map(|c| c.iter().map(|z| z.norm()).sum::<f64>())
        .fold(0.0, f64::max)
}

/// `Σ_k conj(a_k)·b_k` with split real/imaginary accumulators.
#[inline]
fn conj_dot(a: &[Complex64], b: &[Complex64]) -> Complex64 {
    let (mut re, mut im) = (0.0, 0.0);
    for (x, y) in a.iter().zip(b) {
        re += x.re * y.re + x.im * y.im;
        im += x.re * y.im - x.im * y.re;
    }
    Complex64::new(re, im)
}

/// Zero-forcing filter of a tall channel.
///
/// The pseudo-inverse `H⁺ = (HᴴH)⁻¹Hᴴ` is applied as `T⁻¹(Hᴴy)`, which
/// avoids forming the `N_T × N_R` product on every channel draw;
/// [`ZfFilter::pinv`] materializes it on request.
#[derive(Debug, Clone)]
pub struct ZfFilter {
    h: CMatrix,
    gram: CMatrix,
    gram_inv: CMatrix,
}

impl ZfFilter {
    pub fn build(channel: &ChannelRealization) -> Result<Self, DetectorError> {
        let h = channel.matrix();
        let (n_r, n_t) = h.shape();
        let cols = h.as_slice();
        let mut gram = CMatrix::zeros(n_t, n_t);
        for j in 0..n_t {
            let cj = &cols[j * n_r..(j + 1) * n_r];
            for i in 0..=j {
                let v = conj_dot(&cols[i * n_r..(i + 1) * n_r], cj);
                gram[(i, j)] = v;
                gram[(j, i)] = v.conj();
            }
            gram[(j, j)].im = 0.0;
        }
        let chol = Cholesky::new(gram.clone()).ok_or(DetectorError::Singular {
            condition: f64::INFINITY,
        })?;
        let gram_inv = chol.inverse();
        let condition = norm1(&gram) * norm1(&gram_inv);
        if !condition.is_finite() || condition > MAX_CONDITION {
            return Err(DetectorError::Singular { condition });
        }
        Ok(ZfFilter {
            h: h.clone(),
            gram,
            gram_inv,
        })
    }

    /// `H⁺ = (HᴴH)⁻¹Hᴴ`, `N_T × N_R`.
    pub fn pinv(&self) -> CMatrix {
        &self.gram_inv * self.h.adjoint()
    }

    /// `T = HᴴH`.
    pub fn gram(&self) -> &CMatrix {
        &self.gram
    }

    pub fn gram_inverse(&self) -> &CMatrix {
        &self.gram_inv
    }

    pub fn n_t(&self) -> usize {
        self.h.ncols()
    }

    pub fn n_r(&self) -> usize {
        self.h.nrows()
    }

    /// Unsliced estimate `H⁺y / √snr`, i.e. `x + u/√snr`.
    pub fn detect(&self, y: &CVector, snr: f64) -> Result<CVector, DetectorError> {
        let n_r = self.n_r();
        if y.len() != n_r {
            return Err(DetectorError::Length {
                expected: n_r,
                found: y.len(),
            });
        }
        let cols = self.h.as_slice();
        let matched = CVector::from_iterator(
            self.n_t(),
            (0..self.n_t()).map(|i| conj_dot(&cols[i * n_r..(i + 1) * n_r], y.as_slice())),
        );
        Ok(&self.gram_inv * matched * Complex64::from(1.0 / snr.sqrt()))
    }

    /// `R_u = σ²·T⁻¹`, the covariance of `u = H⁺n`.
    pub fn noise_autocorrelation(&self, sigma2: f64) -> CMatrix {
        &self.gram_inv * Complex64::from(sigma2)
    }

    /// Per-stream output SNR `snr / [T⁻¹]_ii`.
    pub fn post_zf_snr(&self, snr: f64) -> Vec<f64> {
        (0..self.n_t())
            .map(|i| snr / self.gram_inv[(i, i)].re)
            .collect()
    }
}

/// Truncated Neumann expansion of `gram⁻¹` around its diagonal:
/// `Σ_{t<terms} (I - D⁻¹T)^t D⁻¹`.
pub fn neumann_inverse(gram: &CMatrix, terms: usize) -> Result<CMatrix, DetectorError> {
    if terms == 0 {
        return Err(DetectorError::NoTerms);
    }
    let n = gram.nrows();
    if n == 0 || gram.ncols() != n {
        return Err(DetectorError::NotGram);
    }
    let diag: Vec<f64> = (0..n).map(|i| gram[(i, i)].re).collect();
    if diag.iter().any(|&d| d <= 0.0 || !d.is_finite()) {
        return Err(DetectorError::NotGram);
    }

    // I - D⁻¹T is similar to the Hermitian I - D^{-1/2} T D^{-1/2}
    let inv_sqrt = DVector::from_iterator(n, diag.iter().map(|d| Complex64::from(1.0 / d.sqrt())));
    let scaled = CMatrix::from_fn(n, n, |i, j| {
        let v = -gram[(i, j)] * inv_sqrt[i] * inv_sqrt[j];
        if i == j {
            v + Complex64::from(1.0)
        } else {
            v
        }
    });
    let radius = scaled
        .symmetric_eigenvalues()
        .iter()
        .fold(0.0f64, |acc, l| acc.max(l.abs()));
    if radius >= 1.0 {
        return Err(DetectorError::NeumannDivergent { radius });
    }

    let d_inv = CMatrix::from_fn(n, n, |i, j| {
        if i == j {
            Complex64::from(1.0 / diag[i])
        } else {
            Complex64::from(0.0)
        }
    });
    let step = CMatrix::identity(n, n) - &d_inv * gram;
    let mut term = d_inv.clone();
    let mut acc = d_inv;
    for _ in 1..terms {
        term = &step * term;
        acc += &term;
    }
    Ok(acc)
}
