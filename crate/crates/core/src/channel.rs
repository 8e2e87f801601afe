//! Flat Rayleigh MIMO channel and its perfect-hardening equivalent.

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use thiserror::Error;

use crate::modem::{Complex64, SymbolVector};

pub type CMatrix = DMatrix<Complex64>;
pub type CVector = DVector<Complex64>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ChannelError {
    #[error("need n_r >= n_t >= 1 receive/transmit antennas (got n_r={n_r}, n_t={n_t})")]
    Antennas { n_r: usize, n_t: usize },
    #[error("expected {expected} transmit symbols, got {found}")]
    Length { expected: usize, found: usize },
    #[error("invalid noise parameters: sigma2={sigma2}, snr={snr}")]
    Noise { sigma2: f64, snr: f64 },
}

/// One draw of `CN(0, 1)`: independent real and imaginary parts of variance 1/2.
pub fn complex_gaussian<R: Rng + ?Sized>(rng: &mut R) -> Complex64 {
    let re: f64 = StandardNormal.sample(rng);
    let im: f64 = StandardNormal.sample(rng);
    Complex64::new(re, im) * std::f64::consts::FRAC_1_SQRT_2
}

/// Additive noise and signal scaling for one channel use.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NoiseParams {
    /// Noise variance per complex receive dimension.
    pub sigma2: f64,
    /// Linear scaling of the unit-energy symbol power.
    pub snr: f64,
}

impl NoiseParams {
    /// `sigma2 = 0` is accepted to run the chain noiselessly.
    pub fn new(sigma2: f64, snr: f64) -> Result<Self, ChannelError> {
        if !(sigma2 >= 0.0 && sigma2.is_finite() && snr > 0.0 && snr.is_finite()) {
            return Err(ChannelError::Noise { sigma2, snr });
        }
        Ok(NoiseParams { sigma2, snr })
    }
}

/// `N_R × N_T` channel matrix, known at the receiver.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelRealization {
    h: CMatrix,
}

impl ChannelRealization {
    /// i.i.d. `CN(0, 1)` entries.
    pub fn sample<R: Rng + ?Sized>(
        n_r: usize,
        n_t: usize,
        rng: &mut R,
    ) -> Result<Self, ChannelError> {
        check_antennas(n_r, n_t)?;
        // column-major fill keeps the draw order stable across nalgebra versions
        let mut data = Vec::with_capacity(n_r * n_t);
        data.extend((0..n_r * n_t).map(|_| complex_gaussian(rng)));
        Ok(ChannelRealization {
            h: CMatrix::from_vec(n_r, n_t, data),
        })
    }

    pub fn from_matrix(h: CMatrix) -> Result<Self, ChannelError> {
        check_antennas(h.nrows(), h.ncols())?;
        Ok(ChannelRealization { h })
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.h
    }

    pub fn n_r(&self) -> usize {
        self.h.nrows()
    }

    pub fn n_t(&self) -> usize {
        self.h.ncols()
    }

    /// `y = √snr · H·x + w` with `w ~ CN(0, sigma2·I)`.
    pub fn transmit<R: Rng + ?Sized>(
        &self,
        x: &SymbolVector,
        noise: &NoiseParams,
        rng: &mut R,
    ) -> Result<CVector, ChannelError> {
        if x.len() != self.n_t() {
            return Err(ChannelError::Length {
                expected: self.n_t(),
                found: x.len(),
            });
        }
        let xv = CVector::from_column_slice(x.as_slice());
        let mut y = &self.h * xv * Complex64::from(noise.snr.sqrt());
        let scale = noise.sigma2.sqrt();
        for v in y.iter_mut() {
            *v += complex_gaussian(rng) * scale;
        }
        Ok(y)
    }
}

fn check_antennas(n_r: usize, n_t: usize) -> Result<(), ChannelError> {
    if n_t == 0 || n_r < n_t {
        return Err(ChannelError::Antennas { n_r, n_t });
    }
    Ok(())
}

/// Equivalent real model of a complex matrix: `A + jB -> [[A, -B], [B, A]]`.
pub fn complex_to_real_matrix(m: &CMatrix) -> DMatrix<f64> {
    let (r, c) = m.shape();
    DMatrix::from_fn(2 * r, 2 * c, |i, j| {
        let z = m[(i % r, j % c)];
        match (i < r, j < c) {
            (true, true) | (false, false) => z.re,
            (true, false) => -z.im,
            (false, true) => z.im,
        }
    })
}

/// Stacked real form of a complex vector: `a + jb -> [a; b]`.
pub fn complex_to_real_vector(v: &CVector) -> DVector<f64> {
    let n = v.len();
    DVector::from_fn(2 * n, |i, _| if i < n { v[i].re } else { v[i - n].im })
}

/// Inverse of [`complex_to_real_vector`].
pub fn real_to_complex_vector(v: &DVector<f64>) -> CVector {
    let n = v.len() / 2;
    CVector::from_fn(n, |i, _| Complex64::new(v[i], v[i + n]))
}

/// Parallel AWGN branches of a perfectly hardened `N_R`-antenna array:
/// `y = √snr · x + u` with `u ~ CN(0, sigma2/n_r · I)`.
pub fn hardening_transmit<R: Rng + ?Sized>(
    x: &SymbolVector,
    sigma2: f64,
    n_r: usize,
    snr: f64,
    rng: &mut R,
) -> Result<CVector, ChannelError> {
    if n_r == 0 {
        return Err(ChannelError::Antennas { n_r, n_t: x.len() });
    }
    let noise = NoiseParams::new(sigma2, snr)?;
    let gain = noise.snr.sqrt();
    let scale = (noise.sigma2 / n_r as f64).sqrt();
    Ok(CVector::from_iterator(
        x.len(),
        x.as_slice()
            .iter()
            .map(|&s| s * gain + complex_gaussian(rng) * scale),
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn rng(seed: u64) -> ChaCha8Rng {
        ChaCha8Rng::seed_from_u64(seed)
    }

    fn symbols(n: usize, rng: &mut ChaCha8Rng) -> SymbolVector {
        SymbolVector((0..n).map(|_| complex_gaussian(rng)).collect())
    }

    #[test]
    fn sampling_is_deterministic() {
        let a = ChannelRealization::sample(200, 32, &mut rng(5)).unwrap();
        let b = ChannelRealization::sample(200, 32, &mut rng(5)).unwrap();
        assert_eq!(a, b);
        assert_eq!((a.n_r(), a.n_t()), (200, 32));
    }

    #[test]
    fn entries_have_unit_variance() {
        let mut r = rng(6);
        let mut total = 0.0;
        let mut count = 0usize;
        let mut mean = Complex64::new(0.0, 0.0);
        while count < 100_000 {
            let ch = ChannelRealization::sample(100, 10, &mut r).unwrap();
            total += ch.matrix().iter().map(|z| z.norm_sqr()).sum::<f64>();
            mean += ch.matrix().iter().sum::<Complex64>();
            count += 1000;
        }
        let power = total / count as f64;
        assert!((0.99..=1.01).contains(&power), "mean |h|^2 = {power}");
        assert!((mean / count as f64).norm() < 0.01);
    }

    #[test]
    fn wide_channels_rejected() {
        assert_eq!(
            ChannelRealization::sample(1, 2, &mut rng(0)).unwrap_err(),
            ChannelError::Antennas { n_r: 1, n_t: 2 }
        );
        assert!(ChannelRealization::sample(4, 0, &mut rng(0)).is_err());
    }

    #[test]
    fn noiseless_identity_channel() {
        let mut r = rng(7);
        let ch = ChannelRealization::from_matrix(CMatrix::identity(4, 4)).unwrap();
        let x = symbols(4, &mut r);
        let np = NoiseParams::new(0.0, 2.5).unwrap();
        let y = ch.transmit(&x, &np, &mut r).unwrap();
        for (yi, xi) in y.iter().zip(x.as_slice()) {
            assert!((yi - xi * 2.5f64.sqrt()).norm() < 1e-15);
        }
        let short = SymbolVector(vec![Complex64::new(1.0, 0.0); 3]);
        assert!(matches!(
            ch.transmit(&short, &np, &mut r),
            Err(ChannelError::Length { .. })
        ));
    }

    #[test]
    fn noise_only_statistics() {
        let mut r = rng(8);
        let ch = ChannelRealization::sample(16, 4, &mut r).unwrap();
        let x = SymbolVector(vec![Complex64::new(0.0, 0.0); 4]);
        let np = NoiseParams::new(0.7, 1.0).unwrap();
        let mut acc = 0.0;
        let draws = 5000;
        for _ in 0..draws {
            acc += ch
                .transmit(&x, &np, &mut r)
                .unwrap()
                .iter()
                .map(|z| z.norm_sqr())
                .sum::<f64>();
        }
        let var = acc / (draws * 16) as f64;
        assert!((var - 0.7).abs() < 0.7 * 0.03, "per-entry variance {var}");
    }

    #[test]
    fn signal_energy_scales_with_snr() {
        let mut r = rng(9);
        let np1 = NoiseParams::new(0.0, 1.0).unwrap();
        let np2 = NoiseParams::new(0.0, 2.0).unwrap();
        let (mut e1, mut e2) = (0.0, 0.0);
        for _ in 0..2000 {
            let ch = ChannelRealization::sample(8, 4, &mut r).unwrap();
            let x = symbols(4, &mut r);
            e1 += ch.transmit(&x, &np1, &mut r).unwrap().norm_squared();
            e2 += ch.transmit(&x, &np2, &mut r).unwrap().norm_squared();
        }
        assert!((e2 / e1 - 2.0).abs() < 1e-9);
    }

    #[test]
    fn invalid_noise_rejected() {
        assert!(NoiseParams::new(-1.0, 1.0).is_err());
        assert!(NoiseParams::new(1.0, 0.0).is_err());
        assert!(NoiseParams::new(f64::NAN, 1.0).is_err());
    }

    #[test]
    fn real_embedding_of_j() {
        let h = CMatrix::from_element(1, 1, Complex64::new(0.0, 1.0));
        let r = complex_to_real_matrix(&h);
        assert_eq!(r, DMatrix::from_row_slice(2, 2, &[0.0, -1.0, 1.0, 0.0]));
    }

    #[test]
    fn real_input_has_zero_imaginary_block() {
        let h = CMatrix::from_fn(3, 2, |i, j| Complex64::new((i + 2 * j) as f64, 0.0));
        let r = complex_to_real_matrix(&h);
        assert!(r.view((3, 0), (3, 2)).iter().all(|&v| v == 0.0));
        assert!(r.view((0, 2), (3, 2)).iter().all(|&v| v == 0.0));
    }

    #[test]
    fn real_embedding_is_a_homomorphism() {
        let mut r = rng(10);
        for _ in 0..20 {
            let a = ChannelRealization::sample(6, 3, &mut r)
                .unwrap()
                .matrix()
                .clone();
            let b = ChannelRealization::sample(6, 3, &mut r)
                .unwrap()
                .matrix()
                .clone();
            let c = ChannelRealization::sample(3, 3, &mut r)
                .unwrap()
                .matrix()
                .clone();
            let x = CVector::from_iterator(3, (0..3).map(|_| complex_gaussian(&mut r)));
            let prod = complex_to_real_matrix(&a) * complex_to_real_vector(&x);
            assert!((prod - complex_to_real_vector(&(&a * &x))).amax() < 1e-12);
            let sum = complex_to_real_matrix(&(&a + &b));
            assert!((sum - complex_to_real_matrix(&a) - complex_to_real_matrix(&b)).amax() < 1e-12);
            let mm = complex_to_real_matrix(&a) * complex_to_real_matrix(&c);
            assert!((mm - complex_to_real_matrix(&(&a * &c))).amax() < 1e-12);
            assert_eq!(real_to_complex_vector(&complex_to_real_vector(&x)), x);
        }
    }

    #[test]
    fn hardening_noise_power() {
        let mut r = rng(11);
        let n_t = 22;
        let x = SymbolVector(vec![Complex64::new(0.0, 0.0); n_t]);
        let draws = 4000;
        let mut power = |n_r: usize| {
            (0..draws)
                .map(|_| {
                    hardening_transmit(&x, 1.0, n_r, 1.0, &mut r)
                        .unwrap()
                        .norm_squared()
                })
                .sum::<f64>()
                / draws as f64
        };
        let p100 = power(100);
        let p400 = power(400);
        let p200 = power(200);
        let expected = n_t as f64 / 200.0;
        assert!(
            (p200 - expected).abs() < 0.05 * expected,
            "‖u‖² = {p200}, want {expected}"
        );
        assert!((p100 / p400 - 4.0).abs() < 0.2, "ratio {}", p100 / p400);
    }

    #[test]
    fn hardening_without_noise() {
        let mut r = rng(12);
        let x = symbols(5, &mut r);
        let y = hardening_transmit(&x, 0.0, 200, 3.0, &mut r).unwrap();
        for (yi, xi) in y.iter().zip(x.as_slice()) {
            assert!((yi - xi * 3f64.sqrt()).norm() < 1e-15);
        }
        assert!(hardening_transmit(&x, 1.0, 0, 3.0, &mut r).is_err());
    }
}
