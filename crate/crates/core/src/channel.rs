//! Scalar channel models and LMMSE equalization.
//!
//! SNR is the symbol signal-to-noise ratio Es/N0 with Es pinned to 1 by
//! constellation normalization, so `n0 = 10^(-snr_db/10)`. Noise is
//! circularly-symmetric complex Gaussian with total variance `n0`
//! (`n0/2` per real component).
//!
//! The fading path applies one complex gain `h`, adds noise, and equalizes
//! with the LMMSE coefficient `g = conj(h) / (|h|^2 + n0)`. The equalized
//! output is `g * (h*s + n)`; the effective noise level returned alongside
//! it is `n0 * |g|^2 / |g*h|^2`, the variance of `(g*r - a*s)/a` with
//! `a = g*h`, which is what the demapper should be told after equalization.

use alloc::vec::Vec;

use num_complex::Complex64;
#[allow(unused_imports)] // required by the no_std build
use num_traits::Float;
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::{Error, Result};

/// Channel configuration: SNR bookkeeping plus the fading mode.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelParams {
    snr_db: f64,
    n0: f64,
    fading: Fading,
}

/// Fading mode for the link simulator.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Fading {
    /// Pure AWGN, `h = 1`.
    None,
    /// One Rayleigh CN(0,1) gain per codeword, LMMSE-equalized.
    RayleighBlock,
}

impl ChannelParams {
    /// Builds parameters for the given Es/N0 in dB.
    pub fn new(snr_db: f64, fading: Fading) -> Self {
        Self { snr_db, n0: snr_db_to_n0(snr_db), fading }
    }

    /// Es/N0 in dB.
    #[inline]
    pub fn snr_db(&self) -> f64 {
        self.snr_db
    }

    /// Linear noise level N0.
    #[inline]
    pub fn n0(&self) -> f64 {
        self.n0
    }

    /// Fading mode.
    #[inline]
    pub fn fading(&self) -> Fading {
        self.fading
    }
}

/// Converts Es/N0 in dB to the linear noise level `n0 = 10^(-snr_db/10)`.
#[inline]
pub fn snr_db_to_n0(snr_db: f64) -> f64 {
    10.0f64.powf(-snr_db / 10.0)
}

/// One circularly-symmetric complex Gaussian sample with total variance
/// `n0`.
#[inline]
pub fn complex_gaussian<R: Rng + ?Sized>(n0: f64, rng: &mut R) -> Complex64 {
    let sigma = (n0 / 2.0).sqrt();
    let re: f64 = StandardNormal.sample(rng);
    let im: f64 = StandardNormal.sample(rng);
    Complex64::new(sigma * re, sigma * im)
}

/// Adds white circularly-symmetric Gaussian noise of total variance `n0` to
/// each symbol. `n0 = 0` returns the input unchanged (while still consuming
/// the same rng stream, so seeds stay aligned across noise levels).
pub fn awgn<R: Rng + ?Sized>(symbols: &[Complex64], n0: f64, rng: &mut R) -> Vec<Complex64> {
    assert!(n0 >= 0.0, "noise level must be non-negative");
    symbols.iter().map(|s| s + complex_gaussian(n0, rng)).collect()
}

/// Applies the scalar gain `h`, adds noise, and LMMSE-equalizes.
///
/// Returns the equalized symbols `g*(h*s + n)` and the effective noise level
/// to hand to the demapper. With `|h| = 1` the effective level equals `n0`;
/// with `n0 -> 0` the combined gain `g*h -> 1` and the output approaches the
/// input.
pub fn fade_and_equalize<R: Rng + ?Sized>(
    symbols: &[Complex64],
    h: Complex64,
    n0: f64,
    rng: &mut R,
) -> Result<(Vec<Complex64>, f64)> {
    if h.norm_sqr() == 0.0 {
        return Err(Error::ZeroChannelGain);
    }
    assert!(n0 >= 0.0, "noise level must be non-negative");
    let g = h.conj() / (h.norm_sqr() + n0);
    let alpha = g * h;
    let effective_n0 = n0 * g.norm_sqr() / alpha.norm_sqr();
    let out = symbols
        .iter()
        .map(|s| g * (h * s + complex_gaussian(n0, rng)))
        .collect();
    Ok((out, effective_n0))
}

/// One Rayleigh block-fading gain, CN(0, 1).
#[inline]
pub fn rayleigh_gain<R: Rng + ?Sized>(rng: &mut R) -> Complex64 {
    complex_gaussian(1.0, rng)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::seeds;
    use approx::assert_abs_diff_eq;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn snr_conversion_reference_points() {
        assert_abs_diff_eq!(snr_db_to_n0(0.0), 1.0, epsilon = 1e-15);
        assert_abs_diff_eq!(snr_db_to_n0(10.0), 0.1, epsilon = 1e-15);
        assert_abs_diff_eq!(snr_db_to_n0(-3.0103), 2.0, epsilon = 1e-4);
    }

    #[test]
    fn channel_params_consistency() {
        let p = ChannelParams::new(7.5, Fading::None);
        assert_abs_diff_eq!(p.n0(), snr_db_to_n0(p.snr_db()), epsilon = 1e-12);
    }

    #[test]
    fn awgn_zero_noise_is_identity() {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let s = alloc::vec![Complex64::new(1.0, -1.0); 8];
        let out = awgn(&s, 0.0, &mut rng);
        assert_eq!(s, out);
    }

    #[test]
    fn awgn_is_reproducible() {
        let s = alloc::vec![Complex64::new(0.5, 0.25); 32];
        let a = awgn(&s, 0.3, &mut seeds::rng_for(9, 0, 0));
        let b = awgn(&s, 0.3, &mut seeds::rng_for(9, 0, 0));
        assert_eq!(a, b);
    }

    #[test]
    fn awgn_empirical_variance_and_isotropy() {
        let n = 1_000_000usize;
        let zeros = alloc::vec![Complex64::new(0.0, 0.0); n];
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let noise = awgn(&zeros, 0.5, &mut rng);
        let var: f64 = noise.iter().map(|z| z.norm_sqr()).sum::<f64>() / n as f64;
        assert!((0.497..=0.503).contains(&var), "variance {var}");

        let mean_re: f64 = noise.iter().map(|z| z.re).sum::<f64>() / n as f64;
        let mean_im: f64 = noise.iter().map(|z| z.im).sum::<f64>() / n as f64;
        let cov: f64 = noise
            .iter()
            .map(|z| (z.re - mean_re) * (z.im - mean_im))
            .sum::<f64>()
            / n as f64;
        let rho = cov / (0.25 * 0.25_f64).sqrt();
        assert!(rho.abs() < 0.01, "correlation {rho}");
    }

    #[test]
    fn equalizer_identity_channel_at_vanishing_noise() {
        let s = alloc::vec![Complex64::new(1.0, 0.0), Complex64::new(-0.5, 0.5)];
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let (out, n0_eff) = fade_and_equalize(&s, Complex64::new(1.0, 0.0), 1e-12, &mut rng).unwrap();
        for (a, b) in s.iter().zip(&out) {
            assert!((a - b).norm() < 1e-5);
        }
        assert!(n0_eff < 2e-12);
    }

    #[test]
    fn equalizer_inverts_gain_of_two() {
        let s: Vec<Complex64> = (0..8)
            .map(|i| Complex64::new((i % 7) as f64 * 0.1 - 0.3, (i % 5) as f64 * 0.1 - 0.2))
            .collect();
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let (out, _) = fade_and_equalize(&s, Complex64::new(2.0, 0.0), 1e-6, &mut rng).unwrap();
        for (a, b) in s.iter().zip(&out) {
            assert!((a - b).norm() < 1e-3, "{a} vs {b}");
        }
    }

    #[test]
    fn unit_rotation_preserves_noise_level() {
        let h = Complex64::from_polar(1.0, core::f64::consts::FRAC_PI_4);
        let s = alloc::vec![Complex64::new(1.0, 0.0); 4];
        for n0 in [0.01, 0.1, 1.0] {
            let mut rng = ChaCha8Rng::seed_from_u64(5);
            let (_, n0_eff) = fade_and_equalize(&s, h, n0, &mut rng).unwrap();
            assert_abs_diff_eq!(n0_eff, n0, epsilon = 1e-12);
        }
    }

    #[test]
    fn zero_gain_rejected() {
        let s = alloc::vec![Complex64::new(1.0, 0.0)];
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        assert!(matches!(
            fade_and_equalize(&s, Complex64::new(0.0, 0.0), 0.1, &mut rng),
            Err(Error::ZeroChannelGain)
        ));
    }

    #[test]
    fn unit_gain_fading_equals_scaled_awgn() {
        // With h = 1 the equalized output is the AWGN output scaled by
        // 1/(1+n0), drawn from the same rng stream.
        let s: Vec<Complex64> = (0..32)
            .map(|i| Complex64::new(0.05 * i as f64, -0.03 * i as f64))
            .collect();
        let n0 = 0.25;
        let (faded, n0_eff) =
            fade_and_equalize(&s, Complex64::new(1.0, 0.0), n0, &mut seeds::rng_for(7, 0, 0))
                .unwrap();
        let plain = awgn(&s, n0, &mut seeds::rng_for(7, 0, 0));
        let scale = 1.0 / (1.0 + n0);
        for (f, p) in faded.iter().zip(&plain) {
            assert!((f - p * scale).norm() < 1e-12);
        }
        assert_abs_diff_eq!(n0_eff, n0, epsilon = 1e-12);
    }
}
