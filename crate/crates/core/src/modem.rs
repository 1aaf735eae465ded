//! Bit-to-symbol mapping and soft demapping.
//!
//! The demapper computes per-bit log-likelihood ratios in the convention
//!
//! ```text
//! llr_i = ln( P(b_i = 0 | s_hat) / P(b_i = 1 | s_hat) )
//! ```
//!
//! so positive values favor bit 0. The exact demapper evaluates a
//! log-sum-exp over each bit-level set `C(i, b)` of the receive
//! constellation with per-set max subtraction; the max-log variant keeps
//! only the nearest point of each set. Natural logarithms throughout;
//! conversion to bits happens only in reporting code.
//!
//! The receive constellation is an explicit argument everywhere: feeding a
//! different constellation than the transmit one is exactly the mismatched
//! (fixed standard-QAM) demapping this crate exists to study.

use alloc::vec;
use alloc::vec::Vec;

use num_complex::Complex64;
#[allow(unused_imports)] // required by the no_std build
use num_traits::Float;

use crate::constellation::Constellation;
use crate::{Error, Result};

/// Saturation bound for decoder-facing LLR magnitudes, in nats.
pub const LLR_MAX: f64 = 30.0;

/// Per-symbol word of `m` clipped LLR values.
#[derive(Debug, Clone, PartialEq)]
pub struct LlrWord {
    values: Vec<f64>,
}

impl LlrWord {
    /// Wraps raw LLRs, clamping each value to `[-LLR_MAX, +LLR_MAX]`.
    /// Non-finite inputs other than `±inf` (which clamp) are rejected.
    pub fn new(raw: Vec<f64>) -> Result<Self> {
        let mut values = raw;
        for v in values.iter_mut() {
            if v.is_nan() {
                return Err(Error::InvalidHyperparameter("NaN LLR"));
            }
            *v = v.clamp(-LLR_MAX, LLR_MAX);
        }
        Ok(Self { values })
    }

    /// The clipped LLR values, one per label bit, MSB first.
    #[inline]
    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Number of bits in the word.
    #[inline]
    pub fn len(&self) -> usize {
        self.values.len()
    }

    /// True when the word carries no bits.
    #[inline]
    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

/// Maps a bit sequence onto constellation symbols.
///
/// Consecutive groups of `m` bits are read MSB first as the label index `k`;
/// the output symbol is `c.points()[k]`. The bit count must be divisible by
/// `m`.
pub fn map_bits(bits: &[u8], c: &Constellation) -> Result<Vec<Complex64>> {
    let m = c.bits_per_symbol();
    if bits.len() % m as usize != 0 {
        return Err(Error::BitLengthMismatch { len: bits.len(), bits_per_symbol: m });
    }
    Ok(bits
        .chunks_exact(m as usize)
        .map(|word| {
            let mut k = 0usize;
            for &b in word {
                k = (k << 1) | (b & 1) as usize;
            }
            c.points()[k]
        })
        .collect())
}

/// Exact per-bit LLRs for one received symbol against `c_rx`, clipped to
/// `±LLR_MAX`.
pub fn demap_exact(s_hat: Complex64, c_rx: &Constellation, n0: f64) -> Result<LlrWord> {
    let mut metrics = vec![0.0; c_rx.size()];
    let mut out = vec![0.0; c_rx.bits_per_symbol() as usize];
    demap_exact_into(s_hat, c_rx, n0, &mut metrics, &mut out)?;
    LlrWord::new(out)
}

/// Max-log per-bit LLRs for one received symbol against `c_rx`:
/// `(min over C(i,1) of |s_hat-c|^2  -  min over C(i,0) of |s_hat-c|^2) / n0`,
/// clipped to `±LLR_MAX`.
pub fn demap_maxlog(s_hat: Complex64, c_rx: &Constellation, n0: f64) -> Result<LlrWord> {
    if n0 <= 0.0 {
        return Err(Error::NonPositiveNoise(n0));
    }
    let m = c_rx.bits_per_symbol();
    let points = c_rx.points();
    let mut out = Vec::with_capacity(m as usize);
    for i in 0..m {
        let shift = m - 1 - i;
        let mut best = [f64::INFINITY; 2];
        for (k, p) in points.iter().enumerate() {
            let b = (k >> shift) & 1;
            let d2 = (s_hat - p).norm_sqr();
            if d2 < best[b] {
                best[b] = d2;
            }
        }
        out.push((best[1] - best[0]) / n0);
    }
    LlrWord::new(out)
}

/// Converts one LLR to the probability that the bit is zero,
/// `t = e^y / (e^y + 1)`.
#[inline]
pub fn llr_to_prob(y: f64) -> f64 {
    // Algebraically identical branches, chosen so the exponent never
    // overflows.
    if y >= 0.0 {
        1.0 / (1.0 + (-y).exp())
    } else {
        let e = y.exp();
        e / (e + 1.0)
    }
}

/// Fills `metrics[k] = -|s_hat - c_k|^2 / n0` for every point of `c_rx` and
/// writes the unclipped exact LLR of every bit into `out`.
///
/// This is the smooth (pre-clipping) demapper shared by the training loss
/// and the Monte-Carlo estimators; `demap_exact` is this plus clipping.
pub(crate) fn demap_exact_into(
    s_hat: Complex64,
    c_rx: &Constellation,
    n0: f64,
    metrics: &mut [f64],
    out: &mut [f64],
) -> Result<()> {
    if n0 <= 0.0 {
        return Err(Error::NonPositiveNoise(n0));
    }
    let points = c_rx.points();
    debug_assert_eq!(metrics.len(), points.len());
    let inv_n0 = 1.0 / n0;
    for (mk, p) in metrics.iter_mut().zip(points) {
        *mk = -(s_hat - p).norm_sqr() * inv_n0;
    }
    let m = c_rx.bits_per_symbol();
    for i in 0..m {
        out[i as usize] = llr_from_metrics(metrics, m, i);
    }
    Ok(())
}

/// Unclipped exact LLR of bit `i` from precomputed point metrics, via
/// per-set max-subtracted log-sum-exp.
pub(crate) fn llr_from_metrics(metrics: &[f64], m: u32, i: u32) -> f64 {
    let shift = m - 1 - i;
    let mut max = [f64::NEG_INFINITY; 2];
    for (k, &u) in metrics.iter().enumerate() {
        let b = (k >> shift) & 1;
        if u > max[b] {
            max[b] = u;
        }
    }
    let mut sum = [0.0f64; 2];
    for (k, &u) in metrics.iter().enumerate() {
        let b = (k >> shift) & 1;
        sum[b] += (u - max[b]).exp();
    }
    (max[0] + sum[0].ln()) - (max[1] + sum[1].ln())
}
