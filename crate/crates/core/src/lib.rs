//! Mapper-side geometric shaping of QAM constellations.
//!
//! A base station can move its transmit (mapper) constellation points while
//! the receiver keeps demapping against the standard QAM grid it was built
//! for. This crate provides everything needed to optimize and evaluate such
//! shaped constellations:
//!
//! - [`constellation`]: labeled 2-D signal constellations (square QAM seeds,
//!   normalization, JSON text format).
//! - [`modem`]: bit-to-symbol mapping and soft demapping to per-bit LLRs,
//!   exact (log-sum-exp) and max-log variants.
//! - [`channel`]: AWGN, scalar flat fading, and LMMSE equalization.
//! - [`infotheory`]: bitwise mutual information by Monte-Carlo sampling and
//!   by Gauss-Hermite quadrature (independent oracle for the matched case).
//! - [`shaping`]: the Adam optimization loop that moves mapper points to
//!   minimize binary cross-entropy against the fixed QAM demapper, with
//!   analytic gradients checked by finite differences.
//! - [`fec`]: generic parity-check-matrix LDPC (alist ingestion, Gallager
//!   construction, systematic encoding, sum-product decoding) and a seeded
//!   bit interleaver.
//! - [`linksim`]: end-to-end coded simulation producing BLER, spectral
//!   efficiency, and SE-gain curves over SNR grids.
//!
//! The crate is `no_std` (with `alloc`); file IO, CSV export, and the CLI
//! live in the companion `qshape-cli` crate.
//!
//! All randomized operations are seeded and chunked so that results are
//! reproducible bit-for-bit regardless of how work is scheduled; see
//! [`seeds`] for the derivation scheme.

#![cfg_attr(not(test), no_std)]

extern crate alloc;

use core::fmt;

pub mod channel;
pub mod constellation;
pub mod fec;
pub mod hermite;
pub mod infotheory;
pub mod linksim;
pub mod modem;
pub mod seeds;
pub mod shaping;

pub use num_complex::Complex64;

/// Errors produced by this crate.
#[derive(Debug, Clone, PartialEq)]
pub enum Error {
    /// Modulation order is odd or outside the supported set {2, 4, 6, 8}.
    InvalidModulationOrder(u32),
    /// Constellation has zero average power, so it cannot be normalized.
    DegenerateConstellation,
    /// Point set is not a power of two, contains non-finite values, or the
    /// point count does not match `bits_per_symbol`.
    InvalidConstellation(alloc::string::String),
    /// Two constellation points are closer than the minimum separation.
    CoincidentPoints { a: usize, b: usize },
    /// Bit sequence length is not divisible by bits-per-symbol.
    BitLengthMismatch { len: usize, bits_per_symbol: u32 },
    /// Noise level must be strictly positive.
    NonPositiveNoise(f64),
    /// Channel gain must be nonzero for equalization.
    ZeroChannelGain,
    /// Probability argument outside [0, 1].
    ProbabilityOutOfRange(f64),
    /// Paired sequences have different lengths.
    LengthMismatch { left: usize, right: usize },
    /// Sample count below the supported minimum.
    TooFewSamples { got: usize, min: usize },
    /// Quadrature order below the supported minimum.
    QuadratureOrderTooLow { got: usize, min: usize },
    /// Invalid optimizer or training hyperparameter.
    InvalidHyperparameter(&'static str),
    /// Parity-check matrix construction or parsing failed.
    InvalidCode(alloc::string::String),
    /// SNR grid is empty or not strictly increasing.
    InvalidSnrGrid,
    /// Simulation configuration violates an invariant.
    InvalidSimConfig(&'static str),
    /// Two sweep configurations disagree where they must match.
    SweepMismatch(&'static str),
}

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::InvalidModulationOrder(m) => {
                write!(f, "invalid modulation order {m}: expected even m in 2..=8")
            }
            Error::DegenerateConstellation => {
                write!(f, "degenerate constellation: all points are zero")
            }
            Error::InvalidConstellation(msg) => write!(f, "invalid constellation: {msg}"),
            Error::CoincidentPoints { a, b } => {
                write!(f, "constellation points {a} and {b} are (nearly) coincident")
            }
            Error::BitLengthMismatch { len, bits_per_symbol } => write!(
                f,
                "bit sequence length {len} is not divisible by {bits_per_symbol} bits per symbol"
            ),
            Error::NonPositiveNoise(n0) => write!(f, "noise level must be positive, got {n0}"),
            Error::ZeroChannelGain => write!(f, "channel gain h must be nonzero"),
            Error::ProbabilityOutOfRange(t) => write!(f, "probability {t} outside [0, 1]"),
            Error::LengthMismatch { left, right } => {
                write!(f, "sequence lengths differ: {left} vs {right}")
            }
            Error::TooFewSamples { got, min } => {
                write!(f, "sample count {got} below minimum {min}")
            }
            Error::QuadratureOrderTooLow { got, min } => {
                write!(f, "quadrature order {got} below minimum {min}")
            }
            Error::InvalidHyperparameter(what) => write!(f, "invalid hyperparameter: {what}"),
            Error::InvalidCode(msg) => write!(f, "invalid LDPC code: {msg}"),
            Error::InvalidSnrGrid => write!(f, "SNR grid must be non-empty and strictly increasing"),
            Error::InvalidSimConfig(what) => write!(f, "invalid simulation config: {what}"),
            Error::SweepMismatch(what) => write!(f, "sweep configs disagree on {what}"),
        }
    }
}

impl core::error::Error for Error {}

/// Crate-wide result alias.
pub type Result<T> = core::result::Result<T, Error>;
