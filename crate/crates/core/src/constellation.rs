//! Labeled 2-D signal constellations.
//!
//! A [`Constellation`] is an ordered set of `2^m` complex points. The point
//! at index `k` carries the `m`-bit binary expansion of `k` as its label,
//! most-significant bit first, so the bit-level sets `C(i, b)` (all points
//! whose `i`-th label bit equals `b`) are derivable from position alone and
//! never stored.
//!
//! Square QAM seeds use binary-reflected Gray labeling per axis: the first
//! `m/2` label bits select the in-phase level, the last `m/2` the quadrature
//! level, and the all-zero bit pattern maps to the positive outermost level
//! on each axis.
//!
//! Labels are frozen for the lifetime of a constellation; shaping moves only
//! the coordinates.

use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use num_complex::Complex64;
#[allow(unused_imports)] // required by the no_std build
use num_traits::Float;
use serde::Deserialize;

use crate::{Error, Result};

/// Minimum allowed Euclidean separation between two points of a normalized
/// constellation.
pub const MIN_POINT_SEPARATION: f64 = 1e-9;

/// An ordered, labeled set of `2^m` complex constellation points.
///
/// Index is label: point `k` carries the `m`-bit MSB-first expansion of `k`.
/// The struct is immutable after construction and safe to share across
/// workers.
#[derive(Debug, Clone, PartialEq)]
pub struct Constellation {
    points: Vec<Complex64>,
    bits_per_symbol: u32,
}

impl Constellation {
    /// Builds a constellation from explicit points, validating the type
    /// invariants: exactly `2^bits_per_symbol` finite points, no two of them
    /// (nearly) coincident at the normalized scale.
    pub fn new(points: Vec<Complex64>, bits_per_symbol: u32) -> Result<Self> {
        if bits_per_symbol == 0 {
            return Err(Error::InvalidConstellation(String::from(
                "bits_per_symbol must be at least 1",
            )));
        }
        let expected = 1usize << bits_per_symbol;
        if points.len() != expected {
            return Err(Error::InvalidConstellation(format!(
                "expected {expected} points for m={bits_per_symbol}, got {}",
                points.len()
            )));
        }
        if let Some(p) = points.iter().find(|p| !p.re.is_finite() || !p.im.is_finite()) {
            return Err(Error::InvalidConstellation(format!(
                "non-finite coordinate {p}"
            )));
        }
        let c = Self { points, bits_per_symbol };
        let power = c.average_power();
        if power <= 0.0 {
            return Err(Error::DegenerateConstellation);
        }
        // Separation is checked at the unit-power scale so that the test does
        // not depend on an arbitrary overall gain.
        let scale = 1.0 / power.sqrt();
        let (dmin, a, b) = c.min_distance_pair();
        if dmin * scale < MIN_POINT_SEPARATION {
            return Err(Error::CoincidentPoints { a, b });
        }
        Ok(c)
    }

    /// Constructs a unit-power square QAM constellation of order `m`
    /// (`m` even, in `{2, 4, 6, 8}`) with per-axis binary-reflected Gray
    /// labeling.
    ///
    /// Per-axis amplitude levels are `{±1, ±3, …, ±(2^(m/2)−1)}` before
    /// normalization. The first `m/2` label bits select the in-phase level,
    /// the last `m/2` the quadrature level; the all-zero axis pattern maps to
    /// the positive outermost level.
    pub fn make_qam(m: u32) -> Result<Self> {
        if m == 0 || m % 2 != 0 || m > 8 {
            return Err(Error::InvalidModulationOrder(m));
        }
        let half = m / 2;
        let levels = 1u32 << half;
        let size = 1usize << m;
        let mut points = Vec::with_capacity(size);
        for label in 0..size as u32 {
            let i_bits = label >> half;
            let q_bits = label & (levels - 1);
            points.push(Complex64::new(
                gray_axis_amplitude(i_bits, levels),
                gray_axis_amplitude(q_bits, levels),
            ));
        }
        Self::new(points, m)?.normalize()
    }

    /// Returns a copy scaled by the single positive real factor that makes
    /// the mean squared magnitude exactly one. Labeling is unchanged.
    pub fn normalize(&self) -> Result<Self> {
        let power = self.average_power();
        if power <= 0.0 {
            return Err(Error::DegenerateConstellation);
        }
        let scale = 1.0 / power.sqrt();
        let points = self.points.iter().map(|p| p * scale).collect();
        Self::new(points, self.bits_per_symbol)
    }

    /// The constellation points, ordered by label index.
    #[inline]
    pub fn points(&self) -> &[Complex64] {
        &self.points
    }

    /// Bits per symbol, `m`.
    #[inline]
    pub fn bits_per_symbol(&self) -> u32 {
        self.bits_per_symbol
    }

    /// Number of points, `2^m`.
    #[inline]
    pub fn size(&self) -> usize {
        self.points.len()
    }

    /// Mean squared magnitude of the points.
    pub fn average_power(&self) -> f64 {
        let sum: f64 = self.points.iter().map(|p| p.norm_sqr()).sum();
        sum / self.points.len() as f64
    }

    /// Value of label bit `i` (MSB first, `i` in `0..m`) of point `index`.
    #[inline]
    pub fn label_bit(&self, index: usize, i: u32) -> u8 {
        ((index >> (self.bits_per_symbol - 1 - i)) & 1) as u8
    }

    /// Indices of the set `C(i, b)`: points whose `i`-th label bit equals `b`.
    pub fn bit_set_indices(&self, i: u32, b: u8) -> impl Iterator<Item = usize> + '_ {
        (0..self.size()).filter(move |&k| self.label_bit(k, i) == b)
    }

    /// Smallest pairwise Euclidean distance between points.
    pub fn min_distance(&self) -> f64 {
        self.min_distance_pair().0
    }

    fn min_distance_pair(&self) -> (f64, usize, usize) {
        let mut best = (f64::INFINITY, 0, 0);
        for a in 0..self.points.len() {
            for b in (a + 1)..self.points.len() {
                let d = (self.points[a] - self.points[b]).norm();
                if d < best.0 {
                    best = (d, a, b);
                }
            }
        }
        best
    }

    /// Serializes to the constellation JSON format, points ordered by label:
    ///
    /// ```text
    /// { "bits_per_symbol": m, "points": [ { "re": …, "im": … }, … ] }
    /// ```
    ///
    /// Coordinates are written with 18 significant digits so the decimal
    /// representation round-trips `f64` values exactly. `header_lines` are
    /// emitted before the JSON body, each prefixed with `# `; the reader
    /// skips such lines.
    pub fn to_json_string(&self, header_lines: &[&str]) -> String {
        let mut out = String::new();
        for line in header_lines {
            out.push_str("# ");
            out.push_str(line);
            out.push('\n');
        }
        out.push_str("{\n");
        out.push_str(&format!("  \"bits_per_symbol\": {},\n", self.bits_per_symbol));
        out.push_str("  \"points\": [\n");
        for (idx, p) in self.points.iter().enumerate() {
            let sep = if idx + 1 == self.points.len() { "" } else { "," };
            out.push_str(&format!(
                "    {{ \"re\": {:.17e}, \"im\": {:.17e} }}{sep}\n",
                p.re, p.im
            ));
        }
        out.push_str("  ]\n}\n");
        out
    }

    /// Parses the constellation JSON format produced by
    /// [`to_json_string`](Self::to_json_string), skipping leading `#` comment
    /// lines, and validates all type invariants.
    pub fn from_json_str(text: &str) -> Result<Self> {
        let mut body_start = 0;
        for line in text.split_inclusive('\n') {
            let trimmed = line.trim_start();
            if trimmed.starts_with('#') || trimmed.is_empty() {
                body_start += line.len();
            } else {
                break;
            }
        }
        let dto: ConstellationDto = serde_json::from_str(&text[body_start..])
            .map_err(|e| Error::InvalidConstellation(format!("malformed JSON: {e}")))?;
        if !dto.points.len().is_power_of_two() {
            return Err(Error::InvalidConstellation(format!(
                "point count {} is not a power of two",
                dto.points.len()
            )));
        }
        let points = dto
            .points
            .iter()
            .map(|p| Complex64::new(p.re, p.im))
            .collect();
        Self::new(points, dto.bits_per_symbol)
    }
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct ConstellationDto {
    bits_per_symbol: u32,
    points: Vec<PointDto>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct PointDto {
    re: f64,
    im: f64,
}

/// Binary-reflected Gray code of `x`.
#[inline]
#[cfg_attr(not(test), allow(dead_code))]
pub(crate) fn gray(x: u32) -> u32 {
    x ^ (x >> 1)
}

/// Inverse of [`gray`]: the index whose Gray code is `g`.
#[inline]
pub(crate) fn gray_inverse(g: u32) -> u32 {
    let mut x = g;
    let mut shift = 1;
    while shift < 32 {
        x ^= x >> shift;
        shift <<= 1;
    }
    x
}

/// Amplitude of the axis level selected by Gray-coded `bits` out of `levels`
/// total levels: the all-zero pattern selects the positive outermost level
/// `+(levels-1)`, and each successive Gray index steps down by 2.
fn gray_axis_amplitude(bits: u32, levels: u32) -> f64 {
    let rank = gray_inverse(bits);
    (levels as f64 - 1.0) - 2.0 * rank as f64
}
