//! Gauss-Hermite quadrature nodes and weights.
//!
//! Rules integrate `∫ e^(-x^2) f(x) dx` over the real line. Nodes are the
//! roots of the physicists' Hermite polynomial, found by Newton iteration on
//! the orthonormal three-term recurrence (stable far beyond the orders used
//! here); weights come from the derivative at each root.

use alloc::vec;
use alloc::vec::Vec;

#[allow(unused_imports)] // required by the no_std build
use num_traits::Float;

use crate::{Error, Result};

/// Smallest order accepted; below this the mutual-information integrals the
/// crate uses the rule for are not trustworthy.
pub const MIN_ORDER: usize = 8;

/// Largest order accepted. The Newton initial guesses degrade somewhere
/// beyond this and roots start to collide; every order up to the cap is
/// verified by the ordering check in the constructor.
pub const MAX_ORDER: usize = 192;

/// A Gauss-Hermite rule of fixed order.
#[derive(Debug, Clone, PartialEq)]
pub struct GaussHermite {
    nodes: Vec<f64>,
    weights: Vec<f64>,
}

impl GaussHermite {
    /// Computes the rule of the given order (number of nodes).
    pub fn new(order: usize) -> Result<Self> {
        if order < MIN_ORDER {
            return Err(Error::QuadratureOrderTooLow { got: order, min: MIN_ORDER });
        }
        if order > MAX_ORDER {
            return Err(Error::InvalidHyperparameter("quadrature order above supported maximum"));
        }
        let mut nodes = vec![0.0; order];
        let mut weights = vec![0.0; order];
        let n = order;
        let nf = n as f64;
        let mut z = 0.0f64;
        // Roots come in ± pairs; solve the positive half from the outside in.
        for i in 0..n.div_ceil(2) {
            z = match i {
                0 => (2.0 * nf + 1.0).sqrt() - 1.85575 * (2.0 * nf + 1.0).powf(-1.0 / 6.0),
                1 => z - 1.14 * nf.powf(0.426) / z,
                2 => 1.86 * z - 0.86 * nodes[0],
                3 => 1.91 * z - 0.91 * nodes[1],
                _ => 2.0 * z - nodes[i - 2],
            };
            for _ in 0..200 {
                let (poly, deriv) = orthonormal_hermite(n, z);
                let step = poly / deriv;
                z -= step;
                if step.abs() < 1e-15 {
                    break;
                }
            }
            let dpoly = orthonormal_hermite(n, z).1;

            nodes[i] = z;
            nodes[n - 1 - i] = -z;
            let w = 2.0 / (dpoly * dpoly);
            weights[i] = w;
            weights[n - 1 - i] = w;
        }
        if n % 2 == 1 {
            nodes[n / 2] = 0.0;
        }
        for pair in nodes.windows(2) {
            if !(pair[0] > pair[1]) {
                return Err(Error::InvalidHyperparameter("quadrature root search failed"));
            }
        }
        Ok(Self { nodes, weights })
    }

    /// Quadrature nodes, descending.
    #[inline]
    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    /// Weights matching [`nodes`](Self::nodes).
    #[inline]
    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// Number of nodes.
    #[inline]
    pub fn order(&self) -> usize {
        self.nodes.len()
    }

    /// Approximates `∫ e^(-x^2) f(x) dx`.
    pub fn integrate<F: FnMut(f64) -> f64>(&self, mut f: F) -> f64 {
        self.nodes
            .iter()
            .zip(&self.weights)
            .map(|(&x, &w)| w * f(x))
            .sum()
    }
}

/// Value and derivative of the orthonormal Hermite polynomial of degree `n`
/// (orthonormal under weight `e^(-x^2)`).
fn orthonormal_hermite(n: usize, x: f64) -> (f64, f64) {
    const PI_POW_MINUS_QUARTER: f64 = 0.751_125_544_464_942_5;
    let mut p1 = PI_POW_MINUS_QUARTER;
    let mut p2 = 0.0f64;
    for j in 1..=n {
        let jf = j as f64;
        let p3 = p2;
        p2 = p1;
        p1 = x * (2.0 / jf).sqrt() * p2 - ((jf - 1.0) / jf).sqrt() * p3;
    }
    (p1, (2.0 * n as f64).sqrt() * p2)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use core::f64::consts::PI;

    #[test]
    fn rejects_low_order() {
        assert!(matches!(
            GaussHermite::new(4),
            Err(Error::QuadratureOrderTooLow { .. })
        ));
    }

    #[test]
    fn gaussian_moments_are_exact() {
        for order in [8usize, 16, 32, 64] {
            let q = GaussHermite::new(order).unwrap();
            assert_abs_diff_eq!(q.integrate(|_| 1.0), PI.sqrt(), epsilon = 1e-12);
            assert_abs_diff_eq!(q.integrate(|x| x), 0.0, epsilon = 1e-12);
            assert_abs_diff_eq!(q.integrate(|x| x * x), PI.sqrt() / 2.0, epsilon = 1e-11);
            assert_abs_diff_eq!(
                q.integrate(|x| x.powi(4)),
                0.75 * PI.sqrt(),
                epsilon = 1e-10
            );
        }
    }

    #[test]
    fn integrates_smooth_non_polynomial() {
        // ∫ e^(-x^2) cos(x) dx = sqrt(pi) * e^(-1/4)
        let q = GaussHermite::new(32).unwrap();
        assert_abs_diff_eq!(
            q.integrate(|x| x.cos()),
            PI.sqrt() * (-0.25f64).exp(),
            epsilon = 1e-12
        );
    }

    #[test]
    fn nodes_are_symmetric_and_ordered() {
        let q = GaussHermite::new(33).unwrap();
        let n = q.order();
        for i in 0..n / 2 {
            assert_abs_diff_eq!(q.nodes()[i], -q.nodes()[n - 1 - i], epsilon = 1e-14);
            assert_abs_diff_eq!(q.weights()[i], q.weights()[n - 1 - i], epsilon = 1e-18);
        }
        assert_eq!(q.nodes()[n / 2], 0.0);
        for w in q.nodes().windows(2) {
            assert!(w[0] > w[1]);
        }
    }
}
