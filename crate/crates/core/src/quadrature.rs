//! Gauss-Legendre rules mapped to `[0, 1]`.

use alloc::vec::Vec;
use core::f64::consts::PI;

use crate::error::{Error, Result};

/// Fixed-order Gauss-Legendre rule on `[0, 1]`; exact for polynomials of
/// degree `2·order - 1`.
#[derive(Debug, Clone, PartialEq)]
pub struct GaussLegendre {
    nodes: Vec<f64>,
    weights: Vec<f64>,
}

impl GaussLegendre {
    pub fn new(order: usize) -> Result<Self> {
        if order < 1 {
            return Err(Error::InvalidQuadOrder(order));
        }
        let n = order;
        let mut nodes = Vec::with_capacity(n);
        let mut weights = Vec::with_capacity(n);
        // roots of P_n on [-1, 1] by Newton from the Chebyshev-like guess,
        // using symmetry to compute half of them
        let m = n.div_ceil(2);
        let mut lower = Vec::with_capacity(m);
        for i in 0..m {
            let mut z = libm::cos(PI * (i as f64 + 0.75) / (n as f64 + 0.5));
            let mut dp = 0.0;
            for _ in 0..100 {
                let (p, d) = legendre_with_derivative(n, z);
                dp = d;
                let dz = p / d;
                z -= dz;
                if dz.abs() <= 1e-16 * z.abs().max(1.0) {
                    let (_, d) = legendre_with_derivative(n, z);
                    dp = d;
                    break;
                }
            }
            lower.push((z, 2.0 / ((1.0 - z * z) * dp * dp)));
        }
        // z descends from near 1; emit ascending nodes on [0, 1]
        for &(z, w) in &lower {
            nodes.push(0.5 * (1.0 - z));
            weights.push(0.5 * w);
        }
        for &(z, w) in lower.iter().rev().skip(n % 2) {
            nodes.push(0.5 * (1.0 + z));
            weights.push(0.5 * w);
        }
        Ok(Self { nodes, weights })
    }

    pub fn order(&self) -> usize {
        self.nodes.len()
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn pairs(&self) -> impl Iterator<Item = (f64, f64)> + '_ {
        self.nodes.iter().copied().zip(self.weights.iter().copied())
    }

    pub fn integrate(&self, mut f: impl FnMut(f64) -> f64) -> f64 {
        self.pairs().map(|(x, w)| w * f(x)).sum()
    }
}

/// `(P_n(z), P_n'(z))` by the three-term recurrence.
fn legendre_with_derivative(n: usize, z: f64) -> (f64, f64) {
    let (mut p0, mut p1) = (1.0, z);
    for k in 2..=n {
        let k = k as f64;
        let p2 = ((2.0 * k - 1.0) * z * p1 - (k - 1.0) * p0) / k;
        p0 = p1;
        p1 = p2;
    }
    if n == 0 {
        return (1.0, 0.0);
    }
    let d = n as f64 * (z * p1 - p0) / (z * z - 1.0);
    (p1, d)
}
