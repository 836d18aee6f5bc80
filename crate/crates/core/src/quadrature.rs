//! Gauss–Hermite rules and the tensor-product rule for circularly symmetric
//! complex Gaussian expectations.

use std::f64::consts::PI;

use num_complex::Complex64;

use crate::error::{invalid, Result};

/// A Gauss–Hermite rule for integrands of the form `e^{-x^2} f(x)` on the real line.
#[derive(Debug, Clone, PartialEq)]
pub struct GaussHermite {
    nodes: Vec<f64>,
    weights: Vec<f64>,
}

impl GaussHermite {
    /// Computes an `n`-point rule by Newton iteration on the orthonormal
    /// Hermite recurrence. Nodes are returned in increasing order.
    pub fn new(n: usize) -> Result<Self> {
        if n == 0 {
            return Err(invalid("Gauss-Hermite rule needs at least one node"));
        }
        const MAX_ITER: usize = 100;
        let pim4 = PI.powf(-0.25);
        let nf = n as f64;
        let mut nodes = vec![0.0; n];
        let mut weights = vec![0.0; n];
        let half = n.div_ceil(2);
        let mut z = 0.0f64;
        for i in 0..half {
            z = match i {
                0 => (2.0 * nf + 1.0).sqrt() - 1.85575 * (2.0 * nf + 1.0).powf(-1.0 / 6.0),
                1 => z - 1.14 * nf.powf(0.426) / z,
                2 => 1.86 * z - 0.86 * nodes[0],
                3 => 1.91 * z - 0.91 * nodes[1],
                _ => 2.0 * z - nodes[i - 2],
            };
            let mut pp = 0.0;
            for _ in 0..MAX_ITER {
                let mut p1 = pim4;
                let mut p2 = 0.0;
                for j in 0..n {
                    let p3 = p2;
                    p2 = p1;
                    let jf = j as f64;
                    p1 = z * (2.0 / (jf + 1.0)).sqrt() * p2 - (jf / (jf + 1.0)).sqrt() * p3;
                }
                pp = (2.0 * nf).sqrt() * p2;
                let z1 = z;
                z = z1 - p1 / pp;
                if (z - z1).abs() <= 1e-15 * z.abs().max(1.0) {
                    break;
                }
            }
            // largest root first; store ascending
            nodes[i] = z;
            nodes[n - 1 - i] = -z;
            weights[i] = 2.0 / (pp * pp);
            weights[n - 1 - i] = weights[i];
        }
        if n % 2 == 1 {
            nodes[half - 1] = 0.0;
        }
        nodes.reverse();
        weights.reverse();
        Ok(Self { nodes, weights })
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// `∫ e^{-x^2} f(x) dx`.
    pub fn integrate<F: Fn(f64) -> f64>(&self, f: F) -> f64 {
        self.nodes
            .iter()
            .zip(&self.weights)
            .map(|(&x, &w)| w * f(x))
            .sum()
    }
}

/// Tensor-product rule for `E[f(N)]` with `N ~ CN(0, σ²)`.
///
/// The real and imaginary parts are independent with variance `σ²/2`, so
/// `N = σ (a + j b)` with `a, b` distributed as `e^{-a^2}/√π`.
#[derive(Debug, Clone)]
pub struct ComplexGaussianRule {
    /// Unit-variance sample points `a + j b`.
    points: Vec<Complex64>,
    /// Normalized weights, summing to one.
    weights: Vec<f64>,
}

impl ComplexGaussianRule {
    pub fn new(nodes_per_dim: usize) -> Result<Self> {
        let gh = GaussHermite::new(nodes_per_dim)?;
        let mut points = Vec::with_capacity(gh.len() * gh.len());
        let mut weights = Vec::with_capacity(gh.len() * gh.len());
        for (&a, &wa) in gh.nodes().iter().zip(gh.weights()) {
            for (&b, &wb) in gh.nodes().iter().zip(gh.weights()) {
                points.push(Complex64::new(a, b));
                weights.push(wa * wb / PI);
            }
        }
        Ok(Self { points, weights })
    }

    /// Iterator over `(noise sample scaled to variance σ², weight)`.
    pub fn samples(&self, noise_var: f64) -> impl Iterator<Item = (Complex64, f64)> + '_ {
        let s = noise_var.sqrt();
        self.points
            .iter()
            .zip(&self.weights)
            .map(move |(&p, &w)| (p * s, w))
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }
}
