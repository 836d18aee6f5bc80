//! Reference implementations used as oracles. They share no code with the
//! library beyond the public constructors.

#![allow(dead_code)]

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_distr::{Distribution, Normal};

pub const MC_ORACLE_SAMPLES: usize = 1_000_000;

pub fn polar_deg(mag: f64, deg: f64) -> Complex64 {
    Complex64::from_polar(mag, deg.to_radians())
}

pub fn qpsk() -> Vec<Complex64> {
    (0..4)
        .map(|k| Complex64::from_polar(1.0, std::f64::consts::FRAC_PI_2 * k as f64))
        .collect()
}

/// Received constellation `{a·x + b·y}` over all pairs, `x` outer.
pub fn sum_constellation(
    a: Complex64,
    xs: &[Complex64],
    b: Complex64,
    ys: &[Complex64],
) -> Vec<Complex64> {
    let mut out = Vec::with_capacity(xs.len() * ys.len());
    for x in xs {
        for y in ys {
            out.push(a * x + b * y);
        }
    }
    out
}

/// `I(S; S + N)` for equiprobable `points` and `N ~ CN(0, noise_var)`,
/// by sampling a symbol and a noise value per draw. Returns
/// `(estimate, standard error)` in bits.
pub fn mc_mutual_information(
    points: &[Complex64],
    noise_var: f64,
    samples: usize,
    seed: u64,
) -> (f64, f64) {
    let mut rng = rand::rngs::StdRng::seed_from_u64(seed);
    let normal = Normal::new(0.0, (noise_var / 2.0).sqrt()).unwrap();
    let k = points.len();
    let mut sum = 0.0;
    let mut sum_sq = 0.0;
    for _ in 0..samples {
        let sent = points[rng.random_range(0..k)];
        let y = sent + Complex64::new(normal.sample(&mut rng), normal.sample(&mut rng));
        let d_sent = (y - sent).norm_sqr() / noise_var;
        // log2 of the posterior normaliser relative to the sent symbol
        let exps: Vec<f64> = points
            .iter()
            .map(|s| d_sent - (y - s).norm_sqr() / noise_var)
            .collect();
        let m = exps.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let lse = m + exps.iter().map(|e| (e - m).exp()).sum::<f64>().ln();
        let v = (k as f64).log2() - lse / std::f64::consts::LN_2;
        sum += v;
        sum_sq += v * v;
    }
    let n = samples as f64;
    let mean = sum / n;
    let var = (sum_sq / n - mean * mean) * n / (n - 1.0);
    (mean, (var / n).sqrt())
}

/// Jensen bound by direct quadruple summation:
/// `log2 K − log2 e − (1/K) Σ_k log2(½ Σ_i exp(−|s_k − s_i|² / (2σ²)))`.
pub fn jensen_direct(points: &[Complex64], noise_var: f64) -> f64 {
    let k = points.len() as f64;
    let mut acc = 0.0;
    for sk in points {
        let mut inner = 0.0;
        for si in points {
            inner += (-(sk - si).norm_sqr() / (2.0 * noise_var)).exp();
        }
        acc += (0.5 * inner).log2();
    }
    k.log2() - std::f64::consts::LOG2_E - acc / k
}

/// Gaussian-input sum capacity bound `log2(1 + (P_own + |g|² P_other)/N)`.
pub fn gaussian_mac_sum(p_own: f64, p_other: f64, g: Complex64, noise: f64) -> f64 {
    (1.0 + (p_own + g.norm_sqr() * p_other) / noise).log2()
}
