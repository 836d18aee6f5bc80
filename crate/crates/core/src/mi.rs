//! Constellation-constrained mutual information over complex AWGN.
//!
//! Every quantity here has the shape
//!
//! ```text
//! log2(K) − (1/K) Σ_k E_N[ log2 Σ_i exp(−(|N + μ_ki|² − |N|²)/σ²) ]
//! ```
//!
//! where `μ_ki` runs over differences of (composite) constellation points and
//! `N ~ CN(0, σ²)`. Expanding the exponent gives `−(|μ|² + 2·Re(N·μ̄))/σ²`,
//! which is what the inner loops evaluate.

use std::collections::HashMap;
use std::f64::consts::{LN_2, LOG2_E};
use std::sync::{Arc, Mutex, OnceLock};

use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::channel::{ChannelInstance, Receiver};
use crate::constellation::{difference_matrix, Constellation};
use crate::error::{invalid, Error, Result};
use crate::lse::log_sum_exp;
use crate::quadrature::ComplexGaussianRule;

pub const DEFAULT_NODES_PER_DIM: usize = 24;
pub const DEFAULT_MC_SAMPLES: usize = 20_000;
/// Above this many composite points quadrature cost dominates and
/// [`NoiseRule::auto`] switches to Monte-Carlo.
pub const QUADRATURE_MAX_POINTS: usize = 256;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Method {
    GaussHermite,
    MonteCarlo,
}

/// How the expectation over the noise is evaluated.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(tag = "method")]
pub enum NoiseRule {
    GaussHermite { nodes_per_dim: usize },
    MonteCarlo { samples: usize, seed: u64 },
}

impl Default for NoiseRule {
    fn default() -> Self {
        NoiseRule::GaussHermite {
            nodes_per_dim: DEFAULT_NODES_PER_DIM,
        }
    }
}

impl NoiseRule {
    /// Quadrature for small problems, seeded Monte-Carlo beyond
    /// [`QUADRATURE_MAX_POINTS`] composite points.
    pub fn auto(composite_points: usize, seed: u64) -> Self {
        if composite_points > QUADRATURE_MAX_POINTS {
            NoiseRule::MonteCarlo {
                samples: DEFAULT_MC_SAMPLES,
                seed,
            }
        } else {
            NoiseRule::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        match *self {
            NoiseRule::GaussHermite { nodes_per_dim } if nodes_per_dim < 4 => Err(invalid(
                format!("need at least 4 quadrature nodes per dimension, got {nodes_per_dim}"),
            )),
            NoiseRule::MonteCarlo { samples, .. } if samples < 1000 => Err(invalid(format!(
                "need at least 1000 Monte-Carlo samples, got {samples}"
            ))),
            _ => Ok(()),
        }
    }

    pub fn method(&self) -> Method {
        match self {
            NoiseRule::GaussHermite { .. } => Method::GaussHermite,
            NoiseRule::MonteCarlo { .. } => Method::MonteCarlo,
        }
    }

    pub fn is_deterministic(&self) -> bool {
        matches!(self, NoiseRule::GaussHermite { .. })
    }
}

/// A mutual-information value in bits with its evaluation error estimate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MiEstimate {
    pub value: f64,
    /// Zero for quadrature.
    pub std_error: f64,
    pub method: Method,
    pub node_or_sample_count: usize,
}

impl MiEstimate {
    /// Slack used for range checks: `3·std_error + 1e-9`.
    pub fn tolerance(&self) -> f64 {
        3.0 * self.std_error + 1e-9
    }
}

/// `I(X;Y)` for `Y = √P·X + N`, `X` uniform on `c`.
pub fn conditional_mi(
    c: &Constellation,
    power: f64,
    noise_var: f64,
    rule: &NoiseRule,
) -> Result<MiEstimate> {
    check_positive("power", power)?;
    check_positive("noise variance", noise_var)?;
    rule.validate()?;
    let m = c.len();
    let points = canonical_phase(c.points());
    let mu = difference_matrix(&points, power.sqrt());
    let key = EvalKey::new(1)
        .f64(power)
        .f64(noise_var)
        .points(&points)
        .finish();
    estimate(&mu, m, noise_var, rule, key)
}

/// `I(X1,X2;Y)` at one receiver with `S2` rotated by `theta`.
///
/// At R1 the composite point is `√P1·x1 + g·e^{jθ}·√P2·x2`, at R2 it is
/// `g·√P1·x1 + e^{jθ}·√P2·x2`, with `g` the cross gain.
#[allow(clippy::too_many_arguments)]
pub fn joint_mi(
    c1: &Constellation,
    c2: &Constellation,
    cross_gain: Complex64,
    theta: f64,
    power1: f64,
    power2: f64,
    noise_var: f64,
    receiver: Receiver,
    rule: &NoiseRule,
) -> Result<MiEstimate> {
    check_positive("power1", power1)?;
    check_positive("power2", power2)?;
    check_positive("noise variance", noise_var)?;
    check_finite("theta", theta)?;
    rule.validate()?;
    let mu = composite_differences(c1, c2, cross_gain, theta, power1, power2, receiver);
    let key = EvalKey::new(match receiver {
        Receiver::R1 => 2,
        Receiver::R2 => 3,
    })
    .f64(cross_gain.re)
    .f64(cross_gain.im)
    .f64(theta.rem_euclid(std::f64::consts::TAU))
    .f64(power1)
    .f64(power2)
    .f64(noise_var)
    .points(c1.points())
    .points(c2.points())
    .finish();
    estimate(&mu, c1.len() * c2.len(), noise_var, rule, key)
}

/// Closed-form lower bound on [`joint_mi`] obtained by moving the noise
/// expectation inside the logarithm. Can be negative.
#[allow(clippy::too_many_arguments)]
pub fn jensen_lower_bound(
    c1: &Constellation,
    c2: &Constellation,
    cross_gain: Complex64,
    theta: f64,
    power1: f64,
    power2: f64,
    noise_var: f64,
    receiver: Receiver,
) -> Result<f64> {
    check_positive("power1", power1)?;
    check_positive("power2", power2)?;
    check_positive("noise variance", noise_var)?;
    check_finite("theta", theta)?;
    let k = c1.len() * c2.len();
    let mu = composite_differences(c1, c2, cross_gain, theta, power1, power2, receiver);
    let scale = -1.0 / (2.0 * noise_var);
    let mut row = vec![0.0; k];
    let mut acc = 0.0;
    for chunk in mu.chunks_exact(k) {
        for (r, z) in row.iter_mut().zip(chunk) {
            *r = z.norm_sqr() * scale;
        }
        // log2(½ Σ exp(·))
        acc += log_sum_exp(&row) * LOG2_E - 1.0;
    }
    let value = (k as f64).log2() - LOG2_E - acc / k as f64;
    if !value.is_finite() {
        return Err(Error::Internal("non-finite Jensen bound".into()));
    }
    Ok(value)
}

/// The two joint mutual informations bounding the sum rate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SumBound {
    pub at_r1: MiEstimate,
    pub at_r2: MiEstimate,
}

impl SumBound {
    /// `min{I1, I2}` in bits per channel use.
    pub fn value(&self) -> f64 {
        self.at_r1.value.min(self.at_r2.value)
    }

    /// The estimate attaining the minimum.
    pub fn binding(&self) -> &MiEstimate {
        if self.at_r1.value <= self.at_r2.value {
            &self.at_r1
        } else {
            &self.at_r2
        }
    }

    pub fn std_error(&self) -> f64 {
        self.binding().std_error
    }
}

/// `min{I(X1,X2;Y1), I(X1,X2;Y2)}` for an instance, in bits per channel use.
pub fn cc_sum_bound(
    c1: &Constellation,
    c2: &Constellation,
    instance: &ChannelInstance,
    theta: f64,
    rule: &NoiseRule,
) -> Result<SumBound> {
    instance.validate()?;
    let at = |rx| {
        joint_mi(
            c1,
            c2,
            instance.cross_gain(rx),
            theta,
            instance.p1,
            instance.p2,
            instance.noise_var(rx),
            rx,
            rule,
        )
    };
    let (at_r1, at_r2) = rayon::join(|| at(Receiver::R1), || at(Receiver::R2));
    Ok(SumBound {
        at_r1: at_r1?,
        at_r2: at_r2?,
    })
}

/// Composite differences `μ`, laid out row-major: row `k = k1·M2 + k2`,
/// column `i = i1·M2 + i2`.
pub(crate) fn composite_differences(
    c1: &Constellation,
    c2: &Constellation,
    cross_gain: Complex64,
    theta: f64,
    power1: f64,
    power2: f64,
    receiver: Receiver,
) -> Vec<Complex64> {
    let rot = Complex64::from_polar(1.0, theta);
    let (g1, g2) = match receiver {
        Receiver::R1 => (Complex64::new(1.0, 0.0), cross_gain * rot),
        Receiver::R2 => (cross_gain, rot),
    };
    let d1 = difference_matrix(c1.points(), power1.sqrt());
    let d2 = difference_matrix(c2.points(), power2.sqrt());
    let (m1, m2) = (c1.len(), c2.len());
    let k = m1 * m2;
    let mut mu = Vec::with_capacity(k * k);
    for k1 in 0..m1 {
        for k2 in 0..m2 {
            for i1 in 0..m1 {
                let a = g1 * d1[k1 * m1 + i1];
                for i2 in 0..m2 {
                    mu.push(a + g2 * d2[k2 * m2 + i2]);
                }
            }
        }
    }
    mu
}

/// Rotates `points` so the first point of at least half the peak modulus
/// lies on the positive real axis.
///
/// The tensor quadrature grid is not rotation invariant, so without this a
/// rotated copy of a constellation would get a slightly different estimate.
fn canonical_phase(points: &[Complex64]) -> Vec<Complex64> {
    let peak = points.iter().map(|p| p.norm()).fold(0.0, f64::max);
    match points.iter().find(|p| peak > 0.0 && p.norm() >= 0.5 * peak) {
        Some(r) => {
            let u = r.conj() / r.norm();
            points.iter().map(|p| p * u).collect()
        }
        None => points.to_vec(),
    }
}

/// `log2(K) − E_N[(1/K) Σ_k log2 Σ_i exp(−(|N+μ_ki|² − |N|²)/σ²)]`, range-checked.
fn estimate(
    mu: &[Complex64],
    k: usize,
    noise_var: f64,
    rule: &NoiseRule,
    key: u64,
) -> Result<MiEstimate> {
    debug_assert_eq!(mu.len(), k * k);
    // exponent = a + Re(n)·b.re + Im(n)·b.im
    let inv = 1.0 / noise_var;
    let a: Vec<f64> = mu.iter().map(|z| -z.norm_sqr() * inv).collect();
    let b: Vec<Complex64> = mu.iter().map(|z| z * (-2.0 * inv)).collect();
    let mut row = vec![0.0; k];
    let mut sample_value = |n: Complex64| -> f64 {
        let mut acc = 0.0;
        for (ar, br) in a.chunks_exact(k).zip(b.chunks_exact(k)) {
            for ((r, &ai), bi) in row.iter_mut().zip(ar).zip(br) {
                *r = ai + n.re * bi.re + n.im * bi.im;
            }
            acc += log_sum_exp(&row);
        }
        acc / k as f64
    };

    let (mean_nats, se_nats, count) = match *rule {
        NoiseRule::GaussHermite { nodes_per_dim } => {
            let quad = gh_rule(nodes_per_dim)?;
            let mean: f64 = quad
                .samples(noise_var)
                .map(|(n, w)| w * sample_value(n))
                .sum();
            (mean, 0.0, nodes_per_dim)
        }
        NoiseRule::MonteCarlo { samples, seed } => {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(key);
            let s = (noise_var / 2.0).sqrt();
            let mut mean = 0.0;
            let mut m2 = 0.0;
            for t in 0..samples {
                let re: f64 = StandardNormal.sample(&mut rng);
                let im: f64 = StandardNormal.sample(&mut rng);
                let v = sample_value(Complex64::new(re * s, im * s));
                // Welford
                let delta = v - mean;
                mean += delta / (t + 1) as f64;
                m2 += delta * (v - mean);
            }
            let var = if samples > 1 {
                m2 / (samples - 1) as f64
            } else {
                0.0
            };
            (mean, (var / samples as f64).sqrt(), samples)
        }
    };
    if !mean_nats.is_finite() || !se_nats.is_finite() {
        return Err(Error::Internal(
            "non-finite expectation in mutual information".into(),
        ));
    }
    let upper = (k as f64).log2();
    let raw = upper - mean_nats / LN_2;
    let mut est = MiEstimate {
        value: raw,
        std_error: se_nats / LN_2,
        method: rule.method(),
        node_or_sample_count: count,
    };
    let tol = est.tolerance();
    if raw < -tol || raw > upper + tol {
        return Err(Error::Internal(format!(
            "mutual information {raw} outside [0, {upper}] beyond tolerance {tol}"
        )));
    }
    est.value = raw.clamp(0.0, upper);
    Ok(est)
}

fn gh_rule(nodes_per_dim: usize) -> Result<Arc<ComplexGaussianRule>> {
    static CACHE: OnceLock<Mutex<HashMap<usize, Arc<ComplexGaussianRule>>>> = OnceLock::new();
    let cache = CACHE.get_or_init(Default::default);
    if let Some(r) = cache
        .lock()
        .expect("quadrature cache poisoned")
        .get(&nodes_per_dim)
    {
        return Ok(Arc::clone(r));
    }
    let rule = Arc::new(ComplexGaussianRule::new(nodes_per_dim)?);
    cache
        .lock()
        .expect("quadrature cache poisoned")
        .insert(nodes_per_dim, Arc::clone(&rule));
    Ok(rule)
}

fn check_positive(name: &str, v: f64) -> Result<()> {
    if v.is_finite() && v > 0.0 {
        Ok(())
    } else {
        Err(invalid(format!("{name} must be finite and > 0, got {v}")))
    }
}

fn check_finite(name: &str, v: f64) -> Result<()> {
    if v.is_finite() {
        Ok(())
    } else {
        Err(invalid(format!("{name} must be finite")))
    }
}

/// Deterministic key identifying one evaluation, used to pick the
/// Monte-Carlo stream.
struct EvalKey(u64);

impl EvalKey {
    fn new(tag: u64) -> Self {
        EvalKey(splitmix64(tag))
    }

    fn f64(self, v: f64) -> Self {
        EvalKey(splitmix64(self.0 ^ v.to_bits()))
    }

    fn points(self, pts: &[Complex64]) -> Self {
        pts.iter().fold(self, |k, p| k.f64(p.re).f64(p.im))
    }

    fn finish(self) -> u64 {
        self.0
    }
}

fn splitmix64(x: u64) -> u64 {
    let mut z = x.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}
