//! Frequency-division rate curves over the bandwidth split α.
//!
//! User 1 gets `αW`, user 2 gets `(1−α)W`, and each sees an interference-free
//! AWGN link whose noise variance equals its bandwidth.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::channel::ChannelInstance;
use crate::constellation::Constellation;
use crate::error::{invalid, Result};
use crate::mi::{cc_sum_bound, conditional_mi, NoiseRule};
use crate::regions::gaussian_region;
use crate::rotation::{golden_section, Sense};

/// Sweeps stay inside `[ε, 1−ε]`; the rates vanish at the endpoints.
pub const ALPHA_EPS: f64 = 1e-4;
/// Grid spacing of the numerical argmax over α.
pub const ARGMAX_STEP: f64 = 1e-3;
/// Relative tolerance of [`touch_check`].
pub const TOUCH_RTOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Alphabet {
    Gaussian,
    Finite,
}

/// How the reported optimum split was obtained.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum AlphaOptSource {
    /// `P1/(P1+P2)`.
    ClosedForm,
    /// Grid argmax refined by golden section; used when the closed form
    /// does not apply (distinct finite constellations).
    Numerical,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AlphaGrid {
    pub count: usize,
}

impl AlphaGrid {
    pub fn new(count: usize) -> Result<Self> {
        if count < 2 {
            return Err(invalid("alpha grid needs at least 2 points"));
        }
        Ok(Self { count })
    }

    /// Points spaced uniformly over `[ε, 1−ε]`, both ends included.
    pub fn points(&self) -> Vec<f64> {
        let n = self.count;
        (0..n)
            .map(|i| ALPHA_EPS + (1.0 - 2.0 * ALPHA_EPS) * i as f64 / (n - 1) as f64)
            .collect()
    }
}

impl Default for AlphaGrid {
    fn default() -> Self {
        Self { count: 201 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FdmaCurve {
    pub alphas: Vec<f64>,
    pub r1: Vec<f64>,
    pub r2: Vec<f64>,
    pub alphabet: Alphabet,
    pub alpha_opt: f64,
    pub alpha_opt_source: AlphaOptSource,
    /// `P1/(P1+P2)`, reported even when it is not the optimum used.
    pub alpha_closed_form: f64,
    pub sum_at_opt: f64,
    /// Largest quadrature/Monte-Carlo error over the sweep, in bits/s.
    pub std_error: f64,
}

impl FdmaCurve {
    pub fn sums(&self) -> Vec<f64> {
        self.r1.iter().zip(&self.r2).map(|(a, b)| a + b).collect()
    }
}

fn bandwidth(instance: &ChannelInstance) -> Result<f64> {
    instance.validate()?;
    instance
        .bandwidth_w
        .ok_or_else(|| invalid("FDMA requires a bandwidth W"))
}

fn check_alpha(alpha: f64) -> Result<()> {
    if alpha.is_finite() && alpha > 0.0 && alpha < 1.0 {
        Ok(())
    } else {
        Err(invalid(format!(
            "alpha must lie strictly inside (0, 1), got {alpha}"
        )))
    }
}

/// Gaussian-input FDMA rate pair in bits/s.
pub fn fdma_gaussian_point(instance: &ChannelInstance, alpha: f64) -> Result<(f64, f64)> {
    let w = bandwidth(instance)?;
    check_alpha(alpha)?;
    let (w1, w2) = (alpha * w, (1.0 - alpha) * w);
    Ok((
        w1 * (1.0 + instance.p1 / w1).log2(),
        w2 * (1.0 + instance.p2 / w2).log2(),
    ))
}

/// Finite-constellation FDMA rate pair in bits/s.
pub fn fdma_cc_point(
    c1: &Constellation,
    c2: &Constellation,
    instance: &ChannelInstance,
    alpha: f64,
    rule: &NoiseRule,
) -> Result<(f64, f64)> {
    fdma_cc_point_with_error(c1, c2, instance, alpha, rule).map(|(r1, r2, _)| (r1, r2))
}

fn fdma_cc_point_with_error(
    c1: &Constellation,
    c2: &Constellation,
    instance: &ChannelInstance,
    alpha: f64,
    rule: &NoiseRule,
) -> Result<(f64, f64, f64)> {
    let w = bandwidth(instance)?;
    check_alpha(alpha)?;
    let (w1, w2) = (alpha * w, (1.0 - alpha) * w);
    let i1 = conditional_mi(c1, instance.p1, w1, rule)?;
    let i2 = conditional_mi(c2, instance.p2, w2, rule)?;
    Ok((
        w1 * i1.value,
        w2 * i2.value,
        (w1 * i1.std_error).max(w2 * i2.std_error),
    ))
}

/// `P1/(P1+P2)`.
pub fn alpha_opt(instance: &ChannelInstance) -> f64 {
    instance.p1 / (instance.p1 + instance.p2)
}

/// Which inputs an FDMA evaluation uses.
#[derive(Debug, Clone, Copy)]
pub enum Inputs<'a> {
    Gaussian,
    Finite {
        c1: &'a Constellation,
        c2: &'a Constellation,
        rule: &'a NoiseRule,
    },
}

impl Inputs<'_> {
    fn alphabet(&self) -> Alphabet {
        match self {
            Inputs::Gaussian => Alphabet::Gaussian,
            Inputs::Finite { .. } => Alphabet::Finite,
        }
    }

    /// The closed form is proven for Gaussian inputs and for identical
    /// finite constellations.
    pub fn closed_form_applies(&self) -> bool {
        match self {
            Inputs::Gaussian => true,
            Inputs::Finite { c1, c2, .. } => c1.points() == c2.points(),
        }
    }

    fn point(&self, instance: &ChannelInstance, alpha: f64) -> Result<(f64, f64, f64)> {
        match *self {
            Inputs::Gaussian => fdma_gaussian_point(instance, alpha).map(|(a, b)| (a, b, 0.0)),
            Inputs::Finite { c1, c2, rule } => {
                fdma_cc_point_with_error(c1, c2, instance, alpha, rule)
            }
        }
    }

    fn sum(&self, instance: &ChannelInstance, alpha: f64) -> Result<f64> {
        self.point(instance, alpha).map(|(a, b, _)| a + b)
    }
}

/// FDMA sum-rate maximizer over α found numerically: argmax on a
/// `ARGMAX_STEP` grid, then golden section inside the neighbouring cells.
/// Returns `(alpha, sum)`.
pub fn alpha_opt_numerical(instance: &ChannelInstance, inputs: Inputs<'_>) -> Result<(f64, f64)> {
    bandwidth(instance)?;
    let n = ((1.0 - 2.0 * ALPHA_EPS) / ARGMAX_STEP).round() as usize;
    let grid = AlphaGrid::new(n + 1)?.points();
    let sums: Vec<f64> = grid
        .par_iter()
        .map(|&a| inputs.sum(instance, a))
        .collect::<Result<_>>()?;
    let mut best = 0;
    for (i, s) in sums.iter().enumerate() {
        if Sense::Maximize.better(*s, sums[best]) {
            best = i;
        }
    }
    let step = grid[1] - grid[0];
    let center = grid[best];
    let half = step
        .min(center - ALPHA_EPS / 2.0)
        .min(1.0 - ALPHA_EPS / 2.0 - center);
    if half <= 0.0 {
        return Ok((center, sums[best]));
    }
    let f = |a: f64| inputs.sum(instance, a);
    let r = golden_section(&f, Sense::Maximize, center, sums[best], half, 1e-9)?;
    Ok((r.angle, r.value))
}

/// Sweeps `grid`, then evaluates the sum at the optimum split.
///
/// The closed-form optimum is used whenever it applies; otherwise the
/// numerical argmax is reported and the closed form is only recorded.
pub fn fdma_curve(
    instance: &ChannelInstance,
    inputs: Inputs<'_>,
    grid: &AlphaGrid,
) -> Result<FdmaCurve> {
    bandwidth(instance)?;
    let alphas = grid.points();
    let pts: Vec<(f64, f64, f64)> = alphas
        .par_iter()
        .map(|&a| inputs.point(instance, a))
        .collect::<Result<_>>()?;
    let closed = alpha_opt(instance);
    let (alpha, source, opt_point) = if inputs.closed_form_applies() {
        (
            closed,
            AlphaOptSource::ClosedForm,
            inputs.point(instance, closed)?,
        )
    } else {
        let (a, _) = alpha_opt_numerical(instance, inputs)?;
        (a, AlphaOptSource::Numerical, inputs.point(instance, a)?)
    };
    let std_error = pts.iter().map(|p| p.2).fold(opt_point.2, f64::max);
    Ok(FdmaCurve {
        r1: pts.iter().map(|p| p.0).collect(),
        r2: pts.iter().map(|p| p.1).collect(),
        alphas,
        alphabet: inputs.alphabet(),
        alpha_opt: alpha,
        alpha_opt_source: source,
        alpha_closed_form: closed,
        sum_at_opt: opt_point.0 + opt_point.1,
        std_error,
    })
}

/// True when the Gaussian FDMA sum at the optimum split reaches the
/// Gaussian region's sum-rate bound within [`TOUCH_RTOL`].
pub fn touch_check(instance: &ChannelInstance) -> Result<bool> {
    let (r1, r2) = fdma_gaussian_point(instance, alpha_opt(instance))?;
    let region = gaussian_region(instance)?;
    let target = region.effective_sum();
    Ok(((r1 + r2) - target).abs() <= TOUCH_RTOL * target.abs().max(f64::MIN_POSITIVE))
}

/// Closed-form counterpart of [`touch_check`]: the smaller cross-gain
/// modulus equals one (within `tol`) and the other is at least one.
pub fn touch_predicate(instance: &ChannelInstance, tol: f64) -> bool {
    let a = instance.h12.norm();
    let b = instance.h21.norm();
    let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
    (lo - 1.0).abs() <= tol && hi >= 1.0 - tol
}

/// Simultaneous-decoding sum rate at `theta` minus the finite FDMA sum at
/// its optimum split, both in bits/s. Positive favours simultaneous decoding.
///
/// The simultaneous-decoding side is the largest sum rate in the pentagon,
/// `W·min(sum bound, I1 + I2)`.
pub fn fdma_vs_simdec_gap(
    c1: &Constellation,
    c2: &Constellation,
    instance: &ChannelInstance,
    theta: f64,
    rule: &NoiseRule,
) -> Result<f64> {
    let w = bandwidth(instance)?;
    let inputs = Inputs::Finite { c1, c2, rule };
    let fdma_sum = if inputs.closed_form_applies() {
        inputs.sum(instance, alpha_opt(instance))?
    } else {
        alpha_opt_numerical(instance, inputs)?.1
    };
    let sum = cc_sum_bound(c1, c2, instance, theta, rule)?.value();
    let i1 = conditional_mi(c1, instance.p1, w, rule)?.value;
    let i2 = conditional_mi(c2, instance.p2, w, rule)?.value;
    Ok(w * sum.min(i1 + i2) - fdma_sum)
}
