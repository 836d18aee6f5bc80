//! Rate regions and interference-regime classification.
//!
//! Every region here is the pentagon `{R1 ≤ r1_max, R2 ≤ r2_max,
//! R1 + R2 ≤ sum_max}`. Under weak interference the same shapes are only
//! achievable (inner) regions and are tagged as such.

use serde::{Deserialize, Serialize};

use crate::channel::{ChannelInstance, Receiver};
use crate::constellation::Constellation;
use crate::error::{invalid, Result};
use crate::mi::{cc_sum_bound, conditional_mi, NoiseRule};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Regime {
    Weak,
    Strong,
    VeryStrong,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RegimeReport {
    pub regime: Regime,
    pub snr1: f64,
    pub snr2: f64,
    pub inr1: f64,
    pub inr2: f64,
}

impl RegimeReport {
    /// Regimes other than strong fall outside the region where the
    /// simultaneous-decoding pentagon is known to be the capacity region
    /// without further qualification.
    pub fn warning(&self) -> Option<&'static str> {
        match self.regime {
            Regime::Strong => None,
            Regime::Weak => {
                Some("weak interference: regions are achievable inner bounds, not capacity")
            }
            Regime::VeryStrong => {
                Some("very strong interference: excluded from the strong-regime results")
            }
        }
    }
}

/// Weak when either `SNR1 > INR2` or `SNR2 > INR1`; otherwise strong when
/// `SNR1 > INR2/(1+SNR2)` or `SNR2 > INR1/(1+SNR1)`; otherwise very strong.
pub fn classify_regime(instance: &ChannelInstance) -> Result<RegimeReport> {
    instance.validate()?;
    let (snr1, snr2, inr1, inr2) = (
        instance.snr1(),
        instance.snr2(),
        instance.inr1(),
        instance.inr2(),
    );
    Ok(RegimeReport {
        regime: regime_of(snr1, snr2, inr1, inr2),
        snr1,
        snr2,
        inr1,
        inr2,
    })
}

/// Relative margin by which a ratio must exceed another to count as larger.
/// Unit-modulus gains given in polar form square to `1 − ε`, which would
/// otherwise tip equal SNR/INR pairs into the weak regime.
pub const REGIME_RTOL: f64 = 1e-9;

fn exceeds(a: f64, b: f64) -> bool {
    a > b + REGIME_RTOL * a.abs().max(b.abs())
}

pub fn regime_of(snr1: f64, snr2: f64, inr1: f64, inr2: f64) -> Regime {
    if exceeds(snr1, inr2) || exceeds(snr2, inr1) {
        Regime::Weak
    } else if exceeds(snr1, inr2 / (1.0 + snr2)) || exceeds(snr2, inr1 / (1.0 + snr1)) {
        Regime::Strong
    } else {
        Regime::VeryStrong
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum RateUnits {
    BitsPerChannelUse,
    BitsPerSecond,
}

impl RateUnits {
    pub fn of(instance: &ChannelInstance) -> Self {
        if instance.is_bandwidth_mode() {
            RateUnits::BitsPerSecond
        } else {
            RateUnits::BitsPerChannelUse
        }
    }

    pub fn label(&self) -> &'static str {
        match self {
            RateUnits::BitsPerChannelUse => "bits/channel use",
            RateUnits::BitsPerSecond => "bits/s",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum RegionKind {
    GaussianCapacity,
    CcCapacity,
    GaussianInner,
    CcInner,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RateRegion {
    pub r1_max: f64,
    pub r2_max: f64,
    pub sum_max: f64,
    pub units: RateUnits,
    pub kind: RegionKind,
    /// Evaluation error of the bounds (zero for closed forms and quadrature).
    pub std_error: f64,
}

impl RateRegion {
    pub fn new(
        r1_max: f64,
        r2_max: f64,
        sum_max: f64,
        units: RateUnits,
        kind: RegionKind,
    ) -> Result<Self> {
        if [r1_max, r2_max, sum_max]
            .iter()
            .any(|v| !v.is_finite() || *v < 0.0)
        {
            return Err(invalid("region bounds must be finite and nonnegative"));
        }
        Ok(Self {
            r1_max,
            r2_max,
            sum_max,
            units,
            kind,
            std_error: 0.0,
        })
    }

    /// Sum bound actually active in the pentagon, `min(sum_max, r1_max + r2_max)`.
    pub fn effective_sum(&self) -> f64 {
        self.sum_max.min(self.r1_max + self.r2_max)
    }

    /// Distinct corner points from `(0, r2)` to `(r1, 0)`, excluding the origin.
    pub fn corners(&self) -> Vec<(f64, f64)> {
        let s = self.effective_sum();
        let r2 = self.r2_max.min(s);
        let r1 = self.r1_max.min(s);
        let raw = [(0.0, r2), (s - r2, r2), (r1, s - r1), (r1, 0.0)];
        let mut out: Vec<(f64, f64)> = Vec::with_capacity(4);
        for p in raw {
            let p = (p.0.max(0.0), p.1.max(0.0));
            if out
                .last()
                .is_none_or(|q| (q.0 - p.0).abs() > 1e-15 || (q.1 - p.1).abs() > 1e-15)
            {
                out.push(p);
            }
        }
        out
    }

    /// True when `(r1, r2)` satisfies all three constraints within `tol`.
    pub fn contains(&self, r1: f64, r2: f64, tol: f64) -> bool {
        r1 >= -tol
            && r2 >= -tol
            && r1 <= self.r1_max + tol
            && r2 <= self.r2_max + tol
            && r1 + r2 <= self.sum_max + tol
    }

    pub fn is_degenerate(&self) -> bool {
        self.effective_sum() == 0.0 || (self.r1_max == 0.0 && self.r2_max == 0.0)
    }
}

/// Gaussian-input pentagon; bits/s with the noise variance set to `W` in
/// bandwidth mode.
pub fn gaussian_region(instance: &ChannelInstance) -> Result<RateRegion> {
    let regime = classify_regime(instance)?;
    let (n1, n2) = (
        instance.noise_var(Receiver::R1),
        instance.noise_var(Receiver::R2),
    );
    let w = instance.rate_scale();
    let r1 = w * (1.0 + instance.p1 / n1).log2();
    let r2 = w * (1.0 + instance.p2 / n2).log2();
    let s1 = (1.0 + (instance.p1 + instance.h21.norm_sqr() * instance.p2) / n1).log2();
    let s2 = (1.0 + (instance.h12.norm_sqr() * instance.p1 + instance.p2) / n2).log2();
    let kind = match regime.regime {
        Regime::Weak => RegionKind::GaussianInner,
        _ => RegionKind::GaussianCapacity,
    };
    RateRegion::new(r1, r2, w * s1.min(s2), RateUnits::of(instance), kind)
}

/// Constellation-constrained pentagon with `S2` rotated by `theta`.
pub fn cc_region(
    c1: &Constellation,
    c2: &Constellation,
    instance: &ChannelInstance,
    theta: f64,
    rule: &NoiseRule,
) -> Result<RateRegion> {
    let regime = classify_regime(instance)?;
    let (((i1, i2), sum), w) = (
        rayon::join(
            || {
                rayon::join(
                    || conditional_mi(c1, instance.p1, instance.noise_var(Receiver::R1), rule),
                    || conditional_mi(c2, instance.p2, instance.noise_var(Receiver::R2), rule),
                )
            },
            || cc_sum_bound(c1, c2, instance, theta, rule),
        ),
        instance.rate_scale(),
    );
    let (i1, i2, sum) = (i1?, i2?, sum?);
    let kind = match regime.regime {
        Regime::Weak => RegionKind::CcInner,
        _ => RegionKind::CcCapacity,
    };
    let mut region = RateRegion::new(
        w * i1.value,
        w * i2.value,
        w * sum.value(),
        RateUnits::of(instance),
        kind,
    )?;
    region.std_error = w * i1.std_error.max(i2.std_error).max(sum.std_error());
    Ok(region)
}

/// `n` points along the pentagon boundary from `(0, r2_max)` to `(r1_max, 0)`.
///
/// Corners are always included exactly; the remaining points are spread over
/// the edges in proportion to their length. If `n` is smaller than the number
/// of distinct corners, the corners alone are returned.
pub fn region_boundary_points(region: &RateRegion, n: usize) -> Result<Vec<(f64, f64)>> {
    if n < 2 {
        return Err(invalid("need at least 2 boundary points"));
    }
    let corners = region.corners();
    let seg_len: Vec<f64> = corners
        .windows(2)
        .map(|w| ((w[1].0 - w[0].0).powi(2) + (w[1].1 - w[0].1).powi(2)).sqrt())
        .collect();
    let total: f64 = seg_len.iter().sum();
    if total == 0.0 {
        return Ok(vec![corners[0]; n]);
    }
    if n <= corners.len() {
        return Ok(corners);
    }
    // largest-remainder apportionment of interior points
    let extra = n - corners.len();
    let shares: Vec<f64> = seg_len.iter().map(|l| l / total * extra as f64).collect();
    let mut alloc: Vec<usize> = shares.iter().map(|s| s.floor() as usize).collect();
    let mut left = extra - alloc.iter().sum::<usize>();
    let mut order: Vec<usize> = (0..shares.len()).collect();
    order.sort_by(|&a, &b| {
        (shares[b] - shares[b].floor())
            .total_cmp(&(shares[a] - shares[a].floor()))
            .then(a.cmp(&b))
    });
    for &i in order.iter().cycle() {
        if left == 0 {
            break;
        }
        alloc[i] += 1;
        left -= 1;
    }
    let mut out = Vec::with_capacity(n);
    for (s, w) in corners.windows(2).enumerate() {
        out.push(w[0]);
        let m = alloc[s];
        for j in 1..=m {
            let t = j as f64 / (m + 1) as f64;
            out.push((
                w[0].0 + t * (w[1].0 - w[0].0),
                w[0].1 + t * (w[1].1 - w[0].1),
            ));
        }
    }
    out.push(*corners.last().expect("at least one corner"));
    Ok(out)
}
