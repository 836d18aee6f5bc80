//! Problem statement for the two-user Gaussian interference channel.
//!
//! Direct gains are fixed to one. Receiver 1 sees `√P1·x1 + h21·√P2·x2 + N1`
//! and receiver 2 sees `h12·√P1·x1 + √P2·x2 + N2`.

use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Receiver {
    R1,
    R2,
}

/// Powers, cross gains, noise variances and optional bandwidth.
///
/// When `bandwidth_w` is set the noise variance at both receivers is `W·N0`
/// with `N0 = 1`, and the `sigma*_sq` fields are ignored.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ChannelInstance {
    pub p1: f64,
    pub p2: f64,
    pub h12: Complex64,
    pub h21: Complex64,
    pub sigma1_sq: f64,
    pub sigma2_sq: f64,
    pub bandwidth_w: Option<f64>,
}

impl ChannelInstance {
    /// Per-channel-use model with explicit noise variances.
    pub fn new(
        p1: f64,
        p2: f64,
        h12: Complex64,
        h21: Complex64,
        sigma1_sq: f64,
        sigma2_sq: f64,
    ) -> Result<Self> {
        let inst = Self {
            p1,
            p2,
            h12,
            h21,
            sigma1_sq,
            sigma2_sq,
            bandwidth_w: None,
        };
        inst.validate()?;
        Ok(inst)
    }

    /// Bandwidth-aware model: both noise variances equal `W`.
    pub fn with_bandwidth(
        p1: f64,
        p2: f64,
        h12: Complex64,
        h21: Complex64,
        w: f64,
    ) -> Result<Self> {
        let inst = Self {
            p1,
            p2,
            h12,
            h21,
            sigma1_sq: w,
            sigma2_sq: w,
            bandwidth_w: Some(w),
        };
        inst.validate()?;
        Ok(inst)
    }

    pub fn validate(&self) -> Result<()> {
        let positive = |name: &str, v: f64| {
            if v.is_finite() && v > 0.0 {
                Ok(())
            } else {
                Err(invalid(format!("{name} must be finite and > 0, got {v}")))
            }
        };
        positive("p1", self.p1)?;
        positive("p2", self.p2)?;
        if let Some(w) = self.bandwidth_w {
            positive("bandwidth", w)?;
        } else {
            positive("sigma1_sq", self.sigma1_sq)?;
            positive("sigma2_sq", self.sigma2_sq)?;
        }
        for (name, h) in [("h12", self.h12), ("h21", self.h21)] {
            if !h.re.is_finite() || !h.im.is_finite() {
                return Err(invalid(format!("{name} must be finite")));
            }
        }
        let ratios = [self.snr1(), self.snr2(), self.inr1(), self.inr2()];
        if ratios.iter().any(|r| !r.is_finite()) {
            return Err(invalid("SNR/INR ratios overflow"));
        }
        Ok(())
    }

    pub fn is_bandwidth_mode(&self) -> bool {
        self.bandwidth_w.is_some()
    }

    /// Noise variance seen by a receiver.
    pub fn noise_var(&self, rx: Receiver) -> f64 {
        match (self.bandwidth_w, rx) {
            (Some(w), _) => w,
            (None, Receiver::R1) => self.sigma1_sq,
            (None, Receiver::R2) => self.sigma2_sq,
        }
    }

    /// Cross gain of the interfering user at a receiver: `h21` at R1, `h12` at R2.
    pub fn cross_gain(&self, rx: Receiver) -> Complex64 {
        match rx {
            Receiver::R1 => self.h21,
            Receiver::R2 => self.h12,
        }
    }

    /// Multiplier converting bits per channel use into the reported unit.
    pub fn rate_scale(&self) -> f64 {
        self.bandwidth_w.unwrap_or(1.0)
    }

    pub fn snr1(&self) -> f64 {
        self.p1 / self.noise_var(Receiver::R1)
    }

    pub fn snr2(&self) -> f64 {
        self.p2 / self.noise_var(Receiver::R2)
    }

    pub fn inr1(&self) -> f64 {
        self.h21.norm_sqr() * self.p2 / self.noise_var(Receiver::R1)
    }

    pub fn inr2(&self) -> f64 {
        self.h12.norm_sqr() * self.p1 / self.noise_var(Receiver::R2)
    }
}

/// A complex gain parsed from `mag∠deg`, `mag@deg` or `[re,im]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Gain(pub Complex64);

impl Gain {
    pub fn polar_deg(mag: f64, deg: f64) -> Complex64 {
        Complex64::from_polar(mag, deg * PI / 180.0)
    }
}

impl FromStr for Gain {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let t = s.trim();
        let bad = || {
            Error::Parse(format!(
                "cannot parse gain '{s}'; use mag∠deg, mag@deg or [re,im]"
            ))
        };
        if t.starts_with('[') {
            let v: [f64; 2] = serde_json::from_str(t).map_err(|_| bad())?;
            return Ok(Gain(Complex64::new(v[0], v[1])));
        }
        let (mag, deg) = if let Some((m, d)) = t.split_once('∠') {
            (m, d)
        } else if let Some((m, d)) = t.split_once('@') {
            (m, d)
        } else {
            (t, "0")
        };
        let deg = deg.trim().trim_end_matches('°');
        let mag: f64 = mag.trim().parse().map_err(|_| bad())?;
        let deg: f64 = deg.parse().map_err(|_| bad())?;
        if !mag.is_finite() || !deg.is_finite() {
            return Err(bad());
        }
        Ok(Gain(Self::polar_deg(mag, deg)))
    }
}

impl fmt::Display for Gain {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[{},{}]", self.0.re, self.0.im)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ratios() {
        let i = ChannelInstance::new(
            3.5,
            6.0,
            Gain::polar_deg(1.2, 10.0),
            Gain::polar_deg(1.1, 20.0),
            1.0,
            2.0,
        )
        .unwrap();
        assert_eq!(i.snr1(), 3.5);
        assert_eq!(i.snr2(), 3.0);
        assert!((i.inr1() - 1.21 * 6.0).abs() < 1e-12);
        assert!((i.inr2() - 1.44 * 3.5 / 2.0).abs() < 1e-12);
        assert_eq!(i.rate_scale(), 1.0);
    }

    #[test]
    fn bandwidth_mode_uses_w() {
        let i = ChannelInstance::with_bandwidth(
            7.0,
            12.0,
            Complex64::new(1.0, 0.0),
            Complex64::new(1.0, 0.0),
            2.0,
        )
        .unwrap();
        assert_eq!(i.noise_var(Receiver::R1), 2.0);
        assert_eq!(i.noise_var(Receiver::R2), 2.0);
        assert_eq!(i.snr1(), 3.5);
        assert_eq!(i.rate_scale(), 2.0);
    }

    #[test]
    fn rejects_bad_values() {
        let one = Complex64::new(1.0, 0.0);
        assert!(ChannelInstance::new(0.0, 1.0, one, one, 1.0, 1.0).is_err());
        assert!(ChannelInstance::new(1.0, -1.0, one, one, 1.0, 1.0).is_err());
        assert!(ChannelInstance::new(1.0, 1.0, one, one, 0.0, 1.0).is_err());
        assert!(
            ChannelInstance::new(1.0, 1.0, Complex64::new(f64::NAN, 0.0), one, 1.0, 1.0).is_err()
        );
        assert!(ChannelInstance::with_bandwidth(1.0, 1.0, one, one, 0.0).is_err());
        assert!(ChannelInstance::new(f64::INFINITY, 1.0, one, one, 1.0, 1.0).is_err());
    }

    #[test]
    fn gain_parsing() {
        let g: Gain = "1∠10".parse().unwrap();
        assert!((g.0 - Gain::polar_deg(1.0, 10.0)).norm() < 1e-15);
        let g: Gain = "1.03@-112°".parse().unwrap();
        assert!((g.0.norm() - 1.03).abs() < 1e-15);
        assert!((g.0.arg().to_degrees() + 112.0).abs() < 1e-12);
        let g: Gain = "[0.5,-0.25]".parse().unwrap();
        assert_eq!(g.0, Complex64::new(0.5, -0.25));
        let g: Gain = "0.9".parse().unwrap();
        assert_eq!(g.0, Complex64::new(0.9, 0.0));
        assert!("abc".parse::<Gain>().is_err());
        assert!("[1]".parse::<Gain>().is_err());
    }
}
