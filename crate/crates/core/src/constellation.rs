//! Finite complex signal constellations.
//!
//! Constellations are stored at unit average power; transmit power enters as
//! a `√P` factor wherever a constellation is used.

use std::f64::consts::PI;
use std::fmt;
use std::path::Path;
use std::str::FromStr;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};

const POWER_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Family {
    Psk,
    Qam,
}

impl fmt::Display for Family {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Family::Psk => f.write_str("PSK"),
            Family::Qam => f.write_str("QAM"),
        }
    }
}

/// An ordered set of unit-average-power complex points.
///
/// Index `i` always refers to the same point.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Constellation {
    points: Vec<Complex64>,
    label: String,
}

impl Constellation {
    /// Builds a constellation and scales it to unit average power.
    pub fn new(points: Vec<Complex64>, label: impl Into<String>) -> Result<Self> {
        validate_points(&points)?;
        let power = average_power(&points);
        if power <= 0.0 {
            return Err(invalid("constellation has zero average power"));
        }
        let scale = power.sqrt().recip();
        let points = points.into_iter().map(|p| p * scale).collect();
        Ok(Self {
            points,
            label: label.into(),
        })
    }

    /// Builds a constellation from points the caller asserts are already at
    /// unit average power; the assertion is checked, not trusted.
    pub fn from_unit_power(points: Vec<Complex64>, label: impl Into<String>) -> Result<Self> {
        validate_points(&points)?;
        let power = average_power(&points);
        if (power - 1.0).abs() > POWER_TOL {
            return Err(invalid(format!(
                "constellation average power is {power}, expected 1"
            )));
        }
        Ok(Self {
            points,
            label: label.into(),
        })
    }

    /// PSK points `e^{j2πk/M}` in increasing angle, or a square QAM grid in
    /// row-major order starting at the most negative corner.
    pub fn standard(family: Family, m: usize) -> Result<Self> {
        if m < 2 {
            return Err(invalid(format!("{family} needs M >= 2, got {m}")));
        }
        match family {
            Family::Psk => {
                let points = (0..m)
                    .map(|k| Complex64::from_polar(1.0, 2.0 * PI * k as f64 / m as f64))
                    .collect();
                Ok(Self {
                    points,
                    label: if m == 4 {
                        "QPSK".into()
                    } else {
                        format!("{m}-PSK")
                    },
                })
            }
            Family::Qam => {
                let side = (m as f64).sqrt().round() as usize;
                if side * side != m || !side.is_multiple_of(2) {
                    return Err(invalid(format!(
                        "QAM needs M to be the square of an even number, got {m}"
                    )));
                }
                let levels: Vec<f64> = (0..side)
                    .map(|i| 2.0 * i as f64 - (side as f64 - 1.0))
                    .collect();
                let raw: Vec<Complex64> = levels
                    .iter()
                    .flat_map(|&im| levels.iter().map(move |&re| Complex64::new(re, im)))
                    .collect();
                Self::new(raw, format!("{m}-QAM"))
            }
        }
    }

    /// The single point `1`; a degenerate constellation carrying no information.
    pub fn single_point() -> Self {
        Self {
            points: vec![Complex64::new(1.0, 0.0)],
            label: "1-point".into(),
        }
    }

    /// Loads a JSON array of `[re, im]` pairs. Normalizes unless `normalize`
    /// is false, in which case the file must already be at unit power.
    pub fn from_json_file(path: &Path, normalize: bool) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        let label = path
            .file_stem()
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_else(|| "custom".into());
        Self::from_json_str(&text, label, normalize)
    }

    pub fn from_json_str(text: &str, label: impl Into<String>, normalize: bool) -> Result<Self> {
        let pairs: Vec<[f64; 2]> = serde_json::from_str(text)
            .map_err(|e| Error::Parse(format!("constellation file: {e}")))?;
        let points = pairs.iter().map(|p| Complex64::new(p[0], p[1])).collect();
        if normalize {
            Self::new(points, label)
        } else {
            Self::from_unit_power(points, label)
        }
    }

    pub fn points(&self) -> &[Complex64] {
        &self.points
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    /// Always false: a constellation has at least one point.
    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn average_power(&self) -> f64 {
        average_power(&self.points)
    }

    /// Multiplies every point by `e^{jθ}`; order and power are preserved.
    pub fn rotate(&self, theta: f64) -> Self {
        let r = Complex64::from_polar(1.0, theta);
        Self {
            points: self.points.iter().map(|&p| p * r).collect(),
            label: self.label.clone(),
        }
    }

    /// All `M²` ordered differences `x^k − x^i`, row-major in `k`.
    pub fn difference_multiset(&self) -> Vec<Complex64> {
        difference_matrix(&self.points, 1.0)
    }
}

/// Differences `scale · (x^k − x^i)` laid out as `out[k * M + i]`.
pub(crate) fn difference_matrix(points: &[Complex64], scale: f64) -> Vec<Complex64> {
    points
        .iter()
        .flat_map(|&xk| points.iter().map(move |&xi| (xk - xi) * scale))
        .collect()
}

fn average_power(points: &[Complex64]) -> f64 {
    points.iter().map(|p| p.norm_sqr()).sum::<f64>() / points.len() as f64
}

fn validate_points(points: &[Complex64]) -> Result<()> {
    if points.is_empty() {
        return Err(invalid("constellation must have at least one point"));
    }
    if points
        .iter()
        .any(|p| !p.re.is_finite() || !p.im.is_finite())
    {
        return Err(invalid("constellation points must be finite"));
    }
    Ok(())
}

/// Named constellation specification as used on the command line:
/// `psk4`, `psk8`, `qam16`, `bpsk`, `qpsk`, `single`, or `file:PATH`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(into = "String", try_from = "String")]
pub enum ConstellationSpec {
    Standard(Family, usize),
    Single,
    File(String),
}

impl ConstellationSpec {
    pub fn build(&self, normalize: bool) -> Result<Constellation> {
        match self {
            ConstellationSpec::Standard(f, m) => Constellation::standard(*f, *m),
            ConstellationSpec::Single => Ok(Constellation::single_point()),
            ConstellationSpec::File(p) => Constellation::from_json_file(Path::new(p), normalize),
        }
    }
}

impl FromStr for ConstellationSpec {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let lower = s.to_ascii_lowercase();
        if let Some(path) = s.strip_prefix("file:") {
            return Ok(ConstellationSpec::File(path.to_string()));
        }
        let spec = match lower.as_str() {
            "bpsk" => ConstellationSpec::Standard(Family::Psk, 2),
            "qpsk" => ConstellationSpec::Standard(Family::Psk, 4),
            "single" | "1" => ConstellationSpec::Single,
            other => {
                let (family, digits) = if let Some(d) = other.strip_prefix("psk") {
                    (Family::Psk, d)
                } else if let Some(d) = other.strip_prefix("qam") {
                    (Family::Qam, d)
                } else {
                    return Err(Error::Parse(format!("unknown constellation '{s}'")));
                };
                let m = digits
                    .parse()
                    .map_err(|_| Error::Parse(format!("bad constellation size in '{s}'")))?;
                ConstellationSpec::Standard(family, m)
            }
        };
        Ok(spec)
    }
}

impl fmt::Display for ConstellationSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ConstellationSpec::Standard(Family::Psk, m) => write!(f, "psk{m}"),
            ConstellationSpec::Standard(Family::Qam, m) => write!(f, "qam{m}"),
            ConstellationSpec::Single => f.write_str("single"),
            ConstellationSpec::File(p) => write!(f, "file:{p}"),
        }
    }
}

impl From<ConstellationSpec> for String {
    fn from(s: ConstellationSpec) -> String {
        s.to_string()
    }
}

impl TryFrom<String> for ConstellationSpec {
    type Error = Error;

    fn try_from(s: String) -> Result<Self> {
        s.parse()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn close(a: Complex64, b: Complex64, tol: f64) -> bool {
        (a - b).norm() < tol
    }

    fn sorted_distances(c: &Constellation) -> Vec<f64> {
        let mut d: Vec<f64> = c.difference_multiset().iter().map(|z| z.norm()).collect();
        d.sort_by(f64::total_cmp);
        d
    }

    #[test]
    fn qpsk_points() {
        let c = Constellation::standard(Family::Psk, 4).unwrap();
        let expected = [
            Complex64::new(1.0, 0.0),
            Complex64::new(0.0, 1.0),
            Complex64::new(-1.0, 0.0),
            Complex64::new(0.0, -1.0),
        ];
        for (p, e) in c.points().iter().zip(expected) {
            assert!(close(*p, e, 1e-15));
        }
        assert_eq!(c.label(), "QPSK");
    }

    #[test]
    fn bpsk_points() {
        let c = Constellation::standard(Family::Psk, 2).unwrap();
        assert!(close(c.points()[0], Complex64::new(1.0, 0.0), 1e-15));
        assert!(close(c.points()[1], Complex64::new(-1.0, 0.0), 1e-15));
    }

    #[test]
    fn qam16_grid() {
        // average power of the raw {±1,±3}² grid, by enumeration
        let levels = [-3.0, -1.0, 1.0, 3.0];
        let raw_power: f64 = levels
            .iter()
            .flat_map(|&a| levels.iter().map(move |&b| a * a + b * b))
            .sum::<f64>()
            / 16.0;
        assert_eq!(raw_power, 10.0);
        let c = Constellation::standard(Family::Qam, 16).unwrap();
        let s = 1.0 / 10f64.sqrt();
        assert!(close(
            c.points()[0],
            Complex64::new(-3.0 * s, -3.0 * s),
            1e-15
        ));
        assert!(close(c.points()[1], Complex64::new(-s, -3.0 * s), 1e-15));
        assert!(close(c.points()[4], Complex64::new(-3.0 * s, -s), 1e-15));
        assert!(close(
            c.points()[15],
            Complex64::new(3.0 * s, 3.0 * s),
            1e-15
        ));
        assert!((c.average_power() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn unsupported_sizes() {
        assert!(Constellation::standard(Family::Psk, 1).is_err());
        assert!(Constellation::standard(Family::Psk, 0).is_err());
        assert!(Constellation::standard(Family::Qam, 8).is_err());
        assert!(Constellation::standard(Family::Qam, 9).is_err());
        assert!(Constellation::standard(Family::Qam, 2).is_err());
        assert!(Constellation::standard(Family::Qam, 64).is_ok());
    }

    #[test]
    fn rotate_identity_and_quarter_turn() {
        let c = Constellation::standard(Family::Psk, 4).unwrap();
        assert_eq!(c.rotate(0.0).points(), c.points());
        let r = c.rotate(PI / 2.0);
        // cyclic permutation: point k moves to where k+1 was
        for k in 0..4 {
            assert!(close(r.points()[k], c.points()[(k + 1) % 4], 1e-15));
        }
        let b = Constellation::standard(Family::Psk, 2)
            .unwrap()
            .rotate(PI / 2.0);
        assert!(close(b.points()[0], Complex64::new(0.0, 1.0), 1e-15));
        assert!(close(b.points()[1], Complex64::new(0.0, -1.0), 1e-15));
    }

    #[test]
    fn difference_multisets() {
        let b = Constellation::standard(Family::Psk, 2).unwrap();
        let d = b.difference_multiset();
        let expected = [0.0, 2.0, -2.0, 0.0];
        assert_eq!(d.len(), 4);
        for (z, e) in d.iter().zip(expected) {
            assert!(close(*z, Complex64::new(e, 0.0), 1e-15));
        }

        assert_eq!(
            Constellation::single_point().difference_multiset(),
            vec![Complex64::new(0.0, 0.0)]
        );

        let q = Constellation::standard(Family::Psk, 4).unwrap();
        let d = sorted_distances(&q);
        assert_eq!(d.len(), 16);
        let s2 = 2f64.sqrt();
        for (i, v) in d.iter().enumerate() {
            let e = match i {
                0..=3 => 0.0,
                4..=11 => s2,
                _ => 2.0,
            };
            assert!((v - e).abs() < 1e-15, "index {i}");
        }
    }

    #[test]
    fn normalization_and_unit_power_check() {
        let pts = vec![Complex64::new(3.0, 0.0), Complex64::new(-3.0, 0.0)];
        let c = Constellation::new(pts.clone(), "x").unwrap();
        assert!((c.average_power() - 1.0).abs() < 1e-15);
        assert!(Constellation::from_unit_power(pts, "x").is_err());
        assert!(Constellation::new(vec![], "x").is_err());
        assert!(Constellation::new(vec![Complex64::new(0.0, 0.0)], "x").is_err());
        assert!(Constellation::new(vec![Complex64::new(f64::NAN, 0.0)], "x").is_err());
    }

    #[test]
    fn json_loader() {
        let c = Constellation::from_json_str("[[1,1],[-1,-1]]", "t", true).unwrap();
        assert_eq!(c.len(), 2);
        assert!((c.average_power() - 1.0).abs() < 1e-15);
        assert!(Constellation::from_json_str("[]", "t", true).is_err());
        assert!(Constellation::from_json_str("[[1]]", "t", true).is_err());
        assert!(Constellation::from_json_str("[[1,0],[-1,0]]", "t", false).is_ok());
        assert!(Constellation::from_json_str("[[2,0],[-2,0]]", "t", false).is_err());
    }

    #[test]
    fn spec_parsing() {
        assert_eq!(
            "psk4".parse::<ConstellationSpec>().unwrap(),
            ConstellationSpec::Standard(Family::Psk, 4)
        );
        assert_eq!(
            "QAM16".parse::<ConstellationSpec>().unwrap(),
            ConstellationSpec::Standard(Family::Qam, 16)
        );
        assert_eq!(
            "file:a/b.json".parse::<ConstellationSpec>().unwrap(),
            ConstellationSpec::File("a/b.json".into())
        );
        assert!("hex7".parse::<ConstellationSpec>().is_err());
        assert_eq!(
            ConstellationSpec::Standard(Family::Psk, 8).to_string(),
            "psk8"
        );
    }

    fn any_constellation() -> impl Strategy<Value = Constellation> {
        prop_oneof![
            (2usize..12).prop_map(|m| Constellation::standard(Family::Psk, m).unwrap()),
            prop_oneof![Just(4usize), Just(16), Just(64)].prop_map(|m| Constellation::standard(
                Family::Qam,
                m
            )
            .unwrap()),
            prop::collection::vec((-5.0f64..5.0, -5.0f64..5.0), 1..10).prop_filter_map(
                "nonzero power",
                |v| Constellation::new(
                    v.into_iter().map(|(a, b)| Complex64::new(a, b)).collect(),
                    "r"
                )
                .ok()
            ),
        ]
    }

    proptest! {
        #[test]
        fn rotation_is_an_isometry(c in any_constellation(), theta in -10.0f64..10.0) {
            let a = sorted_distances(&c);
            let b = sorted_distances(&c.rotate(theta));
            for (x, y) in a.iter().zip(&b) {
                prop_assert!((x - y).abs() < 1e-12);
            }
            prop_assert!((c.rotate(theta).average_power() - 1.0).abs() < 1e-12);
        }

        #[test]
        fn rotations_compose(c in any_constellation(), a in -7.0f64..7.0, b in -7.0f64..7.0) {
            let lhs = c.rotate(a).rotate(b);
            let rhs = c.rotate(a + b);
            for (x, y) in lhs.points().iter().zip(rhs.points()) {
                prop_assert!((x - y).norm() < 1e-12);
            }
        }

        #[test]
        fn standard_is_unit_power(m in 2usize..40) {
            let c = Constellation::standard(Family::Psk, m).unwrap();
            prop_assert!((c.average_power() - 1.0).abs() < 1e-12);
        }
    }
}
