//! Relative rotation between the two users' constellations.
//!
//! Two routes to the angle: the closed-form metric built from the Jensen
//! lower bounds (cheap, no noise expectation), and direct maximization of
//! `min{I1, I2}` with the quadrature engine. Both use the same
//! grid-then-golden-section search.
//!
//! Metric values are in nats; only the argmin is meaningful.

use std::f64::consts::TAU;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::channel::{ChannelInstance, Receiver};
use crate::constellation::Constellation;
use crate::error::{invalid, Error, Result};
use crate::lse::log_sum_exp;
use crate::mi::{cc_sum_bound, composite_differences, NoiseRule};

/// Values within this relative distance are treated as equal; the smaller
/// angle wins.
pub const TIE_RTOL: f64 = 1e-10;
pub const DEFAULT_GRID_STEP_DEG: f64 = 0.25;
pub const DEFAULT_REFINE_TOL: f64 = 1e-7;
const MAX_REFINED_CANDIDATES: usize = 32;

/// Search grid over `[0, 2π/fold)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AngleGrid {
    /// Requested step in radians; the effective step divides the span evenly
    /// and never exceeds this.
    pub step: f64,
    /// Asserted rotational symmetry order of the objective. 1 searches the
    /// full circle.
    pub fold: u32,
    /// Golden-section bracket width at which refinement stops (radians).
    pub refine_tol: f64,
}

impl Default for AngleGrid {
    fn default() -> Self {
        Self::from_degrees(DEFAULT_GRID_STEP_DEG)
    }
}

impl AngleGrid {
    pub fn from_degrees(step_deg: f64) -> Self {
        Self {
            step: step_deg.to_radians(),
            fold: 1,
            refine_tol: DEFAULT_REFINE_TOL,
        }
    }

    pub fn with_fold(mut self, fold: u32) -> Self {
        self.fold = fold;
        self
    }

    pub fn span(&self) -> f64 {
        TAU / self.fold as f64
    }

    fn len(&self) -> usize {
        (self.span() / self.step * (1.0 - 1e-12)).ceil() as usize
    }

    pub fn effective_step(&self) -> f64 {
        self.span() / self.len() as f64
    }

    pub fn points(&self) -> Vec<f64> {
        let h = self.effective_step();
        (0..self.len()).map(|i| i as f64 * h).collect()
    }

    fn validate(&self, max_step_deg: f64) -> Result<()> {
        if self.fold == 0 {
            return Err(invalid("symmetry fold must be >= 1"));
        }
        if !(self.step.is_finite() && self.step > 0.0) {
            return Err(invalid("grid step must be > 0"));
        }
        if self.step > max_step_deg.to_radians() * (1.0 + 1e-12) {
            return Err(invalid(format!(
                "grid step {:.4}° exceeds the {max_step_deg}° limit",
                self.step.to_degrees()
            )));
        }
        if !(self.refine_tol > 0.0 && self.refine_tol <= 1e-4) {
            return Err(invalid("refinement tolerance must be in (0, 1e-4] rad"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum RotationMethod {
    Metric,
    Numerical,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RotationResult {
    /// Radians in `[0, 2π/fold)`.
    pub angle: f64,
    /// Every evaluated `(θ, objective)` pair: the grid first, then the
    /// refinement probes.
    pub objective_trace: Vec<(f64, f64)>,
    pub method: RotationMethod,
    /// `min{I1, I2}` at `angle`, bits per channel use.
    pub achieved_sum_bound: f64,
    /// `min{I1, I2}` without rotation, for reporting the enlargement.
    pub unrotated_sum_bound: f64,
    pub grid_step: f64,
    pub fold: u32,
}

impl RotationResult {
    pub fn improvement(&self) -> f64 {
        self.achieved_sum_bound - self.unrotated_sum_bound
    }

    pub fn angle_deg(&self) -> f64 {
        self.angle.to_degrees()
    }
}

/// The larger of the two per-receiver double sums
/// `Σ_k ln Σ_i exp(−|μ_ki|²/(2σ²))`.
pub fn metric_objective(
    c1: &Constellation,
    c2: &Constellation,
    instance: &ChannelInstance,
    theta: f64,
) -> Result<f64> {
    instance.validate()?;
    if !theta.is_finite() {
        return Err(invalid("theta must be finite"));
    }
    let k = c1.len() * c2.len();
    let mut row = vec![0.0; k];
    let mut best = f64::NEG_INFINITY;
    for rx in [Receiver::R1, Receiver::R2] {
        let mu = composite_differences(
            c1,
            c2,
            instance.cross_gain(rx),
            theta,
            instance.p1,
            instance.p2,
            rx,
        );
        let scale = -1.0 / (2.0 * instance.noise_var(rx));
        let mut total = 0.0;
        for chunk in mu.chunks_exact(k) {
            for (r, z) in row.iter_mut().zip(chunk) {
                *r = z.norm_sqr() * scale;
            }
            total += log_sum_exp(&row);
        }
        best = best.max(total);
    }
    if !best.is_finite() {
        return Err(Error::Internal("non-finite rotation metric".into()));
    }
    Ok(best)
}

/// Argmin of [`metric_objective`]. Grid step must be at most 0.5°.
pub fn metric_theta_opt(
    c1: &Constellation,
    c2: &Constellation,
    instance: &ChannelInstance,
    grid: &AngleGrid,
) -> Result<RotationResult> {
    grid.validate(0.5)?;
    instance.validate()?;
    let found = search(grid, Sense::Minimize, |t| {
        metric_objective(c1, c2, instance, t)
    })?;
    let rule = NoiseRule::auto(c1.len() * c2.len(), 0);
    finish(c1, c2, instance, grid, found, RotationMethod::Metric, &rule)
}

/// Argmax of `min{I1, I2}`. Grid step must be at most 1° and the rule must
/// be deterministic so the trace is reproducible.
pub fn numerical_theta_opt(
    c1: &Constellation,
    c2: &Constellation,
    instance: &ChannelInstance,
    grid: &AngleGrid,
    rule: &NoiseRule,
) -> Result<RotationResult> {
    grid.validate(1.0)?;
    instance.validate()?;
    rule.validate()?;
    if !rule.is_deterministic() {
        return Err(invalid(
            "numerical rotation search requires a quadrature rule",
        ));
    }
    let found = search(grid, Sense::Maximize, |t| {
        cc_sum_bound(c1, c2, instance, t, rule).map(|s| s.value())
    })?;
    finish(
        c1,
        c2,
        instance,
        grid,
        found,
        RotationMethod::Numerical,
        rule,
    )
}

fn finish(
    c1: &Constellation,
    c2: &Constellation,
    instance: &ChannelInstance,
    grid: &AngleGrid,
    found: Found,
    method: RotationMethod,
    rule: &NoiseRule,
) -> Result<RotationResult> {
    let achieved = match method {
        RotationMethod::Numerical => found.value,
        RotationMethod::Metric => cc_sum_bound(c1, c2, instance, found.angle, rule)?.value(),
    };
    let unrotated = cc_sum_bound(c1, c2, instance, 0.0, rule)?.value();
    Ok(RotationResult {
        angle: found.angle,
        objective_trace: found.trace,
        method,
        achieved_sum_bound: achieved,
        unrotated_sum_bound: unrotated,
        grid_step: grid.effective_step(),
        fold: grid.fold,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) enum Sense {
    Minimize,
    Maximize,
}

impl Sense {
    /// True when `a` beats `b` by more than the tie tolerance.
    pub(crate) fn better(self, a: f64, b: f64) -> bool {
        let tol = TIE_RTOL * a.abs().max(b.abs()).max(1.0);
        match self {
            Sense::Minimize => a < b - tol,
            Sense::Maximize => a > b + tol,
        }
    }
}

struct Found {
    angle: f64,
    value: f64,
    trace: Vec<(f64, f64)>,
}

/// Grid evaluation followed by golden-section refinement of every grid-local
/// optimum; the overall winner is picked with tolerance-aware tie-breaking
/// toward the smaller angle, so the result does not depend on evaluation order.
fn search<F>(grid: &AngleGrid, sense: Sense, f: F) -> Result<Found>
where
    F: Fn(f64) -> Result<f64> + Sync,
{
    let span = grid.span();
    let h = grid.effective_step();
    let thetas = grid.points();
    let values = thetas
        .par_iter()
        .map(|&t| f(t))
        .collect::<Result<Vec<f64>>>()?;
    let n = values.len();

    let mut best_grid = 0;
    for i in 1..n {
        if sense.better(values[i], values[best_grid]) {
            best_grid = i;
        }
    }

    let mut candidates: Vec<usize> = (0..n)
        .filter(|&i| {
            let (prev, next) = (values[(i + n - 1) % n], values[(i + 1) % n]);
            let v = values[i];
            n > 2
                && !sense.better(prev, v)
                && !sense.better(next, v)
                && (sense.better(v, prev) || sense.better(v, next))
        })
        .collect();
    candidates.sort_by(|&a, &b| {
        let ord = values[a].total_cmp(&values[b]);
        let ord = if sense == Sense::Maximize {
            ord.reverse()
        } else {
            ord
        };
        ord.then(a.cmp(&b))
    });
    candidates.truncate(MAX_REFINED_CANDIDATES);

    let refined = candidates
        .par_iter()
        .map(|&i| golden_section(&f, sense, thetas[i], values[i], h, grid.refine_tol))
        .collect::<Result<Vec<_>>>()?;

    let wrap = |t: f64| {
        let w = t.rem_euclid(span);
        if w >= span {
            0.0
        } else {
            w
        }
    };
    let mut trace: Vec<(f64, f64)> = thetas.iter().copied().zip(values.iter().copied()).collect();
    let mut finalists = vec![(thetas[best_grid], values[best_grid])];
    for r in refined {
        trace.extend(r.probes.iter().map(|&(t, v)| (wrap(t), v)));
        finalists.push((wrap(r.angle), r.value));
    }
    finalists.sort_by(|a, b| a.0.total_cmp(&b.0));
    let (mut angle, mut value) = finalists[0];
    for &(t, v) in &finalists[1..] {
        if sense.better(v, value) {
            angle = t;
            value = v;
        }
    }
    Ok(Found {
        angle,
        value,
        trace,
    })
}

pub(crate) struct Refined {
    pub(crate) angle: f64,
    pub(crate) value: f64,
    pub(crate) probes: Vec<(f64, f64)>,
}

/// Golden-section search on `[center − half_width, center + half_width]`,
/// returning the best point seen (the center included).
pub(crate) fn golden_section<F>(
    f: &F,
    sense: Sense,
    center: f64,
    center_value: f64,
    half_width: f64,
    tol: f64,
) -> Result<Refined>
where
    F: Fn(f64) -> Result<f64>,
{
    const INV_PHI: f64 = 0.618_033_988_749_894_8;
    let sign = match sense {
        Sense::Minimize => 1.0,
        Sense::Maximize => -1.0,
    };
    let mut probes = Vec::new();
    let mut eval = |t: f64| -> Result<f64> {
        let v = f(t)?;
        probes.push((t, v));
        Ok(v)
    };
    let (mut a, mut b) = (center - half_width, center + half_width);
    let mut c = b - INV_PHI * (b - a);
    let mut d = a + INV_PHI * (b - a);
    let mut fc = eval(c)?;
    let mut fd = eval(d)?;
    while b - a > tol {
        if sign * fc <= sign * fd {
            b = d;
            d = c;
            fd = fc;
            c = b - INV_PHI * (b - a);
            fc = eval(c)?;
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + INV_PHI * (b - a);
            fd = eval(d)?;
        }
    }
    let mut angle = center;
    let mut value = center_value;
    for &(t, v) in &probes {
        if sense.better(v, value) {
            angle = t;
            value = v;
        }
    }
    Ok(Refined {
        angle,
        value,
        probes,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel::Gain;
    use crate::constellation::Family;
    use num_complex::Complex64;
    use std::f64::consts::{FRAC_PI_2, PI};

    fn qpsk() -> Constellation {
        Constellation::standard(Family::Psk, 4).unwrap()
    }

    fn row1() -> ChannelInstance {
        ChannelInstance::new(
            3.5,
            6.0,
            Gain::polar_deg(1.0, 10.0),
            Gain::polar_deg(1.0, 20.0),
            1.0,
            1.0,
        )
        .unwrap()
    }

    #[test]
    fn metric_matches_reference() {
        // independent numpy implementation
        let c = qpsk();
        let v0 = metric_objective(&c, &c, &row1(), 0.0).unwrap();
        let v30 = metric_objective(&c, &c, &row1(), 30f64.to_radians()).unwrap();
        assert!((v0 - 8.814082626152423).abs() < 1e-11);
        assert!((v30 - 7.6095791757631055).abs() < 1e-11);
    }

    #[test]
    fn metric_is_flat_without_interference() {
        let zero = Complex64::new(0.0, 0.0);
        let inst = ChannelInstance::new(3.0, 5.0, zero, zero, 1.0, 1.0).unwrap();
        let c = qpsk();
        let base = metric_objective(&c, &c, &inst, 0.0).unwrap();
        for t in [0.1, 1.0, 2.5, 5.0] {
            assert!((metric_objective(&c, &c, &inst, t).unwrap() - base).abs() < 1e-12);
        }
    }

    #[test]
    fn metric_quarter_turn_periodic_for_qpsk() {
        let c = qpsk();
        let inst = row1();
        for t in [0.05, 0.7, 1.3] {
            let a = metric_objective(&c, &c, &inst, t).unwrap();
            let b = metric_objective(&c, &c, &inst, t + FRAC_PI_2).unwrap();
            let full = metric_objective(&c, &c, &inst, t + 2.0 * PI).unwrap();
            assert!((a - b).abs() < 1e-11);
            assert!((a - full).abs() < 1e-11);
        }
    }

    #[test]
    fn metric_opt_row1() {
        // continuous argmin is 40.00° (numpy cross-check)
        let c = qpsk();
        let r = metric_theta_opt(&c, &c, &row1(), &AngleGrid::default()).unwrap();
        assert!((r.angle_deg() - 39.99695).abs() < 0.01, "{}", r.angle_deg());
        assert_eq!(r.method, RotationMethod::Metric);
        assert!(r.improvement() > 0.09);
        let best = r
            .objective_trace
            .iter()
            .map(|p| p.1)
            .fold(f64::INFINITY, f64::min);
        let at_angle = metric_objective(&c, &c, &row1(), r.angle).unwrap();
        assert!(at_angle <= best + TIE_RTOL * best.abs());
    }

    #[test]
    fn exact_ties_prefer_smaller_angle() {
        // Table I row 4 has mirror-image minima at 49.866° and 80.134°.
        let inst = ChannelInstance::new(
            8.0,
            6.0,
            Gain::polar_deg(1.8, 40.0),
            Gain::polar_deg(1.3, 70.0),
            1.0,
            1.0,
        )
        .unwrap();
        let c = qpsk();
        let r = metric_theta_opt(&c, &c, &inst, &AngleGrid::default()).unwrap();
        assert!((r.angle_deg() - 49.8663).abs() < 0.01, "{}", r.angle_deg());
    }

    #[test]
    fn fold_restricts_span() {
        let c = qpsk();
        let full = metric_theta_opt(&c, &c, &row1(), &AngleGrid::default()).unwrap();
        let folded = metric_theta_opt(&c, &c, &row1(), &AngleGrid::default().with_fold(4)).unwrap();
        assert!(folded.angle < FRAC_PI_2);
        assert_eq!(
            folded
                .objective_trace
                .iter()
                .filter(|p| p.0 >= FRAC_PI_2)
                .count(),
            0
        );
        assert!((folded.angle - full.angle.rem_euclid(FRAC_PI_2)).abs() < 1e-6);
    }

    #[test]
    fn grid_limits() {
        let c = qpsk();
        assert!(metric_theta_opt(&c, &c, &row1(), &AngleGrid::from_degrees(0.6)).is_err());
        assert!(numerical_theta_opt(
            &c,
            &c,
            &row1(),
            &AngleGrid::from_degrees(1.5),
            &NoiseRule::default()
        )
        .is_err());
        let mc = NoiseRule::MonteCarlo {
            samples: 1000,
            seed: 1,
        };
        assert!(numerical_theta_opt(&c, &c, &row1(), &AngleGrid::from_degrees(1.0), &mc).is_err());
        let mut g = AngleGrid::default();
        g.fold = 0;
        assert!(metric_theta_opt(&c, &c, &row1(), &g).is_err());
    }

    #[test]
    fn grid_points_cover_span() {
        let g = AngleGrid::from_degrees(0.25);
        let p = g.points();
        assert_eq!(p.len(), 1440);
        assert!((g.effective_step() - 0.25f64.to_radians()).abs() < 1e-15);
        let g = AngleGrid::from_degrees(0.7);
        assert!(g.effective_step() <= 0.7f64.to_radians());
        assert!((g.points().len() as f64 * g.effective_step() - TAU).abs() < 1e-12);
    }

    #[test]
    fn numerical_flat_without_interference() {
        let zero = Complex64::new(0.0, 0.0);
        let inst = ChannelInstance::new(3.0, 5.0, zero, zero, 1.0, 1.0).unwrap();
        let c = qpsk();
        let r = numerical_theta_opt(
            &c,
            &c,
            &inst,
            &AngleGrid::from_degrees(1.0),
            &NoiseRule::default(),
        )
        .unwrap();
        assert_eq!(r.angle, 0.0);
        let (lo, hi) = r
            .objective_trace
            .iter()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), p| {
                (lo.min(p.1), hi.max(p.1))
            });
        assert!(hi - lo < 1e-12);
    }

    #[test]
    fn metric_argmin_scale_invariant() {
        let c = qpsk();
        let base = row1();
        let mut scaled = base;
        for s in [0.5, 3.0] {
            scaled.p1 = base.p1 * s;
            scaled.p2 = base.p2 * s;
            scaled.sigma1_sq = base.sigma1_sq * s;
            scaled.sigma2_sq = base.sigma2_sq * s;
            let a = metric_theta_opt(&c, &c, &base, &AngleGrid::default()).unwrap();
            let b = metric_theta_opt(&c, &c, &scaled, &AngleGrid::default()).unwrap();
            assert!((a.angle - b.angle).abs() <= a.grid_step);
        }
    }

    #[test]
    fn golden_section_finds_parabola_minimum() {
        // improvements below the tie tolerance are not taken, so the
        // attainable accuracy is about sqrt(TIE_RTOL / curvature)
        let f = |t: f64| Ok(1e4 * (t - 0.3) * (t - 0.3));
        let r = golden_section(&f, Sense::Minimize, 0.25, f(0.25).unwrap(), 0.1, 1e-9).unwrap();
        assert!((r.angle - 0.3).abs() < 1e-6, "{}", r.angle);
        let g = |t: f64| Ok(-1e4 * (t - 0.3) * (t - 0.3));
        let r = golden_section(&g, Sense::Maximize, 0.25, g(0.25).unwrap(), 0.1, 1e-9).unwrap();
        assert!((r.angle - 0.3).abs() < 1e-6, "{}", r.angle);
    }
}
