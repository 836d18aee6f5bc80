//! Static SVG plots of rate regions and FDMA curves.
//!
//! Output is a pure function of the inputs: coordinates are printed with a
//! fixed number of decimals and nothing time- or host-dependent is written.

use std::fmt::Write as _;
use std::path::Path;

use crate::error::{invalid, Result};
use crate::fdma::FdmaCurve;
use crate::regions::{RateRegion, RateUnits};

const WIDTH: f64 = 640.0;
const HEIGHT: f64 = 480.0;
const LEFT: f64 = 70.0;
const RIGHT: f64 = 190.0;
const TOP: f64 = 40.0;
const BOTTOM: f64 = 60.0;
const PALETTE: [&str; 8] = [
    "#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b", "#e377c2", "#17becf",
];

#[derive(Debug, Clone)]
pub struct LabeledRegion {
    pub label: String,
    pub region: RateRegion,
}

#[derive(Debug, Clone)]
pub struct LabeledCurve {
    pub label: String,
    pub curve: FdmaCurve,
}

#[derive(Debug, Clone, Default)]
pub struct Plot {
    pub title: String,
    pub regions: Vec<LabeledRegion>,
    pub curves: Vec<LabeledCurve>,
    /// Embedded verbatim (CDATA) in the `<metadata>` element.
    pub metadata: String,
}

impl Plot {
    /// Units shared by every series; FDMA curves are always in bits/s.
    fn units(&self) -> Result<RateUnits> {
        let mut units = self.regions.iter().map(|r| r.region.units);
        let first = units.next();
        if units.any(|u| Some(u) != first) {
            return Err(invalid("regions with different rate units in one plot"));
        }
        match first {
            Some(RateUnits::BitsPerChannelUse) if !self.curves.is_empty() => Err(invalid(
                "FDMA curves are in bits/s but a region is in bits/channel use",
            )),
            Some(u) => Ok(u),
            None => Ok(RateUnits::BitsPerSecond),
        }
    }

    /// Number of path elements the plot draws (degenerate regions draw none).
    pub fn drawn_paths(&self) -> usize {
        self.regions
            .iter()
            .filter(|r| !r.region.is_degenerate())
            .count()
            + self.curves.len()
    }
}

/// Closed outline of a pentagon region starting and ending at the origin.
pub fn region_outline(region: &RateRegion) -> Vec<(f64, f64)> {
    let mut pts = vec![(0.0, 0.0)];
    pts.extend(region.corners());
    pts
}

pub fn render_region_svg(plot: &Plot) -> Result<String> {
    let units = plot.units()?;
    let mut xmax: f64 = 0.0;
    let mut ymax: f64 = 0.0;
    for r in &plot.regions {
        for (x, y) in region_outline(&r.region) {
            xmax = xmax.max(x);
            ymax = ymax.max(y);
        }
    }
    for c in &plot.curves {
        xmax = c.curve.r1.iter().copied().fold(xmax, f64::max);
        ymax = c.curve.r2.iter().copied().fold(ymax, f64::max);
    }
    let xstep = nice_step(xmax);
    let ystep = nice_step(ymax);
    let xmax = (xmax / xstep).ceil().max(1.0) * xstep;
    let ymax = (ymax / ystep).ceil().max(1.0) * ystep;
    let pw = WIDTH - LEFT - RIGHT;
    let ph = HEIGHT - TOP - BOTTOM;
    let sx = |x: f64| LEFT + x / xmax * pw;
    let sy = |y: f64| TOP + ph - y / ymax * ph;

    let mut s = String::new();
    let _ = writeln!(s, r#"<?xml version="1.0" encoding="UTF-8"?>"#);
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(
        s,
        "<metadata><![CDATA[{}]]></metadata>",
        plot.metadata.replace("]]>", "]]]]><![CDATA[>")
    );
    let _ = writeln!(
        s,
        r#"<rect x="0" y="0" width="{WIDTH}" height="{HEIGHT}" fill="white"/>"#
    );
    let _ = writeln!(
        s,
        r#"<text x="{:.2}" y="24" text-anchor="middle" font-size="14">{}</text>"#,
        LEFT + pw / 2.0,
        escape(&plot.title)
    );

    // axes and ticks
    let _ = writeln!(
        s,
        r#"<g stroke="black" fill="none"><path d="M{:.2},{:.2} L{:.2},{:.2} L{:.2},{:.2}"/></g>"#,
        sx(0.0),
        sy(ymax),
        sx(0.0),
        sy(0.0),
        sx(xmax),
        sy(0.0)
    );
    let _ = writeln!(s, r#"<g font-size="10">"#);
    let nx = (xmax / xstep).round() as usize;
    for i in 0..=nx {
        let v = i as f64 * xstep;
        let _ = writeln!(
            s,
            r#"<path d="M{:.2},{:.2} v5" stroke="black"/><text x="{:.2}" y="{:.2}" text-anchor="middle">{}</text>"#,
            sx(v),
            sy(0.0),
            sx(v),
            sy(0.0) + 18.0,
            tick_label(v, xstep)
        );
    }
    let ny = (ymax / ystep).round() as usize;
    for i in 0..=ny {
        let v = i as f64 * ystep;
        let _ = writeln!(
            s,
            r#"<path d="M{:.2},{:.2} h-5" stroke="black"/><text x="{:.2}" y="{:.2}" text-anchor="end">{}</text>"#,
            sx(0.0),
            sy(v),
            sx(0.0) - 8.0,
            sy(v) + 4.0,
            tick_label(v, ystep)
        );
    }
    let _ = writeln!(s, "</g>");
    let _ = writeln!(
        s,
        r#"<text x="{:.2}" y="{:.2}" text-anchor="middle">R1 ({})</text>"#,
        LEFT + pw / 2.0,
        HEIGHT - 15.0,
        units.label()
    );
    let _ = writeln!(
        s,
        r#"<text x="18" y="{:.2}" text-anchor="middle" transform="rotate(-90 18 {:.2})">R2 ({})</text>"#,
        TOP + ph / 2.0,
        TOP + ph / 2.0,
        units.label()
    );

    let mut legend = Vec::new();
    for (i, r) in plot.regions.iter().enumerate() {
        let color = PALETTE[i % PALETTE.len()];
        if !r.region.is_degenerate() {
            let d = path_data(
                region_outline(&r.region)
                    .into_iter()
                    .map(|(x, y)| (sx(x), sy(y))),
                true,
            );
            let _ = writeln!(
                s,
                r#"<path class="region" d="{d}" fill="none" stroke="{color}" stroke-width="1.5"/>"#
            );
        }
        legend.push((r.label.as_str(), color, false));
    }
    for (j, c) in plot.curves.iter().enumerate() {
        let color = PALETTE[(plot.regions.len() + j) % PALETTE.len()];
        let d = path_data(
            c.curve
                .r1
                .iter()
                .zip(&c.curve.r2)
                .map(|(&x, &y)| (sx(x), sy(y))),
            false,
        );
        let _ = writeln!(
            s,
            r#"<path class="fdma" d="{d}" fill="none" stroke="{color}" stroke-width="1.5" stroke-dasharray="6,3"/>"#
        );
        legend.push((c.label.as_str(), color, true));
    }

    let lx = WIDTH - RIGHT + 15.0;
    for (k, (label, color, dashed)) in legend.iter().enumerate() {
        let y = TOP + 10.0 + 20.0 * k as f64;
        let dash = if *dashed {
            r#" stroke-dasharray="6,3""#
        } else {
            ""
        };
        let _ = writeln!(
            s,
            r#"<path class="legend" d="M{:.2},{:.2} h24" stroke="{color}" stroke-width="1.5"{dash}/><text x="{:.2}" y="{:.2}">{}</text>"#,
            lx,
            y,
            lx + 30.0,
            y + 4.0,
            escape(label)
        );
    }
    let _ = writeln!(s, "</svg>");
    Ok(s)
}

/// Renders `plot` and writes it to `path`.
pub fn emit_region_svg(plot: &Plot, path: &Path) -> Result<()> {
    let svg = render_region_svg(plot)?;
    std::fs::write(path, svg)?;
    Ok(())
}

fn path_data(pts: impl Iterator<Item = (f64, f64)>, close: bool) -> String {
    let mut d = String::new();
    for (i, (x, y)) in pts.enumerate() {
        let _ = write!(d, "{}{:.2},{:.2}", if i == 0 { "M" } else { " L" }, x, y);
    }
    if close {
        d.push_str(" Z");
    }
    d
}

/// 1, 2 or 5 times a power of ten, giving at most about 8 ticks.
fn nice_step(max: f64) -> f64 {
    if max.is_nan() || max <= 0.0 {
        return 1.0;
    }
    let raw = max / 8.0;
    let mag = 10f64.powf(raw.log10().floor());
    let frac = raw / mag;
    let m = if frac <= 1.0 {
        1.0
    } else if frac <= 2.0 {
        2.0
    } else if frac <= 5.0 {
        5.0
    } else {
        10.0
    };
    m * mag
}

fn tick_label(v: f64, step: f64) -> String {
    let decimals = (-step.log10().floor()).max(0.0) as usize;
    format!("{v:.decimals$}")
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;")
        .replace('<', "&lt;")
        .replace('>', "&gt;")
        .replace('"', "&quot;")
}
