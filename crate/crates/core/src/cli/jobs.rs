//! Computations behind each subcommand.

use serde_json::json;

use super::output::{Check, Report, Row};
use super::presets::{self, Experiment};
use super::{CommandKind, JobSpec, ThetaPolicy};
use crate::channel::ChannelInstance;
use crate::constellation::Constellation;
use crate::error::{invalid, Result};
use crate::fdma::{
    alpha_opt_numerical, fdma_curve, fdma_vs_simdec_gap, touch_check, touch_predicate, AlphaGrid,
    FdmaCurve, Inputs,
};
use crate::mi::{cc_sum_bound, NoiseRule};
use crate::regions::{
    cc_region, classify_regime, gaussian_region, region_boundary_points, RateRegion,
};
use crate::rotation::{metric_theta_opt, numerical_theta_opt, AngleGrid, RotationResult};
use crate::svg::{LabeledCurve, LabeledRegion, Plot};

const BOUNDARY_POINTS: usize = 21;

struct Ctx {
    c1: Constellation,
    c2: Constellation,
    instance: ChannelInstance,
    rule: NoiseRule,
    grid: AngleGrid,
}

impl Ctx {
    fn new(spec: &JobSpec) -> Result<Self> {
        Ok(Self {
            c1: spec.constellations[0].build(spec.normalize)?,
            c2: spec.constellations[1].build(spec.normalize)?,
            instance: spec.instance,
            rule: spec.noise_rule,
            grid: AngleGrid::from_degrees(spec.grid_step_deg).with_fold(spec.fold_symmetry),
        })
    }

    fn with_instance(&self, instance: ChannelInstance) -> Self {
        Self {
            c1: self.c1.clone(),
            c2: self.c2.clone(),
            instance,
            rule: self.rule,
            grid: self.grid,
        }
    }

    fn metric(&self) -> Result<RotationResult> {
        metric_theta_opt(&self.c1, &self.c2, &self.instance, &self.grid)
    }

    fn numerical(&self) -> Result<RotationResult> {
        numerical_theta_opt(&self.c1, &self.c2, &self.instance, &self.grid, &self.rule)
    }

    fn theta(&self, policy: ThetaPolicy) -> Result<(f64, Option<RotationResult>)> {
        match policy {
            ThetaPolicy::Zero => Ok((0.0, None)),
            ThetaPolicy::Fixed(t) => Ok((t, None)),
            ThetaPolicy::Metric => self.metric().map(|r| (r.angle, Some(r))),
            ThetaPolicy::Numerical => self.numerical().map(|r| (r.angle, Some(r))),
        }
    }

    fn sum_bound(&self, theta: f64) -> Result<f64> {
        cc_sum_bound(&self.c1, &self.c2, &self.instance, theta, &self.rule).map(|s| s.value())
    }

    fn inputs(&self) -> Inputs<'_> {
        Inputs::Finite {
            c1: &self.c1,
            c2: &self.c2,
            rule: &self.rule,
        }
    }
}

fn policy_name(p: ThetaPolicy) -> String {
    match p {
        ThetaPolicy::Zero => "zero".into(),
        ThetaPolicy::Metric => "metric".into(),
        ThetaPolicy::Numerical => "numerical".into(),
        ThetaPolicy::Fixed(t) => format!("fixed {}°", t.to_degrees()),
    }
}

fn put_region(r: &mut Report, prefix: &str, region: &RateRegion) {
    r.put(format!("{prefix} R1 max"), region.r1_max);
    r.put(format!("{prefix} R2 max"), region.r2_max);
    r.put(format!("{prefix} sum max"), region.sum_max);
    r.put(format!("{prefix} kind"), region.kind);
}

fn boundary_rows(r: &mut Report, label: &str, region: &RateRegion) -> Result<()> {
    for (i, (a, b)) in region_boundary_points(region, BOUNDARY_POINTS)?
        .into_iter()
        .enumerate()
    {
        r.rows.push(Row {
            param: i.to_string(),
            objective: a + b,
            r1: Some(a),
            r2: Some(b),
            method: label.to_string(),
            std_error: region.std_error,
        });
    }
    Ok(())
}

fn curve_rows(r: &mut Report, label: &str, curve: &FdmaCurve) {
    for ((a, r1), r2) in curve.alphas.iter().zip(&curve.r1).zip(&curve.r2) {
        r.rows.push(Row {
            param: crate::cli::output::sig9(*a),
            objective: r1 + r2,
            r1: Some(*r1),
            r2: Some(*r2),
            method: label.to_string(),
            std_error: curve.std_error,
        });
    }
}

fn units_label(instance: &ChannelInstance) -> &'static str {
    crate::regions::RateUnits::of(instance).label()
}

pub fn run_job(spec: &JobSpec) -> Result<Report> {
    let ctx = Ctx::new(spec)?;
    match spec.command {
        CommandKind::Classify => classify(spec, &ctx),
        CommandKind::Region => region(spec, &ctx),
        CommandKind::RotateOpt => rotate_opt(spec, &ctx),
        CommandKind::Fdma => fdma(spec, &ctx, "FDMA rate curves").map(|(r, _)| r),
        CommandKind::Compare => {
            compare(spec, &ctx, "Simultaneous decoding vs FDMA").map(|(r, _)| r)
        }
        CommandKind::Reproduce => match spec.experiment {
            Some(Experiment::Table1) => table1(spec, &ctx),
            Some(Experiment::Fig2) => fig2(spec, &ctx),
            Some(exp) => figure(spec, &ctx, exp),
            None => Err(invalid("reproduce needs an experiment name")),
        },
    }
}

fn classify(spec: &JobSpec, ctx: &Ctx) -> Result<Report> {
    let rep = classify_regime(&ctx.instance)?;
    let mut r = Report::new(spec, "Interference regime");
    r.put("regime", rep.regime);
    for (name, v) in [
        ("snr1", rep.snr1),
        ("snr2", rep.snr2),
        ("inr1", rep.inr1),
        ("inr2", rep.inr2),
    ] {
        r.put(name, v);
        r.rows.push(Row {
            param: name.into(),
            objective: v,
            r1: None,
            r2: None,
            method: "closed-form".into(),
            std_error: 0.0,
        });
    }
    if let Some(w) = rep.warning() {
        r.put("warning", w);
    }
    Ok(r)
}

fn region(spec: &JobSpec, ctx: &Ctx) -> Result<Report> {
    let regime = classify_regime(&ctx.instance)?;
    let (theta, _) = ctx.theta(spec.theta_policy)?;
    let gauss = gaussian_region(&ctx.instance)?;
    let cc = cc_region(&ctx.c1, &ctx.c2, &ctx.instance, theta, &ctx.rule)?;
    let mut r = Report::new(spec, "Rate regions");
    r.put("regime", regime.regime);
    r.put("theta policy", policy_name(spec.theta_policy));
    r.put("theta (deg)", theta.to_degrees());
    r.put("units", units_label(&ctx.instance));
    put_region(&mut r, "Gaussian", &gauss);
    put_region(&mut r, "CC", &cc);
    r.put("CC std error", cc.std_error);
    if cc.is_degenerate() {
        r.put("note", "degenerate constellation-constrained region");
    }
    boundary_rows(&mut r, "gaussian", &gauss)?;
    boundary_rows(&mut r, "cc", &cc)?;
    r.plot = Some(Plot {
        title: "Rate regions".into(),
        regions: vec![
            LabeledRegion {
                label: "Gaussian".into(),
                region: gauss,
            },
            LabeledRegion {
                label: format!(
                    "{}/{} at {:.2}°",
                    ctx.c1.label(),
                    ctx.c2.label(),
                    theta.to_degrees()
                ),
                region: cc,
            },
        ],
        ..Default::default()
    });
    Ok(r)
}

fn rotate_opt(spec: &JobSpec, ctx: &Ctx) -> Result<Report> {
    let res = match spec.theta_policy {
        ThetaPolicy::Metric => ctx.metric()?,
        ThetaPolicy::Numerical => ctx.numerical()?,
        other => {
            return Err(invalid(format!(
                "rotate-opt needs --theta metric or numerical, got {}",
                policy_name(other)
            )))
        }
    };
    let unrotated = cc_region(&ctx.c1, &ctx.c2, &ctx.instance, 0.0, &ctx.rule)?;
    let rotated = cc_region(&ctx.c1, &ctx.c2, &ctx.instance, res.angle, &ctx.rule)?;
    let mut r = Report::new(spec, "Rotation optimization");
    r.put("method", res.method);
    r.put("theta (deg)", res.angle_deg());
    r.put("grid step (deg)", res.grid_step.to_degrees());
    r.put("fold", res.fold);
    r.put("units", units_label(&ctx.instance));
    r.put("sum bound unrotated", unrotated.sum_max);
    r.put("sum bound rotated", rotated.sum_max);
    r.put("improvement", rotated.sum_max - unrotated.sum_max);
    let method = match res.method {
        crate::rotation::RotationMethod::Metric => "metric",
        crate::rotation::RotationMethod::Numerical => "numerical",
    };
    for (t, v) in &res.objective_trace {
        r.rows.push(Row {
            param: crate::cli::output::sig9(t.to_degrees()),
            objective: *v,
            r1: None,
            r2: None,
            method: method.into(),
            std_error: 0.0,
        });
    }
    r.plot = Some(Plot {
        title: "Rotation optimization".into(),
        regions: vec![
            LabeledRegion {
                label: "unrotated".into(),
                region: unrotated,
            },
            LabeledRegion {
                label: format!("rotated {:.2}°", res.angle_deg()),
                region: rotated,
            },
        ],
        ..Default::default()
    });
    Ok(r)
}

struct Bundle {
    theta: f64,
    gauss: RateRegion,
    cc: RateRegion,
    gauss_curve: FdmaCurve,
    cc_curve: FdmaCurve,
}

fn bundle(spec: &JobSpec, ctx: &Ctx) -> Result<Bundle> {
    if !ctx.instance.is_bandwidth_mode() {
        return Err(invalid("FDMA needs --bandwidth"));
    }
    let (theta, _) = ctx.theta(spec.theta_policy)?;
    let grid = AlphaGrid::new(spec.alpha_points)?;
    Ok(Bundle {
        theta,
        gauss: gaussian_region(&ctx.instance)?,
        cc: cc_region(&ctx.c1, &ctx.c2, &ctx.instance, theta, &ctx.rule)?,
        gauss_curve: fdma_curve(&ctx.instance, Inputs::Gaussian, &grid)?,
        cc_curve: fdma_curve(&ctx.instance, ctx.inputs(), &grid)?,
    })
}

fn fdma(spec: &JobSpec, ctx: &Ctx, title: &str) -> Result<(Report, Bundle)> {
    let b = bundle(spec, ctx)?;
    let mut r = Report::new(spec, title);
    r.put("theta policy", policy_name(spec.theta_policy));
    r.put("theta (deg)", b.theta.to_degrees());
    r.put("units", units_label(&ctx.instance));
    r.put("alpha closed form", b.cc_curve.alpha_closed_form);
    r.put("Gaussian FDMA alpha opt", b.gauss_curve.alpha_opt);
    r.put("Gaussian FDMA sum at opt", b.gauss_curve.sum_at_opt);
    r.put("CC FDMA alpha opt", b.cc_curve.alpha_opt);
    r.put("CC FDMA alpha source", b.cc_curve.alpha_opt_source);
    r.put("CC FDMA sum at opt", b.cc_curve.sum_at_opt);
    if spec.verify {
        let (ag, _) = alpha_opt_numerical(&ctx.instance, Inputs::Gaussian)?;
        let (ac, _) = alpha_opt_numerical(&ctx.instance, ctx.inputs())?;
        r.put("Gaussian FDMA alpha numerical", ag);
        r.put("CC FDMA alpha numerical", ac);
    }
    put_region(&mut r, "Gaussian", &b.gauss);
    put_region(&mut r, "CC", &b.cc);
    curve_rows(&mut r, "gaussian-fdma", &b.gauss_curve);
    curve_rows(&mut r, "cc-fdma", &b.cc_curve);
    let cc_label = format!("{}/{}", ctx.c1.label(), ctx.c2.label());
    r.plot = Some(Plot {
        title: title.into(),
        regions: vec![
            LabeledRegion {
                label: "Gaussian capacity".into(),
                region: b.gauss,
            },
            LabeledRegion {
                label: format!("{cc_label} at {:.2}°", b.theta.to_degrees()),
                region: b.cc,
            },
        ],
        curves: vec![
            LabeledCurve {
                label: "FDMA Gaussian".into(),
                curve: b.gauss_curve.clone(),
            },
            LabeledCurve {
                label: format!("FDMA {cc_label}"),
                curve: b.cc_curve.clone(),
            },
        ],
        ..Default::default()
    });
    Ok((r, b))
}

fn compare(spec: &JobSpec, ctx: &Ctx, title: &str) -> Result<(Report, f64)> {
    let (mut r, b) = fdma(spec, ctx, title)?;
    let w = ctx.instance.rate_scale();
    let gap = fdma_vs_simdec_gap(&ctx.c1, &ctx.c2, &ctx.instance, b.theta, &ctx.rule)?;
    let regime = classify_regime(&ctx.instance)?;
    r.put("regime", regime.regime);
    r.put("simultaneous decoding sum", b.cc.effective_sum());
    r.put("gap (simdec - FDMA)", gap);
    r.put("gap / W", gap / w);
    r.put("Gaussian touch (numeric)", touch_check(&ctx.instance)?);
    r.put(
        "Gaussian touch (predicate)",
        touch_predicate(&ctx.instance, 1e-12),
    );
    Ok((r, gap))
}

fn figure(spec: &JobSpec, ctx: &Ctx, exp: Experiment) -> Result<Report> {
    let title = format!(
        "Experiment {}",
        serde_json::to_value(exp)
            .ok()
            .and_then(|v| v.as_str().map(String::from))
            .unwrap_or_default()
    );
    let (mut r, gap) = compare(spec, ctx, &title)?;
    let (gap_positive, touch) = presets::expectations(exp);
    if let Some(p) = gap_positive {
        r.checks.push(Check::sign("gap (simdec - FDMA)", gap, p));
    }
    if let Some(t) = touch {
        r.checks.push(Check::flag(
            "Gaussian FDMA touches",
            touch_check(&ctx.instance)?,
            t,
        ));
    }
    Ok(r)
}

fn table1(spec: &JobSpec, ctx: &Ctx) -> Result<Report> {
    let mut r = Report::new(spec, "QPSK rotation table");
    let mut rows = Vec::new();
    for (i, row) in presets::TABLE1.iter().enumerate() {
        let (h12, h21) = row.gains();
        let inst = ChannelInstance::new(row.p1, row.p2, h12, h21, 1.0, 1.0)?;
        let c = ctx.with_instance(inst);
        let m = c.metric()?;
        let n = c.numerical()?;
        let s0 = c.sum_bound(0.0)?;
        let sm = c.sum_bound(m.angle)?;
        let sn = c.sum_bound(n.angle)?;
        let k = i + 1;
        r.checks.push(Check::within(
            format!("row {k} theta_opt (deg)"),
            m.angle_deg(),
            row.theta_metric_deg,
            presets::TABLE1_METRIC_TOL_DEG,
        ));
        r.checks.push(Check::within(
            format!("row {k} theta'_opt (deg)"),
            n.angle_deg(),
            row.theta_numerical_deg,
            presets::TABLE1_NUMERICAL_TOL_DEG,
        ));
        r.checks.push(Check::within(
            format!("row {k} sum unrotated"),
            s0,
            row.sum_unrotated,
            presets::TABLE1_SUM_TOL,
        ));
        r.checks.push(Check::within(
            format!("row {k} sum at theta_opt"),
            sm,
            row.sum_metric,
            presets::TABLE1_SUM_TOL,
        ));
        r.checks.push(Check::within(
            format!("row {k} sum at theta'_opt"),
            sn,
            row.sum_numerical,
            presets::TABLE1_SUM_TOL,
        ));
        rows.push(json!({
            "row": k, "p1": row.p1, "p2": row.p2, "h12": row.h12, "h21": row.h21,
            "theta_opt_deg": m.angle_deg(), "theta_num_deg": n.angle_deg(),
            "sum_unrotated": s0, "sum_metric": sm, "sum_numerical": sn,
        }));
        for (label, theta, value) in [
            ("unrotated", 0.0, s0),
            ("metric", m.angle, sm),
            ("numerical", n.angle, sn),
        ] {
            let b = cc_sum_bound(&c.c1, &c.c2, &inst, theta, &c.rule)?;
            r.rows.push(Row {
                param: format!("row{k}:{:.4}", theta.to_degrees()),
                objective: value,
                r1: Some(b.at_r1.value),
                r2: Some(b.at_r2.value),
                method: label.into(),
                std_error: b.std_error(),
            });
        }
    }
    r.put("noise variances", "sigma1^2 = sigma2^2 = 1");
    r.put("rows", rows);
    Ok(r)
}

fn fig2(spec: &JobSpec, ctx: &Ctx) -> Result<Report> {
    let m = ctx.metric()?;
    let n = ctx.numerical()?;
    let mut r = Report::new(spec, "Experiment fig2");
    r.put("theta_opt (deg)", m.angle_deg());
    r.put("theta'_opt (deg)", n.angle_deg());
    let regions = [
        ("unrotated", 0.0),
        ("metric", m.angle),
        ("numerical", n.angle),
    ]
    .into_iter()
    .map(|(label, t)| {
        cc_region(&ctx.c1, &ctx.c2, &ctx.instance, t, &ctx.rule).map(|region| LabeledRegion {
            label: format!("{label} ({:.2}°)", t.to_degrees()),
            region,
        })
    })
    .collect::<Result<Vec<_>>>()?;
    for lr in &regions {
        r.put(format!("sum bound {}", lr.label), lr.region.sum_max);
        boundary_rows(&mut r, &lr.label, &lr.region)?;
    }
    r.checks.push(Check::within(
        "theta_opt (deg)",
        m.angle_deg(),
        presets::FIG2_THETA_METRIC_DEG,
        0.5,
    ));
    r.checks.push(Check::within(
        "theta'_opt (deg)",
        n.angle_deg(),
        presets::FIG2_THETA_NUMERICAL_DEG,
        1.0,
    ));
    r.plot = Some(Plot {
        title: "Experiment fig2".into(),
        regions,
        ..Default::default()
    });
    Ok(r)
}
