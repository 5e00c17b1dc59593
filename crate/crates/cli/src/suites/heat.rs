use std::f64::consts::PI;

use bmoext::admissibility::sample_grid;
use bmoext::heat_kernel::{fit_gaussian_bound, BoundClaim, HeatKernelEvaluator, KernelMethod};
use bmoext::manifold::{ManifoldModel, Point};
use bmoext::numerics::adaptive_integrate;
use bmoext::report::sig17;

use super::{circle, geom, torus, Ctx};
use crate::summary::Check;
use crate::RunError;

const CLAIMS: [BoundClaim; 3] = [BoundClaim::Heat1, BoundClaim::Heat2, BoundClaim::Heat3];

/// `∫_M p(x0, y, t) dy` by adaptive quadrature in intrinsic coordinates.
fn total_mass(e: &HeatKernelEvaluator, t: f64) -> bmoext::Result<f64> {
    let tol = 1e-12;
    match *e.model() {
        ManifoldModel::Circle { length } => {
            let x = Point::on_line(0.0);
            // the peak sits at both ends of [0, L); split it at the midpoint
            let f = |s: f64| e.eval_p(&x, &Point::on_line(s), t).unwrap_or(f64::NAN);
            Ok(adaptive_integrate(f, 0.0, 0.5 * length, tol)?.value
                + adaptive_integrate(f, 0.5 * length, length, tol)?.value)
        }
        ManifoldModel::Torus2 { lengths: [l1, l2] } => {
            let x = Point::planar(0.0, 0.0);
            let inner = |s1: f64| -> f64 {
                let f = |s2: f64| e.eval_p(&x, &Point::planar(s1, s2), t).unwrap_or(f64::NAN);
                let a = adaptive_integrate(f, 0.0, 0.5 * l2, tol).map(|i| i.value);
                let b = adaptive_integrate(f, 0.5 * l2, l2, tol).map(|i| i.value);
                match (a, b) {
                    (Ok(a), Ok(b)) => a + b,
                    _ => f64::NAN,
                }
            };
            Ok(adaptive_integrate(inner, 0.0, 0.5 * l1, tol)?.value + adaptive_integrate(inner, 0.5 * l1, l1, tol)?.value)
        }
        ManifoldModel::Sphere2 { radius } => {
            let x = Point::spatial(0.0, 0.0, radius);
            let f = |th: f64| {
                let y = Point::spatial(radius * th.sin(), 0.0, radius * th.cos());
                e.eval_p(&x, &y, t).unwrap_or(f64::NAN) * th.sin()
            };
            Ok(2.0 * PI * radius * radius * adaptive_integrate(f, 0.0, PI, tol)?.value)
        }
        m => Err(bmoext::Error::InvalidParameter(format!("{m} is not compact"))),
    }
}

pub(super) fn run(ctx: &mut Ctx) -> Result<(), RunError> {
    let cfg = ctx.cfg;
    let tol = &cfg.tolerances;
    let line = HeatKernelEvaluator::new(ManifoldModel::euclid_line(cfg.line.half_width).expect("validated"));
    let circ = HeatKernelEvaluator::new(circle(cfg));
    let tor = HeatKernelEvaluator::new(torus(cfg));
    let sph = HeatKernelEvaluator::new(ManifoldModel::sphere2(cfg.sphere.radius).expect("validated"));

    let mut fit_rows = Vec::new();
    let fit_statement = "the heat kernel and its derivatives obey Gaussian upper bounds with a finite constant";
    let jobs: Vec<(&HeatKernelEvaluator, f64)> = vec![
        (&line, cfg.heat.line_exponent),
        (&line, cfg.heat.circle_exponent),
        (&circ, cfg.heat.circle_exponent),
        (&tor, cfg.heat.circle_exponent),
        (&sph, cfg.heat.circle_exponent),
    ];
    for (e, c) in jobs {
        let model = e.model();
        let (dgrid, tgrid) = match sample_grid(model, cfg.heat.fit_points, cfg.heat.t_min, cfg.t_max) {
            Ok(g) => g,
            Err(err) => {
                ctx.push(Check::failed(&format!("fit_grid/{}", model.label()), fit_statement, err));
                continue;
            }
        };
        for claim in CLAIMS {
            // the first derivative carries an extra sqrt(d²/t), so c = 1/4 is critical on the line
            if !model.is_compact() && c >= 0.25 && claim != BoundClaim::Heat1 {
                continue;
            }
            let name = format!("gaussian_fit/{}/{}/c={c}", model_kind(model), claim);
            let Some(fit) = ctx.ok(&name, fit_statement, fit_gaussian_bound(e, claim, c, &dgrid, &tgrid)) else {
                continue;
            };
            fit_rows.push(vec![
                model.label(),
                claim.name().to_string(),
                sig17(c),
                sig17(fit.constant),
                sig17(fit.argmax.d),
                sig17(fit.argmax.t),
                fit.samples.to_string(),
                fit.unresolved.to_string(),
                sig17(fit.t_max),
            ]);
            if !model.is_compact() && claim == BoundClaim::Heat1 && c == 0.25 {
                let want = (4.0 * PI).powf(-0.5);
                ctx.push(Check::at_most(
                    "line_heat1_constant",
                    "on the line the sharp Gaussian bound with exponent 1/4 has constant (4 pi)^(-1/2)",
                    (fit.constant - want).abs(),
                    tol.heat_constant,
                ));
            } else {
                ctx.push(Check::holds(&name, fit_statement, fit.constant, fit.constant.is_finite() && fit.constant > 0.0));
            }
        }
    }
    ctx.csv(
        "heat_fits.csv",
        &["model", "claim", "exponent", "constant", "argmax_d", "argmax_t", "samples", "unresolved", "t_max"],
        fit_rows,
    )?;

    let mut mass_rows = Vec::new();
    let ts = geom(1e-3, 10.0, 9);
    for e in [&circ, &tor, &sph] {
        let name = format!("stochastic_completeness/{}", model_kind(e.model()));
        let statement = "the heat kernel integrates to one on compact models";
        let mut worst = 0.0f64;
        let mut failed = false;
        for &t in &ts {
            match total_mass(e, t) {
                Ok(m) => {
                    worst = worst.max((m - 1.0).abs());
                    mass_rows.push(vec![e.model().label(), sig17(t), sig17(m - 1.0)]);
                }
                Err(err) => {
                    ctx.push(Check::failed(&name, statement, format!("t = {t}: {err}")));
                    failed = true;
                    break;
                }
            }
        }
        if !failed {
            ctx.push(Check::at_most(&name, statement, worst, tol.mass));
        }
    }
    ctx.csv("mass.csv", &["model", "t", "mass_error"], mass_rows)?;

    // image sums against the eigenfunction series on the circle
    let statement = "image-sum and spectral evaluations of the circle kernel agree relative to the peak value";
    let cap = 1 << 16;
    let pair = (
        HeatKernelEvaluator::with_method(circle(cfg), KernelMethod::ImageSum { k_max: cap }, 1e-14),
        HeatKernelEvaluator::with_method(circle(cfg), KernelMethod::SpectralSeries { n_max: cap }, 1e-14),
    );
    if let (Some(a), Some(b)) = (ctx.ok("kernel_methods_agree", statement, pair.0), ctx.ok("kernel_methods_agree", statement, pair.1)) {
        let mut worst = 0.0f64;
        let mut err = None;
        for &t in &geom(0.05, 5.0, 7) {
            // relative to the peak value, since far-field values sit below the rounding floor of the series
            let peak = a.radial(0.0, t).map(|j| j.p).unwrap_or(f64::NAN);
            for &d in &[0.0, 0.5, 1.5, 0.5 * cfg.circle.length] {
                match (a.radial(d, t), b.radial(d, t)) {
                    (Ok(x), Ok(y)) => worst = worst.max((x.p - y.p).abs() / peak),
                    (Err(e), _) | (_, Err(e)) => err = Some(e),
                }
            }
        }
        match err {
            Some(e) => ctx.push(Check::failed("kernel_methods_agree", statement, e)),
            None => ctx.push(Check::at_most("kernel_methods_agree", statement, worst, 1e-10)),
        }
    }
    Ok(())
}

pub(super) fn model_kind(m: &ManifoldModel) -> &'static str {
    match m {
        ManifoldModel::Circle { .. } => "circle",
        ManifoldModel::Torus2 { .. } => "torus2",
        ManifoldModel::EuclidLine { .. } => "euclid_line",
        ManifoldModel::EuclidPlane { .. } => "euclid_plane",
        ManifoldModel::Sphere2 { .. } => "sphere2",
    }
}
