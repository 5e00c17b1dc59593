use std::f64::consts::PI;

use bmoext::extension::ExtensionConfig;
use bmoext::jacobian::{clms_report, gradient_energy, jacobian_pairing, triple_product, JacobianCase};
use bmoext::manifold::{enumerate_balls, RadiiPolicy};
use bmoext::report::sig17;

use super::{levels, spread, torus_grid, Ctx};
use crate::summary::Check;
use crate::RunError;

const VALUE: &str = "the Jacobian of (sin x1, sin x2) paired with cos x1 cos x2 equals pi^2";
const SPREAD: &str = "the Jacobian pairing is bounded by the gradient energy times the BMO seminorm with one constant";
const NULL: &str = "the Jacobian integrates to zero against constants";
const TRIPLE: &str = "the half-space triple product of the extensions dominates the Jacobian pairing";

pub(super) fn run(ctx: &mut Ctx) -> Result<(), RunError> {
    let cfg = ctx.cfg;
    let spec = &cfg.jacobian;
    let grid = torus_grid(cfg, 1);
    let model = *grid.model();
    let [l1, l2] = cfg.torus.lengths;
    let (a, b) = (2.0 * PI / l1, 2.0 * PI / l2);
    let Some(ext) = ctx.ok(
        "jacobian_setup",
        SPREAD,
        ExtensionConfig::new(spec.sigma, grid.clone(), levels(cfg, &grid), cfg.quadrature_order),
    ) else {
        return Ok(());
    };
    let policy = RadiiPolicy::dyadic_levels(0.5 * model.diameter(), cfg.balls.levels);
    let Some(balls) = ctx.ok("jacobian_setup", SPREAD, enumerate_balls(&model, &grid, policy, cfg.balls.torus_stride))
    else {
        return Ok(());
    };

    let s1 = grid.sample(|p| (a * p.0[0]).sin());
    let s2 = grid.sample(|p| (b * p.0[1]).sin());
    let mut cases: Vec<(String, Vec<f64>, Vec<f64>, Vec<f64>)> = Vec::new();
    for &k in &spec.dilations {
        let k = k as f64;
        cases.push((
            format!("dilate_{k}"),
            grid.sample(|p| (k * a * p.0[0]).sin() / k),
            grid.sample(|p| (k * b * p.0[1]).sin() / k),
            grid.sample(|p| (k * a * p.0[0]).cos() * (k * b * p.0[1]).cos()),
        ));
    }
    for &d in &spec.log_smoothing {
        cases.push((
            format!("log_{d}"),
            s1.clone(),
            s2.clone(),
            grid.sample(|p| 0.5 * (2.0 - (a * p.0[0]).cos() - (b * p.0[1]).cos() + d * d).ln()),
        ));
    }
    cases.push((
        "mixed".into(),
        grid.sample(|p| (a * p.0[0]).sin() + 0.5 * (2.0 * b * p.0[1]).cos()),
        grid.sample(|p| (b * p.0[1]).sin() + 0.3 * (a * p.0[0] + b * p.0[1]).sin()),
        grid.sample(|p| (a * p.0[0]).cos() * (b * p.0[1]).cos() + 0.5 * (a * p.0[0] - b * p.0[1]).sin()),
    ));

    let mut rows = Vec::new();
    let mut ratios = Vec::new();
    let mut all_ok = true;
    for (id, f1, f2, phi) in &cases {
        match clms_report(&ext, id, (f1, f2), phi, &balls) {
            Ok(c) => {
                if c.ratio > 0.0 {
                    ratios.push(c.ratio);
                }
                if id == "dilate_1" {
                    ctx.push(Check::at_most("pi_squared", VALUE, (c.lhs - PI * PI).abs(), cfg.tolerances.jacobian_value));
                }
                rows.push(c.csv_record().to_vec());
            }
            Err(e) => {
                ctx.push(Check::failed(&format!("clms/{id}"), SPREAD, e));
                all_ok = false;
            }
        }
    }
    if !spec.dilations.contains(&1) {
        ctx.push(Check::skipped("pi_squared", VALUE, "dilation 1 is not in jacobian.dilations"));
    }
    if all_ok {
        ctx.push(Check::at_most("clms_spread", SPREAD, spread(&ratios), cfg.tolerances.jacobian_spread));
    }
    ctx.csv("jacobian.csv", &JacobianCase::CSV_HEADER, rows)?;

    let (f1, f2) = (&cases[0].1, &cases[0].2);
    let one = vec![1.0; grid.len()];
    if let (Some(v), Some(e)) = (
        ctx.ok("null_lagrangian", NULL, jacobian_pairing(&grid, f1, f2, &one)),
        ctx.ok("null_lagrangian", NULL, gradient_energy(&grid, f1, f2)),
    ) {
        ctx.push(Check::at_most("null_lagrangian", NULL, v.abs() / e, 1e-12));
    }

    let mut triple_rows = Vec::new();
    for (id, f1, f2, phi) in cases.iter().take(2) {
        let name = format!("triple_product/{id}");
        let (Some(lhs), Some(rhs)) = (
            ctx.ok(&name, TRIPLE, jacobian_pairing(&grid, f1, f2, phi)),
            ctx.ok(&name, TRIPLE, triple_product(&ext, f1, f2, phi)),
        ) else {
            continue;
        };
        let c = lhs.abs() / rhs;
        triple_rows.push(vec![id.clone(), sig17(spec.sigma), sig17(lhs), sig17(rhs), sig17(c)]);
        ctx.push(Check::holds(&name, TRIPLE, c, c.is_finite() && rhs > 0.0));
    }
    ctx.csv("triple_product.csv", &["case", "sigma", "lhs", "triple", "ratio"], triple_rows)
}
