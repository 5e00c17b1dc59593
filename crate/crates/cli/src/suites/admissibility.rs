use std::f64::consts::PI;

use bmoext::admissibility::{
    admissibility_report, chain_check, condition_integral, sample_grid, scaling_defect, AdmissibilityReport, Condition,
};
use bmoext::heat_kernel::HeatKernelEvaluator;
use bmoext::manifold::ManifoldModel;
use bmoext::report::sig17;

use super::heat::model_kind;
use super::{circle, Ctx};
use crate::summary::Check;
use crate::RunError;

const FINITE: &str = "the four admissibility integrals are bounded by C t^(nu-k) (d^2+t^2)^(-(n+nu)/2) with nu = 2 sigma";

pub(super) fn run(ctx: &mut Ctx) -> Result<(), RunError> {
    let cfg = ctx.cfg;
    let line = HeatKernelEvaluator::new(ManifoldModel::euclid_line(cfg.line.half_width).expect("validated"));
    let circ = HeatKernelEvaluator::new(circle(cfg));
    let spec = &cfg.admissibility;
    let mut rows = Vec::new();
    let mut chain_rows = Vec::new();
    for e in [&circ, &line] {
        let model = e.model();
        let kind = model_kind(model);
        let Some((dgrid, tgrid)) =
            ctx.ok(&format!("sample_grid/{kind}"), FINITE, sample_grid(model, spec.points, spec.t_min, cfg.t_max))
        else {
            continue;
        };
        for &sigma in &cfg.sigma {
            let name = format!("admissible/{kind}/sigma={sigma}");
            let Some(rep) = ctx.ok(&name, FINITE, admissibility_report(e, sigma, &dgrid, &tgrid)) else {
                continue;
            };
            let worst = rep.fits.iter().map(|f| f.fitted_c).fold(0.0, f64::max);
            ctx.push(Check::holds(&name, FINITE, worst, rep.pass));
            sanity(ctx, &rep, kind);
            for f in &rep.fits {
                rows.push(vec![
                    model.label(),
                    sig17(sigma),
                    f.condition.name().to_string(),
                    sig17(f.fitted_c),
                    sig17(f.argmax.d),
                    sig17(f.argmax.t),
                    f.samples.to_string(),
                ]);
            }

            let chain = format!("gaussian_chain/{kind}/sigma={sigma}");
            let statement = "bounds predicted from fitted Gaussian kernel constants dominate the admissibility integrals";
            if model.is_compact() {
                ctx.push(Check::skipped(
                    &chain,
                    statement,
                    "Gaussian bounds for all times hold only on Euclidean models; the compact kernel tends to 1/|M|",
                ));
            } else if let Some((r, fits)) =
                ctx.ok(&chain, statement, chain_check(e, sigma, spec.chain_exponent, &dgrid, &tgrid))
            {
                ctx.push(Check::at_most(&chain, statement, r.fitted_constant, 1.0 + r.tolerance));
                chain_rows.push(vec![
                    model.label(),
                    sig17(sigma),
                    sig17(spec.chain_exponent),
                    sig17(fits[0].constant),
                    sig17(fits[1].constant),
                    sig17(fits[2].constant),
                    sig17(r.fitted_constant),
                ]);
                let scaling = format!("scaling/{kind}/sigma={sigma}");
                let st = "the admissibility integrals on the line are exactly scale invariant";
                if let Some(d) = ctx.ok(&scaling, st, scaling_defect(e, sigma, 1.0, 0.7, &[0.25, 0.5, 2.0, 4.0])) {
                    ctx.push(Check::at_most(&scaling, st, d, 1e-8));
                }
            }
        }
    }
    ctx.csv("admissibility.csv", &AdmissibilityReport::CSV_HEADER, rows)?;
    ctx.csv(
        "gaussian_chain.csv",
        &["model", "sigma", "exponent", "heat1_C", "heat2_C", "heat3_C", "max_direct_over_predicted"],
        chain_rows,
    )?;
    coincidence(ctx, &line)
}

/// Positivity, and c3 dominating c2 sample by sample.
fn sanity(ctx: &mut Ctx, rep: &AdmissibilityReport, kind: &str) {
    let sigma = rep.sigma;
    let min = rep.fits.iter().map(|f| f.min_lhs).fold(f64::INFINITY, f64::min);
    ctx.push(Check::at_least(
        &format!("positive/{kind}/sigma={sigma}"),
        "the admissibility integrands are nonnegative",
        min,
        0.0,
    ));
    let (c2, c3) = (rep.fit(Condition::C2), rep.fit(Condition::C3));
    let worst = c2
        .values
        .iter()
        .zip(&c3.values)
        .map(|(a, b)| (a.2 - b.2) / b.2.abs().max(f64::MIN_POSITIVE))
        .fold(f64::NEG_INFINITY, f64::max);
    ctx.push(Check::at_most(
        &format!("c3_dominates_c2/{kind}/sigma={sigma}"),
        "the third integral dominates the second because its weight carries an extra positive term",
        worst,
        1e-10,
    ));
}

/// Closed forms at `d = 0` on the line for `σ = 1/2`.
fn coincidence(ctx: &mut Ctx, line: &HeatKernelEvaluator) -> Result<(), RunError> {
    let root = (4.0 * PI).sqrt();
    let cases = [
        (Condition::C1, 1, 20.0 / root, "at coincidence on the line the first integral times t equals 20/sqrt(4 pi)"),
        (Condition::C4, 3, 8.0 / root, "at coincidence on the line the fourth integral times t^3 equals 8/sqrt(4 pi)"),
    ];
    let mut rows = Vec::new();
    for (cond, power, want, statement) in cases {
        let name = format!("coincidence/{}", cond.name());
        let mut worst = 0.0f64;
        let mut ok = true;
        for &t in &[0.1, 0.5, 1.0, 3.0] {
            match condition_integral(line, 0.5, cond, 0.0, t) {
                Ok(v) => {
                    let got = v * t.powi(power);
                    worst = worst.max((got - want).abs());
                    rows.push(vec![cond.name().to_string(), sig17(t), sig17(got), sig17(want)]);
                }
                Err(e) => {
                    ctx.push(Check::failed(&name, statement, e));
                    ok = false;
                    break;
                }
            }
        }
        if ok {
            ctx.push(Check::at_most(&name, statement, worst, ctx.cfg.tolerances.coincidence));
        }
    }
    ctx.csv("coincidence.csv", &["condition", "t", "scaled_value", "closed_form"], rows)
}
