use std::f64::consts::PI;

use bmoext::extension::{decay_check, extend, pde_residual, ExtensionConfig};
use bmoext::manifold::SampleGrid;
use bmoext::numerics::special::bessel_profile;
use bmoext::report::sig17;

use super::heat::model_kind;
use super::{circle_grid, levels, torus_grid, Ctx};
use crate::corpus::select;
use crate::summary::Check;
use crate::RunError;

const ORACLE: &str = "the extension of a Laplace eigenfunction is the eigenfunction times the Bessel profile of t times the frequency";
const PDE: &str = "the extension solves the degenerate elliptic extension equation";
const CONSTANT: &str = "constants extend to themselves";

pub(super) fn run(ctx: &mut Ctx) -> Result<(), RunError> {
    let cfg = ctx.cfg;
    let tol = cfg.tolerances.clone();
    let grid = circle_grid(cfg, 1);
    let tgrid = torus_grid(cfg, 1);
    let corpus = select(&cfg.corpus.functions);
    let mut oracle_rows = Vec::new();
    let mut residual_rows = Vec::new();
    for &sigma in &cfg.sigma {
        let Some(ext) = ctx.ok(
            &format!("extension_setup/sigma={sigma}"),
            ORACLE,
            ExtensionConfig::new(sigma, grid.clone(), levels(cfg, &grid), cfg.quadrature_order),
        ) else {
            continue;
        };

        let name = format!("eigen_oracle/sigma={sigma}");
        let threshold = if sigma == 0.5 { tol.eigen_half } else { tol.eigen_profile };
        let mut worst = 0.0f64;
        let mut failed = false;
        for k in 1..=3u32 {
            let freq = 2.0 * PI * k as f64 / cfg.circle.length;
            let u = grid.sample(|p| (freq * p.0[0]).cos());
            let Some(field) = ctx.ok(&name, ORACLE, extend(&ext, &u)) else {
                failed = true;
                break;
            };
            let mut err = 0.0f64;
            for s in field.slices() {
                let profile = if sigma == 0.5 { (-freq * s.t).exp() } else { bessel_profile(sigma, freq * s.t) };
                for (v, w) in s.values.iter().zip(&u) {
                    err = err.max((v - profile * w).abs());
                }
            }
            oracle_rows.push(vec![sig17(sigma), k.to_string(), sig17(err), sig17(threshold)]);
            worst = worst.max(err);
            if k == 1 {
                ctx.file(&format!("field_cos1_sigma={sigma}.csv")).map(|w| field.write_csv(w))??;
                match decay_check(&field) {
                    Ok(r) => ctx.push(Check::holds(
                        &format!("decay/sigma={sigma}"),
                        &r.statement,
                        r.fitted_constant,
                        r.pass,
                    )),
                    Err(e) => ctx.push(Check::failed(&format!("decay/sigma={sigma}"), "the extension decays in t", e)),
                }
            }
        }
        if !failed {
            ctx.push(Check::at_most(&name, ORACLE, worst, threshold));
        }

        for (g, cfg_ext) in [(&grid, Some(ext.clone())), (&tgrid, None)] {
            let ext = match cfg_ext {
                Some(e) => e,
                None => match ExtensionConfig::new(sigma, g.clone(), levels(cfg, g), cfg.quadrature_order) {
                    Ok(e) => e,
                    Err(e) => {
                        ctx.push(Check::failed(&format!("extension_setup/torus2/sigma={sigma}"), PDE, e));
                        continue;
                    }
                },
            };
            pde_checks(ctx, &ext, g, &corpus, &mut residual_rows);
        }
    }
    ctx.csv("eigen_oracle.csv", &["sigma", "k", "max_error", "threshold"], oracle_rows)?;
    ctx.csv("pde_residual.csv", &["model", "sigma", "function", "max_abs", "relative"], residual_rows)?;
    Ok(())
}

fn pde_checks(
    ctx: &mut Ctx,
    ext: &ExtensionConfig,
    grid: &SampleGrid,
    corpus: &[&crate::corpus::CorpusFn],
    rows: &mut Vec<Vec<String>>,
) {
    let sigma = ext.sigma();
    let kind = model_kind(grid.model());
    let torus = kind == "torus2";
    let name = format!("pde_residual/{kind}/sigma={sigma}");
    let mut worst = 0.0f64;
    let mut any = false;
    for f in corpus.iter().filter(|f| f.trig) {
        let u = if torus { grid.sample(|p| (f.torus)(p.0[0], p.0[1])) } else { grid.sample(|p| (f.circle)(p.0[0])) };
        let Some(field) = ctx.ok(&name, PDE, extend(ext, &u)) else {
            return;
        };
        let r = pde_residual(&field);
        rows.push(vec![grid.model().label(), sig17(sigma), f.name.to_string(), sig17(r.max_abs), sig17(r.relative)]);
        worst = worst.max(r.relative);
        any = true;
    }
    if any {
        ctx.push(Check::at_most(&name, PDE, worst, ctx.cfg.tolerances.pde_relative));
    } else {
        ctx.push(Check::skipped(&name, PDE, "no trigonometric function in the corpus selection"));
    }

    let c = 2.5;
    let name = format!("constant/{kind}/sigma={sigma}");
    let Some(field) = ctx.ok(&name, CONSTANT, extend(ext, &vec![c; grid.len()])) else {
        return;
    };
    let dev = field
        .slices()
        .iter()
        .flat_map(|s| s.values.iter())
        .fold(0.0f64, |m, v| m.max((v - c).abs()));
    let r = pde_residual(&field);
    rows.push(vec![grid.model().label(), sig17(sigma), "constant".into(), sig17(r.max_abs), sig17(r.relative)]);
    ctx.push(Check::at_most(&name, CONSTANT, dev, ctx.cfg.tolerances.constant));
    ctx.push(Check::at_most(&format!("pde_residual_constant/{kind}/sigma={sigma}"), PDE, r.max_abs, ctx.cfg.tolerances.constant));
}
