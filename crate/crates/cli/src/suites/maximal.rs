use bmoext::extension::ExtensionConfig;
use bmoext::manifold::SampleGrid;
use bmoext::maximal::cone_sup_ratio;
use bmoext::report::sig17;

use super::energy::sample;
use super::{circle, geom, Ctx};
use crate::corpus::find;
use crate::summary::Check;
use crate::RunError;

const BOUND: &str = "for sigma above 1/2 cone suprema of the extension gradient are bounded by the maximal function of the gradient";
const PROBE: &str = "at sigma = 1/2 the cone ratio grows as a kink is sharpened";
const FUNCTIONS: [&str; 3] = ["cos1", "trig_mix", "bump"];

/// Heights from `diam / 512` to the diameter, the same at every resolution.
fn heights(ctx: &Ctx) -> Vec<f64> {
    let diam = circle(ctx.cfg).diameter();
    geom(diam / 512.0, diam, ctx.cfg.levels.count)
}

fn grid_of(ctx: &Ctx, n: usize) -> SampleGrid {
    SampleGrid::uniform(circle(ctx.cfg), n).expect("validated size")
}

pub(super) fn run(ctx: &mut Ctx) -> Result<(), RunError> {
    let cfg = ctx.cfg;
    let ts = heights(ctx);
    let mut rows = Vec::new();
    for &sigma in &cfg.maximal.sigma {
        let name = format!("cone_ratio/sigma={sigma}");
        let mut maxima = Vec::new();
        for refine in [1usize, 2] {
            let grid = grid_of(ctx, cfg.circle.points * refine);
            let Some(ext) = ctx.ok(&name, BOUND, ExtensionConfig::new(sigma, grid.clone(), ts.clone(), cfg.quadrature_order))
            else {
                break;
            };
            let mut worst = 0.0f64;
            for fname in FUNCTIONS {
                let u = sample(&grid, find(fname).expect("corpus name"), 1);
                let Some(r) = ctx.ok(&name, BOUND, cone_sup_ratio(&ext, &u)) else {
                    worst = f64::NAN;
                    break;
                };
                if refine == 1 {
                    r.write_csv(&grid, ctx.file(&format!("rho_{fname}_sigma={sigma}.csv"))?)?;
                }
                rows.push(vec![sig17(sigma), fname.to_string(), grid.label(), sig17(r.max_rho)]);
                worst = worst.max(r.max_rho);
            }
            maxima.push(worst);
        }
        if let [a, b] = maxima[..] {
            if a.is_finite() && b.is_finite() {
                ctx.push(Check::holds(&name, BOUND, a, a > 0.0));
                ctx.push(Check::at_most(
                    &format!("cone_ratio_drift/sigma={sigma}"),
                    BOUND,
                    (b / a - 1.0).abs(),
                    cfg.tolerances.maximal_drift,
                ));
            }
        }
    }
    ctx.csv("cone_ratio.csv", &["sigma", "function", "grid", "max_rho"], rows)?;

    let grid = grid_of(ctx, cfg.maximal.probe_points);
    let mut probe_rows = Vec::new();
    let mut maxima = Vec::new();
    if let Some(ext) = ctx.ok("probe", PROBE, ExtensionConfig::new(0.5, grid.clone(), ts, cfg.quadrature_order)) {
        let mut eps = cfg.maximal.probe_smoothing.clone();
        eps.sort_by(|a, b| b.total_cmp(a));
        for &e in &eps {
            let u = grid.sample(|p| (p.0[0].sin().powi(2) + e * e).sqrt());
            let Some(r) = ctx.ok("probe", PROBE, cone_sup_ratio(&ext, &u)) else {
                break;
            };
            probe_rows.push(vec![sig17(e), grid.label(), sig17(r.max_rho)]);
            maxima.push(r.max_rho);
        }
    }
    if maxima.len() == cfg.maximal.probe_smoothing.len() && maxima.len() >= 2 {
        let growing = maxima.windows(2).all(|w| w[1] > w[0]);
        ctx.push(Check::holds("probe_growth", PROBE, maxima[maxima.len() - 1] / maxima[0], growing));
    }
    ctx.csv("probe.csv", &["epsilon", "grid", "max_rho"], probe_rows)
}
