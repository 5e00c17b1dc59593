use bmoext::extension::ExtensionConfig;
use bmoext::manifold::{enumerate_balls, RadiiPolicy, SampleGrid, TentRule};
use bmoext::report::sig17;
use bmoext::seminorms::seminorm_report;

use super::energy::sample;
use super::heat::model_kind;
use super::{circle_grid, levels, torus_grid, Ctx};
use crate::corpus::select;
use crate::summary::Check;
use crate::RunError;

const BOUND: &str = "the Carleson seminorm of the extension and the BMO seminorm are comparable with one constant over the corpus";
const DRIFT: &str = "the comparability interval is stable under grid doubling";

/// `(lo, hi)` of the ratios seen at one resolution.
type Interval = (f64, f64);

pub(super) fn run(ctx: &mut Ctx) -> Result<(), RunError> {
    let cfg = ctx.cfg;
    let corpus = select(&cfg.corpus.functions);
    let mut rows = Vec::new();
    let mut intervals: Vec<Option<Interval>> = Vec::new();
    for refine in [1usize, 2] {
        let mut lo = f64::INFINITY;
        let mut hi = 0.0f64;
        let mut complete = true;
        for (grid, stride) in [
            (circle_grid(cfg, refine), cfg.balls.circle_stride * refine),
            (torus_grid(cfg, refine), cfg.balls.torus_stride * refine),
        ] {
            let kind = model_kind(grid.model());
            let name = format!("equivalence/{kind}/{}", grid.label());
            let model = *grid.model();
            let policy = RadiiPolicy::dyadic_levels(0.5 * model.diameter(), cfg.balls.levels);
            let Some(balls) = ctx.ok(&name, BOUND, enumerate_balls(&model, &grid, policy, stride)) else {
                complete = false;
                continue;
            };
            let rule = TentRule::GaussLegendre { n: cfg.balls.tent_nodes };
            for &sigma in &cfg.sigma {
                let Some(ext) = setup(ctx, &name, sigma, &grid) else {
                    complete = false;
                    continue;
                };
                for f in &corpus {
                    for &k in &cfg.corpus.dilations {
                        let u = sample(&grid, f, k);
                        let Some(r) = ctx.ok(&name, BOUND, seminorm_report(&ext, &u, &balls, rule)) else {
                            complete = false;
                            continue;
                        };
                        let ratio = r.ratio.unwrap_or(f64::NAN);
                        if ratio.is_finite() {
                            lo = lo.min(ratio);
                            hi = hi.max(ratio);
                        }
                        rows.push(vec![
                            model.label(),
                            grid.label(),
                            sig17(sigma),
                            f.name.to_string(),
                            k.to_string(),
                            sig17(r.bmo.value),
                            sig17(r.carleson.value),
                            sig17(ratio),
                        ]);
                    }
                }
            }
        }
        let label = if refine == 1 { "default" } else { "doubled" };
        if complete && hi > 0.0 {
            let c = hi.max(1.0 / lo);
            ctx.push(
                Check::at_most(&format!("equivalence_constant/{label}"), BOUND, c, cfg.tolerances.equivalence_bound)
                    .because(format!("ratios in [{}, {}]", sig17(lo), sig17(hi))),
            );
            intervals.push(Some((lo, hi)));
        } else {
            intervals.push(None);
        }
    }
    match (intervals[0], intervals[1]) {
        (Some((a0, b0)), Some((a1, b1))) => {
            let drift = ((a1 / a0 - 1.0).abs()).max((b1 / b0 - 1.0).abs());
            ctx.push(Check::at_most("equivalence_drift", DRIFT, drift, cfg.tolerances.equivalence_drift));
        }
        _ => ctx.push(Check::skipped("equivalence_drift", DRIFT, "an interval is missing after failed cases")),
    }
    ctx.csv(
        "equivalence.csv",
        &["model", "grid", "sigma", "function", "dilation", "bmo", "carleson", "ratio"],
        rows,
    )
}

fn setup(ctx: &mut Ctx, name: &str, sigma: f64, grid: &SampleGrid) -> Option<ExtensionConfig> {
    let cfg = ctx.cfg;
    ctx.ok(name, BOUND, ExtensionConfig::new(sigma, grid.clone(), levels(cfg, grid), cfg.quadrature_order))
}
