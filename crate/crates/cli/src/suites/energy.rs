use bmoext::extension::ExtensionConfig;
use bmoext::manifold::SampleGrid;
use bmoext::report::sig17;
use bmoext::seminorms::{cone_functional, pairing_check, square_energy};

use super::heat::model_kind;
use super::{centred, circle_grid, levels, spread, torus_grid, Ctx};
use crate::corpus::{find, select, CorpusFn};
use crate::summary::Check;
use crate::RunError;

const HALF: &str = "at sigma = 1/2 the square-function energy equals half the squared L2 norm";
const SPREAD: &str = "the square-function energy is comparable to the squared L2 norm uniformly over the corpus";
const CONE: &str = "the L2 norm of the cone functional is bounded by the upper Ahlfors constant times the square-function energy";
const PAIRING: &str = "the L2 pairing equals the weighted half-space pairing of the extensions divided by sigma";

pub(crate) fn sample(grid: &SampleGrid, f: &CorpusFn, k: u32) -> Vec<f64> {
    let k = k as f64;
    if grid.model().dim() == 1 {
        grid.sample(|p| (f.circle)(k * p.0[0]))
    } else {
        grid.sample(|p| (f.torus)(k * p.0[0], k * p.0[1]))
    }
}

fn config(ctx: &mut Ctx, name: &str, sigma: f64, grid: &SampleGrid) -> Option<ExtensionConfig> {
    let cfg = ctx.cfg;
    ctx.ok(name, SPREAD, ExtensionConfig::new(sigma, grid.clone(), levels(cfg, grid), cfg.quadrature_order))
}

pub(super) fn run_square(ctx: &mut Ctx) -> Result<(), RunError> {
    let cfg = ctx.cfg;
    let corpus = select(&cfg.corpus.functions);
    let mut rows = Vec::new();
    for grid in [circle_grid(cfg, 1), torus_grid(cfg, 1)] {
        let kind = model_kind(grid.model());
        let c_high = grid.model().ahlfors_constants().1;
        for &sigma in &cfg.sigma {
            let Some(ext) = config(ctx, &format!("setup/{kind}/sigma={sigma}"), sigma, &grid) else {
                continue;
            };
            let mut ratios = Vec::new();
            let mut half_err = 0.0f64;
            let mut cone_worst = 0.0f64;
            let mut any_trig = false;
            for f in &corpus {
                let u = centred(&grid, sample(&grid, f, 1));
                let name = format!("square_energy/{kind}/sigma={sigma}/{}", f.name);
                let Some(e) = ctx.ok(&name, SPREAD, square_energy(&ext, &u)) else {
                    continue;
                };
                let Some(cone) = ctx.ok(&name, CONE, cone_functional(&ext, &u)) else {
                    continue;
                };
                let ratio = (e.e_t + e.e_x) / e.norm_sq;
                ratios.push(ratio);
                if f.trig {
                    any_trig = true;
                    half_err = half_err.max((ratio - 0.5).abs());
                }
                cone_worst = cone_worst.max(cone.ratio());
                rows.push(vec![
                    grid.model().label(),
                    grid.label(),
                    sig17(sigma),
                    f.name.to_string(),
                    sig17(e.e_t),
                    sig17(e.e_x),
                    sig17(e.norm_sq),
                    sig17(ratio),
                    sig17(e.tail),
                    sig17(cone.ratio()),
                ]);
            }
            if sigma == 0.5 {
                let name = format!("half_identity/{kind}");
                if any_trig {
                    ctx.push(Check::at_most(&name, HALF, half_err, cfg.tolerances.square_half));
                } else {
                    ctx.push(Check::skipped(&name, HALF, "no trigonometric function in the corpus selection"));
                }
            }
            ctx.push(Check::at_most(
                &format!("energy_spread/{kind}/sigma={sigma}"),
                SPREAD,
                spread(&ratios),
                cfg.tolerances.square_spread,
            ));
            // equality up to rounding when every cone fits inside the manifold
            ctx.push(Check::at_most(&format!("cone_bound/{kind}/sigma={sigma}"), CONE, cone_worst, c_high * (1.0 + 1e-9)));
        }
    }
    ctx.csv(
        "square_energy.csv",
        &["model", "grid", "sigma", "function", "e_t", "e_x", "norm_sq", "ratio", "tail", "cone_ratio"],
        rows,
    )
}

const PAIRS: [(&str, &str); 5] = [
    ("cos1", "trig_mix"),
    ("bump", "smooth_step"),
    ("narrow_bump", "bump"),
    ("abs_sin", "log_profile"),
    ("trig_high", "ridge"),
];

pub(super) fn run_pairing(ctx: &mut Ctx) -> Result<(), RunError> {
    let cfg = ctx.cfg;
    let mut rows = Vec::new();
    for (refine, threshold, label) in [(1, cfg.tolerances.pairing, "default"), (2, cfg.tolerances.pairing_fine, "doubled")] {
        let grid = circle_grid(cfg, refine);
        for &sigma in &cfg.sigma {
            let name = format!("pairing/{label}/sigma={sigma}");
            let Some(ext) = config(ctx, &name, sigma, &grid) else {
                continue;
            };
            let mut worst = 0.0f64;
            let mut ok = true;
            for (a, b) in PAIRS {
                let (fa, fb) = (find(a).expect("corpus name"), find(b).expect("corpus name"));
                let u = centred(&grid, sample(&grid, fa, 1));
                let phi = centred(&grid, sample(&grid, fb, 1));
                match pairing_check(&ext, &u, &phi, threshold) {
                    Ok(r) => {
                        let gap = r.get("relative_gap").unwrap_or(f64::NAN);
                        worst = worst.max(gap);
                        rows.push(vec![
                            grid.model().label(),
                            grid.label(),
                            sig17(sigma),
                            a.to_string(),
                            b.to_string(),
                            sig17(r.lhs),
                            sig17(r.rhs),
                            sig17(gap),
                            sig17(r.get("tail_estimate").unwrap_or(f64::NAN)),
                        ]);
                    }
                    Err(e) => {
                        ctx.push(Check::failed(&name, PAIRING, format!("{a} x {b}: {e}")));
                        ok = false;
                        break;
                    }
                }
            }
            if ok {
                ctx.push(Check::at_most(&name, PAIRING, worst, threshold));
            }
        }
    }
    ctx.csv(
        "pairing.csv",
        &["model", "grid", "sigma", "u", "phi", "lhs", "rhs", "relative_gap", "tail_estimate"],
        rows,
    )
}
