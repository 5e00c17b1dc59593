use rayon::prelude::*;
use rustfft::num_complex::Complex;

use crate::error::{invalid, Error, Result};
use crate::extension::{ExtensionConfig, Fft2, FieldSlice};
use crate::manifold::{BallFamily, GridLayout, ManifoldModel, SampleGrid};
use crate::numerics::composite_legendre;
use crate::report::{sig17, EstimateReport};

const POINTS_PER_PANEL: usize = 8;

/// Global `t` quadrature on `(0, 10·diam)`: Gauss-Legendre panels on
/// dyadic breaks starting at `1e-9·diam`.
pub fn energy_nodes(model: &ManifoldModel) -> Result<Vec<(f64, f64)>> {
    let diam = model.diameter();
    let t_max = 10.0 * diam;
    let mut breaks = vec![0.0];
    let mut b = 1e-9 * diam;
    while b < t_max {
        breaks.push(b);
        b *= 2.0;
    }
    breaks.push(t_max);
    Ok(composite_legendre(&breaks, POINTS_PER_PANEL)?.iter().collect())
}

/// Nonnegative function on `grid x nodes`, e.g. `|∇_{x,t} U|`.
#[derive(Debug, Clone, PartialEq)]
pub struct HalfSpaceField {
    pub nodes: Vec<(f64, f64)>,
    /// `values[k][i]` at `(x_i, t_k)`.
    pub values: Vec<Vec<f64>>,
}

/// `|∇_{x,t} U|` of the extension of `u` on the given `t` nodes.
pub fn gradient_field(cfg: &ExtensionConfig, u: &[f64], nodes: &[(f64, f64)]) -> Result<HalfSpaceField> {
    let ts: Vec<f64> = nodes.iter().map(|n| n.0).collect();
    let slices = cfg.prepare(u)?.slices(&ts)?;
    let values = slices
        .iter()
        .map(|s| (0..s.values.len()).map(|i| s.grad_sq(i).sqrt()).collect())
        .collect();
    Ok(HalfSpaceField { nodes: nodes.to_vec(), values })
}

/// `∫_{B(x, r)} g` for every grid point `x`. On periodic grids `g` is
/// taken piecewise constant on grid cells and each cell contributes its
/// exact overlap with the ball, so that constants integrate to `|B(x, r)|`
/// even for `r` below the spacing; other grids sum `w_y g(y)` over
/// `d(x, y) < r`.
pub fn ball_sums(grid: &SampleGrid, r: f64, g: &[f64]) -> Vec<f64> {
    let model = grid.model();
    let pts = grid.points();
    let w = grid.weights();
    let shape = match grid.layout() {
        GridLayout::Periodic1 { n } => Some([1, n]),
        GridLayout::Periodic2 { n } => Some(n),
        _ => None,
    };
    if let Some(shape) = shape {
        let fft = Fft2::new(shape);
        let mut kern: Vec<Complex<f64>> = cell_overlaps(model, shape, r).into_iter().map(|v| Complex::new(v, 0.0)).collect();
        let mut src: Vec<Complex<f64>> = g.iter().map(|&a| Complex::new(a, 0.0)).collect();
        fft.forward(&mut kern);
        fft.forward(&mut src);
        for (a, b) in src.iter_mut().zip(&kern) {
            *a *= b;
        }
        fft.inverse(&mut src);
        return src.into_iter().map(|c| c.re).collect();
    }
    pts.par_iter()
        .map(|x| {
            pts.iter()
                .zip(w.iter().zip(g))
                .filter(|(y, _)| model.dist(x, y) < r)
                .map(|(_, (wy, gy))| wy * gy)
                .sum()
        })
        .collect()
}

/// `|cell(k) ∩ B(0, r)|` for every cell offset `k` of a periodic grid.
fn cell_overlaps(model: &ManifoldModel, shape: [usize; 2], r: f64) -> Vec<f64> {
    let lengths = match *model {
        ManifoldModel::Circle { length } => [1.0, length],
        ManifoldModel::Torus2 { lengths } => lengths,
        _ => unreachable!("periodic layout on a non-periodic model"),
    };
    let h = [lengths[0] / shape[0] as f64, lengths[1] / shape[1] as f64];
    let offset = |i: usize, ax: usize| {
        let x = i as f64 * h[ax];
        if x >= 0.5 * lengths[ax] { x - lengths[ax] } else { x }
    };
    let mut out = vec![0.0; shape[0] * shape[1]];
    if shape[0] == 1 {
        let len = lengths[1];
        for (j, o) in out.iter_mut().enumerate() {
            *o = if 2.0 * r >= len {
                h[1]
            } else {
                let c = offset(j, 1);
                (-1..=1)
                    .map(|k| {
                        let lo = c - 0.5 * h[1] + k as f64 * len;
                        (lo + h[1]).min(r) - lo.max(-r)
                    })
                    .map(|v| v.max(0.0))
                    .sum()
            };
        }
        return out;
    }
    let disjoint = 2.0 * r <= lengths[0].min(lengths[1]);
    for i in 0..shape[0] {
        for j in 0..shape[1] {
            let c = [offset(i, 0), offset(j, 1)];
            out[i * shape[1] + j] = if disjoint {
                let mut area = 0.0;
                for k0 in -1..=1 {
                    for k1 in -1..=1 {
                        let x0 = c[0] - 0.5 * h[0] + k0 as f64 * lengths[0];
                        let y0 = c[1] - 0.5 * h[1] + k1 as f64 * lengths[1];
                        area += disk_rect(r, x0, x0 + h[0], y0, y0 + h[1]);
                    }
                }
                area
            } else {
                const SUB: usize = 8;
                let mut hits = 0;
                for a in 0..SUB {
                    for b in 0..SUB {
                        let x = c[0] + h[0] * ((a as f64 + 0.5) / SUB as f64 - 0.5);
                        let y = c[1] + h[1] * ((b as f64 + 0.5) / SUB as f64 - 0.5);
                        let dx = (x - lengths[0] * (x / lengths[0]).round()).abs();
                        let dy = (y - lengths[1] * (y / lengths[1]).round()).abs();
                        hits += (dx * dx + dy * dy < r * r) as usize;
                    }
                }
                h[0] * h[1] * hits as f64 / (SUB * SUB) as f64
            };
        }
    }
    out
}

/// Area of `B(0, r) ∩ [x0, x1] × [y0, y1]`.
fn disk_rect(r: f64, x0: f64, x1: f64, y0: f64, y1: f64) -> f64 {
    quadrant(r, x1, y1) - quadrant(r, x0, y1) - quadrant(r, x1, y0) + quadrant(r, x0, y0)
}

/// Signed area of `B(0, r) ∩ [0, x] × [0, y]`, odd in each argument.
fn quadrant(r: f64, x: f64, y: f64) -> f64 {
    let sign = x.signum() * y.signum();
    let (x, y) = (x.abs().min(r), y.abs().min(r));
    if x == 0.0 || y == 0.0 {
        return 0.0;
    }
    if x * x + y * y <= r * r {
        return sign * x * y;
    }
    let s = |u: f64| 0.5 * (u * (r * r - u * u).max(0.0).sqrt() + r * r * (u / r).clamp(-1.0, 1.0).asin());
    let xs = (r * r - y * y).max(0.0).sqrt();
    sign * (y * xs + s(x) - s(xs))
}

fn require_mean_zero(cfg: &ExtensionConfig, u: &[f64], what: &str) -> Result<()> {
    let grid = cfg.grid();
    if u.len() != grid.len() {
        return invalid(format!("{what} has {} samples, grid has {}", u.len(), grid.len()));
    }
    if cfg.model().is_compact() {
        let mean = grid.integrate(u);
        let l1 = grid.integrate(&u.iter().map(|v| v.abs()).collect::<Vec<_>>());
        if mean.abs() > 1e-10 * l1.max(f64::MIN_POSITIVE) {
            return Err(Error::Rejected(format!(
                "{what} must have zero mean on the compact model {}; the extension does not decay otherwise",
                cfg.model()
            )));
        }
    }
    Ok(())
}

/// Tail beyond the last node estimated from the local power-law decay of
/// the integrand between the last two nodes.
fn tail_estimate(nodes: &[(f64, f64)], f: &[f64]) -> f64 {
    let n = nodes.len();
    let (t1, t2) = (nodes[n - 2].0, nodes[n - 1].0);
    let (f1, f2) = (f[n - 2].abs(), f[n - 1].abs());
    if f2 == 0.0 {
        return 0.0;
    }
    let q = if f1 > 0.0 { -(f2 / f1).ln() / (t2 / t1).ln() } else { f64::INFINITY };
    if q > 1.0 {
        f2 * t2 / (q - 1.0)
    } else {
        f64::INFINITY
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SquareEnergy {
    /// `∫∫ t |∂_t U|²`, tail included.
    pub e_t: f64,
    /// `∫∫ t |∇_x U|²`, tail included.
    pub e_x: f64,
    pub norm_sq: f64,
    /// Estimated contribution beyond `t_max`, already added above.
    pub tail: f64,
    pub t_max: f64,
    pub nodes: usize,
}

impl SquareEnergy {
    pub fn ratio_t(&self) -> f64 {
        self.e_t / self.norm_sq
    }

    pub fn ratio_x(&self) -> f64 {
        self.e_x / self.norm_sq
    }
}

fn slices_on_nodes(cfg: &ExtensionConfig, u: &[f64], nodes: &[(f64, f64)]) -> Result<Vec<FieldSlice>> {
    let ts: Vec<f64> = nodes.iter().map(|n| n.0).collect();
    cfg.prepare(u)?.slices(&ts)
}

pub fn square_energy(cfg: &ExtensionConfig, u: &[f64]) -> Result<SquareEnergy> {
    require_mean_zero(cfg, u, "data")?;
    let grid = cfg.grid();
    let nodes = energy_nodes(cfg.model())?;
    let slices = slices_on_nodes(cfg, u, &nodes)?;
    let w = grid.weights();
    let (mut ft, mut fx) = (Vec::new(), Vec::new());
    for s in &slices {
        let mut a = 0.0;
        let mut b = 0.0;
        for i in 0..w.len() {
            a += w[i] * s.dt[i] * s.dt[i];
            b += w[i] * s.grad[i].iter().map(|g| g * g).sum::<f64>();
        }
        ft.push(s.t * a);
        fx.push(s.t * b);
    }
    let quad = |f: &[f64]| nodes.iter().zip(f).map(|((_, wt), v)| wt * v).sum::<f64>();
    let (tt, tx) = (tail_estimate(&nodes, &ft), tail_estimate(&nodes, &fx));
    if !(tt.is_finite() && tx.is_finite()) {
        return Err(Error::Rejected("energy integrand does not decay fast enough to bound the tail".into()));
    }
    Ok(SquareEnergy {
        e_t: quad(&ft) + tt,
        e_x: quad(&fx) + tx,
        norm_sq: grid.integrate(&u.iter().map(|v| v * v).collect::<Vec<_>>()),
        tail: tt + tx,
        t_max: nodes.last().unwrap().0,
        nodes: nodes.len(),
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConeFunctional {
    /// `A(x)` at every grid point.
    pub values: Vec<f64>,
    pub l2_sq: f64,
    /// `E_t + E_x` on the same nodes.
    pub energy: f64,
}

impl ConeFunctional {
    /// `‖A‖² / (E_t + E_x)`, bounded by the upper Ahlfors constant.
    pub fn ratio(&self) -> f64 {
        self.l2_sq / self.energy
    }
}

/// `A(x) = (∫∫_{d(x,y)<t} |∇_{y,t} U|² t^{1-n} dy dt)^{1/2}`.
pub fn cone_functional(cfg: &ExtensionConfig, u: &[f64]) -> Result<ConeFunctional> {
    require_mean_zero(cfg, u, "data")?;
    let nodes = energy_nodes(cfg.model())?;
    let field = gradient_field(cfg, u, &nodes)?;
    let grid = cfg.grid();
    let (a_sq, energy) = cone_squares(grid, &field);
    let values: Vec<f64> = a_sq.iter().map(|v| v.sqrt()).collect();
    let l2_sq = grid.integrate(&a_sq);
    Ok(ConeFunctional { values, l2_sq, energy })
}

/// Squared cone functional of a half-space field and its plain energy
/// `Σ w_t t Σ w_x F²`.
fn cone_squares(grid: &SampleGrid, field: &HalfSpaceField) -> (Vec<f64>, f64) {
    let n = grid.model().dim() as i32;
    let per_node: Vec<(Vec<f64>, f64)> = field
        .nodes
        .par_iter()
        .zip(&field.values)
        .map(|(&(t, wt), f)| {
            let sq: Vec<f64> = f.iter().map(|v| v * v).collect();
            let energy = wt * t * grid.integrate(&sq);
            let sums = ball_sums(grid, t, &sq);
            let scale = wt * t.powi(1 - n);
            (sums.into_iter().map(|s| s * scale).collect(), energy)
        })
        .collect();
    let mut a_sq = vec![0.0; grid.len()];
    let mut energy = 0.0;
    for (sums, e) in per_node {
        for (a, s) in a_sq.iter_mut().zip(sums) {
            *a += s;
        }
        energy += e;
    }
    (a_sq, energy)
}

/// `∫ u φ = σ^{-1} [∫∫ t ∂_t U ∂_t Φ + ∫∫ t ⟨∇_x U, ∇_x Φ⟩]`, asserted to
/// relative tolerance `tol` of `‖u‖ ‖φ‖`.
pub fn pairing_check(cfg: &ExtensionConfig, u: &[f64], phi: &[f64], tol: f64) -> Result<EstimateReport> {
    require_mean_zero(cfg, u, "u")?;
    require_mean_zero(cfg, phi, "phi")?;
    let grid = cfg.grid();
    let nodes = energy_nodes(cfg.model())?;
    let su = slices_on_nodes(cfg, u, &nodes)?;
    let sp = slices_on_nodes(cfg, phi, &nodes)?;
    let w = grid.weights();
    let (mut ft, mut fx) = (Vec::new(), Vec::new());
    for (a, b) in su.iter().zip(&sp) {
        let mut et = 0.0;
        let mut ex = 0.0;
        for i in 0..w.len() {
            et += w[i] * a.dt[i] * b.dt[i];
            ex += w[i] * (0..3).map(|k| a.grad[i][k] * b.grad[i][k]).sum::<f64>();
        }
        ft.push(a.t * et);
        fx.push(a.t * ex);
    }
    let quad = |f: &[f64]| nodes.iter().zip(f).map(|((_, wt), v)| wt * v).sum::<f64>();
    let tail = tail_estimate(&nodes, &ft).min(1e300) + tail_estimate(&nodes, &fx).min(1e300);
    let sigma = cfg.sigma();
    let (it, ix) = (quad(&ft), quad(&fx));
    let lhs = grid.integrate(&u.iter().zip(phi).map(|(a, b)| a * b).collect::<Vec<_>>());
    let rhs = (it + ix) / sigma;
    let norm = |v: &[f64]| grid.integrate(&v.iter().map(|x| x * x).collect::<Vec<_>>()).sqrt();
    let scale = norm(u) * norm(phi);
    let gap = if scale > 0.0 { (lhs - rhs).abs() / scale } else { 0.0 };
    Ok(EstimateReport::new(
        "pairing",
        "the L2 pairing of two mean-zero functions equals the weighted half-space pairing of their extensions divided by sigma",
    )
    .sides(lhs, rhs)
    .fitted(if lhs != 0.0 { rhs / lhs } else { f64::NAN })
    .verdict(tol, gap <= tol && tail <= tol * scale.max(f64::MIN_POSITIVE))
    .detail("relative_gap", gap)
    .detail("time_part", it / sigma)
    .detail("space_part", ix / sigma)
    .detail("tail_estimate", tail)
    .note("manifold", cfg.model().label())
    .note("grid", grid.label())
    .note("sigma", sig17(sigma))
    .note("t_nodes", nodes.len()))
}

/// `∫∫ t |F||G| ≲ ‖A_F‖_{L¹} · (sup_B |B|^{-1} ∫_{T(B)} t |G|²)^{1/2}` on
/// the common nodes of `f` and `g`.
pub fn carleson_holder(
    grid: &SampleGrid,
    f: &HalfSpaceField,
    g: &HalfSpaceField,
    balls: &BallFamily,
) -> Result<EstimateReport> {
    if f.nodes != g.nodes || f.values.len() != f.nodes.len() || g.values.len() != g.nodes.len() {
        return invalid("both fields must live on the same t nodes");
    }
    if balls.is_empty() {
        return invalid("empty ball family");
    }
    let model = grid.model();
    let w = grid.weights();
    let mut lhs = 0.0;
    for ((&(t, wt), a), b) in f.nodes.iter().zip(&f.values).zip(&g.values) {
        lhs += wt * t * (0..w.len()).map(|i| w[i] * a[i] * b[i]).sum::<f64>();
    }
    let (a_sq, _) = cone_squares(grid, f);
    let a_l1 = grid.integrate(&a_sq.iter().map(|v| v.sqrt()).collect::<Vec<_>>());
    let lists = balls.neighbour_lists(model, grid);
    let nr = balls.radii().len();
    let sup = (0..balls.len())
        .into_par_iter()
        .map(|i| {
            let ball = balls.get(i);
            let list = &lists[i / nr];
            let members = &list[..list.partition_point(|m| m.dist < ball.radius)];
            let mass: f64 = members.iter().map(|m| w[m.index]).sum();
            if mass == 0.0 {
                return 0.0;
            }
            let mut total = 0.0;
            for (&(t, wt), gv) in g.nodes.iter().zip(&g.values) {
                let reach = ball.radius - t;
                if reach <= 0.0 {
                    continue;
                }
                let s: f64 = members
                    .iter()
                    .take_while(|m| m.dist < reach)
                    .map(|m| w[m.index] * gv[m.index] * gv[m.index])
                    .sum();
                total += wt * t * s;
            }
            total / mass
        })
        .collect::<Vec<f64>>()
        .into_iter()
        .fold(0.0, f64::max);
    let rhs = a_l1 * sup.sqrt();
    if rhs == 0.0 && lhs > 0.0 {
        return Err(Error::Contradiction(format!(
            "tent-space pairing {lhs} is positive while the bound vanishes"
        )));
    }
    let fitted = if rhs > 0.0 { lhs / rhs } else { 0.0 };
    Ok(EstimateReport::new(
        "carleson_holder",
        "the tent-space pairing is bounded by the L1 norm of the cone functional times the Carleson norm",
    )
    .sides(lhs, rhs)
    .fitted(fitted)
    .verdict(f64::INFINITY, fitted.is_finite())
    .detail("cone_l1", a_l1)
    .detail("carleson_sup", sup)
    .note("manifold", model.label())
    .note("grid", grid.label()))
}
