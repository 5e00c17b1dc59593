//! Hardy–Littlewood maximal function on periodic grids and the ratio of
//! cone suprema of the extension gradient to `M|∇u|`.

use std::io::Write;

use rayon::prelude::*;

use crate::error::{invalid, Error, Result};
use crate::extension::{spectral_gradient, ExtensionConfig};
use crate::manifold::{GridLayout, SampleGrid};
use crate::report::{csv_err, csv_writer, sig17};
use crate::seminorms::ball_sums;

#[derive(Debug, Clone, PartialEq)]
pub struct MaximalField {
    pub mf: Vec<f64>,
    pub radii: Vec<f64>,
}

/// Radii `h · 2^{k/4}` up to half the diameter.
pub fn maximal_radii(grid: &SampleGrid) -> Vec<f64> {
    let h = grid.spacing();
    let top = 0.5 * grid.model().diameter();
    let mut out = Vec::new();
    let mut k = 0;
    loop {
        let r = h * 2f64.powf(k as f64 / 4.0);
        if r > top * (1.0 + 1e-12) {
            break;
        }
        out.push(r);
        k += 1;
    }
    out
}

/// `Mf(x) = max_r |B(x, r)|^{-1} ∫_{B(x, r)} |f|` over the given radii.
pub fn hl_maximal(grid: &SampleGrid, f: &[f64], radii: &[f64]) -> Result<MaximalField> {
    if f.len() != grid.len() {
        return invalid(format!("{} samples for a grid of {}", f.len(), grid.len()));
    }
    if radii.is_empty() {
        return invalid("empty radius set");
    }
    let (h, top) = (grid.spacing(), 0.5 * grid.model().diameter());
    if let Some(r) = radii.iter().find(|&&r| !(r >= h * (1.0 - 1e-12) && r <= top * (1.0 + 1e-12))) {
        return invalid(format!("radius {r} outside [h, diam/2] = [{h}, {top}]"));
    }
    let abs: Vec<f64> = f.iter().map(|v| v.abs()).collect();
    let ones = vec![1.0; f.len()];
    let per_radius: Vec<Vec<f64>> = radii
        .par_iter()
        .map(|&r| {
            let mass = ball_sums(grid, r, &ones);
            ball_sums(grid, r, &abs).iter().zip(&mass).map(|(a, m)| (a / m).max(0.0)).collect()
        })
        .collect();
    let mut mf = vec![0.0f64; f.len()];
    for avg in &per_radius {
        for (m, a) in mf.iter_mut().zip(avg) {
            *m = m.max(*a);
        }
    }
    Ok(MaximalField { mf, radii: radii.to_vec() })
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConeSupRatio {
    pub mf: Vec<f64>,
    pub cone_sup: Vec<f64>,
    pub rho: Vec<f64>,
    pub max_rho: f64,
    /// `σ <= 1/2`, where no bound is expected and nothing is asserted.
    pub probe: bool,
    pub t_levels: Vec<f64>,
}

impl ConeSupRatio {
    /// One row per grid point, then a `max` row carrying `max ρ`.
    pub fn write_csv<W: Write>(&self, grid: &SampleGrid, w: W) -> Result<()> {
        let mut out = csv_writer(w);
        let coords = if matches!(grid.layout(), GridLayout::Periodic1 { .. }) { 1 } else { 2 };
        let mut header: Vec<&str> = if coords == 1 { vec!["x"] } else { vec!["x1", "x2"] };
        header.extend(["Mf", "cone_sup", "rho"]);
        out.write_record(&header).map_err(csv_err)?;
        for (i, p) in grid.points().iter().enumerate() {
            let mut rec: Vec<String> = p.0[..coords].iter().map(|&c| sig17(c)).collect();
            rec.extend([sig17(self.mf[i]), sig17(self.cone_sup[i]), sig17(self.rho[i])]);
            out.write_record(&rec).map_err(csv_err)?;
        }
        let mut last = vec!["max".to_string()];
        last.extend(std::iter::repeat_n(String::new(), coords + 1));
        last.push(sig17(self.max_rho));
        out.write_record(&last).map_err(csv_err)?;
        out.flush()?;
        Ok(())
    }
}

/// Grid offsets sorted by distance from the first point, as `(dist, [di, dj])`.
fn offsets(grid: &SampleGrid) -> Result<([usize; 2], Vec<(f64, [usize; 2])>)> {
    let shape = match grid.layout() {
        GridLayout::Periodic1 { n } => [1, n],
        GridLayout::Periodic2 { n } => n,
        _ => return invalid(format!("cone suprema need a periodic grid, got {}", grid.model())),
    };
    let model = grid.model();
    let pts = grid.points();
    let mut out: Vec<(f64, [usize; 2])> = (0..pts.len())
        .map(|k| (model.dist(&pts[0], &pts[k]), [k / shape[1], k % shape[1]]))
        .collect();
    out.sort_by(|a, b| a.0.total_cmp(&b.0));
    Ok((shape, out))
}

/// `ρ(x) = sup_{d(x,y) < t} |∇_{y,t} U(y, t)| / M|∇u|(x)` with `t` from the
/// configured levels up to the diameter.
pub fn cone_sup_ratio(cfg: &ExtensionConfig, u: &[f64]) -> Result<ConeSupRatio> {
    let grid = cfg.grid();
    let (shape, offs) = offsets(grid)?;
    let probe = cfg.sigma() <= 0.5;
    let diam = grid.model().diameter();
    let t_levels: Vec<f64> = cfg.t_levels().iter().cloned().filter(|&t| t <= diam).collect();
    if t_levels.is_empty() {
        return invalid("no t level below the diameter");
    }
    let grad = spectral_gradient(grid, u)?;
    let gnorm: Vec<f64> = grad.iter().map(|g| g.iter().map(|c| c * c).sum::<f64>().sqrt()).collect();
    let mf = hl_maximal(grid, &gnorm, &maximal_radii(grid))?.mf;
    let slices = cfg.prepare(u)?.slices(&t_levels)?;
    let fields: Vec<Vec<f64>> = slices
        .iter()
        .map(|s| (0..grid.len()).map(|i| s.grad_sq(i).sqrt()).collect())
        .collect();
    let reach: Vec<usize> = t_levels.iter().map(|&t| offs.partition_point(|o| o.0 < t)).collect();
    let cone_sup: Vec<f64> = (0..grid.len())
        .into_par_iter()
        .map(|x| {
            let (xi, xj) = (x / shape[1], x % shape[1]);
            let mut best = 0.0f64;
            for (field, &k) in fields.iter().zip(&reach) {
                for &(_, [di, dj]) in &offs[..k] {
                    let y = ((xi + di) % shape[0]) * shape[1] + (xj + dj) % shape[1];
                    best = best.max(field[y]);
                }
            }
            best
        })
        .collect();
    let scale = gnorm.iter().cloned().fold(0.0, f64::max);
    let mut rho = Vec::with_capacity(grid.len());
    for (i, (&num, &den)) in cone_sup.iter().zip(&mf).enumerate() {
        if den > 1e-14 * scale {
            rho.push(num / den);
        } else if num <= 1e-12 * scale.max(f64::MIN_POSITIVE) || scale == 0.0 && num == 0.0 {
            rho.push(0.0);
        } else if probe {
            rho.push(f64::INFINITY);
        } else {
            return Err(Error::Contradiction(format!(
                "cone supremum {num} at grid point {i} while M|∇u| vanishes there"
            )));
        }
    }
    let max_rho = rho.iter().cloned().fold(0.0, f64::max);
    Ok(ConeSupRatio { mf, cone_sup, rho, max_rho, probe, t_levels })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::manifold::ManifoldModel;
    use std::f64::consts::PI;

    fn circle(n: usize) -> SampleGrid {
        SampleGrid::uniform(ManifoldModel::circle(2.0 * PI).unwrap(), n).unwrap()
    }

    fn levels(g: &SampleGrid, k: usize) -> Vec<f64> {
        let (a, b) = (g.spacing(), g.model().diameter());
        (0..k).map(|i| a * (b / a).powf(i as f64 / (k - 1) as f64)).collect()
    }

    #[test]
    fn constants_and_scaling() {
        let g = circle(64);
        let r = maximal_radii(&g);
        let m = hl_maximal(&g, &vec![-1.5; 64], &r).unwrap();
        assert!(m.mf.iter().all(|v| (v - 1.5).abs() < 1e-13));
        let f = g.sample(|p| (3.0 * p.0[0]).sin() + 0.2);
        let a = hl_maximal(&g, &f, &r).unwrap().mf;
        let b = hl_maximal(&g, &f.iter().map(|v| -4.0 * v).collect::<Vec<_>>(), &r).unwrap().mf;
        assert!(a.iter().zip(&b).all(|(x, y)| (4.0 * x - y).abs() < 1e-12));
        assert!(a.iter().zip(&f).all(|(m, v)| *m >= 0.0 && *m <= 1.2 + 1e-12 && m.is_finite() && *v <= 1.2));
        assert!(hl_maximal(&g, &f, &[0.5 * g.spacing()]).is_err());
    }

    #[test]
    fn far_field_of_a_bump() {
        let n = 512;
        let g = circle(n);
        let h = g.spacing();
        // mass one on four cells around x = 0
        let f = g.sample(|p| {
            let x = p.0[0].min(2.0 * PI - p.0[0]);
            if x < 1.9 * h { 1.0 / (4.0 * h) } else { 0.0 }
        });
        let mass = g.integrate(&f);
        let radii: Vec<f64> = (1..=104).map(|k| (k as f64 * 0.015).max(h)).collect();
        let m = hl_maximal(&g, &f, &radii).unwrap();
        for &k in &[64usize, 96, 120] {
            let d = g.points()[k].0[0];
            let want = mass / (2.0 * d);
            assert!((m.mf[k] / want - 1.0).abs() < 0.05, "{} vs {want}", m.mf[k]);
        }
    }

    #[test]
    fn sublinear() {
        let g = circle(64);
        let r = maximal_radii(&g);
        let f = g.sample(|p| p.0[0].sin());
        let h = g.sample(|p| (p.0[0] * 2.0).cos() - 0.5);
        let s: Vec<f64> = f.iter().zip(&h).map(|(a, b)| a + b).collect();
        let (mf, mh, ms) = (
            hl_maximal(&g, &f, &r).unwrap().mf,
            hl_maximal(&g, &h, &r).unwrap().mf,
            hl_maximal(&g, &s, &r).unwrap().mf,
        );
        assert!((0..64).all(|i| ms[i] <= mf[i] + mh[i] + 1e-12));
    }

    #[test]
    fn cone_ratio_of_cosine() {
        let mut maxima = Vec::new();
        for n in [64, 128] {
            let g = circle(n);
            let cfg = ExtensionConfig::new(0.75, g.clone(), levels(&g, 16), 64).unwrap();
            let r = cone_sup_ratio(&cfg, &g.sample(|p| p.0[0].cos())).unwrap();
            assert!(!r.probe && r.max_rho.is_finite() && r.max_rho > 0.0);
            maxima.push(r.max_rho);
        }
        assert!((maxima[1] / maxima[0] - 1.0).abs() < 0.2, "{maxima:?}");
        let g = circle(32);
        let cfg = ExtensionConfig::new(0.75, g.clone(), levels(&g, 8), 64).unwrap();
        let r = cone_sup_ratio(&cfg, &vec![3.0; 32]).unwrap();
        assert!(r.cone_sup.iter().all(|v| *v < 1e-12) && r.max_rho == 0.0);
        let mut buf = Vec::new();
        r.write_csv(&g, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(text.lines().count(), 34);
        assert!(text.starts_with("x,Mf,cone_sup,rho\n") && text.ends_with("\n"));
    }
}
