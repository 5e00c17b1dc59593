//! Jacobian determinant of a map `f = (f¹, f²)` on the flat torus paired
//! against a BMO function.

use rayon::prelude::*;

use crate::error::{invalid, Error, Result};
use crate::extension::{bandwidth, spectral_gradient, ExtensionConfig};
use crate::manifold::{BallFamily, GridLayout, ManifoldModel, SampleGrid};
use crate::report::sig17;
use crate::seminorms::{bmo_seminorm, energy_nodes};

/// Coefficients below this fraction of the largest one do not count
/// towards the bandwidth.
const BAND_REL: f64 = 1e-12;

fn check_torus(grid: &SampleGrid) -> Result<[usize; 2]> {
    match (grid.layout(), grid.model()) {
        (GridLayout::Periodic2 { n }, ManifoldModel::Torus2 { .. }) => Ok(n),
        _ => invalid(format!("the Jacobian pairing needs a torus2 grid, got {}", grid.model())),
    }
}

/// `∂₁f¹ ∂₂f² - ∂₂f¹ ∂₁f²` with spectral derivatives. Rejects data whose
/// determinant is not resolved, i.e. `2(b¹ + b²)` reaching the grid size on
/// some axis.
pub fn jacobian_density(grid: &SampleGrid, f1: &[f64], f2: &[f64]) -> Result<Vec<f64>> {
    let n = check_torus(grid)?;
    if f1.len() != grid.len() || f2.len() != grid.len() {
        return invalid("map components must be sampled on the grid");
    }
    let b1 = bandwidth(grid, f1, BAND_REL)?;
    let b2 = bandwidth(grid, f2, BAND_REL)?;
    let required = (0..2).map(|a| 2 * (b1[a] + b2[a]) + 2).max().unwrap();
    if (0..2).any(|a| 2 * (b1[a] + b2[a]) + 2 > n[a]) {
        return Err(Error::Bandwidth { required });
    }
    let g1 = spectral_gradient(grid, f1)?;
    let g2 = spectral_gradient(grid, f2)?;
    Ok(g1.iter().zip(&g2).map(|(a, b)| a[0] * b[1] - a[1] * b[0]).collect())
}

/// `∫ df¹ ∧ df² φ` on the grid.
pub fn jacobian_pairing(grid: &SampleGrid, f1: &[f64], f2: &[f64], phi: &[f64]) -> Result<f64> {
    if phi.len() != grid.len() {
        return invalid("phi must be sampled on the grid");
    }
    let j = jacobian_density(grid, f1, f2)?;
    Ok(grid.integrate(&j.iter().zip(phi).map(|(a, b)| a * b).collect::<Vec<_>>()))
}

/// `‖∇f‖²_{L²}` with `|∇f|² = Σ_{a,i} (∂_i f^a)²`.
pub fn gradient_energy(grid: &SampleGrid, f1: &[f64], f2: &[f64]) -> Result<f64> {
    check_torus(grid)?;
    let g1 = spectral_gradient(grid, f1)?;
    let g2 = spectral_gradient(grid, f2)?;
    let dens: Vec<f64> = g1
        .iter()
        .zip(&g2)
        .map(|(a, b)| a[0] * a[0] + a[1] * a[1] + b[0] * b[0] + b[1] * b[1])
        .collect();
    Ok(grid.integrate(&dens))
}

#[derive(Debug, Clone, PartialEq)]
pub struct JacobianCase {
    pub id: String,
    pub sigma: f64,
    pub grid: String,
    pub lhs: f64,
    pub grad_energy: f64,
    pub bmo_phi: f64,
    /// `|lhs| / (grad_energy · bmo_phi)`, zero when `lhs` vanishes.
    pub ratio: f64,
}

impl JacobianCase {
    pub const CSV_HEADER: [&'static str; 7] = ["case", "sigma", "grid", "lhs", "grad_energy", "bmo_phi", "ratio"];

    pub fn csv_record(&self) -> [String; 7] {
        [
            self.id.clone(),
            sig17(self.sigma),
            self.grid.clone(),
            sig17(self.lhs),
            sig17(self.grad_energy),
            sig17(self.bmo_phi),
            sig17(self.ratio),
        ]
    }
}

/// Pairing, gradient energy and `[φ]_BMO` over `balls` for one case.
pub fn clms_report(
    cfg: &ExtensionConfig,
    id: &str,
    f: (&[f64], &[f64]),
    phi: &[f64],
    balls: &BallFamily,
) -> Result<JacobianCase> {
    let sigma = cfg.sigma();
    if !(sigma > 0.5 && sigma < 1.0) {
        return invalid(format!("the Jacobian estimate needs sigma in (1/2, 1), got {sigma}"));
    }
    let grid = cfg.grid();
    let lhs = jacobian_pairing(grid, f.0, f.1, phi)?;
    let grad_energy = gradient_energy(grid, f.0, f.1)?;
    let bmo_phi = bmo_seminorm(grid.model(), grid, phi, balls)?.value;
    let phi_scale = phi.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let lhs_floor = 1e-10 * grad_energy * phi_scale.max(f64::MIN_POSITIVE);
    let ratio = if lhs.abs() <= lhs_floor {
        0.0
    } else if bmo_phi > 0.0 && grad_energy > 0.0 {
        lhs.abs() / (grad_energy * bmo_phi)
    } else {
        return Err(Error::Contradiction(format!(
            "case {id}: pairing {lhs} is nonzero while ‖∇f‖² [φ]_BMO = {grad_energy} · {bmo_phi}"
        )));
    };
    Ok(JacobianCase { id: id.to_string(), sigma, grid: grid.label(), lhs, grad_energy, bmo_phi, ratio })
}

/// Half-space integral `∫∫ t |∇_{x,t}F| |∇_x ∇_{x,t}F| |∇_{x,t}Φ|` that
/// dominates the pairing, with `∇_x F` obtained by extending `∇f`.
pub fn triple_product(cfg: &ExtensionConfig, f1: &[f64], f2: &[f64], phi: &[f64]) -> Result<f64> {
    let grid = cfg.grid();
    check_torus(grid)?;
    let nodes = energy_nodes(grid.model())?;
    let ts: Vec<f64> = nodes.iter().map(|n| n.0).collect();
    let g1 = spectral_gradient(grid, f1)?;
    let g2 = spectral_gradient(grid, f2)?;
    let mut second = Vec::new();
    for g in [&g1, &g2] {
        for ax in 0..2 {
            second.push(g.iter().map(|v| v[ax]).collect::<Vec<f64>>());
        }
    }
    let slices_of = |u: &[f64]| cfg.prepare(u)?.slices(&ts);
    let first = [slices_of(f1)?, slices_of(f2)?];
    let hess = second.iter().map(|u| slices_of(u)).collect::<Result<Vec<_>>>()?;
    let phis = slices_of(phi)?;
    let w = grid.weights();
    let total: f64 = (0..nodes.len())
        .into_par_iter()
        .map(|k| {
            let (t, wt) = nodes[k];
            let mut acc = 0.0;
            for i in 0..w.len() {
                let df: f64 = first.iter().map(|s| s[k].grad_sq(i)).sum::<f64>().sqrt();
                let ddf: f64 = hess.iter().map(|s| s[k].grad_sq(i)).sum::<f64>().sqrt();
                let dphi = phis[k].grad_sq(i).sqrt();
                acc += w[i] * df * ddf * dphi;
            }
            wt * t * acc
        })
        .collect::<Vec<f64>>()
        .into_iter()
        .sum();
    Ok(total)
}
