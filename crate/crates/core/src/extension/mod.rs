//! σ-harmonic extension by heat-kernel subordination, with checks of the
//! extension equation, the boundary trace and large-time decay.

mod backend;
mod subordinator;

use std::io::Write;

pub use subordinator::{multiplier, QuadStats, Subordinator};

use crate::error::{invalid, Error, Result};
use crate::heat_kernel::HeatKernelEvaluator;
use crate::manifold::{ManifoldModel, SampleGrid};
use crate::numerics::special::gamma;
use crate::numerics::{adaptive_integrate, QuadratureRule};
use crate::report::{csv_err, csv_writer, sig17, EstimateReport};
use backend::{Prepared, Slice};
pub(crate) use backend::Fft2;
pub use backend::{bandwidth, spectral_gradient};

#[derive(Debug, Clone)]
pub struct ExtensionConfig {
    sigma: f64,
    sub: Subordinator,
    heat: HeatKernelEvaluator,
    grid: SampleGrid,
    t_levels: Vec<f64>,
}

impl ExtensionConfig {
    /// `order` is the generalized Laguerre order for the s-integral.
    pub fn new(sigma: f64, grid: SampleGrid, t_levels: Vec<f64>, order: usize) -> Result<Self> {
        let sub = Subordinator::new(sigma, order)?;
        if t_levels.is_empty() {
            return invalid("at least one t level is required");
        }
        if let Some(t) = t_levels.iter().find(|t| !(t.is_finite() && **t > 0.0)) {
            return invalid(format!("t levels must be positive, got {t}"));
        }
        if t_levels.windows(2).any(|w| w[1] <= w[0]) {
            return invalid("t levels must be strictly increasing");
        }
        let heat = HeatKernelEvaluator::new(*grid.model());
        Ok(Self { sigma, sub, heat, grid, t_levels })
    }

    /// Same configuration on different t levels.
    pub fn with_levels(&self, t_levels: Vec<f64>) -> Result<Self> {
        Self::new(self.sigma, self.grid.clone(), t_levels, self.sub.order())
    }

    pub fn sigma(&self) -> f64 {
        self.sigma
    }

    pub fn quad(&self) -> &QuadratureRule {
        self.sub.rule()
    }

    pub fn subordinator(&self) -> &Subordinator {
        &self.sub
    }

    pub fn heat(&self) -> &HeatKernelEvaluator {
        &self.heat
    }

    pub fn grid(&self) -> &SampleGrid {
        &self.grid
    }

    pub fn model(&self) -> &ManifoldModel {
        self.grid.model()
    }

    pub fn t_levels(&self) -> &[f64] {
        &self.t_levels
    }

    fn check_data(&self, u: &[f64]) -> Result<()> {
        if u.len() != self.grid.len() {
            return invalid(format!("data has {} samples, grid has {}", u.len(), self.grid.len()));
        }
        if u.iter().any(|v| !v.is_finite()) {
            return invalid("data contains non-finite samples");
        }
        Ok(())
    }

    /// Transforms `u` once so that slices at arbitrary `t` are cheap.
    pub fn prepare(&self, u: &[f64]) -> Result<PreparedExtension<'_>> {
        self.check_data(u)?;
        Ok(PreparedExtension { cfg: self, inner: Prepared::new(&self.grid, &self.sub, u)? })
    }
}

/// Data ready for extension at any height.
pub struct PreparedExtension<'a> {
    cfg: &'a ExtensionConfig,
    inner: Prepared,
}

/// Extension and derivatives on one horizontal slice.
#[derive(Debug, Clone, PartialEq)]
pub struct FieldSlice {
    pub t: f64,
    pub values: Vec<f64>,
    pub dt: Vec<f64>,
    pub dtt: Vec<f64>,
    pub lap: Vec<f64>,
    pub grad: Vec<[f64; 3]>,
}

impl FieldSlice {
    fn from_inner(t: f64, s: Slice) -> Self {
        Self { t, values: s.values, dt: s.dt, dtt: s.dtt, lap: s.lap, grad: s.grad }
    }

    /// `|∂_t U|² + |∇_x U|²` at grid point `i`.
    pub fn grad_sq(&self, i: usize) -> f64 {
        self.dt[i] * self.dt[i] + self.grad[i].iter().map(|g| g * g).sum::<f64>()
    }
}

impl PreparedExtension<'_> {
    pub fn slice(&self, t: f64) -> Result<FieldSlice> {
        if !(t.is_finite() && t > 0.0) {
            return invalid(format!("extension height must be positive, got {t}"));
        }
        Ok(FieldSlice::from_inner(t, self.inner.slice(&self.cfg.sub, t)?))
    }

    pub fn slices(&self, ts: &[f64]) -> Result<Vec<FieldSlice>> {
        if let Some(t) = ts.iter().find(|t| !(t.is_finite() && **t > 0.0)) {
            return invalid(format!("extension height must be positive, got {t}"));
        }
        let out = self.inner.slices(&self.cfg.sub, ts)?;
        Ok(ts.iter().zip(out).map(|(&t, s)| FieldSlice::from_inner(t, s)).collect())
    }

    fn stats(&self) -> QuadStats {
        let own = self.cfg.sub.stats();
        match self.inner.inner_stats() {
            Some(s) => QuadStats { certified: own.certified + s.certified, fallbacks: own.fallbacks + s.fallbacks },
            None => own,
        }
    }
}

/// Sampled extension on `grid x t_levels`, stored t-major.
#[derive(Debug, Clone)]
pub struct ExtensionField {
    config: ExtensionConfig,
    u: Vec<f64>,
    slices: Vec<FieldSlice>,
    stats: QuadStats,
}

pub fn extend(cfg: &ExtensionConfig, u: &[f64]) -> Result<ExtensionField> {
    let before = cfg.sub.stats();
    let prepared = cfg.prepare(u)?;
    let slices = prepared.slices(&cfg.t_levels)?;
    let after = prepared.stats();
    Ok(ExtensionField {
        config: cfg.clone(),
        u: u.to_vec(),
        slices,
        stats: QuadStats {
            certified: after.certified - before.certified,
            fallbacks: after.fallbacks - before.fallbacks,
        },
    })
}

impl ExtensionField {
    pub fn config(&self) -> &ExtensionConfig {
        &self.config
    }

    pub fn sigma(&self) -> f64 {
        self.config.sigma
    }

    pub fn model(&self) -> &ManifoldModel {
        self.config.model()
    }

    pub fn grid(&self) -> &SampleGrid {
        &self.config.grid
    }

    pub fn t_levels(&self) -> &[f64] {
        &self.config.t_levels
    }

    pub fn data(&self) -> &[f64] {
        &self.u
    }

    pub fn slices(&self) -> &[FieldSlice] {
        &self.slices
    }

    pub fn slice(&self, k: usize) -> &FieldSlice {
        &self.slices[k]
    }

    /// Integrals accepted from the Laguerre rule and adaptive fallbacks
    /// used while building this field.
    pub fn quad_stats(&self) -> QuadStats {
        self.stats
    }

    /// Writes `sigma, manifold, grid, coordinates…, t, U, dtU, gradient…`
    /// with one header line.
    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let model = self.model();
        let (coords, grads): (&[&str], &[&str]) = match model {
            ManifoldModel::Circle { .. } | ManifoldModel::EuclidLine { .. } => (&["x"], &["dxU"]),
            ManifoldModel::Torus2 { .. } | ManifoldModel::EuclidPlane { .. } => {
                (&["x1", "x2"], &["dx1U", "dx2U"])
            }
            ManifoldModel::Sphere2 { .. } => (&["x", "y", "z"], &["gradU_x", "gradU_y", "gradU_z"]),
        };
        let mut out = csv_writer(w);
        let mut header = vec!["sigma", "manifold", "grid"];
        header.extend_from_slice(coords);
        header.extend_from_slice(&["t", "U", "dtU"]);
        header.extend_from_slice(grads);
        out.write_record(&header).map_err(csv_err)?;
        let sigma = sig17(self.sigma());
        let label = model.label();
        let grid = self.grid().label();
        for s in &self.slices {
            for (i, p) in self.grid().points().iter().enumerate() {
                let mut row = vec![sigma.clone(), label.clone(), grid.clone()];
                row.extend(p.0[..coords.len()].iter().map(|c| sig17(*c)));
                row.push(sig17(s.t));
                row.push(sig17(s.values[i]));
                row.push(sig17(s.dt[i]));
                row.extend(s.grad[i][..grads.len()].iter().map(|g| sig17(*g)));
                out.write_record(&row).map_err(csv_err)?;
            }
        }
        out.flush()?;
        Ok(())
    }
}

/// Residual of `ΔU + (1-2σ)/t ∂_t U + ∂_tt U = 0` on the field.
#[derive(Debug, Clone, PartialEq)]
pub struct PdeResidual {
    /// t-major, same layout as the field.
    pub residual: Vec<f64>,
    pub max_abs: f64,
    /// `max|residual| / max(max|∂_tt U|, 1e-12)`.
    pub relative: f64,
}

pub fn pde_residual(f: &ExtensionField) -> PdeResidual {
    let c = 1.0 - 2.0 * f.sigma();
    let mut residual = Vec::new();
    let mut max_abs: f64 = 0.0;
    let mut max_dtt: f64 = 0.0;
    for s in &f.slices {
        for i in 0..s.values.len() {
            let r = s.lap[i] + c / s.t * s.dt[i] + s.dtt[i];
            max_abs = max_abs.max(r.abs());
            max_dtt = max_dtt.max(s.dtt[i].abs());
            residual.push(r);
        }
    }
    PdeResidual { residual, max_abs, relative: max_abs / max_dtt.max(1e-12) }
}

/// `max_x |U(x, t_small) - u(x)|`.
pub fn boundary_trace_error(f: &ExtensionField, u: &[f64], t_small: f64) -> Result<f64> {
    let h = f.grid().spacing();
    if !(t_small >= h * (1.0 - 1e-12)) {
        return invalid(format!(
            "t_small = {t_small} is below the grid spacing {h}; the kernel is not resolved there, refine the grid or raise t_small"
        ));
    }
    let s = f.config.prepare(u)?.slice(t_small)?;
    Ok(s.values.iter().zip(u).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max))
}

/// Large-time decay `t^n sup|U| ≲ ∫|u|` and `t^{n+1} sup|∂_t U| ≲ ∫|u|`,
/// fitted over the levels in `[1, t_max]`.
pub fn decay_check(f: &ExtensionField) -> Result<EstimateReport> {
    let model = f.model();
    let grid = f.grid();
    let l1: f64 = grid.integrate(&f.u.iter().map(|v| v.abs()).collect::<Vec<_>>());
    if model.is_compact() {
        let mean = grid.integrate(&f.u);
        if mean.abs() > 1e-10 * l1.max(f64::MIN_POSITIVE) {
            return Err(Error::Rejected(format!(
                "decay needs mean-zero data on the compact model {model}; the extension tends to the mean {}",
                mean / model.volume().unwrap_or(1.0)
            )));
        }
    }
    let n = model.dim() as i32;
    let mut c_u: f64 = 0.0;
    let mut c_dt: f64 = 0.0;
    let mut used = 0;
    for s in f.slices.iter().filter(|s| s.t >= 1.0) {
        used += 1;
        let su = s.values.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        let sd = s.dt.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        c_u = c_u.max(s.t.powi(n) * su);
        c_dt = c_dt.max(s.t.powi(n + 1) * sd);
    }
    if used == 0 {
        return invalid("decay check needs t levels at or above 1");
    }
    let pass = c_u.is_finite() && c_dt.is_finite();
    let fitted = if l1 > 0.0 { c_u / l1 } else { 0.0 };
    Ok(EstimateReport::new(
        "decay",
        "the extension and its t-derivative decay like t^-n and t^-(n+1) times the L1 norm of the data",
    )
    .sides(c_u, l1)
    .fitted(fitted)
    .verdict(0.0, pass)
    .detail("value_constant", c_u)
    .detail("derivative_constant", c_dt)
    .detail("levels_used", used as f64)
    .note("manifold", model.label())
    .note("grid", grid.label())
    .note("sigma", sig17(f.sigma()))
    .note("t_max", sig17(*f.t_levels().last().unwrap())))
}

/// Extension at one grid point from the first representation,
/// `t^{2σ}/(4^σ Γ(σ)) ∫ (e^{sΔ}u)(x) e^{-t²/4s} s^{-1-σ} ds`, with the
/// heat semigroup applied by direct quadrature over the grid. A cross-check
/// for [`extend`], accurate once `t` is several grid spacings.
pub fn extend_point_first_form(cfg: &ExtensionConfig, u: &[f64], index: usize, t: f64) -> Result<f64> {
    cfg.check_data(u)?;
    if index >= cfg.grid.len() {
        return invalid(format!("grid index {index} out of range"));
    }
    if !(t.is_finite() && t > 0.0) {
        return invalid(format!("extension height must be positive, got {t}"));
    }
    let sigma = cfg.sigma;
    let x = cfg.grid.points()[index];
    let pts = cfg.grid.points();
    let w = cfg.grid.weights();
    let heat = &cfg.heat;
    let semigroup = |s: f64| -> f64 {
        pts.iter()
            .zip(w)
            .zip(u)
            .filter(|(_, v)| **v != 0.0)
            .map(|((y, wy), v)| heat.eval_p(&x, y, s).unwrap_or(f64::NAN) * wy * v)
            .sum()
    };
    let integrand = |s: f64| {
        if s <= 0.0 {
            return 0.0;
        }
        let damp = (-t * t / (4.0 * s)).exp();
        if damp == 0.0 {
            return 0.0;
        }
        semigroup(s) * damp * s.powf(-1.0 - sigma)
    };
    let split = t * t;
    let head = adaptive_integrate(integrand, 0.0, split, 1e-9)?;
    let tail = adaptive_integrate(integrand, split, f64::INFINITY, 1e-9)?;
    let value = t.powf(2.0 * sigma) / (4f64.powf(sigma) * gamma(sigma)) * (head.value + tail.value);
    if !value.is_finite() {
        return Err(Error::NonConvergence {
            context: "first representation".into(),
            value,
            err_est: f64::NAN,
            panels: head.panels + tail.panels,
        });
    }
    Ok(value)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::manifold::Point;
    use crate::numerics::special::bessel_profile;
    use std::f64::consts::PI;

    fn circle_cfg(sigma: f64, n: usize, ts: Vec<f64>) -> ExtensionConfig {
        let m = ManifoldModel::circle(2.0 * PI).unwrap();
        ExtensionConfig::new(sigma, SampleGrid::uniform(m, n).unwrap(), ts, 64).unwrap()
    }

    #[test]
    fn constants_extend_to_constants() {
        let cfg = circle_cfg(0.4, 32, vec![0.1, 1.0, 5.0]);
        let f = extend(&cfg, &vec![3.0; 32]).unwrap();
        for s in f.slices() {
            for i in 0..32 {
                assert!((s.values[i] - 3.0).abs() < 1e-9);
                assert!(s.dt[i].abs() < 1e-9 && s.grad[i][0].abs() < 1e-9);
            }
        }
        assert!(pde_residual(&f).max_abs < 1e-9);
    }

    #[test]
    fn cosine_at_half_is_poisson() {
        let cfg = circle_cfg(0.5, 64, vec![0.05, 0.3, 1.0, 2.5]);
        let u = cfg.grid().sample(|p| p.0[0].cos());
        let f = extend(&cfg, &u).unwrap();
        for s in f.slices() {
            for (i, p) in cfg.grid().points().iter().enumerate() {
                let x = p.0[0];
                assert!((s.values[i] - (-s.t).exp() * x.cos()).abs() < 1e-7);
                assert!((s.dt[i] + (-s.t).exp() * x.cos()).abs() < 1e-7);
                assert!((s.grad[i][0] + (-s.t).exp() * x.sin()).abs() < 1e-7);
            }
        }
        assert!(pde_residual(&f).max_abs < 1e-6);
    }

    #[test]
    fn cos2x_at_three_quarters() {
        let cfg = circle_cfg(0.75, 32, vec![0.5]);
        let u = cfg.grid().sample(|p| (2.0 * p.0[0]).cos());
        let f = extend(&cfg, &u).unwrap();
        let want = bessel_profile(0.75, 1.0);
        for (i, p) in cfg.grid().points().iter().enumerate() {
            assert!((f.slice(0).values[i] - want * (2.0 * p.0[0]).cos()).abs() < 1e-8);
        }
    }

    #[test]
    fn boundary_trace() {
        let cfg = circle_cfg(0.5, 64, vec![1.0]);
        let u = cfg.grid().sample(|p| p.0[0].cos());
        let f = extend(&cfg, &u).unwrap();
        let e = boundary_trace_error(&f, &u, 0.1).unwrap();
        assert!((e - (1.0 - (-0.1f64).exp())).abs() < 1e-8);
        assert!(boundary_trace_error(&f, &u, 0.01).is_err());
        let fine = circle_cfg(0.5, 1024, vec![1.0]);
        let uf = fine.grid().sample(|p| p.0[0].cos());
        let ff = extend(&fine, &uf).unwrap();
        let e = boundary_trace_error(&ff, &uf, 0.01).unwrap();
        assert!((e - (1.0 - (-0.01f64).exp())).abs() < 1e-8);
    }

    #[test]
    fn first_form_agrees() {
        let cfg = circle_cfg(0.3, 64, vec![0.7]);
        let u = cfg.grid().sample(|p| p.0[0].cos() + 0.5 * (3.0 * p.0[0]).sin());
        let f = extend(&cfg, &u).unwrap();
        for idx in [0, 9, 40] {
            let v = extend_point_first_form(&cfg, &u, idx, 0.7).unwrap();
            assert!((v - f.slice(0).values[idx]).abs() < 1e-7, "{v} {}", f.slice(0).values[idx]);
        }
    }

    #[test]
    fn decay_requires_mean_zero_on_compact() {
        let cfg = circle_cfg(0.5, 32, vec![1.0, 2.0]);
        let f = extend(&cfg, &vec![1.0; 32]).unwrap();
        assert!(matches!(decay_check(&f), Err(Error::Rejected(_))));
        let u = cfg.grid().sample(|p| p.0[0].cos());
        let r = decay_check(&extend(&cfg, &u).unwrap()).unwrap();
        assert!(r.pass);
    }

    #[test]
    fn sphere_harmonic_diagonalizes() {
        let m = ManifoldModel::sphere2(1.0).unwrap();
        let g = SampleGrid::uniform(m, 12).unwrap();
        let cfg = ExtensionConfig::new(0.5, g, vec![0.2, 1.0], 64).unwrap();
        // z is a degree-1 harmonic, eigenvalue 2
        let u = cfg.grid().sample(|p| p.0[2]);
        let f = extend(&cfg, &u).unwrap();
        for s in f.slices() {
            let factor = (-s.t * 2f64.sqrt()).exp();
            for (i, p) in cfg.grid().points().iter().enumerate() {
                assert!((s.values[i] - factor * p.0[2]).abs() < 1e-9);
                // tangential gradient of z is e_z - z x
                let want = [-p.0[2] * p.0[0], -p.0[2] * p.0[1], 1.0 - p.0[2] * p.0[2]];
                for k in 0..3 {
                    assert!((s.grad[i][k] - factor * want[k]).abs() < 1e-9);
                }
            }
        }
        assert!(pde_residual(&f).relative < 1e-6);
    }

    #[test]
    fn euclid_line_poisson_kernel() {
        let m = ManifoldModel::euclid_line(40.0).unwrap();
        let g = SampleGrid::uniform(m, 801).unwrap();
        let cfg = ExtensionConfig::new(0.5, g, vec![2.0, 8.0], 64).unwrap();
        // narrow bump of unit mass at the origin
        let a = 4.0;
        let u = cfg.grid().sample(|p| (a / PI).sqrt() * (-a * p.0[0] * p.0[0]).exp());
        let f = extend(&cfg, &u).unwrap();
        let origin = 400;
        assert!(cfg.grid().points()[origin] == Point::on_line(0.0));
        for s in f.slices() {
            // Poisson kernel convolved with the bump
            let t = s.t;
            let want = crate::numerics::adaptive_integrate(
                |z| t / (PI * (t * t + z * z)) * (a / PI).sqrt() * (-a * z * z).exp(),
                -10.0,
                10.0,
                1e-12,
            )
            .unwrap()
            .value;
            assert!((s.values[origin] - want).abs() < 1e-6 * want, "{} {want}", s.values[origin]);
        }
        assert!(pde_residual(&f).relative < 1e-8);
    }
}
