//! Heat kernels of the model manifolds and their derivatives, with
//! certified truncation of the image and spectral series.

mod fit;

use std::f64::consts::PI;

pub use fit::{fit_gaussian_bound, BoundClaim, BoundFit};

use crate::error::{invalid, Error, Result};
use crate::manifold::{ManifoldModel, Point};
use crate::numerics::special::{legendre_derivative_tables, legendre_table};

/// Ambient tangent vector.
pub type Tangent = [f64; 3];
/// Entry `(i, j)` is `∂_{x_i} ∂_{y_j} p`.
pub type Mixed = [[f64; 3]; 3];

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum KernelMethod {
    /// Closed form on Euclidean models, image sums on flat compact models
    /// for `t <= (L/2π)^2`, spectral series otherwise.
    Auto,
    ClosedFormGaussian,
    ImageSum { k_max: usize },
    SpectralSeries { n_max: usize },
}

/// Kernel value and derivatives at one `(x, y, t)`, plus the size of the
/// largest cancelling partial sum for each, which bounds rounding error.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KernelJet {
    pub p: f64,
    pub grad_x: Tangent,
    pub mixed: Mixed,
    /// `Δ_x p`, equal to `∂_t p`.
    pub laplacian: f64,
    pub magnitude: [f64; 3],
}

impl KernelJet {
    pub fn grad_norm(&self) -> f64 {
        self.grad_x.iter().map(|g| g * g).sum::<f64>().sqrt()
    }

    /// Frobenius norm of the mixed Hessian.
    pub fn mixed_norm(&self) -> f64 {
        self.mixed.iter().flatten().map(|g| g * g).sum::<f64>().sqrt()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HeatKernelEvaluator {
    model: ManifoldModel,
    method: KernelMethod,
    tol: f64,
}

const DEFAULT_CAP: usize = 1 << 16;

impl HeatKernelEvaluator {
    pub fn new(model: ManifoldModel) -> Self {
        Self { model, method: KernelMethod::Auto, tol: 1e-14 }
    }

    pub fn with_method(model: ManifoldModel, method: KernelMethod, tol: f64) -> Result<Self> {
        if !(tol.is_finite() && tol > 0.0) {
            return invalid(format!("heat kernel tolerance must be positive, got {tol}"));
        }
        let ok = match (method, model) {
            (KernelMethod::Auto, _) => true,
            (KernelMethod::ClosedFormGaussian, m) => !m.is_compact(),
            (KernelMethod::ImageSum { .. }, m) => {
                matches!(m, ManifoldModel::Circle { .. } | ManifoldModel::Torus2 { .. })
            }
            (KernelMethod::SpectralSeries { .. }, m) => m.is_compact(),
        };
        if !ok {
            return invalid(format!("{method:?} is not available on {model}"));
        }
        Ok(Self { model, method, tol })
    }

    pub fn model(&self) -> &ManifoldModel {
        &self.model
    }

    pub fn method(&self) -> KernelMethod {
        self.method
    }

    pub fn tol(&self) -> f64 {
        self.tol
    }

    pub fn eval_p(&self, x: &Point, y: &Point, t: f64) -> Result<f64> {
        Ok(self.jet(x, y, t)?.p)
    }

    /// `∇_x p`, tangent at `x`.
    pub fn eval_grad_p(&self, x: &Point, y: &Point, t: f64) -> Result<Tangent> {
        Ok(self.jet(x, y, t)?.grad_x)
    }

    /// `∇_x ∇_y p`.
    pub fn eval_grad2_p(&self, x: &Point, y: &Point, t: f64) -> Result<Mixed> {
        Ok(self.jet(x, y, t)?.mixed)
    }

    /// `∂_t p = Δ_x p`.
    pub fn eval_dt_p(&self, x: &Point, y: &Point, t: f64) -> Result<f64> {
        Ok(self.jet(x, y, t)?.laplacian)
    }

    /// All derivatives at a pair of points at distance `d`.
    pub fn radial(&self, d: f64, t: f64) -> Result<KernelJet> {
        let (x, y) = self.model.pair_at_distance(d);
        self.jet(&x, &y, t)
    }

    pub fn jet(&self, x: &Point, y: &Point, t: f64) -> Result<KernelJet> {
        if !(t.is_finite() && t > 0.0) {
            return invalid(format!("heat kernel time must be positive, got {t}"));
        }
        let z = [[0.0; 3]; 3];
        match self.model {
            ManifoldModel::EuclidLine { .. } => {
                let j = gaussian_jet(x.0[0] - y.0[0], t);
                Ok(line_jet(j))
            }
            ManifoldModel::EuclidPlane { .. } => {
                let a = gaussian_jet(x.0[0] - y.0[0], t);
                let b = gaussian_jet(x.0[1] - y.0[1], t);
                Ok(product_jet(a, b))
            }
            ManifoldModel::Circle { length } => {
                let j = self.periodic(x.0[0] - y.0[0], t, length)?;
                Ok(line_jet(j))
            }
            ManifoldModel::Torus2 { lengths } => {
                let a = self.periodic(x.0[0] - y.0[0], t, lengths[0])?;
                let b = self.periodic(x.0[1] - y.0[1], t, lengths[1])?;
                Ok(product_jet(a, b))
            }
            ManifoldModel::Sphere2 { radius } => {
                let n_max = match self.method {
                    KernelMethod::SpectralSeries { n_max } => n_max,
                    _ => DEFAULT_CAP,
                };
                let r2 = radius * radius;
                let c = (x.dot(y) / r2).clamp(-1.0, 1.0);
                let s = sphere_series(c, t / r2, self.tol, n_max)?;
                let norm = 1.0 / (4.0 * PI * r2);
                let f1 = s.d1 * norm;
                let f2 = s.d2 * norm;
                let mut grad = [0.0; 3];
                for i in 0..3 {
                    grad[i] = f1 * (y.0[i] - c * x.0[i]) / r2;
                }
                // P_x [f'' (y/ρ²)(x/ρ²)^T + f' I/ρ²] P_y
                let mut m = z;
                for i in 0..3 {
                    for j in 0..3 {
                        m[i][j] = f2 * y.0[i] * x.0[j] / (r2 * r2)
                            + if i == j { f1 / r2 } else { 0.0 };
                    }
                }
                let px = projector(x, r2);
                let py = projector(y, r2);
                let mixed = mat_mul(&mat_mul(&px, &m), &py);
                Ok(KernelJet {
                    p: s.value * norm,
                    grad_x: grad,
                    mixed,
                    laplacian: s.lap * norm / r2,
                    magnitude: [s.abs[0] * norm, s.abs[1] * norm / radius, s.abs[2] * norm / r2],
                })
            }
        }
    }

    fn periodic(&self, delta: f64, t: f64, length: f64) -> Result<Jet> {
        let image_regime = t <= (length / (2.0 * PI)).powi(2);
        match self.method {
            KernelMethod::ImageSum { k_max } => image_sum(delta, t, length, self.tol, k_max),
            KernelMethod::SpectralSeries { n_max } => spectral_sum(delta, t, length, self.tol, n_max),
            _ if image_regime => image_sum(delta, t, length, self.tol, DEFAULT_CAP),
            _ => spectral_sum(delta, t, length, self.tol, DEFAULT_CAP),
        }
    }
}

/// Value, first and second derivative in the offset `δ = x - y` of a
/// one-dimensional kernel, with cancellation magnitudes.
#[derive(Debug, Clone, Copy, PartialEq)]
struct Jet {
    v: [f64; 3],
    abs: [f64; 3],
}

fn gaussian_jet(z: f64, t: f64) -> Jet {
    let g = (-z * z / (4.0 * t)).exp() / (4.0 * PI * t).sqrt();
    let d1 = -z / (2.0 * t) * g;
    let d2 = (z * z / (4.0 * t * t) - 1.0 / (2.0 * t)) * g;
    Jet { v: [g, d1, d2], abs: [g, d1.abs(), g / (2.0 * t) + z * z / (4.0 * t * t) * g] }
}

fn line_jet(j: Jet) -> KernelJet {
    let mut mixed = [[0.0; 3]; 3];
    mixed[0][0] = -j.v[2];
    KernelJet {
        p: j.v[0],
        grad_x: [j.v[1], 0.0, 0.0],
        mixed,
        laplacian: j.v[2],
        magnitude: j.abs,
    }
}

fn product_jet(a: Jet, b: Jet) -> KernelJet {
    let mut mixed = [[0.0; 3]; 3];
    // ∂_y acting on a function of x - y flips the sign
    mixed[0][0] = -a.v[2] * b.v[0];
    mixed[1][1] = -a.v[0] * b.v[2];
    mixed[0][1] = -a.v[1] * b.v[1];
    mixed[1][0] = -a.v[1] * b.v[1];
    KernelJet {
        p: a.v[0] * b.v[0],
        grad_x: [a.v[1] * b.v[0], a.v[0] * b.v[1], 0.0],
        mixed,
        laplacian: a.v[2] * b.v[0] + a.v[0] * b.v[2],
        magnitude: [
            a.abs[0] * b.abs[0],
            a.abs[1] * b.abs[0] + a.abs[0] * b.abs[1],
            a.abs[2] * b.abs[0] + a.abs[1] * b.abs[1] + a.abs[0] * b.abs[2],
        ],
    }
}

fn image_sum(delta: f64, t: f64, length: f64, tol: f64, k_max: usize) -> Result<Jet> {
    let r = delta.rem_euclid(length);
    let delta = if r > 0.5 * length { r - length } else { r };
    let mut acc = gaussian_jet(delta, t);
    let envelope = |z: f64| {
        let g = (-z * z / (4.0 * t)).exp() / (4.0 * PI * t).sqrt();
        g * (1.0 + z.abs() / (2.0 * t) + z * z / (4.0 * t * t) + 1.0 / (2.0 * t))
    };
    let scale = |acc: &Jet| acc.v[0] * (1.0 + 1.0 / (2.0 * t));
    for k in 1..=k_max {
        for z in [delta + k as f64 * length, delta - k as f64 * length] {
            let j = gaussian_jet(z, t);
            for i in 0..3 {
                acc.v[i] += j.v[i];
                acc.abs[i] += j.abs[i];
            }
        }
        let next = 2.0 * envelope((k + 1) as f64 * length - delta.abs());
        if next <= tol * scale(&acc) {
            return Ok(acc);
        }
    }
    Err(Error::Truncation {
        context: format!("image sum at t = {t}"),
        target: tol,
        achieved: 2.0 * envelope((k_max + 1) as f64 * length - delta.abs()) / scale(&acc),
    })
}

fn spectral_sum(delta: f64, t: f64, length: f64, tol: f64, n_max: usize) -> Result<Jet> {
    let base = 1.0 / length;
    let mut v = [base, 0.0, 0.0];
    let mut abs = [base, 0.0, 0.0];
    for n in 1..=n_max {
        let k = 2.0 * PI * n as f64 / length;
        let e = 2.0 * base * (-k * k * t).exp();
        let (s, c) = (k * delta).sin_cos();
        v[0] += e * c;
        v[1] -= e * k * s;
        v[2] -= e * k * k * c;
        abs[0] += e;
        abs[1] += e * k;
        abs[2] += e * k * k;
        if e * (1.0 + k + k * k) < tol * base {
            return Ok(Jet { v, abs });
        }
    }
    let k = 2.0 * PI * n_max as f64 / length;
    Err(Error::Truncation {
        context: format!("spectral series at t = {t}"),
        target: tol,
        achieved: 2.0 * (-k * k * t).exp() * (1.0 + k + k * k),
    })
}

struct SphereSeries {
    value: f64,
    d1: f64,
    d2: f64,
    lap: f64,
    abs: [f64; 3],
}

/// `Σ (2l+1) e^{-l(l+1)τ} P_l(c)` and its `c`-derivatives, unnormalized.
fn sphere_series(c: f64, tau: f64, tol: f64, n_max: usize) -> Result<SphereSeries> {
    let coef = |l: usize| {
        let lf = l as f64;
        (2.0 * lf + 1.0) * (-lf * (lf + 1.0) * tau).exp()
    };
    let mut lmax = None;
    for l in 1..=n_max {
        let lf = l as f64;
        if coef(l) * (1.0 + lf * lf).powi(2) < tol {
            lmax = Some(l);
            break;
        }
    }
    let Some(lmax) = lmax else {
        let lf = n_max as f64;
        return Err(Error::Truncation {
            context: format!("sphere Legendre series at scaled time {tau}"),
            target: tol,
            achieved: coef(n_max) * (1.0 + lf * lf).powi(2),
        });
    };
    let mut p = Vec::with_capacity(lmax + 1);
    let mut d1 = Vec::new();
    let mut d2 = Vec::new();
    legendre_table(lmax, c, &mut p);
    legendre_derivative_tables(&p, &mut d1, &mut d2);
    let mut s = SphereSeries { value: 0.0, d1: 0.0, d2: 0.0, lap: 0.0, abs: [0.0; 3] };
    for l in 0..=lmax {
        let a = coef(l);
        let lam = (l * (l + 1)) as f64;
        s.value += a * p[l];
        s.d1 += a * d1[l];
        s.d2 += a * d2[l];
        s.lap -= a * lam * p[l];
        s.abs[0] += a;
        s.abs[1] += 0.5 * a * lam;
        s.abs[2] += a * lam * (1.0 + lam);
    }
    Ok(s)
}

fn projector(x: &Point, r2: f64) -> [[f64; 3]; 3] {
    let mut p = [[0.0; 3]; 3];
    for i in 0..3 {
        for j in 0..3 {
            p[i][j] = if i == j { 1.0 } else { 0.0 } - x.0[i] * x.0[j] / r2;
        }
    }
    p
}

fn mat_mul(a: &[[f64; 3]; 3], b: &[[f64; 3]; 3]) -> [[f64; 3]; 3] {
    let mut c = [[0.0; 3]; 3];
    for i in 0..3 {
        for j in 0..3 {
            c[i][j] = (0..3).map(|k| a[i][k] * b[k][j]).sum();
        }
    }
    c
}

#[cfg(test)]
mod tests {
    use super::*;

    fn circle() -> ManifoldModel {
        ManifoldModel::circle(2.0 * PI).unwrap()
    }

    #[test]
    fn euclid_line_values() {
        let e = HeatKernelEvaluator::new(ManifoldModel::euclid_line(10.0).unwrap());
        let o = Point::on_line(0.0);
        let one = Point::on_line(1.0);
        assert!((e.eval_p(&o, &o, 1.0).unwrap() - 0.282_094_791_773_878_1).abs() < 1e-15);
        assert!((e.eval_p(&o, &one, 1.0).unwrap() - 0.219_695_644_733_861_3).abs() < 1e-12);
        let g = e.eval_grad_p(&one, &o, 1.0).unwrap();
        assert!((g[0] + 0.109_847_822_366_930_6).abs() < 1e-12);
        let m = e.eval_grad2_p(&o, &o, 1.0).unwrap();
        assert!((m[0][0] - 0.141_047_395_886_939).abs() < 1e-12);
        assert!(e.eval_p(&o, &o, 0.0).is_err());
    }

    #[test]
    fn circle_image_matches_spectral() {
        let m = circle();
        let img = HeatKernelEvaluator::with_method(m, KernelMethod::ImageSum { k_max: 64 }, 1e-15).unwrap();
        let spe = HeatKernelEvaluator::with_method(m, KernelMethod::SpectralSeries { n_max: 100_000 }, 1e-15).unwrap();
        for &t in &[0.01, 0.1, 0.7, 1.0, 3.0, 10.0] {
            for &x in &[0.0, 0.4, 1.7, 3.1, 5.9] {
                let (a, b) = (Point::on_line(x), Point::on_line(0.3));
                let ja = img.jet(&a, &b, t).unwrap();
                let jb = spe.jet(&a, &b, t).unwrap();
                assert!((ja.p - jb.p).abs() < 1e-12, "t={t} x={x} {} {}", ja.p, jb.p);
                assert!((ja.grad_x[0] - jb.grad_x[0]).abs() < 1e-11);
                assert!((ja.mixed[0][0] - jb.mixed[0][0]).abs() < 1e-10);
            }
        }
    }

    #[test]
    fn circle_gradient_matches_finite_difference() {
        let e = HeatKernelEvaluator::new(circle());
        let h = 1e-5;
        for &t in &[0.05, 0.5, 2.0] {
            let y = Point::on_line(1.0);
            let x = 2.3;
            let fd = (e.eval_p(&Point::on_line(x + h), &y, t).unwrap()
                - e.eval_p(&Point::on_line(x - h), &y, t).unwrap())
                / (2.0 * h);
            let g = e.eval_grad_p(&Point::on_line(x), &y, t).unwrap()[0];
            assert!((fd - g).abs() < 1e-7, "t={t}");
            let mfd = (e.eval_p(&Point::on_line(x + h), &Point::on_line(1.0 + h), t).unwrap()
                - e.eval_p(&Point::on_line(x + h), &Point::on_line(1.0 - h), t).unwrap()
                - e.eval_p(&Point::on_line(x - h), &Point::on_line(1.0 + h), t).unwrap()
                + e.eval_p(&Point::on_line(x - h), &Point::on_line(1.0 - h), t).unwrap())
                / (4.0 * h * h);
            let mx = e.eval_grad2_p(&Point::on_line(x), &y, t).unwrap()[0][0];
            assert!((mfd - mx).abs() < 1e-6 * (1.0 + mx.abs()), "t={t} {mfd} {mx}");
        }
    }

    #[test]
    fn torus_is_a_product() {
        let m = ManifoldModel::torus2(2.0 * PI, 3.0).unwrap();
        let e = HeatKernelEvaluator::new(m);
        let c1 = HeatKernelEvaluator::new(ManifoldModel::circle(2.0 * PI).unwrap());
        let c2 = HeatKernelEvaluator::new(ManifoldModel::circle(3.0).unwrap());
        let (x, y) = (Point::planar(0.4, 2.9), Point::planar(5.0, 0.2));
        for &t in &[0.03, 0.4, 2.5] {
            let p = e.eval_p(&x, &y, t).unwrap();
            let q = c1.eval_p(&Point::on_line(0.4), &Point::on_line(5.0), t).unwrap()
                * c2.eval_p(&Point::on_line(2.9), &Point::on_line(0.2), t).unwrap();
            assert!((p - q).abs() < 1e-12 * q.max(1.0));
        }
    }

    #[test]
    fn sphere_derivatives_match_finite_differences() {
        let m = ManifoldModel::sphere2(1.0).unwrap();
        let e = HeatKernelEvaluator::new(m);
        let rot = |th: f64, ph: f64| Point::spatial(th.sin() * ph.cos(), th.sin() * ph.sin(), th.cos());
        let y = rot(1.1, 0.3);
        let t = 0.2;
        let (th, ph) = (0.7f64, 1.2f64);
        let h = 1e-5;
        let x = rot(th, ph);
        let g = e.eval_grad_p(&x, &y, t).unwrap();
        // directional derivatives along the coordinate tangent vectors
        let e_th = [th.cos() * ph.cos(), th.cos() * ph.sin(), -th.sin()];
        let e_ph = [-ph.sin(), ph.cos(), 0.0];
        let fd_th = (e.eval_p(&rot(th + h, ph), &y, t).unwrap() - e.eval_p(&rot(th - h, ph), &y, t).unwrap()) / (2.0 * h);
        let fd_ph = (e.eval_p(&rot(th, ph + h), &y, t).unwrap() - e.eval_p(&rot(th, ph - h), &y, t).unwrap())
            / (2.0 * h * th.sin());
        let dot = |a: &[f64; 3], b: &[f64; 3]| a.iter().zip(b).map(|(p, q)| p * q).sum::<f64>();
        assert!((dot(&g, &e_th) - fd_th).abs() < 1e-7);
        assert!((dot(&g, &e_ph) - fd_ph).abs() < 1e-7);
        // mixed derivative along e_th at x and the analogous direction at y
        let (ty, py) = (1.1f64, 0.3f64);
        let f_th = [ty.cos() * py.cos(), ty.cos() * py.sin(), -ty.sin()];
        let mx = e.eval_grad2_p(&x, &y, t).unwrap();
        let bil: f64 = (0..3).map(|i| (0..3).map(|j| e_th[i] * mx[i][j] * f_th[j]).sum::<f64>()).sum();
        let pp = |a: f64, b: f64| e.eval_p(&rot(th + a, ph), &rot(ty + b, py), t).unwrap();
        let mfd = (pp(h, h) - pp(h, -h) - pp(-h, h) + pp(-h, -h)) / (4.0 * h * h);
        assert!((bil - mfd).abs() < 1e-5, "{bil} {mfd}");
    }

    #[test]
    fn time_derivative_matches_laplacian() {
        let models = [
            circle(),
            ManifoldModel::torus2(2.0 * PI, 3.0).unwrap(),
            ManifoldModel::sphere2(1.0).unwrap(),
            ManifoldModel::euclid_plane(5.0).unwrap(),
        ];
        for m in models {
            let e = HeatKernelEvaluator::new(m);
            let (x, y) = m.pair_at_distance(0.8);
            let t = 0.3;
            let dt = 1e-5;
            let fd = (e.eval_p(&x, &y, t + dt).unwrap() - e.eval_p(&x, &y, t - dt).unwrap()) / (2.0 * dt);
            let lap = e.eval_dt_p(&x, &y, t).unwrap();
            assert!((fd - lap).abs() < 1e-8 * (1.0 + lap.abs()), "{m}: {fd} {lap}");
        }
    }

    #[test]
    fn stochastic_completeness_on_the_sphere() {
        let m = ManifoldModel::sphere2(1.0).unwrap();
        let e = HeatKernelEvaluator::new(m);
        let g = crate::manifold::SampleGrid::uniform(m, 96).unwrap();
        let x = Point::spatial(0.0, 0.6, 0.8);
        for &t in &[0.05, 1.0, 10.0] {
            let vals: Vec<f64> = g.points().iter().map(|y| e.eval_p(&x, y, t).unwrap()).collect();
            assert!((g.integrate(&vals) - 1.0).abs() < 1e-8, "t={t}");
        }
    }

    #[test]
    fn method_model_mismatch_is_rejected() {
        assert!(HeatKernelEvaluator::with_method(circle(), KernelMethod::ClosedFormGaussian, 1e-12).is_err());
        let s = ManifoldModel::sphere2(1.0).unwrap();
        assert!(HeatKernelEvaluator::with_method(s, KernelMethod::ImageSum { k_max: 4 }, 1e-12).is_err());
        let tight = HeatKernelEvaluator::with_method(circle(), KernelMethod::SpectralSeries { n_max: 3 }, 1e-14).unwrap();
        assert!(matches!(
            tight.eval_p(&Point::on_line(0.0), &Point::on_line(1.0), 0.001),
            Err(Error::Truncation { .. })
        ));
    }
}
