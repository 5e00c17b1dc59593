//! Spatial parts of the extension: Fourier multipliers on the circle and
//! torus, Legendre projections on the sphere, and convolution with the
//! subordinated kernel on Euclidean windows.

use std::collections::HashMap;
use std::f64::consts::PI;
use std::sync::Arc;

use rayon::prelude::*;
use rustfft::num_complex::Complex;
use rustfft::{Fft, FftPlanner};

use super::subordinator::{multiplier, Subordinator};
use crate::error::{invalid, Result};
use crate::manifold::{GridLayout, ManifoldModel, SampleGrid};
use crate::numerics::special::{legendre_derivative_tables, legendre_table};

type C64 = Complex<f64>;

/// One t-slice of every field.
#[derive(Debug, Clone, Default)]
pub(crate) struct Slice {
    pub values: Vec<f64>,
    pub dt: Vec<f64>,
    pub dtt: Vec<f64>,
    pub lap: Vec<f64>,
    pub grad: Vec<[f64; 3]>,
}

impl Slice {
    fn zeros(n: usize) -> Self {
        Self {
            values: vec![0.0; n],
            dt: vec![0.0; n],
            dtt: vec![0.0; n],
            lap: vec![0.0; n],
            grad: vec![[0.0; 3]; n],
        }
    }
}

/// Data transformed once, ready to produce slices at any `t`.
pub(crate) enum Prepared {
    Periodic { shape: Periodic, fft: Fft2, hat: Vec<C64> },
    Sphere { lmax: usize, r2: f64, rows: Vec<(Vec<f64>, Vec<[f64; 3]>)> },
    Line { n: usize, h: f64, wu: Vec<f64>, sub: Subordinator },
    Plane { n: usize, h: f64, fft: Fft2, src: Vec<C64>, sub: Subordinator },
}

impl Prepared {
    pub fn new(grid: &SampleGrid, sub: &Subordinator, u: &[f64]) -> Result<Self> {
        let sigma = sub.sigma();
        let wu = || grid.weights().iter().zip(u).map(|(a, b)| a * b).collect::<Vec<f64>>();
        Ok(match grid.layout() {
            GridLayout::Periodic1 { n } => {
                let ManifoldModel::Circle { length } = *grid.model() else { unreachable!() };
                Periodic::new([1, n], [1.0, length]).prepare(u)
            }
            GridLayout::Periodic2 { n } => {
                let ManifoldModel::Torus2 { lengths } = *grid.model() else { unreachable!() };
                Periodic::new(n, lengths).prepare(u)
            }
            GridLayout::SphereGauss { .. } => sphere_prepare(grid, u),
            GridLayout::Line { n } => Prepared::Line {
                n,
                h: grid.spacing(),
                wu: wu(),
                sub: Subordinator::with_alpha(sigma, sigma - 0.5, sub.order())?,
            },
            GridLayout::Plane { n } => {
                let m = 2 * n;
                let fft = Fft2::new([m, m]);
                let w = wu();
                let mut src: Vec<C64> = vec![C64::new(0.0, 0.0); m * m];
                for i in 0..n {
                    for j in 0..n {
                        src[i * m + j] = C64::new(w[i * n + j], 0.0);
                    }
                }
                fft.forward(&mut src);
                Prepared::Plane {
                    n,
                    h: grid.spacing(),
                    fft,
                    src,
                    sub: Subordinator::with_alpha(sigma, sigma, sub.order())?,
                }
            }
        })
    }

    /// Adaptive-fallback counts of the internal Euclidean rule, if any.
    pub fn inner_stats(&self) -> Option<super::subordinator::QuadStats> {
        match self {
            Prepared::Line { sub, .. } | Prepared::Plane { sub, .. } => Some(sub.stats()),
            _ => None,
        }
    }

    pub fn slice(&self, sub: &Subordinator, t: f64) -> Result<Slice> {
        match self {
            Prepared::Periodic { shape, fft, hat } => shape.slice(fft, hat, sub, t),
            Prepared::Sphere { lmax, r2, rows } => sphere_slice(*lmax, *r2, rows, sub, t),
            Prepared::Line { n, h, wu, sub } => line_slice(*n, *h, wu, sub, t),
            Prepared::Plane { n, h, fft, src, sub } => plane_slice(*n, *h, fft, src, sub, t),
        }
    }

    pub fn slices(&self, sub: &Subordinator, ts: &[f64]) -> Result<Vec<Slice>> {
        ts.par_iter().map(|&t| self.slice(sub, t)).collect()
    }
}

/// Two-dimensional FFT on a row-major `n[0] x n[1]` array. A leading
/// axis of length 1 gives the one-dimensional transform.
pub(crate) struct Fft2 {
    n: [usize; 2],
    rows: Arc<dyn Fft<f64>>,
    cols: Arc<dyn Fft<f64>>,
    rows_inv: Arc<dyn Fft<f64>>,
    cols_inv: Arc<dyn Fft<f64>>,
}

impl Fft2 {
    pub fn new(n: [usize; 2]) -> Self {
        let mut planner = FftPlanner::new();
        Self {
            n,
            rows: planner.plan_fft_forward(n[1]),
            cols: planner.plan_fft_forward(n[0]),
            rows_inv: planner.plan_fft_inverse(n[1]),
            cols_inv: planner.plan_fft_inverse(n[0]),
        }
    }

    pub fn forward(&self, data: &mut [C64]) {
        self.apply(data, &self.rows, &self.cols);
    }

    /// Inverse transform including the `1/(n0 n1)` normalisation.
    pub fn inverse(&self, data: &mut [C64]) {
        self.apply(data, &self.rows_inv, &self.cols_inv);
        let s = 1.0 / (self.n[0] * self.n[1]) as f64;
        data.iter_mut().for_each(|c| *c *= s);
    }

    fn apply(&self, data: &mut [C64], rows: &Arc<dyn Fft<f64>>, cols: &Arc<dyn Fft<f64>>) {
        let [n0, n1] = self.n;
        rows.process(data);
        if n0 > 1 {
            let mut col = vec![C64::new(0.0, 0.0); n0];
            for j in 0..n1 {
                for i in 0..n0 {
                    col[i] = data[i * n1 + j];
                }
                cols.process(&mut col);
                for i in 0..n0 {
                    data[i * n1 + j] = col[i];
                }
            }
        }
    }
}

/// Signed frequency of FFT bin `j` out of `n`.
pub(crate) fn signed_freq(j: usize, n: usize) -> i64 {
    if 2 * j <= n {
        j as i64
    } else {
        j as i64 - n as i64
    }
}

pub(crate) struct Periodic {
    n: [usize; 2],
    lengths: [f64; 2],
}

impl Periodic {
    fn new(n: [usize; 2], lengths: [f64; 2]) -> Self {
        Self { n, lengths }
    }

    fn wavenumber(&self, axis: usize, j: usize) -> (f64, bool) {
        let n = self.n[axis];
        let k = signed_freq(j, n);
        let nyquist = n.is_multiple_of(2) && 2 * j == n;
        (2.0 * PI * k as f64 / self.lengths[axis], nyquist)
    }

    fn prepare(self, u: &[f64]) -> Prepared {
        let fft = Fft2::new(self.n);
        let mut hat: Vec<C64> = u.iter().map(|&v| C64::new(v, 0.0)).collect();
        fft.forward(&mut hat);
        Prepared::Periodic { shape: self, fft, hat }
    }

    fn slice(&self, fft: &Fft2, hat: &[C64], sub: &Subordinator, t: f64) -> Result<Slice> {
        let [n0, n1] = self.n;
        let dim = if n0 == 1 { 1 } else { 2 };
        // distinct eigenvalues keyed by |frequency| per axis
        let (h0, h1) = (n0 / 2 + 1, n1 / 2 + 1);
        let mut cache = Vec::with_capacity(h0 * h1);
        for i in 0..h0 {
            for j in 0..h1 {
                let k0 = self.wavenumber(0, i).0;
                let k1 = self.wavenumber(1, j).0;
                let lambda = k0 * k0 + k1 * k1;
                cache.push((lambda, multiplier(sub, lambda, t)?));
            }
        }
        let npts = n0 * n1;
        let zero = C64::new(0.0, 0.0);
        let mut fields = vec![vec![zero; npts]; 4 + dim];
        for i in 0..n0 {
            let (k0, ny0) = self.wavenumber(0, i);
            let ai = signed_freq(i, n0).unsigned_abs() as usize;
            for j in 0..n1 {
                let (k1, ny1) = self.wavenumber(1, j);
                let aj = signed_freq(j, n1).unsigned_abs() as usize;
                let (lambda, [m0, m1, m2]) = cache[ai * h1 + aj];
                let idx = i * n1 + j;
                let h = hat[idx];
                fields[0][idx] = h * m0;
                fields[1][idx] = h * m1;
                fields[2][idx] = h * m2;
                fields[3][idx] = h * (-lambda * m0);
                let ik = |k: f64, nyq: bool| if nyq { zero } else { C64::new(0.0, k) };
                if dim == 1 {
                    fields[4][idx] = h * m0 * ik(k1, ny1);
                } else {
                    fields[4][idx] = h * m0 * ik(k0, ny0);
                    fields[5][idx] = h * m0 * ik(k1, ny1);
                }
            }
        }
        let mut real: Vec<Vec<f64>> = fields
            .into_iter()
            .map(|mut f| {
                fft.inverse(&mut f);
                f.into_iter().map(|c| c.re).collect()
            })
            .collect();
        let mut grad = vec![[0.0; 3]; npts];
        for (p, g) in grad.iter_mut().enumerate() {
            for d in 0..dim {
                g[d] = real[4 + d][p];
            }
        }
        real.truncate(4);
        let lap = real.pop().unwrap();
        let dtt = real.pop().unwrap();
        let dt = real.pop().unwrap();
        let values = real.pop().unwrap();
        Ok(Slice { values, dt, dtt, lap, grad })
    }
}

/// Spherical grid: project `u` onto the degree-`l` eigenspaces with the
/// zonal kernels `(2l+1)/(4πρ²) P_l(x·y/ρ²)`, exact for `l <= n_lat - 1`
/// on band-limited data.
fn sphere_prepare(grid: &SampleGrid, u: &[f64]) -> Prepared {
    let GridLayout::SphereGauss { n_lat, .. } = grid.layout() else { unreachable!() };
    let ManifoldModel::Sphere2 { radius } = *grid.model() else { unreachable!() };
    let lmax = n_lat - 1;
    let r2 = radius * radius;
    let pts = grid.points();
    let wu: Vec<f64> = grid.weights().iter().zip(u).map(|(a, b)| a * b).collect();
    let rows = pts
        .par_iter()
        .map(|x| {
            let mut proj = vec![0.0; lmax + 1];
            let mut pgrad = vec![[0.0; 3]; lmax + 1];
            let (mut p, mut d1, mut d2) = (Vec::new(), Vec::new(), Vec::new());
            for (y, &wy) in pts.iter().zip(&wu) {
                if wy == 0.0 {
                    continue;
                }
                let c = (x.dot(y) / r2).clamp(-1.0, 1.0);
                legendre_table(lmax, c, &mut p);
                legendre_derivative_tables(&p, &mut d1, &mut d2);
                let dir = [(y.0[0] - c * x.0[0]) / r2, (y.0[1] - c * x.0[1]) / r2, (y.0[2] - c * x.0[2]) / r2];
                for l in 0..=lmax {
                    let a = (2 * l + 1) as f64 / (4.0 * PI * r2) * wy;
                    proj[l] += a * p[l];
                    let g = a * d1[l];
                    for k in 0..3 {
                        pgrad[l][k] += g * dir[k];
                    }
                }
            }
            (proj, pgrad)
        })
        .collect();
    Prepared::Sphere { lmax, r2, rows }
}

fn sphere_slice(
    lmax: usize,
    r2: f64,
    rows: &[(Vec<f64>, Vec<[f64; 3]>)],
    sub: &Subordinator,
    t: f64,
) -> Result<Slice> {
    let mut mult = Vec::with_capacity(lmax + 1);
    for l in 0..=lmax {
        let lambda = (l * (l + 1)) as f64 / r2;
        mult.push((lambda, multiplier(sub, lambda, t)?));
    }
    let mut s = Slice::zeros(rows.len());
    for (x, (proj, pgrad)) in rows.iter().enumerate() {
        for (l, &(lambda, [m0, m1, m2])) in mult.iter().enumerate() {
            s.values[x] += m0 * proj[l];
            s.dt[x] += m1 * proj[l];
            s.dtt[x] += m2 * proj[l];
            s.lap[x] -= lambda * m0 * proj[l];
            for k in 0..3 {
                s.grad[x][k] += m0 * pgrad[l][k];
            }
        }
    }
    Ok(s)
}

/// Subordinated Euclidean kernel and derivatives at distance `r`:
/// `[K, ∂_t K, q, ΔK, ∂_tt K]` with `∇_z K = q z`.
pub(crate) fn euclid_kernel(sub: &Subordinator, dim: usize, r: f64, t: f64) -> Result<[f64; 5]> {
    let n = dim as f64;
    let alpha = sub.sigma() - 1.0 + 0.5 * n;
    let a = r * r / (t * t);
    let (t2, t3, t4) = (t * t, t * t * t, t * t * t * t);
    let r2 = r * r;
    let factor = (PI * t2).powf(-0.5 * n) * (1.0 + a).powf(-(alpha + 1.0));
    let v = sub.integrate(
        |u| {
            let s = u / (1.0 + a);
            let heat = 4.0 * r2 * s * s / t4 - 2.0 * n * s / t2;
            let heat2 = heat * heat - 32.0 * r2 * s * s * s / (t4 * t2) + 8.0 * n * s * s / t4;
            [
                1.0,
                2.0 * r2 * s / t3 - n / t,
                -2.0 * s / t2,
                heat,
                heat / (2.0 * s) + t2 / (4.0 * s * s) * heat2,
            ]
        },
        [1.0, 1.0 / t, 1.0 / t2, 1.0 / t2, 1.0 / t2],
    )?;
    Ok(v.map(|x| x * factor))
}

fn line_slice(n: usize, h: f64, wu: &[f64], sub: &Subordinator, t: f64) -> Result<Slice> {
    let table = (0..n)
        .map(|d| euclid_kernel(sub, 1, d as f64 * h, t))
        .collect::<Result<Vec<_>>>()?;
    let mut s = Slice::zeros(n);
    for i in 0..n {
        for (j, &wy) in wu.iter().enumerate() {
            if wy == 0.0 {
                continue;
            }
            let k = &table[i.abs_diff(j)];
            let z = (i as f64 - j as f64) * h;
            s.values[i] += k[0] * wy;
            s.dt[i] += k[1] * wy;
            s.grad[i][0] += k[2] * z * wy;
            s.lap[i] += k[3] * wy;
            s.dtt[i] += k[4] * wy;
        }
    }
    Ok(s)
}

fn plane_slice(n: usize, h: f64, fft: &Fft2, src: &[C64], sub: &Subordinator, t: f64) -> Result<Slice> {
    let m = 2 * n;
    let mut cache: HashMap<usize, [f64; 5]> = HashMap::new();
    let zero = C64::new(0.0, 0.0);
    let mut kern = vec![vec![zero; m * m]; 6];
    let span = n as i64 - 1;
    for di in -span..=span {
        for dj in -span..=span {
            let key = (di * di + dj * dj) as usize;
            let k = match cache.get(&key) {
                Some(k) => *k,
                None => {
                    let k = euclid_kernel(sub, 2, (key as f64).sqrt() * h, t)?;
                    cache.insert(key, k);
                    k
                }
            };
            let idx = di.rem_euclid(m as i64) as usize * m + dj.rem_euclid(m as i64) as usize;
            let vals = [k[0], k[1], k[4], k[3], k[2] * di as f64 * h, k[2] * dj as f64 * h];
            for (f, v) in kern.iter_mut().zip(vals) {
                f[idx] = C64::new(v, 0.0);
            }
        }
    }
    let out: Vec<Vec<f64>> = kern
        .into_iter()
        .map(|mut f| {
            fft.forward(&mut f);
            for (a, b) in f.iter_mut().zip(src) {
                *a *= b;
            }
            fft.inverse(&mut f);
            let mut r = vec![0.0; n * n];
            for i in 0..n {
                for j in 0..n {
                    r[i * n + j] = f[i * m + j].re;
                }
            }
            r
        })
        .collect();
    let mut grad = vec![[0.0; 3]; n * n];
    for (p, g) in grad.iter_mut().enumerate() {
        g[0] = out[4][p];
        g[1] = out[5][p];
    }
    let mut it = out.into_iter();
    Ok(Slice {
        values: it.next().unwrap(),
        dt: it.next().unwrap(),
        dtt: it.next().unwrap(),
        lap: it.next().unwrap(),
        grad,
    })
}

fn periodic_shape(grid: &SampleGrid) -> Result<([usize; 2], [f64; 2])> {
    match (grid.layout(), *grid.model()) {
        (GridLayout::Periodic1 { n }, ManifoldModel::Circle { length }) => Ok(([1, n], [1.0, length])),
        (GridLayout::Periodic2 { n }, ManifoldModel::Torus2 { lengths }) => Ok((n, lengths)),
        _ => invalid(format!("spectral differentiation needs a periodic grid, got {}", grid.model())),
    }
}

/// Gradient of the trigonometric interpolant of `u`; the Nyquist mode is
/// dropped.
pub fn spectral_gradient(grid: &SampleGrid, u: &[f64]) -> Result<Vec<[f64; 3]>> {
    let (shape, lengths) = periodic_shape(grid)?;
    if u.len() != grid.len() {
        return invalid(format!("{} samples for a grid of {}", u.len(), grid.len()));
    }
    let fft = Fft2::new(shape);
    let mut hat: Vec<C64> = u.iter().map(|&v| C64::new(v, 0.0)).collect();
    fft.forward(&mut hat);
    let axes: Vec<usize> = if shape[0] == 1 { vec![1] } else { vec![0, 1] };
    let mut out = vec![[0.0; 3]; u.len()];
    for (slot, &ax) in axes.iter().enumerate() {
        let mut d = hat.clone();
        for i in 0..shape[0] {
            for j in 0..shape[1] {
                let (idx, n) = if ax == 0 { (i, shape[0]) } else { (j, shape[1]) };
                let k = signed_freq(idx, n);
                let c = &mut d[i * shape[1] + j];
                if 2 * idx == n {
                    *c = C64::new(0.0, 0.0);
                } else {
                    *c *= C64::new(0.0, 2.0 * PI * k as f64 / lengths[ax]);
                }
            }
        }
        fft.inverse(&mut d);
        for (o, v) in out.iter_mut().zip(&d) {
            o[slot] = v.re;
        }
    }
    Ok(out)
}

/// Largest `|k|` per axis whose Fourier coefficient exceeds `rel` times the
/// largest one; `n/2` means the data reaches the Nyquist mode.
pub fn bandwidth(grid: &SampleGrid, u: &[f64], rel: f64) -> Result<[usize; 2]> {
    let (shape, _) = periodic_shape(grid)?;
    let fft = Fft2::new(shape);
    let mut hat: Vec<C64> = u.iter().map(|&v| C64::new(v, 0.0)).collect();
    fft.forward(&mut hat);
    let top = hat.iter().map(|c| c.norm()).fold(0.0, f64::max);
    let mut band = [0usize; 2];
    for i in 0..shape[0] {
        for j in 0..shape[1] {
            if hat[i * shape[1] + j].norm() > rel * top {
                band[0] = band[0].max(signed_freq(i, shape[0]).unsigned_abs() as usize);
                band[1] = band[1].max(signed_freq(j, shape[1]).unsigned_abs() as usize);
            }
        }
    }
    Ok(band)
}
