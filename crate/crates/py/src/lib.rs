//! Python bindings for `bmoext`: manifolds, sample grids, heat kernels,
//! σ-harmonic extensions and the BMO / Carleson seminorms.
//!
//! Points are passed as sequences of coordinates (one for the circle and
//! the line, two for the torus and the plane, three ambient coordinates on
//! the sphere). Grid data is a flat list in grid order.

use pyo3::exceptions::PyValueError;
use pyo3::prelude::*;
use pyo3::types::PyDict;

use bmoext::admissibility::{admissibility_report, sample_grid};
use bmoext::extension::{extend, pde_residual, ExtensionConfig};
use bmoext::heat_kernel::{fit_gaussian_bound, BoundClaim, HeatKernelEvaluator};
use bmoext::jacobian::{gradient_energy, jacobian_pairing};
use bmoext::manifold::{enumerate_balls, ManifoldModel, Point, RadiiPolicy, SampleGrid, TentRule};
use bmoext::maximal::cone_sup_ratio;
use bmoext::numerics::special;
use bmoext::seminorms::{bmo_seminorm, carleson_seminorm, pairing_check, square_energy};

fn py_err(e: bmoext::Error) -> PyErr {
    PyValueError::new_err(e.to_string())
}

fn point(model: &ManifoldModel, xs: &[f64]) -> PyResult<Point> {
    let want = match model {
        ManifoldModel::Circle { .. } | ManifoldModel::EuclidLine { .. } => 1,
        ManifoldModel::Torus2 { .. } | ManifoldModel::EuclidPlane { .. } => 2,
        ManifoldModel::Sphere2 { .. } => 3,
    };
    if xs.len() != want {
        return Err(PyValueError::new_err(format!("{model} points take {want} coordinates, got {}", xs.len())));
    }
    let mut p = [0.0; 3];
    p[..want].copy_from_slice(xs);
    let p = Point(p);
    model.check_point(&p).map_err(py_err)?;
    Ok(p)
}

#[pyclass(name = "Manifold", frozen)]
struct PyManifold {
    inner: ManifoldModel,
}

#[pymethods]
impl PyManifold {
    #[staticmethod]
    fn circle(length: f64) -> PyResult<Self> {
        Ok(Self { inner: ManifoldModel::circle(length).map_err(py_err)? })
    }

    #[staticmethod]
    fn torus2(l1: f64, l2: f64) -> PyResult<Self> {
        Ok(Self { inner: ManifoldModel::torus2(l1, l2).map_err(py_err)? })
    }

    #[staticmethod]
    fn euclid_line(half_width: f64) -> PyResult<Self> {
        Ok(Self { inner: ManifoldModel::euclid_line(half_width).map_err(py_err)? })
    }

    #[staticmethod]
    fn euclid_plane(half_width: f64) -> PyResult<Self> {
        Ok(Self { inner: ManifoldModel::euclid_plane(half_width).map_err(py_err)? })
    }

    #[staticmethod]
    fn sphere2(radius: f64) -> PyResult<Self> {
        Ok(Self { inner: ManifoldModel::sphere2(radius).map_err(py_err)? })
    }

    #[getter]
    fn dim(&self) -> usize {
        self.inner.dim()
    }

    #[getter]
    fn diameter(&self) -> f64 {
        self.inner.diameter()
    }

    #[getter]
    fn volume(&self) -> Option<f64> {
        self.inner.volume()
    }

    /// `(lower, upper)` constants with `lower r^n <= |B(x, r)| <= upper r^n`.
    fn ahlfors_constants(&self) -> (f64, f64) {
        self.inner.ahlfors_constants()
    }

    fn distance(&self, x: Vec<f64>, y: Vec<f64>) -> PyResult<f64> {
        let (x, y) = (point(&self.inner, &x)?, point(&self.inner, &y)?);
        self.inner.distance(&x, &y).map_err(py_err)
    }

    fn __repr__(&self) -> String {
        format!("Manifold({})", self.inner.label())
    }
}

#[pyclass(name = "Grid", frozen)]
struct PyGrid {
    inner: SampleGrid,
}

#[pymethods]
impl PyGrid {
    #[new]
    fn new(manifold: PyRef<'_, PyManifold>, n: usize) -> PyResult<Self> {
        Ok(Self { inner: SampleGrid::uniform(manifold.inner, n).map_err(py_err)? })
    }

    #[getter]
    fn manifold(&self) -> PyManifold {
        PyManifold { inner: *self.inner.model() }
    }

    /// Coordinates of every grid point, trimmed to the manifold dimension
    /// (three ambient coordinates on the sphere).
    #[getter]
    fn points(&self) -> Vec<Vec<f64>> {
        let k = match self.inner.model() {
            ManifoldModel::Sphere2 { .. } => 3,
            m => m.dim(),
        };
        self.inner.points().iter().map(|p| p.0[..k].to_vec()).collect()
    }

    #[getter]
    fn weights(&self) -> Vec<f64> {
        self.inner.weights().to_vec()
    }

    #[getter]
    fn spacing(&self) -> f64 {
        self.inner.spacing()
    }

    fn integrate(&self, values: Vec<f64>) -> PyResult<f64> {
        if values.len() != self.inner.len() {
            return Err(PyValueError::new_err("values must have one entry per grid point"));
        }
        Ok(self.inner.integrate(&values))
    }

    fn __len__(&self) -> usize {
        self.inner.len()
    }

    fn __repr__(&self) -> String {
        format!("Grid({}, {})", self.inner.model().label(), self.inner.label())
    }
}

#[pyclass(name = "HeatKernel", frozen)]
struct PyHeatKernel {
    inner: HeatKernelEvaluator,
}

#[pymethods]
impl PyHeatKernel {
    #[new]
    fn new(manifold: PyRef<'_, PyManifold>) -> Self {
        Self { inner: HeatKernelEvaluator::new(manifold.inner) }
    }

    fn p(&self, x: Vec<f64>, y: Vec<f64>, t: f64) -> PyResult<f64> {
        let m = self.inner.model();
        self.inner.eval_p(&point(m, &x)?, &point(m, &y)?, t).map_err(py_err)
    }

    fn dt_p(&self, x: Vec<f64>, y: Vec<f64>, t: f64) -> PyResult<f64> {
        let m = self.inner.model();
        self.inner.eval_dt_p(&point(m, &x)?, &point(m, &y)?, t).map_err(py_err)
    }

    fn grad_p(&self, x: Vec<f64>, y: Vec<f64>, t: f64) -> PyResult<[f64; 3]> {
        let m = self.inner.model();
        self.inner.eval_grad_p(&point(m, &x)?, &point(m, &y)?, t).map_err(py_err)
    }

    /// Smallest `C` with `claim <= C t^{-power} exp(-c d²/t)` on an `n x n`
    /// `(d, t)` grid; `claim` is `heat1`, `heat2` or `heat3`.
    #[pyo3(signature = (claim, c, n=24, t_min=1e-3, t_max=1.0))]
    fn fit_gaussian_bound(&self, claim: &str, c: f64, n: usize, t_min: f64, t_max: f64) -> PyResult<f64> {
        let claim = match claim {
            "heat1" => BoundClaim::Heat1,
            "heat2" => BoundClaim::Heat2,
            "heat3" => BoundClaim::Heat3,
            other => return Err(PyValueError::new_err(format!("unknown claim {other:?}"))),
        };
        let (d, t) = sample_grid(self.inner.model(), n, t_min, t_max).map_err(py_err)?;
        Ok(fit_gaussian_bound(&self.inner, claim, c, &d, &t).map_err(py_err)?.constant)
    }

    /// Fitted constants of the four admissibility conditions, keyed
    /// `c1` to `c4`.
    #[pyo3(signature = (sigma, n=24, t_min=0.05, t_max=1.0))]
    fn admissibility<'py>(&self, py: Python<'py>, sigma: f64, n: usize, t_min: f64, t_max: f64) -> PyResult<Bound<'py, PyDict>> {
        let (d, t) = sample_grid(self.inner.model(), n, t_min, t_max).map_err(py_err)?;
        let rep = admissibility_report(&self.inner, sigma, &d, &t).map_err(py_err)?;
        let out = PyDict::new(py);
        for f in &rep.fits {
            out.set_item(f.condition.name(), f.fitted_c)?;
        }
        Ok(out)
    }
}

/// One horizontal slice of an extension.
#[pyclass(name = "Slice", frozen, get_all)]
struct PySlice {
    t: f64,
    values: Vec<f64>,
    dt: Vec<f64>,
    grad: Vec<[f64; 3]>,
}

#[pyclass(name = "Extension", frozen)]
struct PyExtension {
    inner: ExtensionConfig,
}

impl PyExtension {
    fn data(&self, u: &[f64]) -> PyResult<()> {
        if u.len() != self.inner.grid().len() {
            return Err(PyValueError::new_err(format!(
                "data has {} samples, grid has {}",
                u.len(),
                self.inner.grid().len()
            )));
        }
        Ok(())
    }
}

#[pymethods]
impl PyExtension {
    #[new]
    #[pyo3(signature = (sigma, grid, t_levels, order=64))]
    fn new(sigma: f64, grid: PyRef<'_, PyGrid>, t_levels: Vec<f64>, order: usize) -> PyResult<Self> {
        Ok(Self { inner: ExtensionConfig::new(sigma, grid.inner.clone(), t_levels, order).map_err(py_err)? })
    }

    #[getter]
    fn sigma(&self) -> f64 {
        self.inner.sigma()
    }

    #[getter]
    fn t_levels(&self) -> Vec<f64> {
        self.inner.t_levels().to_vec()
    }

    /// Extension of `u` on every t level.
    fn extend(&self, u: Vec<f64>) -> PyResult<Vec<PySlice>> {
        self.data(&u)?;
        let f = extend(&self.inner, &u).map_err(py_err)?;
        Ok(f.slices()
            .iter()
            .map(|s| PySlice { t: s.t, values: s.values.clone(), dt: s.dt.clone(), grad: s.grad.clone() })
            .collect())
    }

    /// Largest absolute residual of the extension equation over all levels.
    fn pde_residual(&self, u: Vec<f64>) -> PyResult<f64> {
        self.data(&u)?;
        Ok(pde_residual(&extend(&self.inner, &u).map_err(py_err)?).max_abs)
    }

    /// `e_t`, `e_x`, `norm_sq` and `tail` of the square-function energy.
    fn square_energy<'py>(&self, py: Python<'py>, u: Vec<f64>) -> PyResult<Bound<'py, PyDict>> {
        self.data(&u)?;
        let e = square_energy(&self.inner, &u).map_err(py_err)?;
        let out = PyDict::new(py);
        out.set_item("e_t", e.e_t)?;
        out.set_item("e_x", e.e_x)?;
        out.set_item("norm_sq", e.norm_sq)?;
        out.set_item("tail", e.tail)?;
        Ok(out)
    }

    /// `(lhs, rhs, relative_gap)` of the pairing identity.
    #[pyo3(signature = (u, phi, tol=1e-4))]
    fn pairing(&self, u: Vec<f64>, phi: Vec<f64>, tol: f64) -> PyResult<(f64, f64, f64)> {
        self.data(&u)?;
        self.data(&phi)?;
        let r = pairing_check(&self.inner, &u, &phi, tol).map_err(py_err)?;
        Ok((r.lhs, r.rhs, r.get("relative_gap").unwrap_or(f64::NAN)))
    }

    /// Carleson seminorm over `levels` dyadic radii ending at `r_max`.
    #[pyo3(signature = (u, r_max, levels=4, stride=1, tent_nodes=8))]
    fn carleson(&self, u: Vec<f64>, r_max: f64, levels: u32, stride: usize, tent_nodes: usize) -> PyResult<f64> {
        self.data(&u)?;
        let g = self.inner.grid();
        let balls = enumerate_balls(g.model(), g, RadiiPolicy::dyadic_levels(r_max, levels), stride).map_err(py_err)?;
        Ok(carleson_seminorm(&self.inner, &u, &balls, TentRule::GaussLegendre { n: tent_nodes })
            .map_err(py_err)?
            .value)
    }

    /// `max ρ`, the largest ratio of cone suprema of the extension gradient
    /// to the maximal function of the gradient.
    fn cone_ratio(&self, u: Vec<f64>) -> PyResult<f64> {
        self.data(&u)?;
        Ok(cone_sup_ratio(&self.inner, &u).map_err(py_err)?.max_rho)
    }
}

/// BMO seminorm over `levels` dyadic radii ending at `r_max`.
#[pyfunction]
#[pyo3(signature = (grid, u, r_max, levels=4, stride=1))]
fn bmo(grid: PyRef<'_, PyGrid>, u: Vec<f64>, r_max: f64, levels: u32, stride: usize) -> PyResult<f64> {
    let g = &grid.inner;
    let balls = enumerate_balls(g.model(), g, RadiiPolicy::dyadic_levels(r_max, levels), stride).map_err(py_err)?;
    Ok(bmo_seminorm(g.model(), g, &u, &balls).map_err(py_err)?.value)
}

/// `∫ det(df) φ` and `‖∇f‖²` for a map `f = (f1, f2)` sampled on a torus grid.
#[pyfunction]
fn jacobian(grid: PyRef<'_, PyGrid>, f1: Vec<f64>, f2: Vec<f64>, phi: Vec<f64>) -> PyResult<(f64, f64)> {
    let g = &grid.inner;
    let lhs = jacobian_pairing(g, &f1, &f2, &phi).map_err(py_err)?;
    Ok((lhs, gradient_energy(g, &f1, &f2).map_err(py_err)?))
}

/// Extension profile of an eigenfunction, `2^{1-σ} Γ(σ)^{-1} r^σ K_σ(r)`.
#[pyfunction]
fn bessel_profile(sigma: f64, r: f64) -> f64 {
    special::bessel_profile(sigma, r)
}

#[pymodule]
fn bmoext_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyManifold>()?;
    m.add_class::<PyGrid>()?;
    m.add_class::<PyHeatKernel>()?;
    m.add_class::<PySlice>()?;
    m.add_class::<PyExtension>()?;
    m.add_function(wrap_pyfunction!(bmo, m)?)?;
    m.add_function(wrap_pyfunction!(jacobian, m)?)?;
    m.add_function(wrap_pyfunction!(bessel_profile, m)?)?;
    Ok(())
}
