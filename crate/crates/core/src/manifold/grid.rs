use std::f64::consts::PI;

use super::{ManifoldModel, Point};
use crate::error::{invalid, Result};
use crate::numerics::gauss_legendre;

/// Index structure of a grid, used by the spectral backends.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GridLayout {
    /// `n` equispaced points on a circle.
    Periodic1 { n: usize },
    /// Tensor grid on the torus, point `(i, j)` at index `i * n[1] + j`.
    Periodic2 { n: [usize; 2] },
    /// `n` equispaced points on the closed window, trapezoid weights.
    Line { n: usize },
    /// `n x n` tensor trapezoid grid, point `(i, j)` at index `i * n + j`.
    Plane { n: usize },
    /// Gauss-Legendre nodes in `cos θ` times uniform longitudes,
    /// point `(i, j)` at index `i * n_lon + j`.
    SphereGauss { n_lat: usize, n_lon: usize },
}

impl GridLayout {
    /// Axis lengths for tensor layouts (one entry for 1-d layouts).
    pub fn shape(&self) -> Vec<usize> {
        match *self {
            Self::Periodic1 { n } | Self::Line { n } => vec![n],
            Self::Periodic2 { n } => n.to_vec(),
            Self::Plane { n } => vec![n, n],
            Self::SphereGauss { n_lat, n_lon } => vec![n_lat, n_lon],
        }
    }
}

#[derive(Debug, Clone)]
pub struct SampleGrid {
    model: ManifoldModel,
    points: Vec<Point>,
    weights: Vec<f64>,
    spacing: f64,
    layout: GridLayout,
}

impl SampleGrid {
    /// Default grid with `n` points per axis (`n` latitudes and `2n`
    /// longitudes on the sphere).
    pub fn uniform(model: ManifoldModel, n: usize) -> Result<Self> {
        match model {
            ManifoldModel::Circle { .. } | ManifoldModel::EuclidLine { .. } => {
                Self::with_shape(model, &[n])
            }
            ManifoldModel::Sphere2 { .. } => Self::with_shape(model, &[n, 2 * n]),
            _ => Self::with_shape(model, &[n, n]),
        }
    }

    pub fn with_shape(model: ManifoldModel, shape: &[usize]) -> Result<Self> {
        let want = match model {
            ManifoldModel::Circle { .. } | ManifoldModel::EuclidLine { .. } => 1,
            _ => 2,
        };
        if shape.len() != want {
            return invalid(format!("{model} needs {want} grid sizes, got {}", shape.len()));
        }
        let min_n = if matches!(model, ManifoldModel::EuclidLine { .. } | ManifoldModel::EuclidPlane { .. }) {
            2
        } else {
            1
        };
        if shape.iter().any(|&k| k < min_n) {
            return invalid(format!("grid sizes must be at least {min_n}, got {shape:?}"));
        }
        let mut points = Vec::new();
        let mut weights = Vec::new();
        let (spacing, layout) = match model {
            ManifoldModel::Circle { length } => {
                let n = shape[0];
                let h = length / n as f64;
                for i in 0..n {
                    points.push(Point::on_line(i as f64 * h));
                    weights.push(h);
                }
                (h, GridLayout::Periodic1 { n })
            }
            ManifoldModel::Torus2 { lengths } => {
                let n = [shape[0], shape[1]];
                let h = [lengths[0] / n[0] as f64, lengths[1] / n[1] as f64];
                for i in 0..n[0] {
                    for j in 0..n[1] {
                        points.push(Point::planar(i as f64 * h[0], j as f64 * h[1]));
                        weights.push(h[0] * h[1]);
                    }
                }
                (h[0].max(h[1]), GridLayout::Periodic2 { n })
            }
            ManifoldModel::EuclidLine { half_width } => {
                let n = shape[0];
                let (xs, ws) = trapezoid(half_width, n);
                for (x, w) in xs.iter().zip(&ws) {
                    points.push(Point::on_line(*x));
                    weights.push(*w);
                }
                (2.0 * half_width / (n - 1) as f64, GridLayout::Line { n })
            }
            ManifoldModel::EuclidPlane { half_width } => {
                if shape[0] != shape[1] {
                    return invalid("plane grids are square");
                }
                let n = shape[0];
                let (xs, ws) = trapezoid(half_width, n);
                for i in 0..n {
                    for j in 0..n {
                        points.push(Point::planar(xs[i], xs[j]));
                        weights.push(ws[i] * ws[j]);
                    }
                }
                (2.0 * half_width / (n - 1) as f64, GridLayout::Plane { n })
            }
            ManifoldModel::Sphere2 { radius } => {
                let (n_lat, n_lon) = (shape[0], shape[1]);
                let rule = gauss_legendre(n_lat)?;
                let dphi = 2.0 * PI / n_lon as f64;
                // north to south so that latitude index grows with θ
                for (c, w) in rule.iter().collect::<Vec<_>>().into_iter().rev() {
                    let s = (1.0 - c * c).max(0.0).sqrt();
                    for j in 0..n_lon {
                        let phi = j as f64 * dphi;
                        points.push(Point::spatial(
                            radius * s * phi.cos(),
                            radius * s * phi.sin(),
                            radius * c,
                        ));
                        weights.push(radius * radius * w * dphi);
                    }
                }
                (
                    radius * (PI / n_lat as f64).max(dphi),
                    GridLayout::SphereGauss { n_lat, n_lon },
                )
            }
        };
        Ok(Self { model, points, weights, spacing, layout })
    }

    pub fn model(&self) -> &ManifoldModel {
        &self.model
    }

    pub fn points(&self) -> &[Point] {
        &self.points
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// Largest nearest-neighbour spacing `h` along the grid axes.
    pub fn spacing(&self) -> f64 {
        self.spacing
    }

    pub fn layout(&self) -> GridLayout {
        self.layout
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// `Σ w_i f(x_i)`.
    pub fn integrate(&self, values: &[f64]) -> f64 {
        values.iter().zip(&self.weights).map(|(v, w)| v * w).sum()
    }

    /// Samples `f` at every grid point.
    pub fn sample(&self, f: impl Fn(&Point) -> f64) -> Vec<f64> {
        self.points.iter().map(f).collect()
    }

    /// Short description such as `128` or `48x48`.
    pub fn label(&self) -> String {
        self.layout
            .shape()
            .iter()
            .map(|n| n.to_string())
            .collect::<Vec<_>>()
            .join("x")
    }
}

fn trapezoid(half_width: f64, n: usize) -> (Vec<f64>, Vec<f64>) {
    let h = 2.0 * half_width / (n - 1) as f64;
    let xs = (0..n)
        .map(|i| if i == n - 1 { half_width } else { -half_width + i as f64 * h })
        .collect();
    let ws = (0..n)
        .map(|i| if i == 0 || i == n - 1 { 0.5 * h } else { h })
        .collect();
    (xs, ws)
}
