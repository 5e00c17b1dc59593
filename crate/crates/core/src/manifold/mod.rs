//! Model geometries: exact distances and ball volumes, sampling grids,
//! geodesic balls and their tents in the upper half-space.

mod balls;
mod grid;

use std::f64::consts::PI;
use std::fmt;

pub use balls::{
    build_tent, enumerate_balls, Ball, BallFamily, Member, RadiiPolicy, Tent, TentCell, TentRule,
};
pub use grid::{GridLayout, SampleGrid};

use crate::error::{invalid, Error, Result};
use crate::numerics::adaptive_integrate;

/// A point in ambient coordinates. Circle and line points use `[x, 0, 0]`,
/// torus and plane points `[x1, x2, 0]`, sphere points a 3-vector of norm ρ.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Point(pub [f64; 3]);

impl Point {
    pub fn on_line(x: f64) -> Self {
        Point([x, 0.0, 0.0])
    }

    pub fn planar(x1: f64, x2: f64) -> Self {
        Point([x1, x2, 0.0])
    }

    pub fn spatial(x: f64, y: f64, z: f64) -> Self {
        Point([x, y, z])
    }

    pub fn dot(&self, other: &Point) -> f64 {
        self.0.iter().zip(other.0.iter()).map(|(a, b)| a * b).sum()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ManifoldModel {
    /// Circle of circumference `length`.
    Circle { length: f64 },
    /// Flat torus `R^2 / (L1 Z x L2 Z)`.
    Torus2 { lengths: [f64; 2] },
    /// Real line, sampled on the window `[-half_width, half_width]`.
    EuclidLine { half_width: f64 },
    /// Plane, sampled on the window `[-half_width, half_width]^2`.
    EuclidPlane { half_width: f64 },
    /// Round sphere of the given radius.
    Sphere2 { radius: f64 },
}

fn positive(name: &str, v: f64) -> Result<f64> {
    if v.is_finite() && v > 0.0 {
        Ok(v)
    } else {
        invalid(format!("{name} must be positive and finite, got {v}"))
    }
}

fn wrap(d: f64, period: f64) -> f64 {
    let r = d.rem_euclid(period);
    r.min(period - r)
}

impl ManifoldModel {
    pub fn circle(length: f64) -> Result<Self> {
        Ok(Self::Circle { length: positive("circumference", length)? })
    }

    pub fn torus2(l1: f64, l2: f64) -> Result<Self> {
        Ok(Self::Torus2 { lengths: [positive("torus side", l1)?, positive("torus side", l2)?] })
    }

    pub fn euclid_line(half_width: f64) -> Result<Self> {
        Ok(Self::EuclidLine { half_width: positive("window half-width", half_width)? })
    }

    pub fn euclid_plane(half_width: f64) -> Result<Self> {
        Ok(Self::EuclidPlane { half_width: positive("window half-width", half_width)? })
    }

    pub fn sphere2(radius: f64) -> Result<Self> {
        Ok(Self::Sphere2 { radius: positive("sphere radius", radius)? })
    }

    pub fn dim(&self) -> usize {
        match self {
            Self::Circle { .. } | Self::EuclidLine { .. } => 1,
            _ => 2,
        }
    }

    pub fn is_compact(&self) -> bool {
        !matches!(self, Self::EuclidLine { .. } | Self::EuclidPlane { .. })
    }

    /// Largest distance between two points (window diagonal for Euclidean models).
    pub fn diameter(&self) -> f64 {
        match *self {
            Self::Circle { length } => 0.5 * length,
            Self::Torus2 { lengths } => 0.5 * lengths[0].hypot(lengths[1]),
            Self::EuclidLine { half_width } => 2.0 * half_width,
            Self::EuclidPlane { half_width } => 2.0 * half_width * 2f64.sqrt(),
            Self::Sphere2 { radius } => PI * radius,
        }
    }

    /// Total measure of a compact model.
    pub fn volume(&self) -> Option<f64> {
        match *self {
            Self::Circle { length } => Some(length),
            Self::Torus2 { lengths } => Some(lengths[0] * lengths[1]),
            Self::Sphere2 { radius } => Some(4.0 * PI * radius * radius),
            _ => None,
        }
    }

    /// `(c_low, c_high)` with `c_low r^n <= |B(x, r)| <= c_high r^n` for `r <= diameter`.
    pub fn ahlfors_constants(&self) -> (f64, f64) {
        match *self {
            Self::Circle { .. } | Self::EuclidLine { .. } => (2.0, 2.0),
            Self::EuclidPlane { .. } => (PI, PI),
            Self::Torus2 { lengths } => {
                let d = self.diameter();
                (lengths[0] * lengths[1] / (d * d), PI)
            }
            Self::Sphere2 { .. } => (4.0 / PI, PI),
        }
    }

    /// Validates that `p` lies in the coordinate domain of the model.
    pub fn check_point(&self, p: &Point) -> Result<()> {
        let ok = p.0.iter().all(|c| c.is_finite())
            && match *self {
                Self::Circle { .. } | Self::Torus2 { .. } => true,
                Self::EuclidLine { half_width } => p.0[0].abs() <= half_width * (1.0 + 1e-12),
                Self::EuclidPlane { half_width } => {
                    p.0[0].abs() <= half_width * (1.0 + 1e-12)
                        && p.0[1].abs() <= half_width * (1.0 + 1e-12)
                }
                Self::Sphere2 { radius } => {
                    (p.dot(p).sqrt() - radius).abs() <= 1e-9 * radius
                }
            };
        if ok {
            Ok(())
        } else {
            Err(Error::OutsideDomain(self.label()))
        }
    }

    pub fn distance(&self, x: &Point, y: &Point) -> Result<f64> {
        self.check_point(x)?;
        self.check_point(y)?;
        Ok(self.dist(x, y))
    }

    /// Distance without domain validation, for inner loops over grid points.
    #[inline]
    pub fn dist(&self, x: &Point, y: &Point) -> f64 {
        match *self {
            Self::Circle { length } => wrap(x.0[0] - y.0[0], length),
            Self::Torus2 { lengths } => {
                wrap(x.0[0] - y.0[0], lengths[0]).hypot(wrap(x.0[1] - y.0[1], lengths[1]))
            }
            Self::EuclidLine { .. } => (x.0[0] - y.0[0]).abs(),
            Self::EuclidPlane { .. } => (x.0[0] - y.0[0]).hypot(x.0[1] - y.0[1]),
            Self::Sphere2 { radius } => {
                let [a1, a2, a3] = x.0;
                let [b1, b2, b3] = y.0;
                let cross = [a2 * b3 - a3 * b2, a3 * b1 - a1 * b3, a1 * b2 - a2 * b1];
                let s = (cross[0] * cross[0] + cross[1] * cross[1] + cross[2] * cross[2]).sqrt();
                radius * s.atan2(x.dot(y))
            }
        }
    }

    /// Exact measure of `B(x, r)`; homogeneous models, so the center is irrelevant.
    pub fn ball_volume(&self, ball: &Ball) -> f64 {
        self.ball_volume_at_radius(ball.radius)
    }

    pub fn ball_volume_at_radius(&self, r: f64) -> f64 {
        match *self {
            Self::Circle { length } => (2.0 * r).min(length),
            Self::EuclidLine { .. } => 2.0 * r,
            Self::EuclidPlane { .. } => PI * r * r,
            Self::Sphere2 { radius } => {
                let theta = (r / radius).min(PI);
                2.0 * PI * radius * radius * (1.0 - theta.cos())
            }
            Self::Torus2 { lengths } => torus_disk_area(r, 0.5 * lengths[0], 0.5 * lengths[1]),
        }
    }

    /// A pair of points at geodesic distance `d` (clamped to the diameter on
    /// compact models),
    /// used to sample kernels that depend only on distance.
    pub fn pair_at_distance(&self, d: f64) -> (Point, Point) {
        // Euclidean kernels are ambient, so windows do not cap the distance
        let d = if self.is_compact() { d.clamp(0.0, self.diameter()) } else { d.max(0.0) };
        match *self {
            Self::Circle { .. } | Self::EuclidLine { .. } => {
                (Point::on_line(-0.5 * d), Point::on_line(0.5 * d))
            }
            Self::Torus2 { lengths } => {
                // along the diagonal direction once d exceeds the shorter half-side
                let (a, b) = (0.5 * lengths[0], 0.5 * lengths[1]);
                let (dx, dy) = if d <= a {
                    (d, 0.0)
                } else {
                    (a, (d * d - a * a).sqrt().min(b))
                };
                (Point::planar(0.0, 0.0), Point::planar(dx, dy))
            }
            Self::EuclidPlane { .. } => {
                let h = d / (2.0 * 2f64.sqrt());
                (Point::planar(-h, -h), Point::planar(h, h))
            }
            Self::Sphere2 { radius } => {
                let th = d / radius;
                (
                    Point::spatial(0.0, 0.0, radius),
                    Point::spatial(radius * th.sin(), 0.0, radius * th.cos()),
                )
            }
        }
    }

    /// Stable identifier used in reports, e.g. `circle(L=6.2831853071795862e0)`.
    pub fn label(&self) -> String {
        match *self {
            Self::Circle { length } => format!("circle(L={length:.16e})"),
            Self::Torus2 { lengths } => {
                format!("torus2(L1={:.16e};L2={:.16e})", lengths[0], lengths[1])
            }
            Self::EuclidLine { half_width } => format!("euclid_line(W={half_width:.16e})"),
            Self::EuclidPlane { half_width } => format!("euclid_plane(W={half_width:.16e})"),
            Self::Sphere2 { radius } => format!("sphere2(rho={radius:.16e})"),
        }
    }
}

impl fmt::Display for ManifoldModel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.label())
    }
}

/// Area of the disk of radius `r` intersected with the rectangle
/// `[-a, a] x [-b, b]`, which is the measure of a geodesic ball on the flat
/// torus with half-sides `a`, `b`.
fn torus_disk_area(r: f64, a: f64, b: f64) -> f64 {
    if r <= a.min(b) {
        return PI * r * r;
    }
    if r * r >= a * a + b * b {
        return 4.0 * a * b;
    }
    let chord = |x: f64| {
        let h = (r * r - x * x).max(0.0).sqrt();
        2.0 * h.min(b)
    };
    let upper = r.min(a);
    // the integrand has kinks where the disk boundary crosses y = ±b
    let kink = (r * r - b * b).max(0.0).sqrt().min(upper);
    let mut area = 0.0;
    for (lo, hi) in [(0.0, kink), (kink, upper)] {
        if hi > lo {
            area += adaptive_integrate(chord, lo, hi, 1e-12)
                .map(|i| i.value)
                .unwrap_or(f64::NAN);
        }
    }
    2.0 * area
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn circle_distances() {
        let m = ManifoldModel::circle(2.0 * PI).unwrap();
        let d = m.distance(&Point::on_line(0.0), &Point::on_line(PI)).unwrap();
        assert!((d - PI).abs() < 1e-15);
        let d = m.distance(&Point::on_line(0.0), &Point::on_line(1.5 * PI)).unwrap();
        assert!((d - 0.5 * PI).abs() < 1e-15);
    }

    #[test]
    fn sphere_quarter_circle() {
        let m = ManifoldModel::sphere2(1.0).unwrap();
        let d = m
            .distance(&Point::spatial(0.0, 0.0, 1.0), &Point::spatial(1.0, 0.0, 0.0))
            .unwrap();
        assert!((d - 0.5 * PI).abs() < 1e-15);
        assert!(m.distance(&Point::spatial(0.0, 0.0, 2.0), &Point::spatial(1.0, 0.0, 0.0)).is_err());
    }

    #[test]
    fn window_rejects_outside_points() {
        let m = ManifoldModel::euclid_line(5.0).unwrap();
        assert!(m.distance(&Point::on_line(6.0), &Point::on_line(0.0)).is_err());
        assert!(ManifoldModel::circle(-1.0).is_err());
    }

    #[test]
    fn ball_volumes() {
        let c = ManifoldModel::circle(2.0 * PI).unwrap();
        assert!((c.ball_volume_at_radius(1.0) - 2.0).abs() < 1e-15);
        let s = ManifoldModel::sphere2(1.0).unwrap();
        assert!((s.ball_volume_at_radius(0.5 * PI) - 2.0 * PI).abs() < 1e-14);
        let t = ManifoldModel::torus2(2.0 * PI, 2.0 * PI).unwrap();
        assert!((t.ball_volume_at_radius(0.5) - 0.25 * PI).abs() < 1e-14);
        // beyond the injectivity radius the disk folds onto itself
        let big = t.ball_volume_at_radius(4.0);
        assert!(big < PI * 16.0 && big > PI * PI);
        assert!((t.ball_volume_at_radius(t.diameter()) - 4.0 * PI * PI).abs() < 1e-9);
        // continuity at the injectivity radius
        let r0 = PI;
        assert!((t.ball_volume_at_radius(r0 + 1e-9) - PI * r0 * r0).abs() < 1e-6);
    }

    #[test]
    fn pair_at_distance_is_exact() {
        let models = [
            ManifoldModel::circle(2.0 * PI).unwrap(),
            ManifoldModel::torus2(2.0 * PI, 3.0).unwrap(),
            ManifoldModel::euclid_line(10.0).unwrap(),
            ManifoldModel::euclid_plane(10.0).unwrap(),
            ManifoldModel::sphere2(1.5).unwrap(),
        ];
        for m in models {
            for d in [0.0f64, 0.3, 1.0, 2.0] {
                let d = d.min(m.diameter());
                let (x, y) = m.pair_at_distance(d);
                assert!((m.distance(&x, &y).unwrap() - d).abs() < 1e-12, "{m} {d}");
            }
        }
    }
}
