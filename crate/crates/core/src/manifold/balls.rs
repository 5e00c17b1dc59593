use super::{GridLayout, ManifoldModel, Point, SampleGrid};
use crate::error::{invalid, Error, Result};
use crate::numerics::gauss_legendre;

/// Geodesic ball `B(center, radius)`. Balls enumerated from a grid remember
/// the grid index of their center.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Ball {
    pub center: Point,
    pub center_index: Option<usize>,
    pub radius: f64,
}

impl Ball {
    pub fn new(center: Point, radius: f64) -> Result<Self> {
        if !(radius.is_finite() && radius > 0.0) {
            return invalid(format!("ball radius must be positive, got {radius}"));
        }
        Ok(Self { center, center_index: None, radius })
    }

    /// Grid points strictly inside the ball, sorted by distance to the center.
    pub fn members(&self, model: &ManifoldModel, grid: &SampleGrid) -> Vec<Member> {
        let mut out = neighbours(model, grid, &self.center);
        out.truncate(out.partition_point(|m| m.dist < self.radius));
        out
    }
}

/// A grid point together with its distance to some center.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Member {
    pub index: usize,
    pub dist: f64,
}

fn neighbours(model: &ManifoldModel, grid: &SampleGrid, center: &Point) -> Vec<Member> {
    let mut out: Vec<Member> = grid
        .points()
        .iter()
        .enumerate()
        .map(|(index, p)| Member { index, dist: model.dist(center, p) })
        .collect();
    out.sort_by(|a, b| a.dist.total_cmp(&b.dist).then(a.index.cmp(&b.index)));
    out
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum RadiiPolicy {
    /// Radii `r_min · 2^k` lying in `[r_min, r_max]`.
    Dyadic { r_min: f64, r_max: f64 },
}

impl RadiiPolicy {
    /// `levels` dyadic radii ending at `r_max`.
    pub fn dyadic_levels(r_max: f64, levels: u32) -> Self {
        let levels = levels.max(1);
        Self::Dyadic { r_min: r_max / 2f64.powi(levels as i32 - 1), r_max }
    }

    pub fn radii(&self) -> Vec<f64> {
        let Self::Dyadic { r_min, r_max } = *self;
        let mut out = Vec::new();
        let mut r = r_min;
        while r <= r_max * (1.0 + 1e-12) {
            out.push(r);
            r *= 2.0;
        }
        out
    }
}

/// Centers times radii, ordered center-major.
#[derive(Debug, Clone)]
pub struct BallFamily {
    centers: Vec<(Point, usize)>,
    radii: Vec<f64>,
    stride: usize,
}

impl BallFamily {
    pub fn len(&self) -> usize {
        self.centers.len() * self.radii.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn radii(&self) -> &[f64] {
        &self.radii
    }

    pub fn stride(&self) -> usize {
        self.stride
    }

    /// Grid indices of the centers.
    pub fn center_indices(&self) -> impl Iterator<Item = usize> + '_ {
        self.centers.iter().map(|c| c.1)
    }

    pub fn num_centers(&self) -> usize {
        self.centers.len()
    }

    pub fn get(&self, i: usize) -> Ball {
        let nr = self.radii.len();
        let (p, idx) = self.centers[i / nr];
        Ball { center: p, center_index: Some(idx), radius: self.radii[i % nr] }
    }

    pub fn iter(&self) -> impl Iterator<Item = Ball> + '_ {
        (0..self.len()).map(|i| self.get(i))
    }

    /// For every center, all grid points sorted by distance. Ball members
    /// are prefixes of these lists.
    pub fn neighbour_lists(&self, model: &ManifoldModel, grid: &SampleGrid) -> Vec<Vec<Member>> {
        self.centers.iter().map(|(p, _)| neighbours(model, grid, p)).collect()
    }
}

/// Strided grid centers times dyadic radii. The stride applies per axis on
/// tensor grids.
pub fn enumerate_balls(
    model: &ManifoldModel,
    grid: &SampleGrid,
    policy: RadiiPolicy,
    stride: usize,
) -> Result<BallFamily> {
    let RadiiPolicy::Dyadic { r_min, r_max } = policy;
    if !(r_min.is_finite() && r_max.is_finite() && r_min > 0.0) {
        return invalid(format!("bad radii range [{r_min}, {r_max}]"));
    }
    if r_min > r_max {
        return invalid(format!("empty ball family: r_min {r_min} exceeds r_max {r_max}"));
    }
    let h = grid.spacing();
    if r_min < 2.0 * h * (1.0 - 1e-12) {
        return invalid(format!(
            "smallest radius {r_min} is below twice the grid spacing {h}; refine the grid or raise r_min"
        ));
    }
    if r_max > model.diameter() * (1.0 + 1e-12) {
        return invalid(format!("largest radius {r_max} exceeds the diameter {}", model.diameter()));
    }
    if stride == 0 {
        return invalid("stride must be at least 1");
    }
    let indices: Vec<usize> = match grid.layout() {
        GridLayout::Periodic1 { n } | GridLayout::Line { n } => (0..n).step_by(stride).collect(),
        GridLayout::Periodic2 { n: [n1, n2] } | GridLayout::SphereGauss { n_lat: n1, n_lon: n2 } => {
            (0..n1)
                .step_by(stride)
                .flat_map(|i| (0..n2).step_by(stride).map(move |j| i * n2 + j))
                .collect()
        }
        GridLayout::Plane { n } => (0..n)
            .step_by(stride)
            .flat_map(|i| (0..n).step_by(stride).map(move |j| i * n + j))
            .collect(),
    };
    let centers = indices.into_iter().map(|i| (grid.points()[i], i)).collect();
    Ok(BallFamily { centers, radii: policy.radii(), stride })
}

/// Quadrature in `t` on `(0, r)` for a tent of radius `r`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum TentRule {
    GaussLegendre { n: usize },
    /// Right endpoints `t_j = j·step`, `j = 1, 2, …` below `r`, weight `step`.
    RightRiemann { step: f64 },
}

impl TentRule {
    pub fn nodes(&self, r: f64) -> Result<Vec<(f64, f64)>> {
        match *self {
            TentRule::GaussLegendre { n } => {
                let rule = gauss_legendre(n)?.mapped(0.0, r);
                Ok(rule.iter().collect())
            }
            TentRule::RightRiemann { step } => {
                if !(step.is_finite() && step > 0.0) {
                    return invalid(format!("tent step must be positive, got {step}"));
                }
                let mut out = Vec::new();
                let mut j = 1;
                while (j as f64) * step < r * (1.0 - 1e-12) {
                    out.push((j as f64 * step, step));
                    j += 1;
                }
                Ok(out)
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TentCell {
    pub point: usize,
    pub t_index: usize,
    pub weight: f64,
}

/// Discretized tent `T(B) = {(x, t) : d(x, x0) < r - t}`.
#[derive(Debug, Clone)]
pub struct Tent {
    pub base: Ball,
    pub t_nodes: Vec<(f64, f64)>,
    pub cells: Vec<TentCell>,
}

impl Tent {
    /// Sum of the cell weights, approximating the measure of the tent.
    pub fn measure(&self) -> f64 {
        self.cells.iter().map(|c| c.weight).sum()
    }

    /// Number of cells on the slice `t = t_nodes[k]`.
    pub fn slice_len(&self, k: usize) -> usize {
        self.cells.iter().filter(|c| c.t_index == k).count()
    }
}

pub fn build_tent(
    model: &ManifoldModel,
    ball: &Ball,
    grid: &SampleGrid,
    t_nodes: &[(f64, f64)],
) -> Result<Tent> {
    if let Some(&(t, _)) = t_nodes.iter().find(|(t, w)| !(t.is_finite() && *t >= 0.0 && w.is_finite())) {
        return invalid(format!("tent levels must be finite and nonnegative, got t = {t}"));
    }
    let members = ball.members(model, grid);
    if members.is_empty() {
        return Err(Error::EmptyTent { center: format!("{:?}", ball.center.0), radius: ball.radius });
    }
    let w = grid.weights();
    let mut cells = Vec::new();
    for (k, &(t, wt)) in t_nodes.iter().enumerate() {
        let reach = ball.radius - t;
        for m in members.iter().take_while(|m| m.dist < reach) {
            cells.push(TentCell { point: m.index, t_index: k, weight: w[m.index] * wt });
        }
    }
    Ok(Tent { base: *ball, t_nodes: t_nodes.to_vec(), cells })
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn circle_grid(n: usize) -> (ManifoldModel, SampleGrid) {
        let m = ManifoldModel::circle(2.0 * PI).unwrap();
        let g = SampleGrid::uniform(m, n).unwrap();
        (m, g)
    }

    #[test]
    fn circle_family_count() {
        let (m, g) = circle_grid(64);
        let fam = enumerate_balls(&m, &g, RadiiPolicy::Dyadic { r_min: PI / 8.0, r_max: PI }, 1).unwrap();
        assert_eq!(fam.len(), 256);
        assert_eq!(fam.radii().len(), 4);
        let one = enumerate_balls(&m, &g, RadiiPolicy::Dyadic { r_min: 1.0, r_max: 1.0 }, 1).unwrap();
        assert_eq!(one.len(), 64);
    }

    #[test]
    fn torus_family_count() {
        let m = ManifoldModel::torus2(2.0 * PI, 2.0 * PI).unwrap();
        let g = SampleGrid::uniform(m, 32).unwrap();
        let fam = enumerate_balls(&m, &g, RadiiPolicy::dyadic_levels(2.0, 3), 2).unwrap();
        assert_eq!(fam.len(), 768);
    }

    #[test]
    fn family_preconditions() {
        let (m, g) = circle_grid(64);
        assert!(enumerate_balls(&m, &g, RadiiPolicy::Dyadic { r_min: 2.0, r_max: 1.0 }, 1).is_err());
        assert!(enumerate_balls(&m, &g, RadiiPolicy::Dyadic { r_min: 0.1, r_max: 1.0 }, 1).is_err());
        assert!(enumerate_balls(&m, &g, RadiiPolicy::Dyadic { r_min: 1.0, r_max: 4.0 }, 1).is_err());
    }

    #[test]
    fn tent_slices() {
        let (m, g) = circle_grid(64);
        let ball = Ball::new(Point::on_line(0.0), PI / 2.0).unwrap();
        let nodes = [(0.0, 1.0), (PI / 4.0, 1.0), (PI / 2.0, 1.0), (2.0, 1.0)];
        let tent = build_tent(&m, &ball, &g, &nodes).unwrap();
        assert_eq!(tent.slice_len(0), ball.members(&m, &g).len());
        // |x| < π/4 with spacing π/32: 7 points each side plus the center
        assert_eq!(tent.slice_len(1), 15);
        assert_eq!(tent.slice_len(2), 0);
        assert_eq!(tent.slice_len(3), 0);
        for c in &tent.cells {
            let d = m.dist(&g.points()[c.point], &ball.center);
            assert!(d < ball.radius - nodes[c.t_index].0);
        }
    }

    #[test]
    fn tent_measure_refines_at_first_order() {
        // exact measure of {|x| < r - t} over (0, r) is r²
        let r = PI / 2.0;
        let err = |n: usize| {
            let (m, g) = circle_grid(n);
            let ball = Ball::new(Point::on_line(0.0), r).unwrap();
            let nodes = TentRule::RightRiemann { step: g.spacing() }.nodes(r).unwrap();
            (build_tent(&m, &ball, &g, &nodes).unwrap().measure() - r * r).abs()
        };
        let (e1, e2) = (err(64), err(128));
        assert!(e1 / e2 > 1.5 && e1 / e2 < 2.5, "{e1} {e2}");
        let gl = TentRule::GaussLegendre { n: 24 }.nodes(r).unwrap();
        assert!((gl.iter().map(|n| n.1).sum::<f64>() - r).abs() < 1e-14);
    }

    #[test]
    fn tent_without_grid_points_is_reported() {
        let (m, g) = circle_grid(8);
        let ball = Ball::new(Point::on_line(0.3), 0.1).unwrap();
        assert!(matches!(build_tent(&m, &ball, &g, &[(0.0, 1.0)]), Err(Error::EmptyTent { .. })));
    }
}
