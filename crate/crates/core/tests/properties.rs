use std::f64::consts::PI;
use std::sync::OnceLock;

use proptest::prelude::*;

use bmoext::extension::{extend, ExtensionConfig};
use bmoext::jacobian::{jacobian_density, jacobian_pairing};
use bmoext::manifold::{enumerate_balls, BallFamily, ManifoldModel, RadiiPolicy, SampleGrid, TentRule};
use bmoext::numerics::gauss_legendre;
use bmoext::seminorms::{bmo_seminorm, carleson_seminorm};

struct Circle {
    model: ManifoldModel,
    grid: SampleGrid,
    balls: BallFamily,
    ext: ExtensionConfig,
}

fn circle() -> &'static Circle {
    static C: OnceLock<Circle> = OnceLock::new();
    C.get_or_init(|| {
        let model = ManifoldModel::circle(2.0 * PI).unwrap();
        let grid = SampleGrid::uniform(model, 48).unwrap();
        let h = grid.spacing();
        let balls = enumerate_balls(&model, &grid, RadiiPolicy::dyadic_levels(PI, 3), 3).unwrap();
        let ts: Vec<f64> = (0..12).map(|k| h * 1.5f64.powi(k)).collect();
        let ext = ExtensionConfig::new(0.5, grid.clone(), ts, 32).unwrap();
        Circle { model, grid, balls, ext }
    })
}

fn trig(coef: &[f64], x: f64) -> f64 {
    coef.iter().enumerate().map(|(k, c)| if k % 2 == 0 { c * ((k / 2 + 1) as f64 * x).cos() } else { c * ((k / 2 + 1) as f64 * x).sin() }).sum()
}

fn sample(coef: &[f64]) -> Vec<f64> {
    circle().grid.sample(|p| trig(coef, p.0[0]))
}

fn bmo(u: &[f64]) -> f64 {
    let c = circle();
    bmo_seminorm(&c.model, &c.grid, u, &c.balls).unwrap().value
}

fn coefs() -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(-1.0f64..1.0, 6)
}

fn torus_map() -> impl Strategy<Value = [f64; 6]> {
    prop::array::uniform6(-1.0f64..1.0)
}

fn torus_grid() -> SampleGrid {
    SampleGrid::uniform(ManifoldModel::torus2(2.0 * PI, 2.0 * PI).unwrap(), 24).unwrap()
}

fn map_component(c: &[f64; 6], shift: usize, x: f64, y: f64) -> f64 {
    let c = &c[shift..shift + 3];
    c[0] * x.cos() + c[1] * (x + y).sin() + c[2] * (2.0 * y).cos()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn bmo_is_homogeneous(a in coefs(), s in -4.0f64..4.0) {
        let u = sample(&a);
        let su: Vec<f64> = u.iter().map(|v| s * v).collect();
        prop_assert!((bmo(&su) - s.abs() * bmo(&u)).abs() <= 1e-12 * (1.0 + bmo(&u)));
    }

    #[test]
    fn bmo_ignores_constants(a in coefs(), c in -10.0f64..10.0) {
        let u = sample(&a);
        let shifted: Vec<f64> = u.iter().map(|v| v + c).collect();
        prop_assert!((bmo(&shifted) - bmo(&u)).abs() <= 1e-12 * (1.0 + c.abs()));
    }

    #[test]
    fn bmo_is_subadditive(a in coefs(), b in coefs()) {
        let (u, v) = (sample(&a), sample(&b));
        let w: Vec<f64> = u.iter().zip(&v).map(|(x, y)| x + y).collect();
        prop_assert!(bmo(&w) <= bmo(&u) + bmo(&v) + 1e-12);
    }

    #[test]
    fn gauss_legendre_is_exact_to_degree_2n_minus_1(n in 1usize..24, k in 0u32..47) {
        let k = k.min(2 * n as u32 - 1);
        let rule = gauss_legendre(n).unwrap();
        let exact = if k % 2 == 1 { 0.0 } else { 2.0 / (k as f64 + 1.0) };
        prop_assert!((rule.integrate(|x| x.powi(k as i32)) - exact).abs() < 1e-13);
    }

    #[test]
    fn jacobian_is_antisymmetric(c in torus_map()) {
        let g = torus_grid();
        let f1 = g.sample(|p| map_component(&c, 0, p.0[0], p.0[1]));
        let f2 = g.sample(|p| map_component(&c, 3, p.0[0], p.0[1]));
        let j12 = jacobian_density(&g, &f1, &f2).unwrap();
        let j21 = jacobian_density(&g, &f2, &f1).unwrap();
        let scale = j12.iter().fold(1.0f64, |m, v| m.max(v.abs()));
        prop_assert!(j12.iter().zip(&j21).all(|(a, b)| (a + b).abs() <= 1e-13 * scale));
    }

    #[test]
    fn jacobian_integrates_to_zero(c in torus_map()) {
        let g = torus_grid();
        let f1 = g.sample(|p| map_component(&c, 0, p.0[0], p.0[1]));
        let f2 = g.sample(|p| map_component(&c, 3, p.0[0], p.0[1]));
        let one = vec![1.0; g.len()];
        prop_assert!(jacobian_pairing(&g, &f1, &f2, &one).unwrap().abs() < 1e-12);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn carleson_is_homogeneous_and_blind_to_constants(a in coefs(), s in -3.0f64..3.0, c in -5.0f64..5.0) {
        let circ = circle();
        let rule = TentRule::GaussLegendre { n: 6 };
        let u = sample(&a);
        let base = carleson_seminorm(&circ.ext, &u, &circ.balls, rule).unwrap().value;
        let v: Vec<f64> = u.iter().map(|x| s * x + c).collect();
        let scaled = carleson_seminorm(&circ.ext, &v, &circ.balls, rule).unwrap().value;
        prop_assert!((scaled - s.abs() * base).abs() <= 1e-9 * (1.0 + base));
    }

    #[test]
    fn extension_is_linear(a in coefs(), b in coefs(), s in -2.0f64..2.0) {
        let circ = circle();
        let (u, v) = (sample(&a), sample(&b));
        let w: Vec<f64> = u.iter().zip(&v).map(|(x, y)| s * x + y).collect();
        let (fu, fv, fw) = (extend(&circ.ext, &u).unwrap(), extend(&circ.ext, &v).unwrap(), extend(&circ.ext, &w).unwrap());
        for k in 0..circ.ext.t_levels().len() {
            let (su, sv, sw) = (fu.slice(k), fv.slice(k), fw.slice(k));
            for i in 0..circ.grid.len() {
                prop_assert!((sw.values[i] - (s * su.values[i] + sv.values[i])).abs() < 1e-12);
                prop_assert!((sw.dt[i] - (s * su.dt[i] + sv.dt[i])).abs() < 1e-11);
            }
        }
    }

    #[test]
    fn extension_obeys_maximum_principle(a in coefs()) {
        let circ = circle();
        let u = sample(&a);
        let (lo, hi) = u.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(l, h), v| (l.min(*v), h.max(*v)));
        let f = extend(&circ.ext, &u).unwrap();
        for k in 0..circ.ext.t_levels().len() {
            prop_assert!(f.slice(k).values.iter().all(|v| *v >= lo - 1e-9 && *v <= hi + 1e-9));
        }
    }
}
