//! Named test functions on the circle and the flat torus. Dilation by an
//! integer `k` means `x -> f(k x)`, which keeps them periodic.

#[derive(Debug, Clone, Copy)]
pub struct CorpusFn {
    pub name: &'static str,
    /// Finite trigonometric polynomial with zero mean.
    pub trig: bool,
    pub circle: fn(f64) -> f64,
    pub torus: fn(f64, f64) -> f64,
}

fn bump(k: f64, c: f64) -> f64 {
    (k * (c - 1.0)).exp()
}

pub const CORPUS: [CorpusFn; 12] = [
    CorpusFn { name: "cos1", trig: true, circle: |x| x.cos(), torus: |x, _| x.cos() },
    CorpusFn { name: "sin2", trig: true, circle: |x| (2.0 * x).sin(), torus: |x, y| x.cos() * (2.0 * y).sin() },
    CorpusFn { name: "cos3", trig: true, circle: |x| (3.0 * x).cos(), torus: |x, y| (x + y).sin() },
    CorpusFn {
        name: "trig_mix",
        trig: true,
        circle: |x| x.cos() + 0.5 * (2.0 * x).sin() + 0.25 * (5.0 * x).cos(),
        torus: |x, y| x.cos() + 0.5 * (2.0 * y).sin() + 0.25 * (x - 3.0 * y).cos(),
    },
    CorpusFn {
        name: "trig_high",
        trig: true,
        circle: |x| (7.0 * x).sin() - 0.3 * (4.0 * x).cos(),
        torus: |x, y| (5.0 * x).sin() * (3.0 * y).cos(),
    },
    CorpusFn { name: "bump", trig: false, circle: |x| bump(4.0, x.cos()), torus: |x, y| bump(2.0, x.cos()) * bump(2.0, y.cos()) },
    CorpusFn {
        name: "narrow_bump",
        trig: false,
        circle: |x| bump(16.0, x.cos()),
        torus: |x, y| bump(8.0, x.cos()) * bump(8.0, y.cos()),
    },
    CorpusFn { name: "smooth_step", trig: false, circle: |x| (4.0 * x.sin()).tanh(), torus: |x, _| (4.0 * x.sin()).tanh() },
    CorpusFn {
        name: "sharp_step",
        trig: false,
        circle: |x| (12.0 * x.sin()).tanh(),
        torus: |x, y| (6.0 * (x + y).sin()).tanh(),
    },
    CorpusFn {
        name: "ridge",
        trig: false,
        circle: |x| (0..8).map(|j| ((2 * j + 1) as f64 * x).cos() / ((2 * j + 1) as f64).powi(2)).sum(),
        torus: |x, y| (4.0 * (x.cos() + y.cos())).tanh(),
    },
    CorpusFn {
        name: "abs_sin",
        trig: false,
        circle: |x| (x.sin().powi(2) + 0.01).sqrt(),
        torus: |x, y| (x.sin().powi(2) + y.sin().powi(2) + 0.01).sqrt(),
    },
    CorpusFn {
        name: "log_profile",
        trig: false,
        circle: |x| 0.5 * (1.0 - x.cos() + 0.01).ln(),
        torus: |x, y| 0.5 * (2.0 - x.cos() - y.cos() + 0.01).ln(),
    },
];

pub fn find(name: &str) -> Option<&'static CorpusFn> {
    CORPUS.iter().find(|f| f.name == name)
}

/// The configured selection, all functions when `names` is empty.
pub fn select(names: &[String]) -> Vec<&'static CorpusFn> {
    if names.is_empty() {
        CORPUS.iter().collect()
    } else {
        names.iter().filter_map(|n| find(n)).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn periodic_and_trig_means_vanish() {
        for f in &CORPUS {
            for &x in &[0.3, 1.7, 4.0] {
                assert!(((f.circle)(x) - (f.circle)(x + 2.0 * PI)).abs() < 1e-12, "{}", f.name);
                assert!(((f.torus)(x, 1.0) - (f.torus)(x + 2.0 * PI, 1.0 - 2.0 * PI)).abs() < 1e-12);
            }
            if f.trig {
                let n = 64;
                let mean: f64 = (0..n).map(|i| (f.circle)(2.0 * PI * i as f64 / n as f64)).sum::<f64>() / n as f64;
                assert!(mean.abs() < 1e-12, "{}", f.name);
            }
        }
        assert_eq!(select(&[]).len(), 12);
        assert!(find("cos1").is_some() && find("cos").is_none());
    }
}
