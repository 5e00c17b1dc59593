use std::cmp::Ordering;
use std::collections::BinaryHeap;

use crate::error::{Error, Result};

/// Default panel budget for [`adaptive_integrate`].
pub const DEFAULT_MAX_PANELS: usize = 1 << 16;

#[derive(Debug, Clone, Copy)]
pub struct AdaptiveOptions {
    pub rel_tol: f64,
    pub abs_tol: f64,
    pub max_panels: usize,
}

impl AdaptiveOptions {
    pub fn relative(rel_tol: f64) -> Self {
        Self {
            rel_tol,
            abs_tol: 1e-14,
            max_panels: DEFAULT_MAX_PANELS,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Integral {
    pub value: f64,
    pub err_est: f64,
    pub panels: usize,
}

/// Upper integration limit.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Upper {
    Finite(f64),
    Infinity,
}

impl From<f64> for Upper {
    fn from(b: f64) -> Self {
        if b == f64::INFINITY {
            Upper::Infinity
        } else {
            Upper::Finite(b)
        }
    }
}

// Gauss–Kronrod 7/15 abscissae and weights on [-1, 1].
const XGK: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];
const WGK: [f64; 8] = [
    0.022_935_322_010_529_22,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_2,
    0.140_653_259_715_525_9,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_727_8,
];

/// A panel carries its whole-panel Kronrod value and the values of its two
/// halves; the accepted value is the sum of the halves and the error
/// estimate is their disagreement with the whole. Unlike `|K15 - G7|` this
/// does not collapse at endpoint singularities, where both rules miss the
/// same mass.
#[derive(Debug, Clone, Copy)]
struct Panel {
    a: f64,
    b: f64,
    left: f64,
    right: f64,
    err: f64,
}

impl Panel {
    fn value(&self) -> f64 {
        self.left + self.right
    }
}

impl PartialEq for Panel {
    fn eq(&self, other: &Self) -> bool {
        self.err == other.err
    }
}
impl Eq for Panel {}
impl PartialOrd for Panel {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Panel {
    fn cmp(&self, other: &Self) -> Ordering {
        self.err.total_cmp(&other.err)
    }
}

fn kronrod<F: FnMut(f64) -> f64>(f: &mut F, a: f64, b: f64) -> Result<f64> {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let mut k = WGK[7] * f(c);
    for j in 0..7 {
        let x = h * XGK[j];
        k += WGK[j] * (f(c - x) + f(c + x));
    }
    let value = k * h;
    if !value.is_finite() {
        return Err(Error::InvalidParameter(format!(
            "integrand not finite on panel [{a:.6e}, {b:.6e}]"
        )));
    }
    Ok(value)
}

fn panel<F: FnMut(f64) -> f64>(f: &mut F, a: f64, b: f64, whole: f64) -> Result<Panel> {
    let m = 0.5 * (a + b);
    let left = kronrod(f, a, m)?;
    let right = kronrod(f, m, b)?;
    Ok(Panel {
        a,
        b,
        left,
        right,
        err: (whole - left - right).abs(),
    })
}

/// Globally adaptive Gauss–Kronrod (7, 15) integration of `f` over `[a, b]`.
///
/// An infinite upper limit is mapped to `[0, 1)` by `s = a + u/(1-u)`,
/// evaluated through `w = 1 - u`.
/// Kronrod nodes never touch panel endpoints, so integrable endpoint
/// singularities are resolved by repeated bisection of the end panel.
pub fn adaptive_integrate(
    f: impl FnMut(f64) -> f64,
    a: f64,
    b: impl Into<Upper>,
    rel_tol: f64,
) -> Result<Integral> {
    integrate_with(f, a, b.into(), AdaptiveOptions::relative(rel_tol))
}

pub fn integrate_with(
    mut f: impl FnMut(f64) -> f64,
    a: f64,
    b: Upper,
    opts: AdaptiveOptions,
) -> Result<Integral> {
    if !(opts.rel_tol >= 1e-12) {
        return Err(Error::InvalidParameter(format!(
            "rel_tol {} below the supported floor 1e-12",
            opts.rel_tol
        )));
    }
    match b {
        Upper::Finite(b) => {
            if !(b >= a) {
                return Err(Error::InvalidParameter(format!("empty interval [{a}, {b}]")));
            }
            if a == b {
                return Ok(Integral { value: 0.0, err_est: 0.0, panels: 0 });
            }
            run(&mut f, a, b, opts)
        }
        Upper::Infinity => {
            // s = a + u/(1-u), integrated in w = 1 - u so the far tail
            // (u within machine epsilon of 1) stays representable
            let mut g = |w: f64| {
                let s = a - 1.0 + 1.0 / w;
                let v = f(s);
                if v == 0.0 {
                    0.0
                } else {
                    v / (w * w)
                }
            };
            run(&mut g, 0.0, 1.0, opts)
        }
    }
}

fn run<F: FnMut(f64) -> f64>(f: &mut F, a: f64, b: f64, opts: AdaptiveOptions) -> Result<Integral> {
    let whole = kronrod(f, a, b)?;
    let first = panel(f, a, b, whole)?;
    let mut total = first.value();
    let mut total_err = first.err;
    let mut heap = BinaryHeap::new();
    heap.push(first);
    let mut panels = 1usize;
    loop {
        let target = (opts.rel_tol * total.abs()).max(opts.abs_tol);
        if total_err <= target {
            let value: f64 = heap.iter().map(Panel::value).sum();
            return Ok(Integral {
                value,
                err_est: total_err,
                panels,
            });
        }
        if panels >= opts.max_panels {
            break;
        }
        let worst = heap.pop().expect("heap holds every live panel");
        let mid = 0.5 * (worst.a + worst.b);
        let quarter = 0.5 * (worst.a + mid);
        if !(quarter > worst.a && quarter < mid) {
            // the worst panel is at floating-point resolution; no further progress
            heap.push(worst);
            break;
        }
        let left = panel(f, worst.a, mid, worst.left)?;
        let right = panel(f, mid, worst.b, worst.right)?;
        total += left.value() + right.value() - worst.value();
        total_err += left.err + right.err - worst.err;
        heap.push(left);
        heap.push(right);
        panels += 1;
    }
    let value: f64 = heap.iter().map(Panel::value).sum();
    let err_est: f64 = heap.iter().map(|p| p.err).sum();
    Err(Error::NonConvergence {
        context: "adaptive_integrate".into(),
        value,
        err_est,
        panels,
    })
}
