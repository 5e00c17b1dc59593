use std::fmt;

use super::{HeatKernelEvaluator, KernelJet};
use crate::error::{invalid, Error, Result, SamplePoint};

/// Which Gaussian upper bound is being fitted.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BoundClaim {
    /// `p <= C t^{-n/2} e^{-c d²/t}`
    Heat1,
    /// `|∇_x p| <= C t^{-(n+1)/2} e^{-c d²/t}`
    Heat2,
    /// `|∇_x ∇_y p| <= C t^{-n/2-1} e^{-c d²/t}`
    Heat3,
}

impl BoundClaim {
    pub fn t_power(&self, dim: usize) -> f64 {
        let n = dim as f64;
        match self {
            Self::Heat1 => 0.5 * n,
            Self::Heat2 => 0.5 * (n + 1.0),
            Self::Heat3 => 0.5 * n + 1.0,
        }
    }

    pub fn lhs(&self, jet: &KernelJet) -> f64 {
        match self {
            Self::Heat1 => jet.p.abs(),
            Self::Heat2 => jet.grad_norm(),
            Self::Heat3 => jet.mixed_norm(),
        }
    }

    fn magnitude(&self, jet: &KernelJet) -> f64 {
        match self {
            Self::Heat1 => jet.magnitude[0],
            Self::Heat2 => jet.magnitude[1],
            Self::Heat3 => jet.magnitude[2],
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            Self::Heat1 => "heat1",
            Self::Heat2 => "heat2",
            Self::Heat3 => "heat3",
        }
    }
}

impl fmt::Display for BoundClaim {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BoundFit {
    pub claim: BoundClaim,
    pub constant: f64,
    pub exponent: f64,
    /// Grid point where the ratio is largest.
    pub argmax: SamplePoint,
    pub samples: usize,
    /// Samples whose left-hand side is below the rounding floor of the series.
    pub unresolved: usize,
    /// `max(LHS - C t^{-power} e^{-c d²/t})`, nonpositive by construction.
    pub max_violation: f64,
    pub t_max: f64,
}

/// Smallest `C` with `LHS <= C t^{-power} e^{-c d²/t}` on the sampled grid.
/// A ratio that keeps growing towards the largest `d²/t` means no finite
/// constant exists for this `c`, and is reported as a fit failure.
pub fn fit_gaussian_bound(
    e: &HeatKernelEvaluator,
    claim: BoundClaim,
    c: f64,
    dgrid: &[f64],
    tgrid: &[f64],
) -> Result<BoundFit> {
    if !(c.is_finite() && c > 0.0) {
        return invalid(format!("Gaussian exponent must be positive, got {c}"));
    }
    if dgrid.is_empty() || tgrid.is_empty() {
        return invalid("empty (d, t) grid");
    }
    if let Some(t) = tgrid.iter().find(|t| !(t.is_finite() && **t > 0.0)) {
        return invalid(format!("fit times must be positive, got {t}"));
    }
    let model = e.model();
    if let Some(d) = dgrid.iter().find(|d| !(d.is_finite() && **d >= 0.0)) {
        return invalid(format!("fit distances must be nonnegative, got {d}"));
    }
    if model.is_compact() {
        if let Some(d) = dgrid.iter().find(|d| **d > model.diameter() * (1.0 + 1e-12)) {
            return invalid(format!("distance {d} exceeds the diameter of {model}"));
        }
    }
    let power = claim.t_power(model.dim());
    // (xi, ln ratio, ratio, point)
    let mut resolved: Vec<(f64, f64, SamplePoint)> = Vec::new();
    let mut unresolved = 0;
    let mut samples = 0;
    for &t in tgrid {
        for &d in dgrid {
            samples += 1;
            let jet = e.radial(d, t)?;
            let lhs = claim.lhs(&jet);
            let floor = 1e3 * f64::EPSILON * claim.magnitude(&jet);
            if lhs <= floor {
                unresolved += 1;
                continue;
            }
            let xi = d * d / t;
            let ln_ratio = lhs.ln() + power * t.ln() + c * xi;
            resolved.push((xi, ln_ratio, SamplePoint { d, t }));
        }
    }
    if resolved.is_empty() {
        return invalid("no resolved samples on the (d, t) grid");
    }
    let (xi_max, best) = resolved.iter().fold((0.0f64, &resolved[0]), |(m, b), s| {
        (m.max(s.0), if s.1 > b.1 { s } else { b })
    });
    let band_max = |lo: f64, hi: f64| {
        resolved
            .iter()
            .filter(|s| s.0 >= lo * xi_max && s.0 < hi * xi_max || (hi >= 1.0 && s.0 == xi_max))
            .map(|s| s.1)
            .fold(f64::NEG_INFINITY, f64::max)
    };
    let (m1, m2, m3) = (band_max(0.0, 0.5), band_max(0.5, 0.75), band_max(0.75, 1.0));
    let grows = |a: f64, b: f64| b.is_finite() && b > a + 1e-9;
    if xi_max > 0.0 && grows(m1, m2) && grows(m2, m3) {
        return Err(Error::FitFailure { at: best.2, ratio: best.1.exp() });
    }
    let big_c = best.1.exp();
    let mut max_violation = f64::NEG_INFINITY;
    for &(xi, ln_ratio, pt) in &resolved {
        let bound = big_c * pt.t.powf(-power) * (-c * xi).exp();
        let lhs = (ln_ratio - power * pt.t.ln() - c * xi).exp();
        max_violation = max_violation.max((lhs - bound) / bound.max(f64::MIN_POSITIVE));
    }
    Ok(BoundFit {
        claim,
        constant: big_c,
        exponent: c,
        argmax: best.2,
        samples,
        unresolved,
        max_violation: max_violation.min(0.0),
        t_max: tgrid.iter().cloned().fold(0.0, f64::max),
    })
}
