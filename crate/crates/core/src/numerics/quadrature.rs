use nalgebra::DMatrix;

use crate::error::{invalid, Result};
use crate::numerics::special::ln_gamma;

/// Largest order accepted by [`gen_laguerre_rule`].
pub const MAX_LAGUERRE_ORDER: usize = 256;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum RuleKind {
    GaussLegendre,
    /// Weight `s^alpha e^{-s}` on `[0, ∞)`.
    GaussGenLaguerre { alpha: f64 },
    /// Composite Gauss–Legendre panels.
    AdaptivePanel,
}

/// A positive-weight quadrature rule with strictly increasing nodes.
///
/// Weights are also kept in log form: for high-order Laguerre rules the
/// trailing weights fall below the smallest subnormal and `weights[i]`
/// underflows to zero while `log_weights[i]` stays exact.
#[derive(Debug, Clone)]
pub struct QuadratureRule {
    nodes: Vec<f64>,
    weights: Vec<f64>,
    log_weights: Vec<f64>,
    kind: RuleKind,
}

impl QuadratureRule {
    fn from_log_weights(nodes: Vec<f64>, log_weights: Vec<f64>, kind: RuleKind) -> Self {
        let weights = log_weights.iter().map(|lw| lw.exp()).collect();
        Self {
            nodes,
            weights,
            log_weights,
            kind,
        }
    }

    fn from_weights(nodes: Vec<f64>, weights: Vec<f64>, kind: RuleKind) -> Self {
        let log_weights = weights.iter().map(|w| w.ln()).collect();
        Self {
            nodes,
            weights,
            log_weights,
            kind,
        }
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn log_weights(&self) -> &[f64] {
        &self.log_weights
    }

    pub fn kind(&self) -> RuleKind {
        self.kind
    }

    pub fn order(&self) -> usize {
        self.nodes.len()
    }

    /// Laguerre exponent `alpha`, if this is a generalized Laguerre rule.
    pub fn alpha(&self) -> Option<f64> {
        match self.kind {
            RuleKind::GaussGenLaguerre { alpha } => Some(alpha),
            _ => None,
        }
    }

    pub fn iter(&self) -> impl Iterator<Item = (f64, f64)> + '_ {
        self.nodes.iter().copied().zip(self.weights.iter().copied())
    }

    pub fn integrate(&self, mut f: impl FnMut(f64) -> f64) -> f64 {
        self.iter().map(|(x, w)| w * f(x)).sum()
    }

    /// `ln Σ w_i x_i^k`, evaluated in log space so it stays finite for
    /// every order and every `k` that the rule is meant to integrate.
    pub fn log_moment(&self, k: u32) -> f64 {
        let terms: Vec<f64> = self
            .nodes
            .iter()
            .zip(&self.log_weights)
            .map(|(&x, &lw)| lw + k as f64 * x.ln())
            .collect();
        let m = terms.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        m + terms.iter().map(|v| (v - m).exp()).sum::<f64>().ln()
    }

    /// Affine image of a rule on `[-1, 1]` onto `[a, b]`.
    pub fn mapped(&self, a: f64, b: f64) -> QuadratureRule {
        let half = 0.5 * (b - a);
        let mid = 0.5 * (a + b);
        let nodes = self.nodes.iter().map(|x| mid + half * x).collect();
        let weights = self.weights.iter().map(|w| w * half).collect();
        QuadratureRule::from_weights(nodes, weights, self.kind)
    }
}

/// Gauss–Legendre rule of the given order on `[-1, 1]`, nodes by Newton
/// iteration on the Legendre recurrence.
pub fn gauss_legendre(order: usize) -> Result<QuadratureRule> {
    if order == 0 {
        return invalid("gauss_legendre order must be at least 1");
    }
    let n = order;
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    for i in 0..n.div_ceil(2) {
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (p, d) = legendre_with_derivative(n, x);
            dp = d;
            let dx = p / d;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        let (_, d) = legendre_with_derivative(n, x);
        if d != 0.0 {
            dp = d;
        }
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        nodes[i] = -x;
        nodes[n - 1 - i] = x;
        weights[i] = w;
        weights[n - 1 - i] = w;
    }
    if n % 2 == 1 {
        nodes[n / 2] = 0.0;
    }
    Ok(QuadratureRule::from_weights(nodes, weights, RuleKind::GaussLegendre))
}

fn legendre_with_derivative(n: usize, x: f64) -> (f64, f64) {
    let (mut p0, mut p1) = (1.0, x);
    for k in 2..=n {
        let kf = k as f64;
        let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    if n == 0 {
        return (1.0, 0.0);
    }
    let d = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, d)
}

/// Composite Gauss–Legendre rule over consecutive panels `breaks[i]..breaks[i+1]`.
pub fn composite_legendre(breaks: &[f64], per_panel: usize) -> Result<QuadratureRule> {
    if breaks.len() < 2 || breaks.windows(2).any(|w| !(w[1] > w[0])) {
        return invalid("panel breakpoints must be strictly increasing");
    }
    let base = gauss_legendre(per_panel)?;
    let mut nodes = Vec::new();
    let mut weights = Vec::new();
    for w in breaks.windows(2) {
        let panel = base.mapped(w[0], w[1]);
        nodes.extend_from_slice(panel.nodes());
        weights.extend_from_slice(panel.weights());
    }
    Ok(QuadratureRule::from_weights(nodes, weights, RuleKind::AdaptivePanel))
}

/// Generalized Gauss–Laguerre rule for the weight `s^alpha e^{-s}` on `[0, ∞)`.
///
/// Nodes are eigenvalues of the symmetric Jacobi matrix, polished by Newton
/// steps on the orthonormal recurrence; weights are Christoffel numbers
/// `1 / Σ_k p̂_k(x)^2`, which keep full relative accuracy in the tail where
/// eigenvector components would not.
pub fn gen_laguerre_rule(alpha: f64, order: usize) -> Result<QuadratureRule> {
    if !alpha.is_finite() || alpha <= -1.0 {
        return invalid(format!(
            "laguerre exponent alpha = {alpha} must exceed -1 (non-integrable singularity at 0)"
        ));
    }
    if order == 0 {
        return invalid("laguerre order must be at least 1");
    }
    if order > MAX_LAGUERRE_ORDER {
        return invalid(format!(
            "laguerre order {order} exceeds {MAX_LAGUERRE_ORDER}; node computation is unstable"
        ));
    }
    let n = order;
    let diag: Vec<f64> = (0..n).map(|k| 2.0 * k as f64 + alpha + 1.0).collect();
    // off[k] couples rows k-1 and k
    let off: Vec<f64> = (0..n)
        .map(|k| if k == 0 { 0.0 } else { (k as f64 * (k as f64 + alpha)).sqrt() })
        .collect();

    let mut jacobi = DMatrix::<f64>::zeros(n, n);
    for k in 0..n {
        jacobi[(k, k)] = diag[k];
        if k > 0 {
            jacobi[(k, k - 1)] = off[k];
            jacobi[(k - 1, k)] = off[k];
        }
    }
    let mut nodes: Vec<f64> = jacobi.symmetric_eigenvalues().iter().copied().collect();
    nodes.sort_by(|a, b| a.partial_cmp(b).unwrap());

    let ln_mu0 = ln_gamma(alpha + 1.0);
    let rec = Recurrence {
        diag: &diag,
        off: &off,
        ln_mu0,
    };
    let mut log_weights = Vec::with_capacity(n);
    for x in nodes.iter_mut() {
        for _ in 0..4 {
            let (p, dp) = rec.last_with_derivative(*x);
            if dp == 0.0 || !dp.is_finite() {
                break;
            }
            let step = p / dp;
            let next = *x - step;
            if !(next > 0.0) {
                break;
            }
            *x = next;
            if step.abs() <= 4.0 * f64::EPSILON * x.abs() {
                break;
            }
        }
        log_weights.push(-rec.log_sum_squares(*x));
    }
    Ok(QuadratureRule::from_log_weights(
        nodes,
        log_weights,
        RuleKind::GaussGenLaguerre { alpha },
    ))
}

struct Recurrence<'a> {
    diag: &'a [f64],
    off: &'a [f64],
    ln_mu0: f64,
}

const RESCALE: f64 = 1e150;

impl Recurrence<'_> {
    /// Scaled `p̂_n(x)` and its derivative (same scale factor, so the ratio is exact).
    fn last_with_derivative(&self, x: f64) -> (f64, f64) {
        let n = self.diag.len();
        let (mut p_prev, mut p) = (0.0, 1.0);
        let (mut d_prev, mut d) = (0.0, 0.0);
        for k in 0..n {
            let b_next = if k + 1 < n { self.off[k + 1] } else { 1.0 };
            let p_next = ((x - self.diag[k]) * p - self.off[k] * p_prev) / b_next;
            let d_next = ((x - self.diag[k]) * d + p - self.off[k] * d_prev) / b_next;
            p_prev = p;
            p = p_next;
            d_prev = d;
            d = d_next;
            if p.abs() > RESCALE || d.abs() > RESCALE {
                p /= RESCALE;
                p_prev /= RESCALE;
                d /= RESCALE;
                d_prev /= RESCALE;
            }
        }
        (p, d)
    }

    /// `ln Σ_{k<n} p̂_k(x)^2` with `p̂_0 = μ0^{-1/2}`.
    fn log_sum_squares(&self, x: f64) -> f64 {
        let n = self.diag.len();
        let (mut p_prev, mut p) = (0.0, 1.0);
        let mut sum = 1.0;
        let mut log_scale = 0.0;
        for k in 0..n - 1 {
            let p_next = ((x - self.diag[k]) * p - self.off[k] * p_prev) / self.off[k + 1];
            p_prev = p;
            p = p_next;
            sum += p * p;
            if p.abs() > RESCALE {
                p /= RESCALE;
                p_prev /= RESCALE;
                sum /= RESCALE * RESCALE;
                log_scale += 2.0 * RESCALE.ln();
            }
        }
        sum.ln() + log_scale - self.ln_mu0
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::special::gamma;

    #[test]
    fn laguerre_order_one() {
        let r = gen_laguerre_rule(0.0, 1).unwrap();
        assert!((r.nodes()[0] - 1.0).abs() < 1e-15);
        assert!((r.weights()[0] - 1.0).abs() < 1e-15);
    }

    #[test]
    fn laguerre_rejects_bad_input() {
        assert!(gen_laguerre_rule(-1.0, 8).is_err());
        assert!(gen_laguerre_rule(-1.5, 8).is_err());
        assert!(gen_laguerre_rule(0.5, 257).is_err());
        assert!(gen_laguerre_rule(0.5, 0).is_err());
    }

    #[test]
    fn laguerre_spec_moments() {
        let r = gen_laguerre_rule(-0.5, 64).unwrap();
        let m0 = r.integrate(|_| 1.0);
        assert!((m0 - 1.772_453_850_9).abs() < 1e-10);
        let r = gen_laguerre_rule(-0.25, 64).unwrap();
        let m2 = r.integrate(|s| s * s);
        assert!((m2 - 1.608_359_421_9).abs() < 1e-9);
        assert!((m2 - gamma(2.75)).abs() < 1e-10 * gamma(2.75));
    }

    #[test]
    fn laguerre_invariants_all_orders() {
        for &alpha in &[-0.7, -0.5, 0.0, 1.3] {
            for &n in &[1usize, 2, 7, 64, 128, 200, 256] {
                let r = gen_laguerre_rule(alpha, n).unwrap();
                assert_eq!(r.order(), n);
                assert!(r.nodes().windows(2).all(|w| w[1] > w[0]));
                assert!(r.log_weights().iter().all(|w| w.is_finite()));
                assert!(r.weights().iter().all(|&w| w >= 0.0));
                for k in 0..(2 * n as u32) {
                    let exact = ln_gamma(alpha + k as f64 + 1.0);
                    let got = r.log_moment(k);
                    // relative error of the moment = |exp(got - exact) - 1|
                    assert!(
                        (got - exact).abs() < 1e-9,
                        "alpha {alpha} n {n} k {k}: {got} vs {exact}"
                    );
                }
            }
        }
    }

    #[test]
    fn legendre_integrates_polynomials() {
        let r = gauss_legendre(12).unwrap();
        for k in 0..24 {
            let exact = if k % 2 == 1 { 0.0 } else { 2.0 / (k as f64 + 1.0) };
            let got = r.integrate(|x| x.powi(k));
            assert!((got - exact).abs() < 1e-14, "k = {k}");
        }
        let odd = gauss_legendre(7).unwrap();
        assert_eq!(odd.nodes()[3], 0.0);
        let m = odd.mapped(0.0, 3.0);
        assert!((m.integrate(|x| x * x) - 9.0).abs() < 1e-13);
    }

    #[test]
    fn composite_rule_spans_breaks() {
        let r = composite_legendre(&[0.0, 0.5, 2.0, 5.0, 10.0], 8).unwrap();
        assert_eq!(r.order(), 32);
        assert!((r.integrate(|x| (-x).exp()) - (1.0 - (-10f64).exp())).abs() < 1e-12);
        assert!(composite_legendre(&[0.0, 0.0], 4).is_err());
    }
}
