use std::collections::HashMap;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;

use crate::error::{invalid, Result};
use crate::numerics::special::gamma;
use crate::numerics::{gen_laguerre_rule, integrate_with, AdaptiveOptions, QuadratureRule, Upper};

const CERTIFY_REL: f64 = 1e-7;
const CERTIFY_ABS: f64 = 1e-13;
const MAX_ORDER: usize = 256;

/// Evaluates `Γ(σ)^{-1} ∫_0^∞ f(s) e^{-s} s^{σ-1} ds` for vector-valued
/// `f` with a generalized Laguerre rule, certified against rules of twice
/// (or half) and of one and a half times the order. Components that fail
/// certification are recomputed adaptively.
///
/// Two orders alone are not enough: for `e^{-a/s}` with small `a` the rule
/// values oscillate in the order and can agree by accident.
#[derive(Debug)]
pub struct Subordinator {
    sigma: f64,
    rule: QuadratureRule,
    check: QuadratureRule,
    mid: QuadratureRule,
    inv_gamma: f64,
    certified: AtomicUsize,
    fallbacks: AtomicUsize,
    /// Multipliers already computed, keyed by the bits of `(λ, t)`.
    memo: Mutex<HashMap<(u64, u64), [f64; 3]>>,
}

impl Clone for Subordinator {
    fn clone(&self) -> Self {
        Self {
            sigma: self.sigma,
            rule: self.rule.clone(),
            check: self.check.clone(),
            mid: self.mid.clone(),
            inv_gamma: self.inv_gamma,
            certified: AtomicUsize::new(self.certified.load(Ordering::Relaxed)),
            fallbacks: AtomicUsize::new(self.fallbacks.load(Ordering::Relaxed)),
            memo: Mutex::new(self.memo.lock().expect("memo lock").clone()),
        }
    }
}

/// Counts of integrals accepted from the Laguerre rule and of adaptive
/// fallbacks.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct QuadStats {
    pub certified: usize,
    pub fallbacks: usize,
}

impl Subordinator {
    pub fn new(sigma: f64, order: usize) -> Result<Self> {
        Self::with_alpha(sigma, sigma - 1.0, order)
    }

    /// Rule for the weight `s^alpha e^{-s}`; the normalisation stays `1/Γ(σ)`.
    pub fn with_alpha(sigma: f64, alpha: f64, order: usize) -> Result<Self> {
        if !(sigma > 0.0 && sigma < 1.0) {
            return invalid(format!("sigma must lie in (0, 1), got {sigma}"));
        }
        let (rule, check, mid) = rule_triple(alpha, order)?;
        Ok(Self {
            sigma,
            rule,
            check,
            mid,
            inv_gamma: 1.0 / gamma(sigma),
            certified: AtomicUsize::new(0),
            fallbacks: AtomicUsize::new(0),
            memo: Mutex::new(HashMap::new()),
        })
    }

    pub fn sigma(&self) -> f64 {
        self.sigma
    }

    pub fn rule(&self) -> &QuadratureRule {
        &self.rule
    }

    pub fn order(&self) -> usize {
        self.rule.order()
    }

    pub fn stats(&self) -> QuadStats {
        QuadStats {
            certified: self.certified.load(Ordering::Relaxed),
            fallbacks: self.fallbacks.load(Ordering::Relaxed),
        }
    }

    /// Plain rule sums `Σ w_j f(s_j)`, the higher order first.
    fn rule_sum<const K: usize>(rule: &QuadratureRule, f: &impl Fn(f64) -> [f64; K]) -> [f64; K] {
        let mut acc = [0.0; K];
        for (&s, &lw) in rule.nodes().iter().zip(rule.log_weights()) {
            let w = lw.exp();
            if w == 0.0 {
                continue;
            }
            let v = f(s);
            for k in 0..K {
                acc[k] += w * v[k];
            }
        }
        acc
    }

    fn both<const K: usize>(
        pair: (&QuadratureRule, &QuadratureRule),
        f: &impl Fn(f64) -> [f64; K],
    ) -> ([f64; K], [f64; K]) {
        let (r, c) = pair;
        let a = Self::rule_sum(r, f);
        let b = Self::rule_sum(c, f);
        if c.order() > r.order() {
            (b, a)
        } else {
            (a, b)
        }
    }

    /// Rule sum only, for integrands known to be polynomial in `s`.
    pub fn sum<const K: usize>(&self, f: impl Fn(f64) -> [f64; K]) -> [f64; K] {
        let (best, _) = Self::both((&self.rule, &self.check), &f);
        best.map(|v| v * self.inv_gamma)
    }

    /// Normalised rule values that pass certification, `None` elsewhere.
    fn certified<const K: usize>(&self, f: &impl Fn(f64) -> [f64; K], scale: [f64; K]) -> [Option<f64>; K] {
        let (best, other) = Self::both((&self.rule, &self.check), f);
        let mid = Self::rule_sum(&self.mid, f);
        std::array::from_fn(|k| {
            let close = |v: f64| {
                let diff = (best[k] - v).abs();
                diff <= CERTIFY_REL * best[k].abs() || diff * self.inv_gamma <= CERTIFY_ABS * scale[k]
            };
            (close(other[k]) && close(mid[k])).then(|| best[k] * self.inv_gamma)
        })
    }

    /// Certified subordination integral. `scale[k]` sets the absolute floor
    /// `1e-13 · scale[k]` below which differences are not meaningful.
    pub fn integrate<const K: usize>(
        &self,
        f: impl Fn(f64) -> [f64; K],
        scale: [f64; K],
    ) -> Result<[f64; K]> {
        let got = self.certified(&f, scale);
        let mut out = [0.0; K];
        for k in 0..K {
            out[k] = self.settle(got[k], |s| f(s)[k], scale[k], 1.0)?;
        }
        Ok(out)
    }

    fn settle(&self, got: Option<f64>, g: impl Fn(f64) -> f64, scale: f64, split: f64) -> Result<f64> {
        match got {
            Some(v) => {
                self.certified.fetch_add(1, Ordering::Relaxed);
                Ok(v)
            }
            None => {
                self.fallbacks.fetch_add(1, Ordering::Relaxed);
                self.adaptive_split(g, scale, split)
            }
        }
    }

    /// `Γ(σ)^{-1} ∫ g(s) e^{-s} s^{σ-1} ds` by adaptive panels, with
    /// `v = s^σ` on `[0, 1]` to remove the endpoint singularity.
    pub fn adaptive(&self, g: impl Fn(f64) -> f64, scale: f64) -> Result<f64> {
        self.adaptive_split(g, scale, 1.0)
    }

    /// As [`Self::adaptive`] with an extra break at `b ∈ (0, 1]`: `v = (s/b)^σ`
    /// on `[0, b]`, `s = e^y` on `[b, 1]`.
    fn adaptive_split(&self, g: impl Fn(f64) -> f64, scale: f64, b: f64) -> Result<f64> {
        let sigma = self.sigma;
        let b = b.clamp(f64::MIN_POSITIVE, 1.0);
        let opts = AdaptiveOptions {
            rel_tol: 1e-10,
            abs_tol: 1e-15 * scale.max(f64::MIN_POSITIVE) / self.inv_gamma,
            max_panels: 1 << 14,
        };
        let head = integrate_with(
            |v| {
                let s = b * v.powf(1.0 / sigma);
                g(s) * (-s).exp() / sigma
            },
            0.0,
            Upper::Finite(1.0),
            opts,
        )?;
        let mid = if b < 1.0 {
            integrate_with(
                |y| {
                    let s = y.exp();
                    g(s) * (-s).exp() * s.powf(sigma)
                },
                b.ln(),
                Upper::Finite(0.0),
                opts,
            )?
            .value
        } else {
            0.0
        };
        let tail = integrate_with(|s| g(s) * (-s).exp() * s.powf(sigma - 1.0), 1.0, Upper::Infinity, opts)?;
        Ok((head.value * b.powf(sigma) + mid + tail.value) * self.inv_gamma)
    }
}

fn rule_triple(alpha: f64, order: usize) -> Result<(QuadratureRule, QuadratureRule, QuadratureRule)> {
    let rule = gen_laguerre_rule(alpha, order)?;
    let check_order = if 2 * order <= MAX_ORDER { 2 * order } else { (order / 2).max(1) };
    let mid_order = (order + check_order) / 2;
    let mid_order = if mid_order == order { order + 1 } else { mid_order };
    Ok((rule, gen_laguerre_rule(alpha, check_order)?, gen_laguerre_rule(alpha, mid_order)?))
}

/// Multiplier of the extension on a Laplace eigenfunction with eigenvalue
/// `λ`, and its first two `t`-derivatives. Memoised per subordinator.
pub fn multiplier(sub: &Subordinator, lambda: f64, t: f64) -> Result<[f64; 3]> {
    if lambda == 0.0 {
        return Ok([1.0, 0.0, 0.0]);
    }
    let key = (lambda.to_bits(), t.to_bits());
    if let Some(m) = sub.memo.lock().expect("memo lock").get(&key) {
        return Ok(*m);
    }
    let a = 0.25 * lambda * t * t;
    let d1 = |s: f64| -lambda * t / (2.0 * s);
    let d2 = |s: f64| -lambda / (2.0 * s) + lambda * lambda * t * t / (4.0 * s * s);
    let f = |s: f64| {
        let e = (-a / s).exp();
        [e, d1(s) * e, d2(s) * e]
    };
    let scale = [1.0, lambda.sqrt(), lambda];
    let got = sub.certified(&f, scale);
    // Small `a` concentrates the derivative integrands near s = a.
    let split = a.min(1.0);
    let m = [
        sub.settle(got[0], |s| f(s)[0], scale[0], split)?,
        sub.settle(got[1], |s| f(s)[1], scale[1], split)?,
        sub.settle(got[2], |s| f(s)[2], scale[2], split)?,
    ];
    sub.memo.lock().expect("memo lock").insert(key, m);
    Ok(m)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::special::{bessel_profile, bessel_profile_derivative};

    #[test]
    fn accidental_agreement_of_two_orders_is_not_certified() {
        // orders 64 and 128 agree to 6e-8 here while both are off by 1e-3
        let sub = Subordinator::new(0.5, 64).unwrap();
        let t = 1.4 * 2.0 * std::f64::consts::PI / 64.0;
        let m = multiplier(&sub, 16.0, t).unwrap();
        assert!((m[0] - (-4.0 * t).exp()).abs() < 1e-10);
    }

    #[test]
    fn multiplier_matches_bessel_profile() {
        for &sigma in &[0.25, 0.5, 0.75] {
            let sub = Subordinator::new(sigma, 64).unwrap();
            for &lambda in &[1.0, 4.0, 49.0] {
                for &t in &[0.01, 0.1, 0.5, 1.0, 3.0] {
                    let m = multiplier(&sub, lambda, t).unwrap();
                    let r = t * lambda.sqrt();
                    let want = bessel_profile(sigma, r);
                    assert!((m[0] - want).abs() < 1e-9, "σ={sigma} λ={lambda} t={t}: {} vs {want}", m[0]);
                    let dwant = lambda.sqrt() * bessel_profile_derivative(sigma, r);
                    assert!((m[1] - dwant).abs() < 1e-7 * (1.0 + dwant.abs()), "σ={sigma} λ={lambda} t={t}");
                }
            }
        }
    }

    #[test]
    fn derivatives_at_tiny_t() {
        for &sigma in &[0.3, 0.75] {
            let sub = Subordinator::new(sigma, 64).unwrap();
            for &t in &[1e-9, 1e-6, 1e-3] {
                let lambda = 400.0;
                let m = multiplier(&sub, lambda, t).unwrap();
                let r = t * lambda.sqrt();
                let dwant = lambda.sqrt() * bessel_profile_derivative(sigma, r);
                assert!((m[1] - dwant).abs() < 1e-7 * dwant.abs(), "σ={sigma} t={t}: {} vs {dwant}", m[1]);
                let res = -lambda * m[0] + (1.0 - 2.0 * sigma) / t * m[1] + m[2];
                assert!(res.abs() < 1e-6 * m[2].abs(), "σ={sigma} t={t}");
            }
        }
    }

    #[test]
    fn multiplier_solves_the_bessel_ode() {
        let sigma = 0.3;
        let sub = Subordinator::new(sigma, 64).unwrap();
        for &lambda in &[1.0, 9.0] {
            for &t in &[0.05, 0.4, 2.0] {
                let [m, d1, d2] = multiplier(&sub, lambda, t).unwrap();
                let res = -lambda * m + (1.0 - 2.0 * sigma) / t * d1 + d2;
                assert!(res.abs() < 1e-6 * (lambda + d2.abs()), "λ={lambda} t={t}: {res}");
            }
        }
    }

    #[test]
    fn fallbacks_are_counted() {
        let sub = Subordinator::new(0.5, 16).unwrap();
        let _ = multiplier(&sub, 1.0, 1e-3).unwrap();
        let st = sub.stats();
        assert_eq!(st.certified + st.fallbacks, 3);
        assert!(st.fallbacks > 0);
    }
}
