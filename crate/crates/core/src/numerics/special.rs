//! Special functions used by the quadrature layer and by the reference
//! profiles in tests.

use std::f64::consts::PI;

/// Gamma function (Lanczos approximation from `statrs`).
pub fn gamma(x: f64) -> f64 {
    statrs::function::gamma::gamma(x)
}

/// Natural log of |Γ(x)| for x > 0.
pub fn ln_gamma(x: f64) -> f64 {
    statrs::function::gamma::ln_gamma(x)
}

/// Modified Bessel function of the second kind, `K_nu(x)` for `x > 0`.
///
/// Evaluated from `K_nu(x) = ∫_0^∞ exp(-x cosh u) cosh(nu u) du` with the
/// trapezoidal rule. The integrand is entire and decays doubly
/// exponentially, so a fixed step of 0.05 is accurate to rounding.
pub fn bessel_k(nu: f64, x: f64) -> f64 {
    assert!(x > 0.0, "bessel_k requires x > 0");
    let h = 0.05;
    let mut sum = 0.5 * (-x).exp();
    let mut k = 1usize;
    loop {
        let u = k as f64 * h;
        let term = (-x * u.cosh() + nu.abs() * u).exp() * 0.5 * (1.0 + (-2.0 * nu.abs() * u).exp());
        sum += term;
        if term < 1e-18 * sum || k > 20_000 {
            break;
        }
        k += 1;
    }
    sum * h
}

/// Profile of the σ-harmonic extension of a Laplace eigenfunction with
/// eigenvalue λ, written in terms of r = t√λ:
/// `2^{1-σ} Γ(σ)^{-1} r^σ K_σ(r)`, continuous at r = 0 with value 1.
pub fn bessel_profile(sigma: f64, r: f64) -> f64 {
    if r == 0.0 {
        return 1.0;
    }
    2f64.powf(1.0 - sigma) / gamma(sigma) * r.powf(sigma) * bessel_k(sigma, r)
}

/// Derivative of [`bessel_profile`] with respect to r, from
/// `d/dr [r^σ K_σ(r)] = -r^σ K_{σ-1}(r)`.
pub fn bessel_profile_derivative(sigma: f64, r: f64) -> f64 {
    if r == 0.0 {
        return if sigma > 0.5 { 0.0 } else { f64::NEG_INFINITY };
    }
    -(2f64.powf(1.0 - sigma) / gamma(sigma)) * r.powf(sigma) * bessel_k(sigma - 1.0, r)
}

/// Legendre polynomials `P_0..=P_lmax` at `c` by the three-term recurrence.
pub fn legendre_table(lmax: usize, c: f64, out: &mut Vec<f64>) {
    out.clear();
    out.push(1.0);
    if lmax == 0 {
        return;
    }
    out.push(c);
    for l in 1..lmax {
        let lf = l as f64;
        let next = ((2.0 * lf + 1.0) * c * out[l] - lf * out[l - 1]) / (lf + 1.0);
        out.push(next);
    }
}

/// First and second derivatives of `P_l` at `c`, from
/// `P'_{l+1} = P'_{l-1} + (2l+1) P_l` and the same relation one order up.
/// Regular at c = ±1, unlike the (1 - c²) forms.
pub fn legendre_derivative_tables(p: &[f64], d1: &mut Vec<f64>, d2: &mut Vec<f64>) {
    let n = p.len();
    d1.clear();
    d2.clear();
    d1.resize(n, 0.0);
    d2.resize(n, 0.0);
    if n > 1 {
        d1[1] = 1.0;
    }
    for l in 1..n.saturating_sub(1) {
        let lf = l as f64;
        d1[l + 1] = d1[l - 1] + (2.0 * lf + 1.0) * p[l];
        d2[l + 1] = d2[l - 1] + (2.0 * lf + 1.0) * d1[l];
    }
}

/// `sqrt(pi)`.
pub fn sqrt_pi() -> f64 {
    PI.sqrt()
}
