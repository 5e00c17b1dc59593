//! Quadrature rules, adaptive integration and special functions shared by
//! every other module.

pub mod adaptive;
pub mod quadrature;
pub mod special;

pub use adaptive::{adaptive_integrate, integrate_with, AdaptiveOptions, Integral, Upper};
pub use quadrature::{
    composite_legendre, gauss_legendre, gen_laguerre_rule, QuadratureRule, RuleKind,
};
