//! σ-harmonic extensions of functions on model manifolds by heat-kernel
//! subordination, together with the BMO and Carleson-measure seminorms and
//! the quantitative estimates that tie them together.

pub mod admissibility;
pub mod error;
pub mod extension;
pub mod heat_kernel;
pub mod jacobian;
pub mod manifold;
pub mod maximal;
pub mod numerics;
pub mod report;
pub mod seminorms;

pub use error::{Error, Result};
