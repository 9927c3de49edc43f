//! paraslab: a desk-scale laboratory for the coupled semilinear heat system
//!
//! ```text
//! u_t = D1 Δu + v^p,   v_t = D2 Δv + u^q,   (u, v)(·, 0) = (μ, ν)
//! ```
//!
//! with `0 < p ≤ q` and `pq > 1`. The crate classifies exponent regimes,
//! builds the borderline singular initial data of each regime, evolves the
//! Duhamel formulation by monotone Picard iteration, and evaluates the
//! integral functionals that separate solvable from non-solvable data.

pub mod diagnostics;
pub mod error;
pub mod exponents;
pub mod harness;
pub mod mild;
pub mod profiles;
pub mod quadrature;
pub mod semigroup;
pub mod special;

pub use error::{Error, Result};
pub use exponents::{
    classify, derive_exponents, lebesgue_indices, Case, CaseLabel, ExponentSet, SystemParams,
};
