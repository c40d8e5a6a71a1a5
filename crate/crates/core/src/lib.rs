//! Exact σ-function stratum calculus for the cyclic (4,5) curve
//! `s^4 = t^5 + μ4 t^4 + μ3 t^3 + μ2 t^2 + μ1 t + μ0`, and the slit-map
//! reduction of Benney's moment equations built on top of it.
//!
//! Everything symbolic is exact (arbitrary precision rationals). Floating
//! point only appears in [`benney_sc`].

pub mod algebra;
pub mod benney_sc;
pub mod cli;
pub mod curve;
pub mod pole;
pub mod psi_lambda;
pub mod sigma;
pub mod strata;

pub use algebra::{Coeff, Mono, Rat};
