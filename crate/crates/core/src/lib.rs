//! crest — simulation and exact tail asymptotics for the maximum of smooth
//! random fields on box domains.
//!
//! The crate builds twice continuously differentiable random fields with
//! closed-form derivatives, locates their pathwise maxima, evaluates the
//! Hessian-weighted Laplace integral `I(λ) = ∫_D ζ(x) e^{λ ξ(x)} dx` in
//! log-space, and verifies the saddle-point, Orlicz-norm, metric-entropy and
//! Tauberian machinery that links the growth of `E e^{λM}` to the tail
//! `P(M > u)`.

pub mod config;
pub mod entropy;
pub mod error;
pub mod experiment;
pub mod extremum;
pub mod field;
pub mod laplace;
pub mod logspace;
pub mod orlicz;
pub mod quadrature;
pub mod rng;
pub mod stats;
pub mod tail;

pub use error::{Error, Result};
