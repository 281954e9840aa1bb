//! Post-double-selection series estimation for additively separable models
//! `E[y | x, z] = g(x) + h(z)` with a high-dimensional conditioning
//! dictionary.
//!
//! The pipeline: evaluate a Hermite dictionary `p(x)` and a conditioning
//! dictionary `q(z)` ([`dictionary`]); select conditioning terms that predict
//! each `p_k(x)` and that predict `y` with heteroskedasticity-aware Lasso
//! ([`lasso`], [`selection`]); refit by least squares on `p(x)` plus the
//! union of selected terms; and report plug-in functionals of `g` with a
//! sandwich standard error ([`inference`]). [`montecarlo`] replays the
//! simulation designs used to benchmark the estimator.

pub mod dictionary;
pub mod error;
pub mod inference;
pub mod lasso;
pub mod linalg;
pub mod montecarlo;
pub mod selection;

pub use error::{Error, Result};
