//! Shrinkage estimation for spherically symmetric location models.
//!
//! The observation model throughout is a pair (X, U) with X in R^p, U in R^k,
//! jointly spherically symmetric about (theta, 0): the density of (X, U) is
//! (1/sigma^{p+k}) f((||x - theta||^2 + ||u||^2)/sigma^2) for a density
//! generator f. X carries the location information, U is a residual vector
//! available for estimating the scale. k = 0 recovers the known-scale model.
//!
//! The crate provides:
//!
//! * [`model`]: model specifications, samplers, and the radial functions
//!   F(t) = (1/2) * integral of f over (t, inf) and Q(t) = F(t)/f(t) that
//!   drive the risk identities.
//! * [`estimator`], [`shrink`], [`field`]: the catalogue of shrinkage
//!   estimators X + sigma^2 g(X) and X + (||U||^2/(k+2)) g(X), the shrink
//!   functions r they are built from, the associated vector fields with
//!   analytic divergences, and pointwise domination-condition checkers.
//! * [`bayes`]: generalized Bayes shrinkage under priors of the form
//!   eta^a * ||theta||^{-b}, the quadrature for their shrink factor r(w),
//!   minimaxity certificates, and a numerical verification that the rule
//!   does not depend on the density generator f.
//! * [`risk`] and [`identities`]: the Monte Carlo risk laboratory with
//!   seed-deterministic, thread-count-independent estimates, plus paired
//!   checks of the integration-by-parts identities underlying the theory.
//! * [`config`] and [`report`]: a config-driven experiment runner with CSV
//!   and JSON reports and a reproducibility manifest.

pub mod bayes;
pub mod config;
pub mod error;
pub mod estimator;
pub mod f_independence;
pub mod field;
pub mod identities;
pub mod model;
pub mod quad;
pub mod reduce;
pub mod report;
pub mod risk;
pub mod rng;
pub mod shrink;
pub(crate) mod special;
pub(crate) mod vecops;

pub use error::{Error, Result};
