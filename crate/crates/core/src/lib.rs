//! Desk-scale toolkit for weighted Max k-CSP_R and its hardness machinery.
//!
//! - [`csp`]: instances, evaluation, exhaustive oracle.
//! - [`fourier`]: Fourier analysis on `[R]^n` and boolean analogs.
//! - [`algorithms`]: the naive baseline and the arity-extension algorithm.
//! - [`games`]: unique / d-to-1 games, their reductions and the long-code verifier.
//! - [`dictator`]: the k-query Dictator-vs.-Quasirandom test.
//! - [`lab`]: exact checks of hypercontractivity, invariance gaps and the
//!   noisy low-influence bound.
//! - [`cli`]: the `kcsp` command-line workbench.

pub mod algorithms;
pub mod cli;
pub mod csp;
pub mod dictator;
mod error;
pub mod fourier;
pub mod games;
pub mod lab;
pub mod numeric;
pub mod params;

pub use error::{Error, Result};
