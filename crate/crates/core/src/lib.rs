//! Young measures of piecewise-defined Borel functions.
//!
//! The Young measure associated with a Borel map `f: Ω → K` is the law of
//! `f(U)` with `U` uniform on `Ω`. This crate computes it three ways:
//!
//! * exactly, as a Dirac mixture, when `f` is simple ([`analytic::simple_young_measure`]);
//! * as a density `g(y) = (1/M) Σ |J_{f_i^{-1}}(y)|` over the pieces whose image
//!   contains `y` ([`analytic::pushforward_density`]);
//! * empirically, by pushing uniform samples through `f` ([`monte_carlo`]).
//!
//! [`approximation`] builds the dyadic range-quantization ladder of simple
//! functions and measures its weak* gap to the analytic measure.
//!
//! The crate is `no_std` and only needs `alloc`. File formats, parallel
//! sampling and the command-line tool live in the `ym` crate.

#![no_std]
// Negated comparisons such as `!(lo < hi)` are used so that NaN fails the check.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

extern crate alloc;
#[cfg(test)]
extern crate std;

pub mod analytic;
pub mod approximation;
pub mod builtins;
pub mod domain;
mod error;
pub mod expr;
pub mod measure;
pub mod monte_carlo;
pub mod quadrature;
pub mod rng;

pub use error::{Error, Result};
