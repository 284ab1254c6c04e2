//! Command-line front end and file formats for `ym-core`.
//!
//! * [`spec_file`] reads and writes JSON function specs;
//! * [`export`] writes density, measure, convergence, sample and estimate files;
//! * [`plot`] draws SVG densities and histograms;
//! * [`parallel`] runs sampling and ladders on a thread pool;
//! * [`cli`] ties them together behind [`cli::run`].

// Negated comparisons such as `!(lo < hi)` are used so that NaN fails the check.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cli;
pub mod error;
pub mod export;
pub mod parallel;
pub mod plot;
pub mod spec_file;

pub use error::{CliError, Result};
