//! Built-in functions with closed-form Young measures.
//!
//! The harmonic staircase is `f(x) = n·x − 1` on `[1/n, 1/(n−1))` for
//! `n = 2, 3, …`, a countable family on `Ω = (0, 1)`. Its Young measure has the
//! piecewise-constant density `H_m − 1` on `[1/m, 1/(m−1))`, where `H_m` is the
//! `m`-th harmonic number. Only `n ≤ N` is materialized; the remaining domain
//! measure `1/N` is recorded as tail mass.

use alloc::format;
use alloc::vec;

use crate::domain::{AxisBox, Domain, Piece, PiecewiseFunction};
use crate::expr::{parse_expression, Expression, Scope};
use crate::{Error, Result};

/// `H_n = 1 + 1/2 + … + 1/n` (zero for `n = 0`).
pub fn harmonic_number(n: usize) -> f64 {
    crate::quadrature::sum((1..=n).map(|k| 1.0 / k as f64))
}

/// The harmonic staircase truncated after `truncation` pieces' worth of `n`.
#[derive(Debug, Clone)]
pub struct HarmonicStaircase {
    function: PiecewiseFunction,
    truncation: usize,
}

/// Builds pieces `n = 2..=truncation` with forward `n*x-1`, inverse
/// `(y+1)/n` and inverse Jacobian `1/n`; tail mass is `1/truncation`.
pub fn harmonic_staircase(truncation: usize) -> Result<HarmonicStaircase> {
    if truncation < 2 {
        return Err(Error::InvalidArgument("harmonic staircase needs N >= 2"));
    }
    let pieces = (2..=truncation)
        .map(|n| {
            let nf = n as f64;
            let subdomain = AxisBox::interval(1.0 / nf, 1.0 / (nf - 1.0))?;
            Ok(Piece::new(subdomain, vec![parse_expression(&format!("{n}*x-1"), 1)?])
                .with_inverse(vec![Expression::parse(&format!("(y+1)/{n}"), Scope::codomain(1))?])
                .with_jacobian_inverse(Expression::parse(&format!("1/{n}"), Scope::codomain(1))?)
                .with_monotone(true))
        })
        .collect::<Result<_>>()?;
    let function = PiecewiseFunction::new(
        Domain::interval(0.0, 1.0)?,
        pieces,
        AxisBox::interval(0.0, 1.0)?,
        1.0 / truncation as f64,
    )?;
    Ok(HarmonicStaircase { function, truncation })
}

// m with y ∈ [1/m, 1/(m−1)), for y ∈ (0, 1).
fn staircase_index(y: f64) -> usize {
    let m = libm::ceil(1.0 / y);
    if m > usize::MAX as f64 / 2.0 {
        usize::MAX / 2
    } else {
        m as usize
    }
}

impl HarmonicStaircase {
    pub fn function(&self) -> &PiecewiseFunction {
        &self.function
    }

    pub fn into_function(self) -> PiecewiseFunction {
        self.function
    }

    pub fn truncation(&self) -> usize {
        self.truncation
    }

    /// Density of the truncated family: `H_min(m, N) − 1` on `[1/m, 1/(m−1))`.
    /// This is what [`crate::analytic::pushforward_density`] should reproduce.
    pub fn reference_density(&self, y: f64) -> f64 {
        if !(y > 0.0 && y < 1.0) {
            return 0.0;
        }
        harmonic_number(staircase_index(y).min(self.truncation)) - 1.0
    }

    /// CDF of the truncated family (total mass `1 − 1/N`).
    pub fn truncated_cdf(&self, y: f64) -> f64 {
        if !(y > 0.0) {
            return 0.0;
        }
        if y >= 1.0 {
            return 1.0 - 1.0 / self.truncation as f64;
        }
        let m = staircase_index(y);
        let upper = if m < self.truncation { 1.0 / m as f64 - 1.0 / self.truncation as f64 } else { 0.0 };
        y * (harmonic_number(m.min(self.truncation)) - 1.0) + upper
    }

    /// Density of the untruncated family, `H_m − 1` on `[1/m, 1/(m−1))`.
    pub fn exact_density(y: f64) -> f64 {
        if !(y > 0.0 && y < 1.0) {
            return 0.0;
        }
        harmonic_number(staircase_index(y)) - 1.0
    }

    /// CDF of the untruncated family: `y (H_m − 1) + 1/m`.
    pub fn exact_cdf(y: f64) -> f64 {
        if !(y > 0.0) {
            return 0.0;
        }
        if y >= 1.0 {
            return 1.0;
        }
        let m = staircase_index(y);
        y * (harmonic_number(m) - 1.0) + 1.0 / m as f64
    }
}

/// `f(x) = x` on `(0, 1)`, with inverse `y`.
pub fn identity() -> PiecewiseFunction {
    unit_interval_function("x", Some("y"))
}

/// `f(x) = x²` on `(0, 1)`, marked monotone and inverted numerically.
pub fn square() -> PiecewiseFunction {
    unit_interval_function("x^2", None)
}

fn unit_interval_function(forward: &str, inverse: Option<&str>) -> PiecewiseFunction {
    let unit = AxisBox::interval(0.0, 1.0).expect("unit interval");
    let mut piece = Piece::new(unit.clone(), vec![parse_expression(forward, 1).expect("builtin")])
        .with_monotone(true);
    if let Some(inv) = inverse {
        piece = piece.with_inverse(vec![Expression::parse(inv, Scope::codomain(1)).expect("builtin")]);
    }
    PiecewiseFunction::new(Domain::interval(0.0, 1.0).expect("unit"), vec![piece], unit, 0.0)
        .expect("builtin function")
}

/// Built-in functions addressable by name.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Builtin {
    Harmonic { truncation: usize },
    Identity,
    Square,
}

impl Builtin {
    pub const NAMES: [&'static str; 3] = ["harmonic", "identity", "square"];

    pub fn from_name(name: &str, truncation: usize) -> Option<Builtin> {
        match name {
            "harmonic" => Some(Builtin::Harmonic { truncation }),
            "identity" => Some(Builtin::Identity),
            "square" => Some(Builtin::Square),
            _ => None,
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            Builtin::Harmonic { .. } => "harmonic",
            Builtin::Identity => "identity",
            Builtin::Square => "square",
        }
    }

    pub fn function(&self) -> Result<PiecewiseFunction> {
        match *self {
            Builtin::Harmonic { truncation } => Ok(harmonic_staircase(truncation)?.into_function()),
            Builtin::Identity => Ok(identity()),
            Builtin::Square => Ok(square()),
        }
    }

    /// Analytic CDF of the Young measure of the (untruncated) function.
    pub fn reference_cdf(&self, y: f64) -> f64 {
        match self {
            Builtin::Harmonic { .. } => HarmonicStaircase::exact_cdf(y),
            Builtin::Identity => y.clamp(0.0, 1.0),
            Builtin::Square => libm::sqrt(y.clamp(0.0, 1.0)),
        }
    }

    /// Analytic density of the materialized (possibly truncated) function.
    pub fn reference_density(&self, y: f64) -> f64 {
        if !(y > 0.0 && y < 1.0) {
            return 0.0;
        }
        match *self {
            Builtin::Harmonic { truncation } => {
                harmonic_number(staircase_index(y).min(truncation)) - 1.0
            }
            Builtin::Identity => 1.0,
            Builtin::Square => 0.5 / libm::sqrt(y),
        }
    }
}
