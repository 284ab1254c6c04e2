//! Probability measures on `K` and their pairing with test functions.
//!
//! Weak* closeness of two measures is probed through a finite suite of
//! continuous test functions `β`; [`weakstar_gap`] reports the largest
//! difference of `∫ β dν` over the suite, a lower bound on any dual-norm
//! distance.

use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use crate::analytic::{DensityTable, DiracMixture};
use crate::expr::{Expression, Scope};
use crate::quadrature::{self, CompensatedSum};
use crate::{Error, Result};

/// Grid size used by [`TestFunction::validate_on`].
pub const TEST_VALIDATION_POINTS: usize = 10_000;

/// Sorted samples of `f(U)`.
#[derive(Debug, Clone, PartialEq)]
pub struct EmpiricalMeasure {
    samples: Vec<f64>,
    seed: u64,
    rejected: usize,
}

impl EmpiricalMeasure {
    /// Sorts `samples`; `rejected` counts draws that hit no piece.
    pub fn new(mut samples: Vec<f64>, seed: u64, rejected: usize) -> Result<Self> {
        if samples.is_empty() {
            return Err(Error::NoCoverage);
        }
        if !samples.iter().all(|v| v.is_finite()) {
            return Err(Error::InvalidMeasure("samples must be finite"));
        }
        samples.sort_by(f64::total_cmp);
        Ok(EmpiricalMeasure { samples, seed, rejected })
    }

    pub fn samples(&self) -> &[f64] {
        &self.samples
    }

    /// Number of accepted samples.
    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn rejected(&self) -> usize {
        self.rejected
    }

    /// Accepted plus rejected draws.
    pub fn drawn(&self) -> usize {
        self.samples.len() + self.rejected
    }
}

/// A measure in one of its three computable forms.
#[derive(Debug, Clone, PartialEq)]
pub enum YoungMeasureRepr {
    Atoms(DiracMixture),
    Density(DensityTable),
    Empirical(EmpiricalMeasure),
}

impl YoungMeasureRepr {
    pub fn variant_name(&self) -> &'static str {
        match self {
            YoungMeasureRepr::Atoms(_) => "atoms",
            YoungMeasureRepr::Density(_) => "density",
            YoungMeasureRepr::Empirical(_) => "empirical",
        }
    }

    /// Total mass as represented: `Σ w_i` for atoms, the trapezoid integral for
    /// densities, 1 for empirical measures.
    pub fn total_mass(&self) -> f64 {
        match self {
            YoungMeasureRepr::Atoms(m) => m.atom_mass(),
            YoungMeasureRepr::Density(t) => t.trapezoid_mass(),
            YoungMeasureRepr::Empirical(_) => 1.0,
        }
    }

    /// Known missing mass (truncation tail).
    pub fn deficit(&self) -> f64 {
        match self {
            YoungMeasureRepr::Atoms(m) => m.deficit(),
            YoungMeasureRepr::Density(t) => t.tail_bound(),
            YoungMeasureRepr::Empirical(_) => 0.0,
        }
    }

    /// Quadrature error estimate attached to integrals against this measure.
    pub fn quadrature_tolerance(&self) -> f64 {
        match self {
            YoungMeasureRepr::Density(t) => t.quadrature_tolerance(),
            _ => 0.0,
        }
    }
}

impl From<DiracMixture> for YoungMeasureRepr {
    fn from(m: DiracMixture) -> Self {
        YoungMeasureRepr::Atoms(m)
    }
}

impl From<DensityTable> for YoungMeasureRepr {
    fn from(t: DensityTable) -> Self {
        YoungMeasureRepr::Density(t)
    }
}

impl From<EmpiricalMeasure> for YoungMeasureRepr {
    fn from(e: EmpiricalMeasure) -> Self {
        YoungMeasureRepr::Empirical(e)
    }
}

/// A probe `β(s)`, optionally with a weight `w(x)` or a Carathéodory
/// integrand `ψ(x, s)` replacing `β`.
#[derive(Debug, Clone, PartialEq)]
pub struct TestFunction {
    beta: Expression,
    weight: Option<Expression>,
    psi: Option<Expression>,
    lipschitz_bound: Option<f64>,
    label: String,
}

impl TestFunction {
    /// Parses `β` in the probe variable `s`.
    pub fn beta(text: &str) -> Result<Self> {
        let beta = Expression::parse(text, Scope::probe())?;
        Ok(TestFunction::from_expression(beta))
    }

    pub fn from_expression(beta: Expression) -> Self {
        let label = format!("{beta}");
        TestFunction { beta, weight: None, psi: None, lipschitz_bound: None, label }
    }

    /// Weight `w(x)` over a `d`-dimensional domain.
    pub fn with_weight(mut self, text: &str, d: usize) -> Result<Self> {
        self.weight = Some(Expression::parse(text, Scope::domain(d))?);
        Ok(self)
    }

    /// Carathéodory integrand `ψ(x, s)`; replaces `β` in Young functionals.
    pub fn with_psi(mut self, text: &str, d: usize) -> Result<Self> {
        self.psi = Some(Expression::parse(text, Scope::caratheodory(d))?);
        Ok(self)
    }

    /// Caller-declared Lipschitz constant of `β` on `K`.
    pub fn with_lipschitz_bound(mut self, bound: f64) -> Self {
        self.lipschitz_bound = Some(bound);
        self
    }

    pub fn with_label(mut self, label: impl Into<String>) -> Self {
        self.label = label.into();
        self
    }

    pub fn beta_expression(&self) -> &Expression {
        &self.beta
    }

    pub fn weight(&self) -> Option<&Expression> {
        self.weight.as_ref()
    }

    pub fn psi(&self) -> Option<&Expression> {
        self.psi.as_ref()
    }

    pub fn lipschitz_bound(&self) -> Option<f64> {
        self.lipschitz_bound
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    /// True when the probe has no domain dependence.
    pub fn is_homogeneous(&self) -> bool {
        self.weight.is_none() && self.psi.is_none()
    }

    pub fn eval_beta(&self, s: f64) -> Result<f64> {
        Ok(self.beta.eval_s(s)?)
    }

    /// `ψ(x, s)·w(x)`, with `ψ = β` and `w = 1` when absent.
    pub fn eval_integrand(&self, x: &[f64], s: f64) -> Result<f64> {
        let core = match &self.psi {
            Some(psi) => psi.eval_xs(x, s)?,
            None => self.beta.eval_s(s)?,
        };
        let weight = match &self.weight {
            Some(w) => w.eval_x(x)?,
            None => 1.0,
        };
        Ok(core * weight)
    }

    /// Checks that `β` evaluates on a 10⁴-point grid of `[lo, hi]`.
    pub fn validate_on(&self, lo: f64, hi: f64) -> Result<()> {
        let n = TEST_VALIDATION_POINTS;
        for k in 0..n {
            self.eval_beta(lo + (hi - lo) * k as f64 / (n - 1) as f64)?;
        }
        Ok(())
    }
}

/// Named probe suites.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SuiteKind {
    /// `s⁰..s⁶`, `sin(πs)`, `cos(πs)`, `|s − mid(K)|`.
    Default,
    /// `s⁰..s⁶`.
    Monomial,
    /// `sin(kπs)`, `cos(kπs)` for `k = 1, 2, 3`.
    Trig,
}

impl SuiteKind {
    pub fn from_name(name: &str) -> Option<SuiteKind> {
        match name {
            "default" => Some(SuiteKind::Default),
            "monomial" => Some(SuiteKind::Monomial),
            "trig" => Some(SuiteKind::Trig),
            _ => None,
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            SuiteKind::Default => "default",
            SuiteKind::Monomial => "monomial",
            SuiteKind::Trig => "trig",
        }
    }
}

/// Probe suite on `K = [lo, hi]` with Lipschitz bounds valid on `K`.
pub fn probe_suite(kind: SuiteKind, lo: f64, hi: f64) -> Vec<TestFunction> {
    let radius = libm::fabs(lo).max(libm::fabs(hi));
    let pi = core::f64::consts::PI;
    let probe = |text: &str, bound: f64| {
        TestFunction::beta(text).expect("suite expression").with_lipschitz_bound(bound)
    };
    let monomials = (0..=6).map(|k| {
        let bound = if k == 0 { 0.0 } else { k as f64 * libm::pow(radius, (k - 1) as f64) };
        probe(&format!("s^{k}"), bound)
    });
    let mut suite: Vec<TestFunction> = Vec::new();
    match kind {
        SuiteKind::Default => {
            suite.extend(monomials);
            suite.push(probe("sin(pi*s)", pi));
            suite.push(probe("cos(pi*s)", pi));
            suite.push(probe(&format!("abs(s-{})", 0.5 * (lo + hi)), 1.0));
        }
        SuiteKind::Monomial => suite.extend(monomials),
        SuiteKind::Trig => {
            for k in 1..=3 {
                suite.push(probe(&format!("sin({k}*pi*s)"), k as f64 * pi));
                suite.push(probe(&format!("cos({k}*pi*s)"), k as f64 * pi));
            }
        }
    }
    suite
}

/// `∫ β dν`.
///
/// Atoms give `Σ w_i β(p_i)`, densities the trapezoid rule of `β·g` on their
/// grid, empirical measures the sample mean of `β`.
pub fn integrate_test(measure: &YoungMeasureRepr, t: &TestFunction) -> Result<f64> {
    if !t.is_homogeneous() {
        return Err(Error::DomainDependentTest);
    }
    match measure {
        YoungMeasureRepr::Atoms(m) => {
            if m.dim() != 1 {
                return Err(Error::RequiresOneDimension);
            }
            let mut acc = CompensatedSum::new();
            for (p, w) in m.iter() {
                acc.add(w * t.eval_beta(p[0])?);
            }
            Ok(acc.value())
        }
        YoungMeasureRepr::Density(table) => {
            let weighted = table
                .grid()
                .iter()
                .zip(table.values())
                .map(|(&y, &g)| Ok(g * t.eval_beta(y)?))
                .collect::<Result<Vec<f64>>>()?;
            Ok(quadrature::trapezoid(table.grid(), &weighted))
        }
        YoungMeasureRepr::Empirical(e) => {
            let mut acc = CompensatedSum::new();
            for &s in e.samples() {
                acc.add(t.eval_beta(s)?);
            }
            Ok(acc.value() / e.len() as f64)
        }
    }
}

/// `ν((−∞, y])`.
pub fn cdf(measure: &YoungMeasureRepr, y: f64) -> Result<f64> {
    match measure {
        YoungMeasureRepr::Atoms(m) => {
            if m.dim() != 1 {
                return Err(Error::RequiresOneDimension);
            }
            // Locations are sorted.
            let k = m.locations().partition_point(|&p| p <= y);
            Ok(quadrature::sum(m.weights()[..k].iter().copied()))
        }
        YoungMeasureRepr::Density(table) => Ok(table.cdf(y)),
        YoungMeasureRepr::Empirical(e) => {
            let k = e.samples().partition_point(|&s| s <= y);
            Ok(k as f64 / e.len() as f64)
        }
    }
}

/// `max_β |∫ β da − ∫ β db|` over the suite.
pub fn weakstar_gap(
    a: &YoungMeasureRepr,
    b: &YoungMeasureRepr,
    suite: &[TestFunction],
) -> Result<f64> {
    if suite.is_empty() {
        return Err(Error::EmptySuite);
    }
    let mut gap: f64 = 0.0;
    for t in suite {
        gap = gap.max(libm::fabs(integrate_test(a, t)? - integrate_test(b, t)?));
    }
    Ok(gap)
}
