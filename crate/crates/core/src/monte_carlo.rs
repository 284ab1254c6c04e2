//! Sampling `f(U)` and estimating Young functionals.
//!
//! Draw `i` uses the stream `CounterRng::new(seed).stream(i)`, so results do
//! not depend on chunking or thread count. Parallel callers evaluate
//! [`draw_value`] per index and hand the values to [`empirical_from_draws`].

use alloc::vec;
use alloc::vec::Vec;

use crate::domain::{Domain, PiecewiseFunction};
use crate::measure::{EmpiricalMeasure, TestFunction};
use crate::quadrature::CompensatedSum;
use crate::rng::CounterRng;
use crate::{Error, Result};

/// Largest fraction of integrand evaluations allowed to fail.
pub const MAX_FAILURE_FRACTION: f64 = 1e-3;

/// Point `index` of the uniform stream on `domain`.
pub fn sample_point(domain: &Domain, seed: u64, index: u64, out: &mut [f64]) {
    domain.sample_into(&mut CounterRng::new(seed).stream(index), out);
}

/// `n` uniform points on `domain`, flattened row by row.
pub fn sample_uniform(domain: &Domain, n: usize, seed: u64) -> Vec<f64> {
    let d = domain.dim();
    let mut out = vec![0.0; n * d];
    for (i, row) in out.chunks_exact_mut(d).enumerate() {
        sample_point(domain, seed, i as u64, row);
    }
    out
}

/// `f(x_i)` for draw `index`, or `None` when `x_i` hits no piece.
pub fn draw_value(f: &PiecewiseFunction, seed: u64, index: u64, x: &mut [f64]) -> Result<Option<f64>> {
    sample_point(f.domain(), seed, index, x);
    match f.evaluate_scalar(x) {
        Ok(v) => Ok(Some(v)),
        Err(Error::NotCovered) => Ok(None),
        Err(e) => Err(e),
    }
}

/// Collects per-draw results in index order into an empirical measure.
pub fn empirical_from_draws<I>(draws: I, seed: u64) -> Result<EmpiricalMeasure>
where
    I: IntoIterator<Item = Option<f64>>,
{
    let mut samples = Vec::new();
    let mut rejected = 0;
    for draw in draws {
        match draw {
            Some(v) => samples.push(v),
            None => rejected += 1,
        }
    }
    EmpiricalMeasure::new(samples, seed, rejected)
}

/// Empirical law of `f(U)` from `n` draws. Draws in the tail are rejected,
/// so the result approximates the law conditioned on the covered set.
pub fn empirical_measure(f: &PiecewiseFunction, n: usize, seed: u64) -> Result<EmpiricalMeasure> {
    if f.codomain_dim() != 1 {
        return Err(Error::RequiresOneDimension);
    }
    let mut x = vec![0.0; f.domain_dim()];
    let draws = (0..n as u64).map(|i| draw_value(f, seed, i, &mut x)).collect::<Result<Vec<_>>>()?;
    empirical_from_draws(draws, seed)
}

/// Kolmogorov–Smirnov distance `sup_y |F_n(y) − F(y)|`.
///
/// Tied samples are grouped so the empirical jump is taken once.
pub fn ks_statistic<F: Fn(f64) -> f64>(e: &EmpiricalMeasure, cdf: F) -> f64 {
    let s = e.samples();
    let n = s.len() as f64;
    let mut d: f64 = 0.0;
    let mut i = 0;
    while i < s.len() {
        let mut j = i + 1;
        while j < s.len() && s[j] == s[i] {
            j += 1;
        }
        let f = cdf(s[i]);
        d = d.max(libm::fabs(j as f64 / n - f)).max(libm::fabs(f - i as f64 / n));
        i = j;
    }
    d
}

/// How a functional estimate was obtained.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EstimateMethod {
    MonteCarlo,
    Quadrature,
}

impl EstimateMethod {
    pub fn name(&self) -> &'static str {
        match self {
            EstimateMethod::MonteCarlo => "monte-carlo",
            EstimateMethod::Quadrature => "quadrature",
        }
    }
}

/// An estimate of `∫_Ω ψ(x, f(x)) w(x) dx`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FunctionalEstimate {
    pub value: f64,
    /// Standard error for Monte Carlo, zero for quadrature.
    pub stderr: f64,
    /// Draws or quadrature intervals.
    pub n: usize,
    pub seed: Option<u64>,
    pub method: EstimateMethod,
    /// Draws that hit no piece; they contribute zero.
    pub rejected: usize,
    /// Draws whose integrand failed to evaluate; they are left out.
    pub failures: usize,
    /// Richardson error estimate for quadrature, zero for Monte Carlo.
    pub tolerance: f64,
}

/// Monte Carlo estimate `M · mean(ψ(x_i, f(x_i)) w(x_i))`.
///
/// Uncovered draws contribute zero, so the tail is integrated as a null set of
/// the functional. Aborts when more than 0.1% of evaluations fail.
pub fn young_functional_mc(
    f: &PiecewiseFunction,
    t: &TestFunction,
    n: usize,
    seed: u64,
) -> Result<FunctionalEstimate> {
    if n < 2 {
        return Err(Error::InvalidArgument("at least two samples are required"));
    }
    if f.codomain_dim() != 1 {
        return Err(Error::RequiresOneDimension);
    }
    let mut x = vec![0.0; f.domain_dim()];
    let mut values = Vec::with_capacity(n);
    let (mut rejected, mut failures) = (0, 0);
    for i in 0..n as u64 {
        sample_point(f.domain(), seed, i, &mut x);
        let value = match f.evaluate_scalar(&x) {
            Ok(s) => t.eval_integrand(&x, s),
            Err(Error::NotCovered) => {
                rejected += 1;
                Ok(0.0)
            }
            Err(e) => Err(e),
        };
        match value {
            Ok(v) => values.push(v),
            Err(_) => failures += 1,
        }
    }
    if failures as f64 > MAX_FAILURE_FRACTION * n as f64 {
        return Err(Error::TooManyFailures { failures, n });
    }
    let (mean, stderr) = mean_and_stderr(&values)?;
    let m = f.domain().measure();
    Ok(FunctionalEstimate {
        value: m * mean,
        stderr: m * stderr,
        n,
        seed: Some(seed),
        method: EstimateMethod::MonteCarlo,
        rejected,
        failures,
        tolerance: 0.0,
    })
}

fn mean_and_stderr(values: &[f64]) -> Result<(f64, f64)> {
    if values.len() < 2 {
        return Err(Error::TooManyFailures { failures: 0, n: values.len() });
    }
    let n = values.len() as f64;
    let mean = values.iter().copied().collect::<CompensatedSum>().value() / n;
    let ss = values.iter().map(|v| (v - mean) * (v - mean)).collect::<CompensatedSum>().value();
    Ok((mean, libm::sqrt(ss / (n - 1.0)) / libm::sqrt(n)))
}

/// Composite trapezoid estimate over each piece of a one-dimensional function.
///
/// The forward map is evaluated at the closed piece endpoints. The tolerance is
/// the Richardson estimate `|T(h) − T(2h)| / 3`.
pub fn young_functional_quadrature(
    f: &PiecewiseFunction,
    t: &TestFunction,
    subdivisions: usize,
) -> Result<FunctionalEstimate> {
    if !f.is_one_dimensional() {
        return Err(Error::RequiresOneDimension);
    }
    if subdivisions < 2 {
        return Err(Error::InvalidArgument("at least two subdivisions are required"));
    }
    let intervals = subdivisions + subdivisions % 2;
    let mut fine = CompensatedSum::new();
    let mut coarse = CompensatedSum::new();
    for piece in f.pieces() {
        let (a, b) = piece.subdomain().bounds()[0];
        let h = (b - a) / intervals as f64;
        let mut ys = Vec::with_capacity(intervals + 1);
        for k in 0..=intervals {
            let x = if k == intervals { b } else { a + k as f64 * h };
            ys.push(t.eval_integrand(&[x], piece.eval_scalar(&[x])?)?);
        }
        let inner = |step: usize| -> f64 {
            let interior: CompensatedSum = ys[step..intervals].iter().step_by(step).copied().collect();
            (step as f64 * h) * (0.5 * (ys[0] + ys[intervals]) + interior.value())
        };
        fine.add(inner(1));
        coarse.add(inner(2));
    }
    let value = fine.value();
    Ok(FunctionalEstimate {
        value,
        stderr: 0.0,
        n: intervals,
        seed: None,
        method: EstimateMethod::Quadrature,
        rejected: 0,
        failures: 0,
        tolerance: libm::fabs(value - coarse.value()) / 3.0,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::builtins::{harmonic_staircase, identity, square};

    #[test]
    fn sampling_is_index_local() {
        let f = identity();
        let all = sample_uniform(f.domain(), 100, 7);
        let mut x = [0.0];
        sample_point(f.domain(), 7, 42, &mut x);
        assert_eq!(all[42], x[0]);
        assert!(all.iter().all(|&v| (0.0..1.0).contains(&v)));
    }

    #[test]
    fn tail_draws_are_rejected() {
        let h = harmonic_staircase(4).unwrap();
        let e = empirical_measure(h.function(), 20_000, 3).unwrap();
        assert_eq!(e.drawn(), 20_000);
        let fraction = e.rejected() as f64 / 20_000.0;
        assert!((fraction - 0.25).abs() < 0.02, "{fraction}");
    }

    #[test]
    fn ks_of_identity_is_small() {
        let e = empirical_measure(&identity(), 10_000, 11).unwrap();
        let d = ks_statistic(&e, |y| y.clamp(0.0, 1.0));
        assert!(d < 1.63 / 100.0, "{d}");
        assert!(d > 0.0);
    }

    #[test]
    fn ks_groups_ties() {
        let e = EmpiricalMeasure::new(vec![0.75, 0.25, 0.25], 0, 0).unwrap();
        assert!((ks_statistic(&e, |y| y) - (2.0 / 3.0 - 0.25)).abs() < 1e-15);
    }

    #[test]
    fn quadrature_of_square_moment() {
        let t = TestFunction::beta("s").unwrap();
        let q = young_functional_quadrature(&square(), &t, 1000).unwrap();
        assert!((q.value - 1.0 / 3.0).abs() < 1e-6);
        assert!(q.tolerance < 1e-6);
        assert!(q.tolerance > 0.0);
    }

    #[test]
    fn monte_carlo_agrees_with_quadrature() {
        let t = TestFunction::beta("s").unwrap().with_weight("x", 1).unwrap();
        let f = square();
        let mc = young_functional_mc(&f, &t, 100_000, 5).unwrap();
        let q = young_functional_quadrature(&f, &t, 2000).unwrap();
        assert!((mc.value - 0.25).abs() < 4.0 * mc.stderr + 1e-9, "{mc:?}");
        assert!((q.value - 0.25).abs() < 1e-6);
    }

    #[test]
    fn failures_abort() {
        let t = TestFunction::beta("log(s-0.5)").unwrap();
        assert!(matches!(
            young_functional_mc(&identity(), &t, 1000, 1),
            Err(Error::TooManyFailures { .. })
        ));
    }
}
