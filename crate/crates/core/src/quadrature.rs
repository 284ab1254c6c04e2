//! Compensated summation and trapezoid rules.

/// Neumaier's variant of Kahan summation.
#[derive(Debug, Clone, Copy, Default)]
pub struct CompensatedSum {
    sum: f64,
    compensation: f64,
}

impl CompensatedSum {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add(&mut self, value: f64) {
        let t = self.sum + value;
        if libm::fabs(self.sum) >= libm::fabs(value) {
            self.compensation += (self.sum - t) + value;
        } else {
            self.compensation += (value - t) + self.sum;
        }
        self.sum = t;
    }

    pub fn value(&self) -> f64 {
        self.sum + self.compensation
    }
}

impl core::iter::FromIterator<f64> for CompensatedSum {
    fn from_iter<I: IntoIterator<Item = f64>>(iter: I) -> Self {
        let mut acc = CompensatedSum::new();
        for v in iter {
            acc.add(v);
        }
        acc
    }
}

/// Compensated sum of an iterator.
pub fn sum<I: IntoIterator<Item = f64>>(values: I) -> f64 {
    values.into_iter().collect::<CompensatedSum>().value()
}

/// Composite trapezoid rule over tabulated `(xs, ys)`.
///
/// `xs` must be non-decreasing and the same length as `ys`.
pub fn trapezoid(xs: &[f64], ys: &[f64]) -> f64 {
    debug_assert_eq!(xs.len(), ys.len());
    sum(xs.windows(2).zip(ys.windows(2)).map(|(x, y)| 0.5 * (y[0] + y[1]) * (x[1] - x[0])))
}

/// Composite trapezoid rule for `f` on `[a, b]` with `intervals` equal steps.
pub fn trapezoid_fn<E>(
    a: f64,
    b: f64,
    intervals: usize,
    mut f: impl FnMut(f64) -> Result<f64, E>,
) -> Result<f64, E> {
    let h = (b - a) / intervals as f64;
    let mut acc = CompensatedSum::new();
    acc.add(0.5 * f(a)?);
    for k in 1..intervals {
        acc.add(f(a + h * k as f64)?);
    }
    acc.add(0.5 * f(b)?);
    Ok(acc.value() * h)
}
