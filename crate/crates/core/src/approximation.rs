//! Simple-function ladders converging to `f`.
//!
//! Level `L` splits `K = [lo, hi]` into `2^L` half-open cells of width
//! `Δ_L = 2^{-L}·diam(K)` (the last cell closed) and sets `f_L(x)` to the lower
//! endpoint of the cell containing `f(x)`. Then `|f_L − f| ≤ Δ_L` everywhere,
//! so for any `β` with Lipschitz constant `Λ`,
//! `|∫β dν_L − ∫β dν| ≤ Λ·Δ_L`. Preimages of the cell boundaries are found by
//! inverting each monotone piece, so the weights of `ν_L` are exact up to the
//! inversion tolerance.

use alloc::vec::Vec;

use crate::analytic::{DiracMixture, PieceInverse};
use crate::domain::PiecewiseFunction;
use crate::measure::{weakstar_gap, TestFunction, YoungMeasureRepr};
use crate::quadrature::CompensatedSum;
use crate::rng::CounterRng;
use crate::{Error, Result};

/// Highest supported level.
pub const MAX_LEVEL: u32 = 40;

// A base piece cut at the preimages of cell boundaries. Sub-interval `j`
// spans `breaks[j]..breaks[j + 1]` and maps to cell `first_cell + step·j`.
#[derive(Debug, Clone)]
struct QuantizedPiece {
    breaks: Vec<f64>,
    first_cell: i64,
    step: i64,
}

/// The level-`L` simple approximation of a one-dimensional function.
#[derive(Debug, Clone)]
pub struct SimpleFunction {
    level: u32,
    lo: f64,
    cell_width: f64,
    domain_measure: f64,
    tail_mass: f64,
    // Sorted by lower bound, as are the base pieces.
    pieces: Vec<QuantizedPiece>,
}

impl SimpleFunction {
    pub fn level(&self) -> u32 {
        self.level
    }

    /// `Δ_L`, also the sup-norm distance bound to `f`.
    pub fn cell_width(&self) -> f64 {
        self.cell_width
    }

    pub fn tail_mass(&self) -> f64 {
        self.tail_mass
    }

    fn cell_value(&self, cell: i64) -> f64 {
        self.lo + cell as f64 * self.cell_width
    }

    /// `f_L(x)`, or `None` on a preimage boundary, a piece boundary, or in the tail.
    pub fn evaluate(&self, x: f64) -> Option<f64> {
        let k = self.pieces.partition_point(|p| p.breaks[0] < x);
        let piece = &self.pieces[k.checked_sub(1)?];
        let last = *piece.breaks.last()?;
        if !(x < last) {
            return None;
        }
        let j = piece.breaks.partition_point(|&b| b <= x).checked_sub(1)?;
        (piece.breaks[j] < x).then(|| self.cell_value(piece.first_cell + piece.step * j as i64))
    }

    /// `(interval, value)` for every sub-interval of positive length.
    pub fn intervals(&self) -> impl Iterator<Item = ((f64, f64), f64)> + '_ {
        self.pieces.iter().flat_map(move |p| {
            p.breaks.windows(2).enumerate().filter(|(_, w)| w[1] > w[0]).map(move |(j, w)| {
                ((w[0], w[1]), self.cell_value(p.first_cell + p.step * j as i64))
            })
        })
    }

    /// `(1/M) Σ |I_j| δ_{value_j}` with the truncation tail as deficit.
    pub fn young_measure(&self) -> Result<DiracMixture> {
        let mut cells: Vec<(i64, f64)> = Vec::new();
        for p in &self.pieces {
            for (j, w) in p.breaks.windows(2).enumerate() {
                let len = w[1] - w[0];
                if len > 0.0 {
                    cells.push((p.first_cell + p.step * j as i64, len));
                }
            }
        }
        cells.sort_by_key(|&(cell, _)| cell);
        let mut atoms: Vec<(Vec<f64>, f64)> = Vec::new();
        let mut k = 0;
        while k < cells.len() {
            let cell = cells[k].0;
            let mut acc = CompensatedSum::new();
            while k < cells.len() && cells[k].0 == cell {
                acc.add(cells[k].1);
                k += 1;
            }
            atoms.push((alloc::vec![self.cell_value(cell)], acc.value() / self.domain_measure));
        }
        DiracMixture::new(atoms, self.tail_mass / self.domain_measure)
    }
}

/// Range quantization of `f` at `level`.
///
/// Requires a one-dimensional function whose pieces are constant, monotone or
/// carry an inverse.
pub fn simple_approximation(f: &PiecewiseFunction, level: u32) -> Result<SimpleFunction> {
    if !f.is_one_dimensional() {
        return Err(Error::RequiresOneDimension);
    }
    if level > MAX_LEVEL {
        return Err(Error::InvalidArgument("quantization level above 40"));
    }
    let (lo, hi) = f.codomain().bounds()[0];
    let cells = 1i64 << level;
    let width = (hi - lo) / cells as f64;
    let cell_of = |v: f64| (libm::floor((v - lo) / width) as i64).clamp(0, cells - 1);

    let mut quantized = Vec::with_capacity(f.pieces().len());
    for (i, piece) in f.pieces().iter().enumerate() {
        let (a, b) = piece.subdomain().bounds()[0];
        if let Some(p) = piece.constant_value() {
            quantized.push(QuantizedPiece { breaks: alloc::vec![a, b], first_cell: cell_of(p[0]), step: 0 });
            continue;
        }
        let inv = PieceInverse::new(piece, i)?;
        let (ylo, yhi) = inv.image();
        let (k0, k1) = (cell_of(ylo), cell_of(yhi));
        let mut breaks = Vec::with_capacity((k1 - k0 + 2) as usize);
        breaks.push(a);
        let boundaries = (k0 + 1..=k1).map(|k| lo + k as f64 * width).filter(|&c| ylo < c && c < yhi);
        let mut interior: Vec<f64> = Vec::new();
        for c in boundaries {
            let x = inv.invert(c)?.ok_or(Error::OutsideImage { y: c })?;
            interior.push(x);
        }
        if !inv.increasing() {
            interior.reverse();
        }
        for x in interior {
            let prev = *breaks.last().unwrap_or(&a);
            breaks.push(x.clamp(prev, b));
        }
        breaks.push(b);
        // With every boundary strictly inside the image, the sub-intervals run
        // through cells k0..=k1 starting from the end cell. A boundary landing
        // on an image end was dropped above; then the first cell is read off
        // the first sub-interval instead.
        let (first_cell, step) = if inv.increasing() { (k0, 1) } else { (k1, -1) };
        let expected = (k1 - k0 + 2) as usize;
        if breaks.len() != expected {
            let mid = 0.5 * (breaks[0] + breaks[1]);
            let first = cell_of(piece.eval_scalar(&[mid])?);
            quantized.push(QuantizedPiece { breaks, first_cell: first, step });
        } else {
            quantized.push(QuantizedPiece { breaks, first_cell, step });
        }
    }
    quantized.sort_by(|p, q| p.breaks[0].total_cmp(&q.breaks[0]));
    Ok(SimpleFunction {
        level,
        lo,
        cell_width: width,
        domain_measure: f.domain().measure(),
        tail_mass: f.tail_mass(),
        pieces: quantized,
    })
}

/// One rung of the ladder.
#[derive(Debug, Clone)]
pub struct LadderLevel {
    pub level: u32,
    pub function: SimpleFunction,
    pub measure: DiracMixture,
}

/// The sequence `(f_L, ν_L)` for the requested levels.
#[derive(Debug, Clone)]
pub struct ApproximationLadder {
    levels: Vec<LadderLevel>,
    diameter: f64,
}

impl ApproximationLadder {
    pub fn build(f: &PiecewiseFunction, levels: &[u32]) -> Result<Self> {
        let mut rungs = Vec::with_capacity(levels.len());
        for &level in levels {
            let function = simple_approximation(f, level)?;
            let measure = function.young_measure()?;
            rungs.push(LadderLevel { level, function, measure });
        }
        rungs.sort_by_key(|r| r.level);
        Ok(ApproximationLadder { levels: rungs, diameter: f.codomain().diameter() })
    }

    pub fn levels(&self) -> &[LadderLevel] {
        &self.levels
    }

    /// `2^{-L}·diam(K)`.
    pub fn quantization_step(&self, level: u32) -> f64 {
        libm::ldexp(self.diameter, -(level as i32))
    }
}

/// Largest `|f_L(x) − f(x)|` over `samples` uniform points.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PointwiseCheck {
    pub max_error: f64,
    pub checked: usize,
    /// Points on a boundary or in the tail.
    pub skipped: usize,
}

pub fn pointwise_error(
    f: &PiecewiseFunction,
    approx: &SimpleFunction,
    samples: usize,
    seed: u64,
) -> Result<PointwiseCheck> {
    let rng = CounterRng::new(seed);
    let mut x = [0.0];
    let mut check = PointwiseCheck { max_error: 0.0, checked: 0, skipped: 0 };
    for i in 0..samples as u64 {
        f.domain().sample_into(&mut rng.stream(i), &mut x);
        let exact = match f.evaluate_scalar(&x) {
            Ok(v) => v,
            Err(Error::NotCovered) => {
                check.skipped += 1;
                continue;
            }
            Err(e) => return Err(e),
        };
        match approx.evaluate(x[0]) {
            Some(v) => {
                check.max_error = check.max_error.max(libm::fabs(v - exact));
                check.checked += 1;
            }
            None => check.skipped += 1,
        }
    }
    Ok(check)
}

/// One row of a convergence report.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GapRow {
    pub level: u32,
    pub gap: f64,
    pub atom_count: usize,
}

/// Weak* gap between `ν_L` and `reference` for a single level.
pub fn gap_row(
    f: &PiecewiseFunction,
    level: u32,
    suite: &[TestFunction],
    reference: &YoungMeasureRepr,
) -> Result<GapRow> {
    let measure = simple_approximation(f, level)?.young_measure()?;
    let atom_count = measure.len();
    let gap = weakstar_gap(&YoungMeasureRepr::Atoms(measure), reference, suite)?;
    Ok(GapRow { level, gap, atom_count })
}

/// Gap table ordered by level.
pub fn convergence_report(
    f: &PiecewiseFunction,
    levels: &[u32],
    suite: &[TestFunction],
    reference: &YoungMeasureRepr,
) -> Result<Vec<GapRow>> {
    let mut sorted = levels.to_vec();
    sorted.sort_unstable();
    sorted.dedup();
    sorted.into_iter().map(|level| gap_row(f, level, suite, reference)).collect()
}
