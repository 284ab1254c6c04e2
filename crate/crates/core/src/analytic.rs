//! Exact Young measures.
//!
//! A simple function `Σ p_i χ_{Ω_i}` has the Dirac mixture `(1/M) Σ m_i δ_{p_i}`
//! as its Young measure. A one-dimensional piecewise function with monotone
//! pieces has the density
//!
//! ```text
//! g(y) = (1/M) Σ_{i : y ∈ f_i(Ω_i)} |J_{f_i^{-1}}(y)|
//! ```
//!
//! where the sum runs over the pieces whose (open) image contains `y`.

use alloc::vec;
use alloc::vec::Vec;

use crate::domain::{Piece, PiecewiseFunction};
use crate::quadrature::{self, CompensatedSum};
use crate::{Error, Result};

/// Tolerance on `Σ w_i + deficit = 1` accepted by [`DiracMixture::new`].
pub const MIXTURE_MASS_TOLERANCE: f64 = 1e-9;
/// Bisection stops once `|f(x) − y| ≤ BISECTION_TOLERANCE · (1 + |y|)`.
pub const BISECTION_TOLERANCE: f64 = 1e-12;
/// Finite-difference step as a fraction of the piece width.
pub const DERIVATIVE_STEP: f64 = 1e-6;
/// Densities are refused where `|f′| ≤ MIN_DERIVATIVE`.
pub const MIN_DERIVATIVE: f64 = 1e-10;

const MAX_BISECTIONS: usize = 300;
// Offsets (relative to segment width) that keep grid points off breakpoints.
const BREAKPOINT_NUDGE: f64 = 1e-10;
const MIN_OFFSET: f64 = 1e-16;
const GRADING_POWER: i32 = 5;

/// A finite mixture `Σ w_i δ_{p_i}` of point masses.
///
/// Locations are distinct and sorted lexicographically. `deficit` is the mass
/// carried by no atom (non-zero only for truncated countable families).
#[derive(Debug, Clone, PartialEq)]
pub struct DiracMixture {
    dim: usize,
    locations: Vec<f64>,
    weights: Vec<f64>,
    deficit: f64,
}

impl DiracMixture {
    /// Builds a mixture from `(location, weight)` pairs, merging duplicates.
    pub fn new<I>(atoms: I, deficit: f64) -> Result<Self>
    where
        I: IntoIterator<Item = (Vec<f64>, f64)>,
    {
        let mut dim = None;
        let mut pairs: Vec<(Vec<f64>, f64)> = Vec::new();
        for (mut location, weight) in atoms {
            if *dim.get_or_insert(location.len()) != location.len() || location.is_empty() {
                return Err(Error::InvalidMeasure("atom locations must share one dimension"));
            }
            if !(weight > 0.0) || !weight.is_finite() {
                return Err(Error::InvalidMeasure("atom weights must be positive"));
            }
            if !location.iter().all(|v| v.is_finite()) {
                return Err(Error::InvalidMeasure("atom locations must be finite"));
            }
            // -0.0 and 0.0 are the same point.
            location.iter_mut().for_each(|v| *v += 0.0);
            pairs.push((location, weight));
        }
        let dim = dim.ok_or(Error::InvalidMeasure("mixture needs at least one atom"))?;
        if !(0.0..1.0).contains(&deficit) {
            return Err(Error::InvalidMeasure("deficit must lie in [0, 1)"));
        }
        pairs.sort_by(|a, b| lexicographic(&a.0, &b.0));

        let mut locations = Vec::with_capacity(pairs.len() * dim);
        let mut weights: Vec<f64> = Vec::with_capacity(pairs.len());
        let mut acc = CompensatedSum::new();
        let mut last: Option<&[f64]> = None;
        for (location, weight) in &pairs {
            if last == Some(location.as_slice()) {
                acc.add(*weight);
            } else {
                if last.is_some() {
                    weights.push(acc.value());
                }
                acc = CompensatedSum::new();
                acc.add(*weight);
                locations.extend_from_slice(location);
                last = Some(location);
            }
        }
        weights.push(acc.value());

        let mixture = DiracMixture { dim, locations, weights, deficit };
        if libm::fabs(mixture.atom_mass() + deficit - 1.0) > MIXTURE_MASS_TOLERANCE {
            return Err(Error::InvalidMeasure("weights and deficit must sum to one"));
        }
        Ok(mixture)
    }

    /// The unit point mass `δ_p`.
    pub fn dirac(location: Vec<f64>) -> Result<Self> {
        DiracMixture::new([(location, 1.0)], 0.0)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    pub fn location(&self, i: usize) -> &[f64] {
        &self.locations[i * self.dim..(i + 1) * self.dim]
    }

    pub fn weight(&self, i: usize) -> f64 {
        self.weights[i]
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// Flat location array, `dim` entries per atom.
    pub fn locations(&self) -> &[f64] {
        &self.locations
    }

    pub fn iter(&self) -> impl Iterator<Item = (&[f64], f64)> + '_ {
        self.locations.chunks_exact(self.dim).zip(self.weights.iter().copied())
    }

    /// Mass not carried by any atom.
    pub fn deficit(&self) -> f64 {
        self.deficit
    }

    /// `Σ w_i`.
    pub fn atom_mass(&self) -> f64 {
        quadrature::sum(self.weights.iter().copied())
    }
}

fn lexicographic(a: &[f64], b: &[f64]) -> core::cmp::Ordering {
    a.iter()
        .zip(b)
        .map(|(x, y)| x.total_cmp(y))
        .find(|o| o.is_ne())
        .unwrap_or(core::cmp::Ordering::Equal)
}

/// Young measure of a simple function: atoms `(p_i, m_i / M)`, duplicates merged.
pub fn simple_young_measure(f: &PiecewiseFunction) -> Result<DiracMixture> {
    if let Some(i) = f.pieces().iter().position(|p| p.constant_value().is_none()) {
        return Err(Error::NotSimple(i));
    }
    if f.tail_mass() != 0.0 {
        return Err(Error::NonzeroTail(f.tail_mass()));
    }
    let m = f.domain().measure();
    let defect = m - f.covered_measure();
    if libm::fabs(defect) > crate::domain::COVERAGE_TOLERANCE * m.max(1.0) {
        return Err(Error::CoverageDefect(defect));
    }
    let atoms = f
        .pieces()
        .iter()
        .enumerate()
        .map(|(i, piece)| {
            let p = piece.constant_value().ok_or(Error::NotSimple(i))?;
            Ok((p, piece.measure() / m))
        })
        .collect::<Result<Vec<_>>>()?;
    DiracMixture::new(atoms, 0.0)
}

/// A one-dimensional piece prepared for inversion.
///
/// Requires a supplied inverse or a monotone hint; the image is read off the
/// forward values at the closed interval endpoints.
#[derive(Debug, Clone)]
pub struct PieceInverse<'a> {
    piece: &'a Piece,
    index: usize,
    a: f64,
    b: f64,
    fa: f64,
    fb: f64,
}

impl<'a> PieceInverse<'a> {
    /// `index` is only used to label errors.
    pub fn new(piece: &'a Piece, index: usize) -> Result<Self> {
        if piece.subdomain().dim() != 1 || piece.forward().len() != 1 {
            return Err(Error::RequiresOneDimension);
        }
        if piece.inverse().is_none() && piece.monotone() != Some(true) {
            return Err(Error::NotInvertible(index));
        }
        let (a, b) = piece.subdomain().bounds()[0];
        let fa = endpoint_value(piece, a, b - a)?;
        let fb = endpoint_value(piece, b, a - b)?;
        Ok(PieceInverse { piece, index, a, b, fa, fb })
    }

    pub fn piece(&self) -> &Piece {
        self.piece
    }

    pub fn interval(&self) -> (f64, f64) {
        (self.a, self.b)
    }

    /// Endpoints `(lo, hi)` of the image `f_i(Ω_i)`.
    pub fn image(&self) -> (f64, f64) {
        if self.fa <= self.fb {
            (self.fa, self.fb)
        } else {
            (self.fb, self.fa)
        }
    }

    pub fn increasing(&self) -> bool {
        self.fb >= self.fa
    }

    /// True when `y` lies in the open image.
    pub fn image_contains(&self, y: f64) -> bool {
        let (lo, hi) = self.image();
        lo < y && y < hi
    }

    /// Preimage of `y`, or `None` when `y` is outside the closed image.
    pub fn invert(&self, y: f64) -> Result<Option<f64>> {
        let (lo, hi) = self.image();
        if !(lo <= y && y <= hi) {
            return Ok(None);
        }
        if let Some(inverse) = self.piece.inverse() {
            let x = inverse[0].eval_y(y)?;
            return Ok(Some(x.clamp(self.a, self.b)));
        }
        let tol = BISECTION_TOLERANCE * (1.0 + libm::fabs(y));
        let increasing = self.increasing();
        let (mut left, mut right) = (self.a, self.b);
        for _ in 0..MAX_BISECTIONS {
            let mid = 0.5 * (left + right);
            if mid <= left || mid >= right {
                return Ok(Some(mid));
            }
            let fm = self.piece.eval_scalar(&[mid])?;
            if libm::fabs(fm - y) <= tol {
                return Ok(Some(mid));
            }
            if (fm < y) == increasing {
                left = mid;
            } else {
                right = mid;
            }
        }
        Ok(Some(0.5 * (left + right)))
    }

    /// `|J_{f_i^{-1}}(y)|`, from the supplied expression or as `1/|f′(f⁻¹(y))|`.
    pub fn jacobian_inverse(&self, y: f64) -> Result<f64> {
        if let Some(jac) = self.piece.jacobian_inverse() {
            return Ok(libm::fabs(jac.eval_y(y)?));
        }
        let x = self.invert(y)?.ok_or(Error::OutsideImage { y })?;
        let derivative = self.derivative(x)?;
        if !(libm::fabs(derivative) > MIN_DERIVATIVE) {
            return Err(Error::DerivativeTooSmall { piece: Some(self.index), y, derivative });
        }
        Ok(1.0 / libm::fabs(derivative))
    }

    // Central difference with step 1e-6·width, shortened near the interval
    // ends; one-sided only when x sits essentially on an end.
    fn derivative(&self, x: f64) -> Result<f64> {
        let f = |t: f64| self.piece.eval_scalar(&[t]);
        let h = DERIVATIVE_STEP * (self.b - self.a);
        let room = h.min(x - self.a).min(self.b - x);
        if room >= h * 1e-6 {
            Ok((f(x + room)? - f(x - room)?) / (2.0 * room))
        } else if x - self.a < self.b - x {
            Ok((f(x + h)? - f(x)?) / h)
        } else {
            Ok((f(x)? - f(x - h)?) / h)
        }
    }
}

// Forward value at a closed endpoint, nudged inward if the expression is
// undefined exactly there (e.g. log at 0).
fn endpoint_value(piece: &Piece, x: f64, inward: f64) -> Result<f64> {
    let mut last = None;
    for offset in [0.0, 1e-12, 1e-9] {
        match piece.eval_scalar(&[x + inward * offset]) {
            Ok(v) => return Ok(v),
            Err(e) => last = Some(e),
        }
    }
    Err(last.unwrap_or(Error::RequiresOneDimension))
}

/// Preimage of `y` under a one-dimensional piece; `None` outside its image.
pub fn invert_piece(piece: &Piece, y: f64) -> Result<Option<f64>> {
    PieceInverse::new(piece, 0)?.invert(y)
}

/// `|J_{f_i^{-1}}(y)|` for a piece.
///
/// With a supplied `jacobian_inverse` expression it is evaluated directly (in
/// any dimension); otherwise the piece must be one-dimensional and invertible.
pub fn jacobian_inverse_magnitude(piece: &Piece, y: f64) -> Result<f64> {
    if let Some(jac) = piece.jacobian_inverse() {
        return Ok(libm::fabs(jac.eval_y(y)?));
    }
    PieceInverse::new(piece, 0)?.jacobian_inverse(y)
}

/// Tabulated density `g(y_j)` of the Young measure of a 1D function.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityTable {
    grid: Vec<f64>,
    values: Vec<f64>,
    contributing: Vec<usize>,
    tail_bound: f64,
    domain_measure: f64,
    support: (f64, f64),
    quadrature_tolerance: f64,
}

impl DensityTable {
    /// Assembles a table; `contributing[j]` is the number of pieces whose
    /// image contains `grid[j]`. `support` is the codomain interval `K`.
    pub fn from_parts(
        grid: Vec<f64>,
        values: Vec<f64>,
        contributing: Vec<usize>,
        tail_bound: f64,
        domain_measure: f64,
        support: (f64, f64),
    ) -> Result<Self> {
        check_grid(&grid, support)?;
        if values.len() != grid.len() || contributing.len() != grid.len() {
            return Err(Error::InvalidGrid("grid, values and counts differ in length"));
        }
        if !values.iter().all(|v| v.is_finite() && *v >= 0.0) {
            return Err(Error::InvalidMeasure("density values must be finite and non-negative"));
        }
        if !(0.0..1.0).contains(&tail_bound) {
            return Err(Error::InvalidMeasure("tail bound must lie in [0, 1)"));
        }
        let quadrature_tolerance = estimate_tolerance(&grid, &values, &contributing, support);
        Ok(DensityTable {
            grid,
            values,
            contributing,
            tail_bound,
            domain_measure,
            support,
            quadrature_tolerance,
        })
    }

    /// Tabulates a closed-form density on `grid`.
    pub fn from_fn(
        grid: Vec<f64>,
        support: (f64, f64),
        tail_bound: f64,
        density: impl Fn(f64) -> f64,
    ) -> Result<Self> {
        let values: Vec<f64> = grid.iter().map(|&y| density(y)).collect();
        let counts = vec![1; grid.len()];
        DensityTable::from_parts(grid, values, counts, tail_bound, 1.0, support)
    }

    pub fn grid(&self) -> &[f64] {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn contributing_counts(&self) -> &[usize] {
        &self.contributing
    }

    /// Mass possibly missing because of truncation, `tail_mass / M`.
    pub fn tail_bound(&self) -> f64 {
        self.tail_bound
    }

    pub fn domain_measure(&self) -> f64 {
        self.domain_measure
    }

    pub fn support(&self) -> (f64, f64) {
        self.support
    }

    /// Crude trapezoid error estimate: `Σ Δ³|g″|/12` over cells without a
    /// change in contributing pieces, plus mass that may lie outside the grid.
    pub fn quadrature_tolerance(&self) -> f64 {
        self.quadrature_tolerance
    }

    pub fn len(&self) -> usize {
        self.grid.len()
    }

    pub fn is_empty(&self) -> bool {
        self.grid.is_empty()
    }

    /// Trapezoid integral of the density over the grid.
    pub fn trapezoid_mass(&self) -> f64 {
        quadrature::trapezoid(&self.grid, &self.values)
    }

    /// Trapezoid integral of `g` from the first grid point up to `y`, with `g`
    /// interpolated linearly inside the cell containing `y`.
    pub fn cdf(&self, y: f64) -> f64 {
        let grid = &self.grid;
        if !(y > grid[0]) {
            return 0.0;
        }
        let k = grid.partition_point(|&t| t <= y);
        if k >= grid.len() {
            return self.trapezoid_mass();
        }
        let mut acc = CompensatedSum::new();
        for j in 0..k - 1 {
            acc.add(0.5 * (self.values[j] + self.values[j + 1]) * (grid[j + 1] - grid[j]));
        }
        let (y0, y1) = (grid[k - 1], grid[k]);
        let (g0, g1) = (self.values[k - 1], self.values[k]);
        let t = y - y0;
        let slope = (g1 - g0) / (y1 - y0);
        acc.add(t * (g0 + 0.5 * slope * t));
        acc.value()
    }
}

fn check_grid(grid: &[f64], support: (f64, f64)) -> Result<()> {
    if grid.len() < 2 {
        return Err(Error::InvalidGrid("need at least two grid points"));
    }
    if !grid.iter().all(|y| y.is_finite()) {
        return Err(Error::InvalidGrid("grid points must be finite"));
    }
    if !grid.windows(2).all(|w| w[0] < w[1]) {
        return Err(Error::InvalidGrid("grid must be strictly increasing"));
    }
    if grid[0] < support.0 || grid[grid.len() - 1] > support.1 {
        return Err(Error::InvalidGrid("grid leaves the codomain"));
    }
    Ok(())
}

fn estimate_tolerance(grid: &[f64], values: &[f64], counts: &[usize], support: (f64, f64)) -> f64 {
    let mut acc = CompensatedSum::new();
    for j in 1..grid.len() - 1 {
        if counts[j - 1] != counts[j] || counts[j] != counts[j + 1] {
            continue;
        }
        let (h0, h1) = (grid[j] - grid[j - 1], grid[j + 1] - grid[j]);
        let d0 = (values[j] - values[j - 1]) / h0;
        let d1 = (values[j + 1] - values[j]) / h1;
        let second = 2.0 * (d1 - d0) / (h0 + h1);
        let span = 0.5 * (h0 + h1);
        acc.add(libm::fabs(second) * span * span * span / 12.0);
    }
    let last = grid.len() - 1;
    acc.add(2.0 * values[0] * (grid[0] - support.0));
    acc.add(2.0 * values[last] * (support.1 - grid[last]));
    acc.value()
}

/// Density of the Young measure of `f` on `grid`.
///
/// Requires a one-dimensional domain and codomain, and every piece invertible
/// (supplied inverse or monotone hint). Constant pieces carry atoms and are
/// rejected.
pub fn pushforward_density(f: &PiecewiseFunction, grid: &[f64]) -> Result<DensityTable> {
    let engine = DensityEngine::new(f)?;
    check_grid(grid, engine.support)?;
    let mut values = Vec::with_capacity(grid.len());
    let mut counts = Vec::with_capacity(grid.len());
    for &y in grid {
        let (g, count) = engine.density_at(y)?;
        values.push(g);
        counts.push(count);
    }
    let m = f.domain().measure();
    DensityTable::from_parts(grid.to_vec(), values, counts, f.tail_mass() / m, m, engine.support)
}

/// A grid of about `size` points on `K` for [`pushforward_density`].
///
/// `K` is cut at every piece-image endpoint. Each segment gets points in
/// proportion to its length (at least three), nudged off the breakpoints so
/// that jumps are straddled. Segments whose density blows up at an end are
/// graded towards that end with a fifth-power map. Points closer than `1e-16`
/// (relative) to a singular end are merged, so the result may be slightly
/// shorter than `size`.
pub fn density_grid(f: &PiecewiseFunction, size: usize) -> Result<Vec<f64>> {
    let engine = DensityEngine::new(f)?;
    let (lo, hi) = engine.support;
    let diam = hi - lo;
    let mut breaks = vec![lo, hi];
    for inv in &engine.inverses {
        let (a, b) = inv.image();
        breaks.extend([a, b].into_iter().filter(|v| lo < *v && *v < hi));
    }
    breaks.sort_by(f64::total_cmp);
    breaks.dedup_by(|b, a| *b - *a <= 1e-13 * diam);
    if let Some(last) = breaks.last_mut() {
        *last = hi;
    }

    let segments: Vec<(f64, f64)> = breaks.windows(2).map(|w| (w[0], w[1])).collect();
    let minimum = 3 * segments.len();
    if size < minimum {
        return Err(Error::GridTooSmall { size, segments: segments.len() });
    }
    let counts = apportion(&segments, size - minimum, diam);

    let mut grid = Vec::with_capacity(size);
    for (&(a, b), extra) in segments.iter().zip(counts) {
        let n = 3 + extra;
        let w = b - a;
        let singular_lo = engine.is_singular_end(a, w);
        let singular_hi = engine.is_singular_end(b, -w);
        for j in 0..n {
            let t = if j == 0 {
                if singular_lo { 0.5 / (n - 1) as f64 } else { 0.0 }
            } else if j == n - 1 {
                if singular_hi { 1.0 - 0.5 / (n - 1) as f64 } else { 1.0 }
            } else {
                j as f64 / (n - 1) as f64
            };
            let mut offset = grade(t, singular_lo, singular_hi);
            if j == 0 && !singular_lo {
                offset = BREAKPOINT_NUDGE;
            }
            if j == n - 1 && !singular_hi {
                offset = 1.0 - BREAKPOINT_NUDGE;
            }
            let offset = offset.clamp(MIN_OFFSET, 1.0 - MIN_OFFSET);
            grid.push(a + w * offset);
        }
    }
    grid.retain(|y| lo <= *y && *y <= hi);
    grid.sort_by(f64::total_cmp);
    grid.dedup();
    Ok(grid)
}

// Largest-remainder split of `extra` points by segment length.
fn apportion(segments: &[(f64, f64)], extra: usize, diam: f64) -> Vec<usize> {
    let shares: Vec<f64> =
        segments.iter().map(|(a, b)| (b - a) / diam * extra as f64).collect();
    let mut counts: Vec<usize> = shares.iter().map(|s| libm::floor(*s) as usize).collect();
    let assigned: usize = counts.iter().sum();
    let mut order: Vec<usize> = (0..segments.len()).collect();
    order.sort_by(|&i, &j| {
        let ri = shares[i] - libm::floor(shares[i]);
        let rj = shares[j] - libm::floor(shares[j]);
        rj.total_cmp(&ri).then(i.cmp(&j))
    });
    for &i in order.iter().take(extra.saturating_sub(assigned)) {
        counts[i] += 1;
    }
    counts
}

fn grade(t: f64, singular_lo: bool, singular_hi: bool) -> f64 {
    let p = GRADING_POWER;
    match (singular_lo, singular_hi) {
        (false, false) => t,
        (true, false) => libm::pow(t, p as f64),
        (false, true) => 1.0 - libm::pow(1.0 - t, p as f64),
        (true, true) => {
            let c = libm::pow(2.0, (p - 1) as f64);
            if t < 0.5 {
                c * libm::pow(t, p as f64)
            } else {
                1.0 - c * libm::pow(1.0 - t, p as f64)
            }
        }
    }
}

struct DensityEngine<'a> {
    inverses: Vec<PieceInverse<'a>>,
    measure: f64,
    support: (f64, f64),
}

impl<'a> DensityEngine<'a> {
    fn new(f: &'a PiecewiseFunction) -> Result<Self> {
        if !f.is_one_dimensional() {
            return Err(Error::RequiresOneDimension);
        }
        let inverses = f
            .pieces()
            .iter()
            .enumerate()
            .map(|(i, piece)| {
                if piece.is_constant() {
                    return Err(Error::AtomicPiece(i));
                }
                let inv = PieceInverse::new(piece, i)?;
                let (lo, hi) = inv.image();
                if lo == hi {
                    return Err(Error::AtomicPiece(i));
                }
                Ok(inv)
            })
            .collect::<Result<Vec<_>>>()?;
        let k = f.codomain();
        Ok(DensityEngine { inverses, measure: f.domain().measure(), support: (k.lo(0), k.hi(0)) })
    }

    // Per-point sum in piece order; no state is shared between points.
    fn density_at(&self, y: f64) -> Result<(f64, usize)> {
        let mut acc = CompensatedSum::new();
        let mut count = 0;
        for inv in &self.inverses {
            if inv.image_contains(y) {
                acc.add(inv.jacobian_inverse(y)?);
                count += 1;
            }
        }
        Ok((acc.value() / self.measure, count))
    }

    // `direction` is the signed segment width pointing into the segment.
    fn is_singular_end(&self, end: f64, direction: f64) -> bool {
        let near = self.density_at(end + direction * 1e-9);
        let far = self.density_at(end + direction * 0.05);
        match (near, far) {
            (Ok((g_near, _)), Ok((g_far, _))) => g_near > 4.0 * g_far.max(f64::MIN_POSITIVE),
            (Err(_), _) => true,
            _ => false,
        }
    }
}

/// `P(f(U) ∈ C)` with its truncation error bar.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Probability {
    pub value: f64,
    /// The true probability lies in `[value, value + tail_bound]`.
    pub tail_bound: f64,
}

/// `(1/M) |f⁻¹(C)|` for `C` a union of closed intervals, computed piecewise
/// from preimages of the interval endpoints.
pub fn pushforward_probability(f: &PiecewiseFunction, intervals: &[(f64, f64)]) -> Result<Probability> {
    if !f.is_one_dimensional() {
        return Err(Error::RequiresOneDimension);
    }
    let merged = merge_intervals(intervals)?;
    let mut total = CompensatedSum::new();
    for (i, piece) in f.pieces().iter().enumerate() {
        if let Some(p) = piece.constant_value() {
            if merged.iter().any(|&(c, d)| c <= p[0] && p[0] <= d) {
                total.add(piece.measure());
            }
            continue;
        }
        let inv = PieceInverse::new(piece, i)?;
        let (lo, hi) = inv.image();
        for &(c, d) in &merged {
            let (c, d) = (c.max(lo), d.min(hi));
            if c >= d {
                continue;
            }
            let (Some(x1), Some(x2)) = (inv.invert(c)?, inv.invert(d)?) else {
                continue;
            };
            total.add(libm::fabs(x2 - x1));
        }
    }
    let m = f.domain().measure();
    Ok(Probability {
        value: (total.value() / m).clamp(0.0, 1.0),
        tail_bound: f.tail_mass() / m,
    })
}

fn merge_intervals(intervals: &[(f64, f64)]) -> Result<Vec<(f64, f64)>> {
    let mut sorted = intervals.to_vec();
    if !sorted.iter().all(|(a, b)| a.is_finite() && b.is_finite() && a <= b) {
        return Err(Error::InvalidArgument("intervals must be finite with lo <= hi"));
    }
    sorted.sort_by(|a, b| a.0.total_cmp(&b.0));
    let mut merged: Vec<(f64, f64)> = Vec::with_capacity(sorted.len());
    for (a, b) in sorted {
        match merged.last_mut() {
            Some(last) if a <= last.1 => last.1 = last.1.max(b),
            _ => merged.push((a, b)),
        }
    }
    Ok(merged)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::domain::{AxisBox, Domain};
    use crate::expr::{parse_expression, Expression, Scope};

    fn piece(lo: f64, hi: f64, forward: &str) -> Piece {
        Piece::new(AxisBox::interval(lo, hi).unwrap(), vec![parse_expression(forward, 1).unwrap()])
    }

    fn on_unit(pieces: Vec<Piece>, k: (f64, f64), tail: f64) -> PiecewiseFunction {
        PiecewiseFunction::new(
            Domain::interval(0.0, 1.0).unwrap(),
            pieces,
            AxisBox::interval(k.0, k.1).unwrap(),
            tail,
        )
        .unwrap()
    }

    fn codomain(text: &str) -> Expression {
        Expression::parse(text, Scope::codomain(1)).unwrap()
    }

    #[test]
    fn two_constant_pieces() {
        let f = on_unit(vec![piece(0.0, 0.5, "2"), piece(0.5, 1.0, "5")], (0.0, 6.0), 0.0);
        let nu = simple_young_measure(&f).unwrap();
        let atoms: Vec<(f64, f64)> = nu.iter().map(|(p, w)| (p[0], w)).collect();
        assert_eq!(atoms, vec![(2.0, 0.5), (5.0, 0.5)]);
    }

    #[test]
    fn constant_function_is_dirac() {
        let f = on_unit(vec![piece(0.0, 1.0, "0.7")], (0.0, 1.0), 0.0);
        assert_eq!(simple_young_measure(&f).unwrap(), DiracMixture::dirac(vec![0.7]).unwrap());
    }

    #[test]
    fn duplicate_values_merge() {
        let f = on_unit(vec![piece(0.0, 1.0 / 3.0, "3"), piece(1.0 / 3.0, 1.0, "3")], (0.0, 4.0), 0.0);
        let nu = simple_young_measure(&f).unwrap();
        assert_eq!(nu.len(), 1);
        assert_eq!(nu.location(0), &[3.0]);
        assert!((nu.weight(0) - 1.0).abs() < 1e-15);
    }

    #[test]
    fn simple_measure_errors() {
        let f = on_unit(vec![piece(0.0, 0.5, "2"), piece(0.5, 1.0, "x")], (0.0, 2.0), 0.0);
        assert_eq!(simple_young_measure(&f).unwrap_err(), Error::NotSimple(1));
        let f = on_unit(vec![piece(0.0, 0.5, "2")], (0.0, 2.0), 0.5);
        assert_eq!(simple_young_measure(&f).unwrap_err(), Error::NonzeroTail(0.5));
        let f = on_unit(vec![piece(0.0, 0.5, "2")], (0.0, 2.0), 0.0);
        assert!(matches!(simple_young_measure(&f), Err(Error::CoverageDefect(_))));
    }

    #[test]
    fn mixture_validation() {
        assert!(DiracMixture::new([(vec![0.0], 0.5)], 0.0).is_err());
        assert!(DiracMixture::new([(vec![0.0], -0.5), (vec![1.0], 1.5)], 0.0).is_err());
        assert!(DiracMixture::new(Vec::<(Vec<f64>, f64)>::new(), 0.0).is_err());
        let nu = DiracMixture::new([(vec![-0.0], 0.25), (vec![0.0], 0.25)], 0.5).unwrap();
        assert_eq!(nu.len(), 1);
        assert_eq!(nu.deficit(), 0.5);
        let planar = DiracMixture::new([(vec![1.0, 0.0], 0.5), (vec![0.0, 1.0], 0.5)], 0.0).unwrap();
        assert_eq!(planar.location(0), &[0.0, 1.0]);
    }

    #[test]
    fn invert_with_supplied_inverse() {
        let p = piece(0.5, 1.0, "2*x-1").with_inverse(vec![codomain("(y+1)/2")]);
        assert_eq!(invert_piece(&p, 0.5).unwrap(), Some(0.75));
        assert_eq!(invert_piece(&p, 1.5).unwrap(), None);
    }

    #[test]
    fn invert_by_bisection() {
        let id = piece(0.0, 1.0, "x").with_monotone(true);
        let x = invert_piece(&id, 0.3).unwrap().unwrap();
        assert!((x - 0.3).abs() <= 1e-12 * 1.3);
        let sq = piece(0.0, 1.0, "x^2").with_monotone(true);
        assert_eq!(invert_piece(&sq, 2.0).unwrap(), None);
        let dec = piece(0.0, 1.0, "1-x^3").with_monotone(true);
        let x = invert_piece(&dec, 0.875).unwrap().unwrap();
        assert!((x - 0.5).abs() < 1e-11);
    }

    #[test]
    fn non_monotone_piece_is_not_invertible() {
        let p = piece(0.0, 1.0, "sin(pi*x)");
        assert_eq!(invert_piece(&p, 0.5).unwrap_err(), Error::NotInvertible(0));
        let p = piece(0.0, 1.0, "sin(pi*x)").with_monotone(false);
        assert_eq!(jacobian_inverse_magnitude(&p, 0.5).unwrap_err(), Error::NotInvertible(0));
    }

    #[test]
    fn jacobian_from_expression_and_difference() {
        for n in 2..10 {
            let nf = n as f64;
            let p = piece(1.0 / nf, 1.0 / (nf - 1.0), &alloc::format!("{n}*x-1"))
                .with_monotone(true);
            let y = 0.5 / (nf - 1.0);
            assert!((jacobian_inverse_magnitude(&p, y).unwrap() - 1.0 / nf).abs() < 1e-9);
            let p = p.with_jacobian_inverse(codomain(&alloc::format!("1/{n}")));
            assert_eq!(jacobian_inverse_magnitude(&p, y).unwrap(), 1.0 / nf);
        }
        let id = piece(0.0, 1.0, "x").with_monotone(true);
        assert!((jacobian_inverse_magnitude(&id, 0.4).unwrap() - 1.0).abs() < 1e-9);
        let sq = piece(0.0, 1.0, "x^2").with_monotone(true);
        assert!((jacobian_inverse_magnitude(&sq, 0.25).unwrap() - 1.0).abs() < 1e-9);
    }

    #[test]
    fn flat_derivative_is_an_error() {
        let cube = piece(-1.0, 1.0, "x^3").with_monotone(true);
        let err = PieceInverse::new(&cube, 4).unwrap().jacobian_inverse(0.0).unwrap_err();
        assert!(matches!(err, Error::DerivativeTooSmall { piece: Some(4), .. }));
    }

    #[test]
    fn identity_density_is_one() {
        let f = on_unit(vec![piece(0.0, 1.0, "x").with_monotone(true)], (0.0, 1.0), 0.0);
        let grid: Vec<f64> = (0..101).map(|j| (j as f64 + 0.5) / 101.0).collect();
        let table = pushforward_density(&f, &grid).unwrap();
        assert!(table.values().iter().all(|g| (g - 1.0).abs() < 1e-9));
        assert!(table.contributing_counts().iter().all(|&c| c == 1));
    }

    #[test]
    fn density_rejects_constant_pieces_and_bad_grids() {
        let f = on_unit(vec![piece(0.0, 0.5, "0.2"), piece(0.5, 1.0, "x").with_monotone(true)], (0.0, 1.0), 0.0);
        assert_eq!(pushforward_density(&f, &[0.1, 0.2]).unwrap_err(), Error::AtomicPiece(0));
        let flat = on_unit(vec![piece(0.0, 1.0, "0.5+0*x").with_monotone(true)], (0.0, 1.0), 0.0);
        assert_eq!(pushforward_density(&flat, &[0.1, 0.2]).unwrap_err(), Error::AtomicPiece(0));
        let f = on_unit(vec![piece(0.0, 1.0, "x").with_monotone(true)], (0.0, 1.0), 0.0);
        assert!(pushforward_density(&f, &[0.2, 0.1]).is_err());
        assert!(pushforward_density(&f, &[0.2]).is_err());
        assert!(pushforward_density(&f, &[0.2, 1.5]).is_err());
    }

    #[test]
    fn density_grid_straddles_breakpoints() {
        let f = on_unit(
            vec![
                piece(0.0, 0.5, "x").with_monotone(true),
                piece(0.5, 1.0, "x").with_monotone(true),
            ],
            (0.0, 1.0),
            0.0,
        );
        let grid = density_grid(&f, 64).unwrap();
        assert_eq!(grid.len(), 64);
        assert!(grid.iter().all(|&y| y != 0.5 && y > 0.0 && y < 1.0));
        let table = pushforward_density(&f, &grid).unwrap();
        assert!((table.trapezoid_mass() - 1.0).abs() < 1e-9);
        assert!(density_grid(&f, 5).is_err());
    }

    #[test]
    fn cdf_of_table_interpolates() {
        let grid: Vec<f64> = (0..=10).map(|j| j as f64 / 10.0).collect();
        let table = DensityTable::from_fn(grid, (0.0, 1.0), 0.0, |y| 2.0 * y).unwrap();
        assert!((table.cdf(0.25) - 0.0625).abs() < 1e-15);
        assert_eq!(table.cdf(-1.0), 0.0);
        assert!((table.cdf(2.0) - 1.0).abs() < 1e-15);
    }

    #[test]
    fn probability_of_constant_and_identity() {
        let c = on_unit(vec![piece(0.0, 1.0, "0.4")], (0.0, 1.0), 0.0);
        assert_eq!(pushforward_probability(&c, &[(0.3, 0.5)]).unwrap().value, 1.0);
        assert_eq!(pushforward_probability(&c, &[(0.5, 0.6)]).unwrap().value, 0.0);
        assert_eq!(pushforward_probability(&c, &[(0.4, 0.4)]).unwrap().value, 1.0);
        let id = on_unit(vec![piece(0.0, 1.0, "x").with_monotone(true)], (0.0, 1.0), 0.0);
        let p = pushforward_probability(&id, &[(0.0, 0.5)]).unwrap();
        assert!((p.value - 0.5).abs() < 1e-11);
        let p = pushforward_probability(&id, &[(0.1, 0.3), (0.2, 0.4), (0.9, 2.0)]).unwrap();
        assert!((p.value - 0.4).abs() < 1e-11);
        assert!(pushforward_probability(&id, &[(0.5, 0.1)]).is_err());
    }
}
