//! Domains, partitions and piecewise functions `f = Σ f_i χ_{Ω_i}`.
//!
//! Subdomains are open axis-aligned boxes, so measures are exact products of
//! side lengths and uniform sampling is exact. Piece boundaries are open:
//! a point on a boundary belongs to no piece.

use alloc::vec;
use alloc::vec::Vec;

use crate::expr::{Expression, Scope};
use crate::rng::{CounterRng, Stream};
use crate::{Error, Result};

/// Relative tolerance for the measure bookkeeping `Σ m_i + tail = M`.
pub const COVERAGE_TOLERANCE: f64 = 1e-9;
/// Points sampled per piece when checking that its image stays inside `K`.
pub const IMAGE_SAMPLES_PER_PIECE: usize = 1024;
/// Points sampled per piece when checking a supplied inverse.
pub const INVERSE_SAMPLES_PER_PIECE: usize = 64;
/// Absolute round-trip tolerance `|f(f⁻¹(y)) − y|` for supplied inverses.
pub const INVERSE_TOLERANCE: f64 = 1e-9;

const VALIDATION_SEED: u64 = 0x7A11_DA7E_0000_0001;

/// An axis-aligned box `Π (lo_k, hi_k)`.
///
/// Used open for subdomains and closed for the codomain `K`.
#[derive(Debug, Clone, PartialEq)]
pub struct AxisBox {
    bounds: Vec<(f64, f64)>,
}

impl AxisBox {
    pub fn new(bounds: Vec<(f64, f64)>) -> Result<Self> {
        if bounds.is_empty() {
            return Err(Error::InvalidBox("box needs at least one axis"));
        }
        for &(lo, hi) in &bounds {
            if !lo.is_finite() || !hi.is_finite() {
                return Err(Error::InvalidBox("bounds must be finite"));
            }
            if !(lo < hi) {
                return Err(Error::InvalidBox("every side must have positive length"));
            }
        }
        Ok(AxisBox { bounds })
    }

    pub fn interval(lo: f64, hi: f64) -> Result<Self> {
        AxisBox::new(vec![(lo, hi)])
    }

    pub fn dim(&self) -> usize {
        self.bounds.len()
    }

    pub fn bounds(&self) -> &[(f64, f64)] {
        &self.bounds
    }

    pub fn lo(&self, axis: usize) -> f64 {
        self.bounds[axis].0
    }

    pub fn hi(&self, axis: usize) -> f64 {
        self.bounds[axis].1
    }

    pub fn volume(&self) -> f64 {
        self.bounds.iter().map(|(lo, hi)| hi - lo).product()
    }

    /// Euclidean length of the diagonal.
    pub fn diameter(&self) -> f64 {
        libm::sqrt(self.bounds.iter().map(|(lo, hi)| (hi - lo) * (hi - lo)).sum())
    }

    pub fn contains_open(&self, p: &[f64]) -> bool {
        p.len() == self.dim() && self.bounds.iter().zip(p).all(|(&(lo, hi), &v)| lo < v && v < hi)
    }

    pub fn contains_closed(&self, p: &[f64]) -> bool {
        p.len() == self.dim()
            && self.bounds.iter().zip(p).all(|(&(lo, hi), &v)| lo <= v && v <= hi)
    }

    /// True when the open interiors intersect.
    pub fn overlaps(&self, other: &AxisBox) -> bool {
        self.dim() == other.dim()
            && self.bounds.iter().zip(&other.bounds).all(|(a, b)| a.0 < b.1 && b.0 < a.1)
    }

    /// True when `other` lies inside the closure of `self`, up to `slack` per side.
    pub fn encloses(&self, other: &AxisBox, slack: f64) -> bool {
        self.dim() == other.dim()
            && self.bounds.iter().zip(&other.bounds).all(|(a, b)| {
                let tol = slack * (1.0 + libm::fabs(a.0).max(libm::fabs(a.1)));
                b.0 >= a.0 - tol && b.1 <= a.1 + tol
            })
    }

    /// Fills `out` with a uniform point of the box drawn from `stream`.
    pub fn sample_into(&self, stream: &mut Stream, out: &mut [f64]) {
        for (slot, &(lo, hi)) in out.iter_mut().zip(&self.bounds) {
            *slot = lo + (hi - lo) * stream.next_f64();
        }
    }
}

/// `Ω`: a finite union of pairwise disjoint open boxes with measure `M > 0`.
#[derive(Debug, Clone, PartialEq)]
pub struct Domain {
    boxes: Vec<AxisBox>,
    measure: f64,
    // Cumulative volume fractions, last entry 1.
    cumulative: Vec<f64>,
}

impl Domain {
    pub fn new(boxes: Vec<AxisBox>) -> Result<Self> {
        let first = boxes.first().ok_or(Error::InvalidBox("domain needs at least one box"))?;
        let dim = first.dim();
        for b in &boxes {
            if b.dim() != dim {
                return Err(Error::DimensionMismatch { expected: dim, found: b.dim() });
            }
        }
        for i in 0..boxes.len() {
            for j in i + 1..boxes.len() {
                if boxes[i].overlaps(&boxes[j]) {
                    return Err(Error::OverlappingDomainBoxes(i, j));
                }
            }
        }
        let measure = crate::quadrature::sum(boxes.iter().map(AxisBox::volume));
        let mut running = 0.0;
        let mut cumulative: Vec<f64> = boxes
            .iter()
            .map(|b| {
                running += b.volume();
                running / measure
            })
            .collect();
        if let Some(last) = cumulative.last_mut() {
            *last = 1.0;
        }
        Ok(Domain { boxes, measure, cumulative })
    }

    pub fn interval(lo: f64, hi: f64) -> Result<Self> {
        Domain::new(vec![AxisBox::interval(lo, hi)?])
    }

    pub fn dim(&self) -> usize {
        self.boxes[0].dim()
    }

    pub fn boxes(&self) -> &[AxisBox] {
        &self.boxes
    }

    /// Lebesgue measure `M`.
    pub fn measure(&self) -> f64 {
        self.measure
    }

    pub fn contains(&self, p: &[f64]) -> bool {
        self.boxes.iter().any(|b| b.contains_open(p))
    }

    /// Draws a point with density `1/M` on `Ω`: a box is chosen with
    /// probability proportional to its volume, then coordinates are uniform.
    /// Returns the index of the chosen box.
    pub fn sample_into(&self, stream: &mut Stream, out: &mut [f64]) -> usize {
        let u = stream.next_f64();
        let k = self.cumulative.partition_point(|&c| c <= u).min(self.boxes.len() - 1);
        self.boxes[k].sample_into(stream, out);
        k
    }
}

/// One branch `f_i` of a piecewise function, living on the open box `Ω_i`.
#[derive(Debug, Clone, PartialEq)]
pub struct Piece {
    subdomain: AxisBox,
    forward: Vec<Expression>,
    inverse: Option<Vec<Expression>>,
    jacobian_inverse: Option<Expression>,
    monotone: Option<bool>,
}

impl Piece {
    pub fn new(subdomain: AxisBox, forward: Vec<Expression>) -> Self {
        Piece { subdomain, forward, inverse: None, jacobian_inverse: None, monotone: None }
    }

    /// Inverse `f_i^{-1}` as expressions in the codomain variables.
    pub fn with_inverse(mut self, inverse: Vec<Expression>) -> Self {
        self.inverse = Some(inverse);
        self
    }

    /// `|J_{f_i^{-1}}(y)|` as an expression in the codomain variables.
    pub fn with_jacobian_inverse(mut self, jacobian: Expression) -> Self {
        self.jacobian_inverse = Some(jacobian);
        self
    }

    /// Declares that the (one-dimensional) forward map is strictly monotone.
    pub fn with_monotone(mut self, monotone: bool) -> Self {
        self.monotone = Some(monotone);
        self
    }

    pub fn subdomain(&self) -> &AxisBox {
        &self.subdomain
    }

    /// `m_i`, the volume of the subdomain.
    pub fn measure(&self) -> f64 {
        self.subdomain.volume()
    }

    pub fn forward(&self) -> &[Expression] {
        &self.forward
    }

    pub fn inverse(&self) -> Option<&[Expression]> {
        self.inverse.as_deref()
    }

    pub fn jacobian_inverse(&self) -> Option<&Expression> {
        self.jacobian_inverse.as_ref()
    }

    pub fn monotone(&self) -> Option<bool> {
        self.monotone
    }

    pub fn is_constant(&self) -> bool {
        self.forward.iter().all(Expression::is_constant)
    }

    /// Value of a constant piece.
    pub fn constant_value(&self) -> Option<Vec<f64>> {
        if !self.is_constant() {
            return None;
        }
        self.forward.iter().map(|e| e.eval_x(&[]).ok()).collect()
    }

    /// Evaluates the forward map at `x` (no containment check).
    pub fn eval_into(&self, x: &[f64], out: &mut [f64]) -> Result<()> {
        for (slot, e) in out.iter_mut().zip(&self.forward) {
            *slot = e.eval_x(x)?;
        }
        Ok(())
    }

    /// Scalar forward value for a one-dimensional codomain.
    pub fn eval_scalar(&self, x: &[f64]) -> Result<f64> {
        Ok(self.forward[0].eval_x(x)?)
    }

    fn check(&self, index: usize, d: usize, l: usize) -> Result<()> {
        let bad = |reason| Err(Error::InvalidPiece { piece: index, reason });
        if self.subdomain.dim() != d {
            return bad("subdomain dimension differs from the domain");
        }
        if self.forward.len() != l {
            return bad("forward map must have one expression per codomain axis");
        }
        if !self.forward.iter().all(|e| e.fits(&Scope::domain(d))) {
            return bad("forward expressions may only use domain variables");
        }
        if let Some(inv) = &self.inverse {
            if inv.len() != d {
                return bad("inverse must have one expression per domain axis");
            }
            if !inv.iter().all(|e| e.fits(&Scope::codomain(l))) {
                return bad("inverse expressions may only use codomain variables");
            }
        }
        if let Some(jac) = &self.jacobian_inverse {
            if !jac.fits(&Scope::codomain(l)) {
                return bad("jacobian_inverse may only use codomain variables");
            }
        }
        if self.monotone.is_some() && (d != 1 || l != 1) {
            return bad("monotone hint applies to one-dimensional pieces only");
        }
        Ok(())
    }
}

/// Whether every piece is constant.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FunctionKind {
    Simple,
    Smooth,
}

/// `f = Σ f_i χ_{Ω_i}` with compact codomain box `K`.
///
/// Countable families are truncated; `tail_mass` records the domain measure
/// not covered by the listed pieces. Construction checks shapes only; use
/// [`validate_partition`] for disjointness, coverage and image containment.
#[derive(Debug, Clone, PartialEq)]
pub struct PiecewiseFunction {
    domain: Domain,
    pieces: Vec<Piece>,
    codomain: AxisBox,
    tail_mass: f64,
    kind: FunctionKind,
    // Piece indices sorted by lower bound, present when d = 1 and the pieces
    // are pairwise disjoint.
    sorted_1d: Option<Vec<usize>>,
}

impl PiecewiseFunction {
    pub fn new(
        domain: Domain,
        pieces: Vec<Piece>,
        codomain: AxisBox,
        tail_mass: f64,
    ) -> Result<Self> {
        if pieces.is_empty() {
            return Err(Error::NoPieces);
        }
        if !tail_mass.is_finite() || tail_mass < 0.0 {
            return Err(Error::InvalidTailMass(tail_mass));
        }
        let d = domain.dim();
        let l = codomain.dim();
        for (i, piece) in pieces.iter().enumerate() {
            piece.check(i, d, l)?;
            if !domain.boxes().iter().any(|b| b.encloses(piece.subdomain(), 1e-12)) {
                return Err(Error::PieceOutsideDomain(i));
            }
        }
        let kind = if pieces.iter().all(Piece::is_constant) {
            FunctionKind::Simple
        } else {
            FunctionKind::Smooth
        };
        let sorted_1d = (d == 1).then(|| sorted_by_lower_bound(&pieces)).and_then(|order| {
            let disjoint = order.windows(2).all(|w| {
                pieces[w[0]].subdomain().hi(0) <= pieces[w[1]].subdomain().lo(0)
            });
            disjoint.then_some(order)
        });
        Ok(PiecewiseFunction { domain, pieces, codomain, tail_mass, kind, sorted_1d })
    }

    pub fn domain(&self) -> &Domain {
        &self.domain
    }

    pub fn pieces(&self) -> &[Piece] {
        &self.pieces
    }

    pub fn codomain(&self) -> &AxisBox {
        &self.codomain
    }

    pub fn tail_mass(&self) -> f64 {
        self.tail_mass
    }

    pub fn kind(&self) -> FunctionKind {
        self.kind
    }

    pub fn domain_dim(&self) -> usize {
        self.domain.dim()
    }

    pub fn codomain_dim(&self) -> usize {
        self.codomain.dim()
    }

    pub fn is_one_dimensional(&self) -> bool {
        self.domain_dim() == 1 && self.codomain_dim() == 1
    }

    /// `Σ m_i` over the listed pieces.
    pub fn covered_measure(&self) -> f64 {
        crate::quadrature::sum(self.pieces.iter().map(Piece::measure))
    }

    /// Index of the piece whose open subdomain contains `x`.
    pub fn locate(&self, x: &[f64]) -> Option<usize> {
        match &self.sorted_1d {
            Some(order) if x.len() == 1 => {
                let v = x[0];
                let k = order.partition_point(|&i| self.pieces[i].subdomain().lo(0) < v);
                let i = *order.get(k.checked_sub(1)?)?;
                (v < self.pieces[i].subdomain().hi(0)).then_some(i)
            }
            _ => self.pieces.iter().position(|p| p.subdomain().contains_open(x)),
        }
    }

    /// `f(x)`; points on boundaries or in the tail are not covered.
    pub fn evaluate(&self, x: &[f64]) -> Result<Vec<f64>> {
        let mut out = vec![0.0; self.codomain_dim()];
        self.evaluate_into(x, &mut out)?;
        Ok(out)
    }

    pub fn evaluate_into(&self, x: &[f64], out: &mut [f64]) -> Result<()> {
        if x.len() != self.domain_dim() {
            return Err(Error::DimensionMismatch { expected: self.domain_dim(), found: x.len() });
        }
        let i = self.locate(x).ok_or(Error::NotCovered)?;
        self.pieces[i].eval_into(x, out)
    }

    /// Scalar `f(x)` for a one-dimensional codomain.
    pub fn evaluate_scalar(&self, x: &[f64]) -> Result<f64> {
        if self.codomain_dim() != 1 {
            return Err(Error::RequiresOneDimension);
        }
        let i = self.locate(x).ok_or(Error::NotCovered)?;
        self.pieces[i].eval_scalar(x)
    }
}

fn sorted_by_lower_bound(pieces: &[Piece]) -> Vec<usize> {
    let mut order: Vec<usize> = (0..pieces.len()).collect();
    order.sort_by(|&a, &b| pieces[a].subdomain().lo(0).total_cmp(&pieces[b].subdomain().lo(0)));
    order
}

/// A sampled point whose image left `K` or could not be evaluated.
#[derive(Debug, Clone, PartialEq)]
pub struct ImageEscape {
    pub piece: usize,
    pub x: Vec<f64>,
    /// `None` when the forward expression failed to evaluate.
    pub value: Option<Vec<f64>>,
}

/// A sampled `y` where the supplied inverse fails to round-trip.
#[derive(Debug, Clone, PartialEq)]
pub struct InverseMismatch {
    pub piece: usize,
    pub y: f64,
    pub residual: f64,
}

/// Findings of [`validate_partition`].
#[derive(Debug, Clone, PartialEq)]
pub struct ValidationReport {
    /// Pairs of pieces whose open subdomains intersect.
    pub overlaps: Vec<(usize, usize)>,
    /// `M − Σ m_i − tail_mass`.
    pub coverage_defect: f64,
    pub tail_mass: f64,
    pub domain_measure: f64,
    pub samples_per_piece: usize,
    pub image_escapes: Vec<ImageEscape>,
    pub inverse_mismatches: Vec<InverseMismatch>,
}

impl ValidationReport {
    pub fn is_valid(&self) -> bool {
        self.overlaps.is_empty()
            && libm::fabs(self.coverage_defect) <= COVERAGE_TOLERANCE * self.domain_measure.max(1.0)
            && self.image_escapes.is_empty()
            && self.inverse_mismatches.is_empty()
    }
}

/// Checks disjointness, measure coverage, image containment in `K` and
/// supplied inverses. Never fails; every finding goes into the report.
pub fn validate_partition(f: &PiecewiseFunction) -> ValidationReport {
    let pieces = f.pieces();
    let m = f.domain().measure();
    let coverage_defect = m - f.covered_measure() - f.tail_mass();

    let mut image_escapes = Vec::new();
    let mut inverse_mismatches = Vec::new();
    let mut x = vec![0.0; f.domain_dim()];
    let mut y = vec![0.0; f.codomain_dim()];
    for (i, piece) in pieces.iter().enumerate() {
        for k in 0..IMAGE_SAMPLES_PER_PIECE {
            validation_point(piece.subdomain(), i, k, IMAGE_SAMPLES_PER_PIECE, &mut x);
            let ok = piece.eval_into(&x, &mut y).is_ok();
            if !ok || !f.codomain().contains_closed(&y) {
                image_escapes.push(ImageEscape {
                    piece: i,
                    x: x.clone(),
                    value: ok.then(|| y.clone()),
                });
            }
        }
        if let Some(inverse) = piece.inverse() {
            for k in 0..INVERSE_SAMPLES_PER_PIECE {
                validation_point(piece.subdomain(), i, k, INVERSE_SAMPLES_PER_PIECE, &mut x);
                if let Some(mismatch) = inverse_residual(piece, inverse, &x) {
                    if !(mismatch.1 <= INVERSE_TOLERANCE * (1.0 + libm::fabs(mismatch.0))) {
                        inverse_mismatches.push(InverseMismatch {
                            piece: i,
                            y: mismatch.0,
                            residual: mismatch.1,
                        });
                    }
                }
            }
        }
    }

    ValidationReport {
        overlaps: overlapping_pairs(f),
        coverage_defect,
        tail_mass: f.tail_mass(),
        domain_measure: m,
        samples_per_piece: IMAGE_SAMPLES_PER_PIECE,
        image_escapes,
        inverse_mismatches,
    }
}

// Largest residual |f(f⁻¹(f(x))) − f(x)| over codomain axes, paired with the
// first coordinate of f(x). Evaluation failures count as infinite residual.
fn inverse_residual(piece: &Piece, inverse: &[Expression], x: &[f64]) -> Option<(f64, f64)> {
    let y: Vec<f64> = piece.forward().iter().map(|e| e.eval_x(x).ok()).collect::<Option<_>>()?;
    let env = crate::expr::Env { y: &y, ..Default::default() };
    let back: Option<Vec<f64>> = inverse.iter().map(|e| e.eval(&env).ok()).collect();
    let residual = back
        .and_then(|xb| piece.forward().iter().map(|e| e.eval_x(&xb).ok()).collect::<Option<Vec<_>>>())
        .map(|yb| yb.iter().zip(&y).map(|(a, b)| libm::fabs(a - b)).fold(0.0, f64::max))
        .unwrap_or(f64::INFINITY);
    Some((y[0], residual))
}

// Stratified midpoints in 1D, counter-RNG points otherwise.
fn validation_point(b: &AxisBox, piece: usize, k: usize, count: usize, out: &mut [f64]) {
    if b.dim() == 1 {
        out[0] = b.lo(0) + (b.hi(0) - b.lo(0)) * ((k as f64 + 0.5) / count as f64);
    } else {
        let rng = CounterRng::new(VALIDATION_SEED ^ piece as u64);
        b.sample_into(&mut rng.stream(k as u64), out);
    }
}

fn overlapping_pairs(f: &PiecewiseFunction) -> Vec<(usize, usize)> {
    let pieces = f.pieces();
    let mut pairs = Vec::new();
    if f.domain_dim() == 1 {
        let order = sorted_by_lower_bound(pieces);
        for (k, &i) in order.iter().enumerate() {
            let hi = pieces[i].subdomain().hi(0);
            for &j in &order[k + 1..] {
                if pieces[j].subdomain().lo(0) >= hi {
                    break;
                }
                pairs.push((i.min(j), i.max(j)));
            }
        }
        pairs.sort_unstable();
    } else {
        for i in 0..pieces.len() {
            for j in i + 1..pieces.len() {
                if pieces[i].subdomain().overlaps(pieces[j].subdomain()) {
                    pairs.push((i, j));
                }
            }
        }
    }
    pairs
}
