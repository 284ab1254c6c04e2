use crate::expr::{EvalError, ParseError};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error(transparent)]
    Parse(#[from] ParseError),
    #[error("evaluation failed: {0}")]
    Eval(#[from] EvalError),

    #[error("invalid box: {0}")]
    InvalidBox(&'static str),
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("domain boxes {0} and {1} overlap")]
    OverlappingDomainBoxes(usize, usize),
    #[error("piece {0} lies outside every domain box")]
    PieceOutsideDomain(usize),
    #[error("piece {piece}: {reason}")]
    InvalidPiece { piece: usize, reason: &'static str },
    #[error("a piecewise function needs at least one piece")]
    NoPieces,
    #[error("tail mass must be finite and non-negative, got {0}")]
    InvalidTailMass(f64),

    #[error("point is not covered by any piece")]
    NotCovered,
    #[error("piece {0} is not constant")]
    NotSimple(usize),
    #[error("tail mass {0} is non-zero")]
    NonzeroTail(f64),
    #[error("pieces leave a coverage defect of {0}")]
    CoverageDefect(f64),

    #[error("operation requires one-dimensional domain and codomain")]
    RequiresOneDimension,
    #[error("piece {0} is neither marked monotone nor given an inverse")]
    NotInvertible(usize),
    #[error("piece {0} has a one-point image and contributes an atom, not a density")]
    AtomicPiece(usize),
    #[error("y = {y} lies outside the image of the piece")]
    OutsideImage { y: f64 },
    #[error("derivative {derivative:e} too small near y = {y} (piece {piece:?})")]
    DerivativeTooSmall { piece: Option<usize>, y: f64, derivative: f64 },

    #[error("invalid grid: {0}")]
    InvalidGrid(&'static str),
    #[error("grid of {size} points cannot cover {segments} segments")]
    GridTooSmall { size: usize, segments: usize },
    #[error("invalid measure: {0}")]
    InvalidMeasure(&'static str),

    #[error("test function depends on the domain variable")]
    DomainDependentTest,
    #[error("probe suite is empty")]
    EmptySuite,
    #[error("no sample landed inside a piece")]
    NoCoverage,
    #[error("{failures} of {n} evaluations failed")]
    TooManyFailures { failures: usize, n: usize },
    #[error("invalid argument: {0}")]
    InvalidArgument(&'static str),
}

pub type Result<T, E = Error> = core::result::Result<T, E>;
