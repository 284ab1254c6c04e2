//! JSON function specs.
//!
//! ```json
//! {
//!   "dimension": 1,
//!   "domain": [[[0, 1]]],
//!   "codomain": [[0, 1]],
//!   "pieces": [
//!     { "subdomain": [[0, 0.5]], "forward": ["2*x"], "inverse": ["y/2"], "monotone": true },
//!     { "subdomain": [[0.5, 1]], "forward": ["2-2*x"], "monotone": true }
//!   ],
//!   "tail_mass": 0
//! }
//! ```

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};
use ym_core::builtins::Builtin;
use ym_core::domain::{AxisBox, Domain, Piece, PiecewiseFunction};
use ym_core::expr::{Expression, Scope};

use crate::error::{CliError, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FunctionSpec {
    /// Domain dimension `d`.
    pub dimension: usize,
    pub domain: Vec<Vec<[f64; 2]>>,
    pub codomain: Vec<[f64; 2]>,
    pub pieces: Vec<PieceSpec>,
    #[serde(default)]
    pub tail_mass: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PieceSpec {
    pub subdomain: Vec<[f64; 2]>,
    pub forward: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub inverse: Option<Vec<String>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub jacobian_inverse: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub monotone: Option<bool>,
}

fn axis_box(bounds: &[[f64; 2]]) -> Result<AxisBox> {
    Ok(AxisBox::new(bounds.iter().map(|&[lo, hi]| (lo, hi)).collect())?)
}

fn bounds_of(b: &AxisBox) -> Vec<[f64; 2]> {
    b.bounds().iter().map(|&(lo, hi)| [lo, hi]).collect()
}

fn parse(text: &str, scope: Scope, piece: usize, field: &str) -> Result<Expression> {
    Expression::parse(text, scope)
        .map_err(|e| CliError::Input(format!("piece {piece}, {field} `{text}`: {e}")))
}

impl FunctionSpec {
    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }

    pub fn to_json(&self) -> String {
        let mut out = serde_json::to_string_pretty(self).expect("spec serializes");
        out.push('\n');
        out
    }

    pub fn read(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        Self::from_json(&text)
    }

    /// Builds and shape-checks the function.
    pub fn to_function(&self) -> Result<PiecewiseFunction> {
        let d = self.dimension;
        let l = self.codomain.len();
        let domain = Domain::new(self.domain.iter().map(|b| axis_box(b)).collect::<Result<_>>()?)?;
        if domain.dim() != d {
            return Err(CliError::Input(format!(
                "`dimension` is {d} but the domain boxes have {} axes",
                domain.dim()
            )));
        }
        let mut pieces = Vec::with_capacity(self.pieces.len());
        for (i, p) in self.pieces.iter().enumerate() {
            let forward = p
                .forward
                .iter()
                .map(|t| parse(t, Scope::domain(d), i, "forward"))
                .collect::<Result<_>>()?;
            let mut piece = Piece::new(axis_box(&p.subdomain)?, forward);
            if let Some(inverse) = &p.inverse {
                let inverse =
                    inverse.iter().map(|t| parse(t, Scope::codomain(l), i, "inverse")).collect::<Result<_>>()?;
                piece = piece.with_inverse(inverse);
            }
            if let Some(jac) = &p.jacobian_inverse {
                piece = piece.with_jacobian_inverse(parse(jac, Scope::codomain(l), i, "jacobian_inverse")?);
            }
            if let Some(monotone) = p.monotone {
                piece = piece.with_monotone(monotone);
            }
            pieces.push(piece);
        }
        Ok(PiecewiseFunction::new(domain, pieces, axis_box(&self.codomain)?, self.tail_mass)?)
    }

    pub fn from_function(f: &PiecewiseFunction) -> Self {
        let text = |e: &Expression| e.to_string();
        FunctionSpec {
            dimension: f.domain_dim(),
            domain: f.domain().boxes().iter().map(bounds_of).collect(),
            codomain: bounds_of(f.codomain()),
            pieces: f
                .pieces()
                .iter()
                .map(|p| PieceSpec {
                    subdomain: bounds_of(p.subdomain()),
                    forward: p.forward().iter().map(text).collect(),
                    inverse: p.inverse().map(|inv| inv.iter().map(text).collect()),
                    jacobian_inverse: p.jacobian_inverse().map(text),
                    monotone: p.monotone(),
                })
                .collect(),
            tail_mass: f.tail_mass(),
        }
    }
}

/// A loaded `--input`: a spec file, or a builtin name when no such file exists.
#[derive(Debug, Clone)]
pub struct LoadedInput {
    pub function: PiecewiseFunction,
    pub builtin: Option<Builtin>,
    pub label: String,
}

pub fn load_input(input: &str, truncation: usize) -> Result<LoadedInput> {
    let path = Path::new(input);
    if !path.exists() {
        if let Some(builtin) = Builtin::from_name(input, truncation) {
            return Ok(LoadedInput {
                function: builtin.function()?,
                builtin: Some(builtin),
                label: format!("builtin:{}", builtin.name()),
            });
        }
    }
    let spec = FunctionSpec::read(path)?;
    Ok(LoadedInput { function: spec.to_function()?, builtin: None, label: format!("file:{input}") })
}
