//! CSV and JSON writers.
//!
//! Every file starts with metadata sufficient to reproduce it: tool version,
//! command, input, seed and generator where relevant, and tolerances. CSV
//! metadata lines start with `#`; JSON documents carry a `meta` object. Floats
//! in CSV use 17 significant digits. Nothing time-dependent is written.

use std::fmt::Write as _;

use serde_json::{json, Map, Value};
use ym_core::analytic::{DensityTable, DiracMixture};
use ym_core::approximation::GapRow;
use ym_core::domain::ValidationReport;
use ym_core::measure::{EmpiricalMeasure, YoungMeasureRepr};
use ym_core::monte_carlo::FunctionalEstimate;
use ym_core::rng::{GENERATOR_NAME, GENERATOR_VERSION};

use crate::error::{CliError, Result};

pub const TOOL_VERSION: &str = env!("CARGO_PKG_VERSION");

/// `name vN` of the sampling generator.
pub fn generator_id() -> String {
    format!("{GENERATOR_NAME} v{GENERATOR_VERSION}")
}

/// Ordered key/value pairs written ahead of the data.
#[derive(Debug, Clone, Default)]
pub struct Metadata {
    entries: Vec<(String, Value)>,
}

impl Metadata {
    pub fn new(command: &str) -> Self {
        Metadata::default().with("tool", format!("ym {TOOL_VERSION}")).with("command", command)
    }

    pub fn with(mut self, key: &str, value: impl Into<Value>) -> Self {
        self.entries.push((key.to_owned(), value.into()));
        self
    }

    pub fn with_seed(self, seed: u64) -> Self {
        self.with("seed", seed).with("generator", generator_id())
    }

    fn csv_lines(&self) -> String {
        let mut out = String::new();
        for (k, v) in &self.entries {
            match v {
                Value::String(s) => writeln!(out, "# {k}: {s}"),
                other => writeln!(out, "# {k}: {other}"),
            }
            .expect("writing to a String");
        }
        out
    }

    pub fn to_json(&self) -> Value {
        Value::Object(self.entries.iter().cloned().collect::<Map<_, _>>())
    }
}

fn e17(v: f64) -> String {
    format!("{v:.16e}")
}

fn pretty(value: &Value) -> String {
    let mut out = serde_json::to_string_pretty(value).expect("JSON values serialize");
    out.push('\n');
    out
}

/// `y,g,contributing_pieces`, one row per grid point.
pub fn density_csv(table: &DensityTable, meta: Metadata) -> String {
    let meta = meta
        .with("domain_measure", table.domain_measure())
        .with("tail_bound", table.tail_bound())
        .with("grid_size", table.len())
        .with("trapezoid_mass", table.trapezoid_mass())
        .with("quadrature_tolerance", table.quadrature_tolerance());
    let mut out = meta.csv_lines();
    out.push_str("y,g,contributing_pieces\n");
    for ((&y, &g), &c) in table.grid().iter().zip(table.values()).zip(table.contributing_counts()) {
        writeln!(out, "{},{},{c}", e17(y), e17(g)).expect("writing to a String");
    }
    out
}

/// A row of a density CSV.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DensityRow {
    pub y: f64,
    pub g: f64,
    pub contributing: usize,
}

/// Reads back the rows of [`density_csv`], skipping metadata and header.
pub fn parse_density_csv(text: &str) -> Result<Vec<DensityRow>> {
    let bad = |line: &str| CliError::Input(format!("malformed density row `{line}`"));
    text.lines()
        .filter(|l| !l.starts_with('#') && !l.starts_with("y,") && !l.trim().is_empty())
        .map(|line| {
            let mut cols = line.split(',');
            let mut next = || cols.next().ok_or_else(|| bad(line));
            let y = next()?.parse().map_err(|_| bad(line))?;
            let g = next()?.parse().map_err(|_| bad(line))?;
            let contributing = next()?.parse().map_err(|_| bad(line))?;
            Ok(DensityRow { y, g, contributing })
        })
        .collect()
}

fn atoms_payload(m: &DiracMixture) -> Value {
    let atoms: Vec<Value> = m.iter().map(|(p, w)| json!({ "location": p, "weight": w })).collect();
    json!({ "dim": m.dim(), "atoms": atoms, "deficit": m.deficit() })
}

/// JSON with a `variant` tag and the variant's payload.
pub fn measure_json(measure: &YoungMeasureRepr, meta: Metadata) -> String {
    let mut body = match measure {
        YoungMeasureRepr::Atoms(m) => atoms_payload(m),
        YoungMeasureRepr::Density(t) => json!({
            "grid": t.grid(),
            "values": t.values(),
            "tail_bound": t.tail_bound(),
            "quadrature_tolerance": t.quadrature_tolerance(),
        }),
        YoungMeasureRepr::Empirical(e) => json!({
            "samples": e.samples(),
            "seed": e.seed(),
            "rejected": e.rejected(),
            "generator": generator_id(),
        }),
    };
    let obj = body.as_object_mut().expect("payloads are objects");
    obj.insert("variant".into(), measure.variant_name().into());
    obj.insert("meta".into(), meta.to_json());
    pretty(&body)
}

/// `level,gap,atom_count`.
pub fn convergence_csv(rows: &[GapRow], meta: Metadata) -> String {
    let mut out = meta.csv_lines();
    out.push_str("level,gap,atom_count\n");
    for r in rows {
        writeln!(out, "{},{},{}", r.level, e17(r.gap), r.atom_count).expect("writing to a String");
    }
    out
}

/// One sample per row under a `y` header.
pub fn empirical_csv(e: &EmpiricalMeasure, meta: Metadata) -> String {
    let meta = meta.with("accepted", e.len()).with("rejected", e.rejected());
    let mut out = meta.csv_lines();
    out.reserve(e.len() * 25);
    out.push_str("y\n");
    for &y in e.samples() {
        out.push_str(&e17(y));
        out.push('\n');
    }
    out
}

pub fn estimate_value(est: &FunctionalEstimate) -> Value {
    json!({
        "value": est.value,
        "stderr": est.stderr,
        "n": est.n,
        "seed": est.seed,
        "method": est.method.name(),
        "generator": est.seed.map(|_| generator_id()),
        "rejected": est.rejected,
        "failures": est.failures,
        "tolerance": est.tolerance,
    })
}

pub fn estimate_json(est: &FunctionalEstimate, meta: Metadata) -> String {
    let mut body = estimate_value(est);
    body["meta"] = meta.to_json();
    pretty(&body)
}

pub fn validation_json(report: &ValidationReport, meta: Metadata) -> String {
    let escapes: Vec<Value> =
        report.image_escapes.iter().map(|e| json!({ "piece": e.piece, "x": e.x, "value": e.value })).collect();
    let mismatches: Vec<Value> = report
        .inverse_mismatches
        .iter()
        .map(|m| json!({ "piece": m.piece, "y": m.y, "residual": m.residual }))
        .collect();
    pretty(&json!({
        "meta": meta.to_json(),
        "valid": report.is_valid(),
        "overlaps": report.overlaps,
        "coverage_defect": report.coverage_defect,
        "tail_mass": report.tail_mass,
        "domain_measure": report.domain_measure,
        "samples_per_piece": report.samples_per_piece,
        "image_escapes": escapes,
        "inverse_mismatches": mismatches,
    }))
}

/// Any other JSON document, with metadata attached.
pub fn document_json(mut body: Value, meta: Metadata) -> String {
    body["meta"] = meta.to_json();
    pretty(&body)
}

#[cfg(test)]
mod tests {
    use super::*;
    use ym_core::analytic::{density_grid, pushforward_density};
    use ym_core::builtins::harmonic_staircase;

    #[test]
    fn density_csv_round_trips() {
        let h = harmonic_staircase(8).unwrap();
        let grid = density_grid(h.function(), 64).unwrap();
        let table = pushforward_density(h.function(), &grid).unwrap();
        let csv = density_csv(&table, Metadata::new("density"));
        assert!(csv.starts_with("# tool: ym "));
        assert!(csv.contains("# tail_bound: 0.125\n"));
        let rows = parse_density_csv(&csv).unwrap();
        assert_eq!(rows.len(), table.len());
        for (row, (&y, &g)) in rows.iter().zip(table.grid().iter().zip(table.values())) {
            assert_eq!((row.y, row.g), (y, g));
        }
    }

    #[test]
    fn measure_json_is_tagged() {
        let m = DiracMixture::new([(vec![0.25], 0.5), (vec![0.75], 0.5)], 0.0).unwrap();
        let text = measure_json(&m.into(), Metadata::new("atoms"));
        let v: Value = serde_json::from_str(&text).unwrap();
        assert_eq!(v["variant"], "atoms");
        assert_eq!(v["atoms"][1]["weight"], 0.5);
        assert_eq!(v["meta"]["command"], "atoms");
    }
}
