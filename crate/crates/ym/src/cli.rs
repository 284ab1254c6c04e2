//! Command dispatch.

use std::fs;
use std::path::{Path, PathBuf};

use clap::{Parser, ValueEnum};
use serde_json::{json, Value};
use ym_core::analytic::{
    density_grid, pushforward_density, pushforward_probability, simple_young_measure, DensityTable, PieceInverse,
};
use ym_core::builtins::Builtin;
use ym_core::domain::{validate_partition, FunctionKind, PiecewiseFunction};
use ym_core::measure::{probe_suite, SuiteKind, TestFunction, YoungMeasureRepr};
use ym_core::monte_carlo::{ks_statistic, young_functional_mc, young_functional_quadrature};
use ym_core::rng::DEFAULT_SEED;

use crate::error::{CliError, Result};
use crate::export::{self, Metadata};
use crate::parallel;
use crate::plot;
use crate::spec_file::{load_input, FunctionSpec, LoadedInput};

/// Trapezoid intervals per piece for quadrature estimates of functionals.
pub const QUADRATURE_INTERVALS: usize = 8192;
/// Points on the reference curve drawn over histograms.
const REFERENCE_CURVE_POINTS: usize = 512;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Command {
    /// Check a spec's partition, coverage, images and inverses.
    Validate,
    /// Tabulate the density of the Young measure.
    Density,
    /// Dirac weights of a simple function.
    Atoms,
    /// Probability of an interval.
    Prob,
    /// Sample f(U) and compare with the reference law when one is known.
    Sample,
    /// Young functional by Monte Carlo and by quadrature.
    Functional,
    /// Weak* gaps of the simple-function ladder.
    Approx,
    /// Write a builtin spec and its reference density.
    Example,
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::Validate => "validate",
            Command::Density => "density",
            Command::Atoms => "atoms",
            Command::Prob => "prob",
            Command::Sample => "sample",
            Command::Functional => "functional",
            Command::Approx => "approx",
            Command::Example => "example",
        }
    }
}

fn parse_seed(text: &str) -> std::result::Result<u64, String> {
    let parsed = match text.strip_prefix("0x").or_else(|| text.strip_prefix("0X")) {
        Some(hex) => u64::from_str_radix(&hex.replace('_', ""), 16),
        None => text.replace('_', "").parse(),
    };
    parsed.map_err(|e| format!("invalid seed `{text}`: {e}"))
}

/// Young measures of piecewise functions.
#[derive(Debug, Parser)]
#[command(name = "ym", version)]
pub struct Args {
    #[arg(value_enum)]
    pub command: Command,
    /// Builtin name for `example` (harmonic, identity, square).
    pub name: Option<String>,
    /// Function spec file, or a builtin name.
    #[arg(long)]
    pub input: Option<String>,
    /// Output file; stdout when omitted.
    #[arg(long)]
    pub output: Option<PathBuf>,
    /// Density grid size.
    #[arg(long, default_value_t = 4096)]
    pub grid: usize,
    /// Monte Carlo sample count.
    #[arg(long, default_value_t = 1_000_000)]
    pub samples: usize,
    /// Truncation for `example`, sample count otherwise.
    #[arg(long)]
    pub n: Option<usize>,
    /// Decimal or 0x-prefixed hexadecimal.
    #[arg(long, value_parser = parse_seed)]
    pub seed: Option<u64>,
    /// Pieces kept from countable builtins.
    #[arg(long, default_value_t = 64)]
    pub truncate: usize,
    /// Test function β(s) of the value s.
    #[arg(long)]
    pub beta: Option<String>,
    /// Weight φ(x) multiplying β in the functional.
    #[arg(long)]
    pub weight: Option<String>,
    /// Integrand ψ(x, s); replaces β.
    #[arg(long)]
    pub psi: Option<String>,
    /// Interval [A, B] for `prob`.
    #[arg(long, num_args = 2, value_names = ["A", "B"], allow_negative_numbers = true)]
    pub interval: Option<Vec<f64>>,
    /// Also write an SVG next to the output.
    #[arg(long)]
    pub plot: bool,
    /// Probe suite for `approx`.
    #[arg(long, default_value = "default", value_parser = ["default", "monomial", "trig"])]
    pub suite: String,
    /// Highest ladder level for `approx`.
    #[arg(long, default_value_t = 20)]
    pub max_level: u32,
}

/// Everything a run depends on.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub command: Command,
    pub name: Option<String>,
    pub input: Option<String>,
    pub output: Option<PathBuf>,
    pub grid: usize,
    pub samples: usize,
    pub seed: u64,
    pub truncation: usize,
    pub beta: Option<String>,
    pub weight: Option<String>,
    pub psi: Option<String>,
    pub interval: Option<(f64, f64)>,
    pub plot: bool,
    pub suite: SuiteKind,
    pub max_level: u32,
}

impl RunConfig {
    pub fn new(command: Command) -> Self {
        RunConfig {
            command,
            name: None,
            input: None,
            output: None,
            grid: 4096,
            samples: 1_000_000,
            seed: DEFAULT_SEED,
            truncation: 64,
            beta: None,
            weight: None,
            psi: None,
            interval: None,
            plot: false,
            suite: SuiteKind::Default,
            max_level: 20,
        }
    }

    pub fn from_args(args: Args) -> Result<Self> {
        let mut config = RunConfig {
            command: args.command,
            name: args.name,
            input: args.input,
            output: args.output,
            grid: args.grid,
            samples: args.samples,
            seed: args.seed.unwrap_or(DEFAULT_SEED),
            truncation: args.truncate,
            beta: args.beta,
            weight: args.weight,
            psi: args.psi,
            interval: args.interval.map(|v| (v[0], v[1])),
            plot: args.plot,
            suite: SuiteKind::from_name(&args.suite).unwrap_or(SuiteKind::Default),
            max_level: args.max_level,
        };
        if let Some(n) = args.n {
            if config.command == Command::Example {
                config.truncation = n;
            } else {
                config.samples = n;
            }
        }
        config.check()?;
        Ok(config)
    }

    fn check(&self) -> Result<()> {
        if self.grid < 2 || self.samples == 0 {
            return Err(CliError::Input("--grid must be at least 2 and --samples positive".into()));
        }
        if self.truncation < 2 {
            return Err(CliError::Input("--truncate must be at least 2".into()));
        }
        if let Some((a, b)) = self.interval {
            if !(a.is_finite() && b.is_finite() && a <= b) {
                return Err(CliError::Input("--interval needs finite a <= b".into()));
            }
        }
        Ok(())
    }
}

/// What a run produced.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct RunOutput {
    /// Files written, in order.
    pub files: Vec<PathBuf>,
    /// Text for standard output.
    pub stdout: String,
    /// Non-zero when the run completed but its finding is a failure.
    pub status: i32,
}

impl RunOutput {
    fn emit(&mut self, path: Option<&Path>, content: &str) -> Result<()> {
        match path {
            Some(path) => {
                write_file(path, content)?;
                self.files.push(path.to_path_buf());
            }
            None => self.stdout.push_str(content),
        }
        Ok(())
    }

    fn note(&mut self, line: String) {
        self.stdout.push_str(&line);
        self.stdout.push('\n');
    }
}

fn write_file(path: &Path, content: &str) -> Result<()> {
    fs::write(path, content).map_err(|e| CliError::io(path, e))
}

fn svg_path(config: &RunConfig) -> Result<PathBuf> {
    config
        .output
        .as_ref()
        .map(|p| p.with_extension("svg"))
        .ok_or_else(|| CliError::Input("--plot needs --output".into()))
}

fn load(config: &RunConfig) -> Result<LoadedInput> {
    let input = config.input.as_deref().ok_or_else(|| CliError::Input("--input is required".into()))?;
    load_input(input, config.truncation)
}

fn base_meta(config: &RunConfig, input: &LoadedInput) -> Metadata {
    let mut meta = Metadata::new(config.command.name()).with("input", input.label.as_str());
    if let Some(Builtin::Harmonic { truncation }) = input.builtin {
        meta = meta.with("truncation", truncation);
    }
    meta
}

pub fn run(config: &RunConfig) -> Result<RunOutput> {
    config.check()?;
    match config.command {
        Command::Validate => validate(config),
        Command::Density => density(config),
        Command::Atoms => atoms(config),
        Command::Prob => prob(config),
        Command::Sample => sample(config),
        Command::Functional => functional(config),
        Command::Approx => approx(config),
        Command::Example => example(config),
    }
}

fn validate(config: &RunConfig) -> Result<RunOutput> {
    let input = load(config)?;
    let report = validate_partition(&input.function);
    let mut out = RunOutput::default();
    out.emit(config.output.as_deref(), &export::validation_json(&report, base_meta(config, &input)))?;
    if !report.is_valid() {
        out.status = 1;
    }
    Ok(out)
}

/// Endpoints of the piece images strictly inside `K`.
pub fn image_breakpoints(f: &PiecewiseFunction) -> Result<Vec<f64>> {
    let (lo, hi) = f.codomain().bounds()[0];
    let mut breaks = Vec::new();
    for (i, piece) in f.pieces().iter().enumerate() {
        let (a, b) = PieceInverse::new(piece, i)?.image();
        breaks.extend([a, b].into_iter().filter(|&v| lo < v && v < hi));
    }
    breaks.sort_by(f64::total_cmp);
    breaks.dedup();
    Ok(breaks)
}

/// Density table on the standard grid of `size` points.
pub fn density_table(f: &PiecewiseFunction, size: usize) -> Result<DensityTable> {
    let grid = density_grid(f, size)?;
    Ok(pushforward_density(f, &grid)?)
}

fn density(config: &RunConfig) -> Result<RunOutput> {
    let input = load(config)?;
    let table = density_table(&input.function, config.grid)?;
    let mut out = RunOutput::default();
    let meta = base_meta(config, &input).with("requested_grid", config.grid);
    if config.plot {
        let path = svg_path(config)?;
        let points: Vec<(f64, f64)> = table.grid().iter().copied().zip(table.values().iter().copied()).collect();
        let svg = plot::density_svg(&points, table.support(), &image_breakpoints(&input.function)?, &input.label)?;
        out.emit(config.output.as_deref(), &export::density_csv(&table, meta))?;
        out.emit(Some(&path), &svg)?;
    } else {
        out.emit(config.output.as_deref(), &export::density_csv(&table, meta))?;
    }
    if config.output.is_some() {
        out.note(format!(
            "grid {} points, trapezoid mass {:.12}, tail bound {:.12}, quadrature tolerance {:.3e}",
            table.len(),
            table.trapezoid_mass(),
            table.tail_bound(),
            table.quadrature_tolerance()
        ));
    }
    Ok(out)
}

fn atoms(config: &RunConfig) -> Result<RunOutput> {
    let input = load(config)?;
    let mixture = simple_young_measure(&input.function)?;
    let mut out = RunOutput::default();
    out.emit(config.output.as_deref(), &export::measure_json(&mixture.into(), base_meta(config, &input)))?;
    Ok(out)
}

fn prob(config: &RunConfig) -> Result<RunOutput> {
    let input = load(config)?;
    let (a, b) = config.interval.ok_or_else(|| CliError::Input("prob needs --interval A B".into()))?;
    let p = pushforward_probability(&input.function, &[(a, b)])?;
    let body = json!({
        "interval": [a, b],
        "value": p.value,
        "tail_bound": p.tail_bound,
        "upper": p.value + p.tail_bound,
    });
    let mut out = RunOutput::default();
    out.emit(config.output.as_deref(), &export::document_json(body, base_meta(config, &input)))?;
    Ok(out)
}

// Reference density of the accepted draws, which follow the law conditioned
// on the covered set.
fn reference_curve(builtin: Builtin, f: &PiecewiseFunction) -> Vec<(f64, f64)> {
    let (lo, hi) = f.codomain().bounds()[0];
    let covered = 1.0 - f.tail_mass() / f.domain().measure();
    (0..REFERENCE_CURVE_POINTS)
        .map(|k| {
            let y = lo + (hi - lo) * (k as f64 + 0.5) / REFERENCE_CURVE_POINTS as f64;
            (y, builtin.reference_density(y) / covered)
        })
        .collect()
}

fn sample(config: &RunConfig) -> Result<RunOutput> {
    let input = load(config)?;
    let f = &input.function;
    let pool = parallel::pool()?;
    let empirical = parallel::empirical_measure(&pool, f, config.samples, config.seed)?;
    let mut meta = base_meta(config, &input).with("samples", config.samples).with_seed(config.seed);
    let mut out = RunOutput::default();
    if let Some(builtin) = input.builtin {
        let d = ks_statistic(&empirical, |y| builtin.reference_cdf(y));
        let tail = f.tail_mass() / f.domain().measure();
        let bound = 1.63 / (empirical.len() as f64).sqrt() + tail;
        meta = meta.with("ks_statistic", d).with("ks_bound", bound);
        out.note(
            serde_json::to_string(&json!({ "ks_statistic": d, "ks_bound": bound, "pass": d < bound, "n": empirical.len() }))
                .expect("JSON values serialize"),
        );
    }
    let svg = if config.plot {
        let reference = input.builtin.map(|b| reference_curve(b, f));
        let svg = plot::histogram_svg(empirical.samples(), f.codomain().bounds()[0], reference.as_deref(), &input.label)?;
        Some((svg_path(config)?, svg))
    } else {
        None
    };
    out.emit(config.output.as_deref(), &export::empirical_csv(&empirical, meta))?;
    if let Some((path, svg)) = svg {
        out.emit(Some(&path), &svg)?;
    }
    Ok(out)
}

/// The test function described by `--beta`, `--weight` and `--psi`.
pub fn test_function(config: &RunConfig, d: usize) -> Result<TestFunction> {
    let beta = match (&config.beta, &config.psi) {
        (Some(beta), _) => beta.as_str(),
        (None, Some(_)) => "0",
        (None, None) => return Err(CliError::Input("functional needs --beta or --psi".into())),
    };
    let mut t = TestFunction::beta(beta)?;
    if let Some(w) = &config.weight {
        t = t.with_weight(w, d)?;
    }
    if let Some(psi) = &config.psi {
        t = t.with_psi(psi, d)?.with_label(psi.clone());
    }
    Ok(t)
}

fn functional(config: &RunConfig) -> Result<RunOutput> {
    let input = load(config)?;
    let f = &input.function;
    let t = test_function(config, f.domain_dim())?;
    let mc = young_functional_mc(f, &t, config.samples, config.seed)?;
    let quadrature =
        if f.is_one_dimensional() { Some(young_functional_quadrature(f, &t, QUADRATURE_INTERVALS)?) } else { None };
    let body = json!({
        "integrand": t.label(),
        "monte_carlo": export::estimate_value(&mc),
        "quadrature": quadrature.as_ref().map(export::estimate_value).unwrap_or(Value::Null),
        "difference": quadrature.map(|q| (mc.value - q.value).abs()),
    });
    let meta = base_meta(config, &input).with_seed(config.seed).with("quadrature_intervals", QUADRATURE_INTERVALS);
    let mut out = RunOutput::default();
    out.emit(config.output.as_deref(), &export::document_json(body, meta))?;
    Ok(out)
}

/// Reference measure for ladder gaps: exact atoms for simple functions, the
/// density table when every piece inverts, the empirical law otherwise.
pub fn reference_measure(f: &PiecewiseFunction, config: &RunConfig) -> Result<YoungMeasureRepr> {
    if f.kind() == FunctionKind::Simple {
        return Ok(simple_young_measure(f)?.into());
    }
    match density_table(f, config.grid) {
        Ok(table) => Ok(table.into()),
        Err(CliError::Core(ym_core::Error::NotInvertible(_)) | CliError::Core(ym_core::Error::AtomicPiece(_))) => {
            let pool = parallel::pool()?;
            Ok(parallel::empirical_measure(&pool, f, config.samples, config.seed)?.into())
        }
        Err(e) => Err(e),
    }
}

fn approx(config: &RunConfig) -> Result<RunOutput> {
    let input = load(config)?;
    let f = &input.function;
    if !f.is_one_dimensional() {
        return Err(ym_core::Error::RequiresOneDimension.into());
    }
    let (lo, hi) = f.codomain().bounds()[0];
    let suite = probe_suite(config.suite, lo, hi);
    let reference = reference_measure(f, config)?;
    let levels: Vec<u32> = (0..=config.max_level).collect();
    let pool = parallel::pool()?;
    let rows = parallel::convergence_report(&pool, f, &levels, &suite, &reference)?;
    let lipschitz = suite.iter().filter_map(TestFunction::lipschitz_bound).fold(0.0, f64::max);
    let labels: Vec<&str> = suite.iter().map(TestFunction::label).collect();
    let mut meta = base_meta(config, &input)
        .with("suite", format!("{} [{}]", config.suite.name(), labels.join("; ")))
        .with("suite_lipschitz_bound", lipschitz)
        .with("codomain_diameter", hi - lo)
        .with("reference", reference.variant_name())
        .with("reference_deficit", reference.deficit())
        .with("reference_quadrature_tolerance", reference.quadrature_tolerance());
    if let YoungMeasureRepr::Empirical(_) = reference {
        meta = meta.with_seed(config.seed);
    }
    let mut out = RunOutput::default();
    out.emit(config.output.as_deref(), &export::convergence_csv(&rows, meta))?;
    Ok(out)
}

fn example(config: &RunConfig) -> Result<RunOutput> {
    let name = config.name.as_deref().unwrap_or("harmonic");
    let builtin = Builtin::from_name(name, config.truncation).ok_or_else(|| {
        CliError::Input(format!("unknown example `{name}`; choose one of {}", Builtin::NAMES.join(", ")))
    })?;
    let f = builtin.function()?;
    let spec_path = config.output.clone().unwrap_or_else(|| PathBuf::from(format!("{name}.json")));
    let reference_path = spec_path.with_extension("reference.csv");
    // Piece counts come from the engine so the tolerance estimate skips jumps;
    // the values are the closed form.
    let engine = density_table(&f, config.grid)?;
    let values = engine.grid().iter().map(|&y| builtin.reference_density(y)).collect();
    let table = DensityTable::from_parts(
        engine.grid().to_vec(),
        values,
        engine.contributing_counts().to_vec(),
        engine.tail_bound(),
        engine.domain_measure(),
        engine.support(),
    )?;
    let mut meta = Metadata::new("example").with("input", format!("builtin:{name}")).with("reference", "analytic");
    if let Builtin::Harmonic { truncation } = builtin {
        meta = meta.with("truncation", truncation);
    }
    let mut out = RunOutput::default();
    out.emit(Some(&spec_path), &FunctionSpec::from_function(&f).to_json())?;
    out.emit(Some(&reference_path), &export::density_csv(&table, meta))?;
    out.note(format!("wrote {} and {}", spec_path.display(), reference_path.display()));
    Ok(out)
}
