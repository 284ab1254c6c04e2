//! Acceptance criteria, one PASS/FAIL line each.
//!
//! Reference values are computed here from closed forms, independently of the
//! library: harmonic sums for the staircase, exact moments of the uniform law,
//! and the CDFs of `x`, `x²` and the staircase.

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;
use std::process::ExitCode;
use std::time::{Duration, Instant};

use ym::cli::{density_table, run, Command, RunConfig};
use ym::export::parse_density_csv;
use ym::parallel;
use ym_core::analytic::{pushforward_density, simple_young_measure};
use ym_core::approximation::simple_approximation;
use ym_core::builtins::{harmonic_staircase, identity, square};
use ym_core::domain::{AxisBox, Domain, Piece, PiecewiseFunction};
use ym_core::expr::parse_expression;
use ym_core::measure::{integrate_test, probe_suite, SuiteKind, TestFunction, YoungMeasureRepr};
use ym_core::monte_carlo::{ks_statistic, young_functional_mc, young_functional_quadrature};
use ym_core::rng::CounterRng;

const TRUNCATION: usize = 64;
const GRID: usize = 4096;

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: String) -> Outcome {
    Outcome { pass, detail }
}

// ---- oracles ---------------------------------------------------------------

/// 1 + 1/2 + ... + 1/n, summed from the small end.
fn harmonic(n: usize) -> f64 {
    (1..=n).rev().map(|k| 1.0 / k as f64).sum()
}

/// m with y in [1/m, 1/(m-1)).
fn cell(y: f64) -> usize {
    let mut m = (1.0 / y).ceil() as usize;
    // Guard the division: enforce 1/m <= y < 1/(m-1) exactly.
    while m > 1 && 1.0 / (m as f64) > y {
        m += 1;
    }
    while m > 2 && y >= 1.0 / ((m - 1) as f64) {
        m -= 1;
    }
    m
}

fn staircase_cdf(y: f64) -> f64 {
    if y <= 0.0 {
        return 0.0;
    }
    if y >= 1.0 {
        return 1.0;
    }
    let m = cell(y);
    y * (harmonic(m) - 1.0) + 1.0 / m as f64
}

/// Trapezoid rule, written out.
fn trapezoid(rows: &[(f64, f64)]) -> f64 {
    rows.windows(2).map(|w| 0.5 * (w[0].1 + w[1].1) * (w[1].0 - w[0].0)).sum()
}

fn metadata_value(csv: &str, key: &str) -> f64 {
    let prefix = format!("# {key}: ");
    csv.lines()
        .find_map(|l| l.strip_prefix(&prefix))
        .and_then(|v| v.parse().ok())
        .unwrap_or_else(|| panic!("metadata `{key}` missing"))
}

// ---- helpers ---------------------------------------------------------------

fn config(command: Command) -> RunConfig {
    RunConfig::new(command)
}

fn run_example(dir: &Path) -> (std::path::PathBuf, std::path::PathBuf) {
    let spec = dir.join("harmonic.json");
    let mut c = config(Command::Example);
    c.name = Some("harmonic".into());
    c.truncation = TRUNCATION;
    c.grid = GRID;
    c.output = Some(spec.clone());
    run(&c).expect("example harmonic");
    let reference = spec.with_extension("reference.csv");
    (spec, reference)
}

fn run_density(spec: &Path, out: &Path, plot: bool) {
    let mut c = config(Command::Density);
    c.input = Some(spec.to_string_lossy().into_owned());
    c.grid = GRID;
    c.output = Some(out.to_path_buf());
    c.plot = plot;
    run(&c).expect("density");
}

/// Density tables checked by the normalization criterion: (label, mass, tail bound).
type MassRecord = (String, f64, f64);

// ---- criteria ----------------------------------------------------------------

fn harmonic_golden(dir: &Path, masses: &mut Vec<MassRecord>) -> Outcome {
    let start = Instant::now();
    let (spec, reference_csv) = run_example(dir);
    let density_csv = dir.join("density.csv");
    run_density(&spec, &density_csv, false);
    let elapsed = start.elapsed();

    let text = fs::read_to_string(&density_csv).unwrap();
    let rows = parse_density_csv(&text).unwrap();
    let breakpoints: Vec<f64> = (1..=TRUNCATION).map(|m| 1.0 / m as f64).collect();
    let on_breakpoint = rows.iter().filter(|r| breakpoints.contains(&r.y)).count();

    let mut max_err: f64 = 0.0;
    for r in &rows {
        if !(r.y > 0.0 && r.y < 1.0) {
            continue;
        }
        let m = cell(r.y).min(TRUNCATION);
        max_err = max_err.max((r.g - (harmonic(m) - 1.0)).abs());
    }

    let f = ym::spec_file::FunctionSpec::read(&spec).unwrap().to_function().unwrap();
    let spots = pushforward_density(&f, &[0.3, 0.4, 0.7]).unwrap();
    let expected = [13.0 / 12.0, 5.0 / 6.0, 0.5];
    let spot_err = spots.values().iter().zip(expected).map(|(g, e)| (g - e).abs()).fold(0.0, f64::max);

    for (label, path) in [("harmonic density", &density_csv), ("harmonic reference", &reference_csv)] {
        let text = fs::read_to_string(path).unwrap();
        let pairs: Vec<(f64, f64)> = parse_density_csv(&text).unwrap().iter().map(|r| (r.y, r.g)).collect();
        masses.push((label.into(), trapezoid(&pairs), metadata_value(&text, "tail_bound")));
    }

    let pass = rows.len() == GRID
        && on_breakpoint == 0
        && max_err <= 1e-12
        && spot_err <= 1e-12
        && elapsed < Duration::from_secs(1);
    outcome(
        pass,
        format!(
            "{} rows, {on_breakpoint} on breakpoints, max |g - (H_m - 1)| = {max_err:.2e}, spot error {spot_err:.2e} \
             (g(0.3), g(0.4), g(0.7) = {:.15}, {:.15}, {:.15}), {:.3} s",
            rows.len(),
            spots.values()[0],
            spots.values()[1],
            spots.values()[2],
            elapsed.as_secs_f64()
        ),
    )
}

fn simple_fixtures() -> Outcome {
    let start = Instant::now();
    let rng = CounterRng::new(0xACCE_0002);
    let mut draw = 0u64;
    let mut next = || {
        draw += 1;
        rng.stream(draw).next_f64()
    };
    let values = [-0.75, -0.25, 0.0, 0.125, 0.5, 1.0];
    let (mut max_weight_err, mut max_sum_err): (f64, f64) = (0.0, 0.0);
    let mut total_atoms = 0;
    for fixture in 0..100 {
        // A random rectangle split into a random grid of cells; 2D for every
        // third fixture.
        let dims = if fixture % 3 == 2 { 2 } else { 1 };
        let mut axes: Vec<Vec<f64>> = Vec::new();
        for _ in 0..dims {
            let lo = -2.0 + 2.0 * next();
            let hi = lo + 0.5 + 3.0 * next();
            let cuts = 1 + (next() * 8.0) as usize;
            let mut ends: Vec<f64> = (0..cuts).map(|_| lo + (hi - lo) * next()).collect();
            ends.push(lo);
            ends.push(hi);
            ends.sort_by(f64::total_cmp);
            ends.dedup();
            axes.push(ends);
        }
        let cells: Vec<Vec<(f64, f64)>> = if dims == 1 {
            axes[0].windows(2).map(|w| vec![(w[0], w[1])]).collect()
        } else {
            let mut out = Vec::new();
            for a in axes[0].windows(2) {
                for b in axes[1].windows(2) {
                    out.push(vec![(a[0], a[1]), (b[0], b[1])]);
                }
            }
            out
        };
        let domain_box: Vec<(f64, f64)> = axes.iter().map(|e| (e[0], e[e.len() - 1])).collect();
        let total: f64 = domain_box.iter().map(|(a, b)| b - a).product();

        let mut oracle: BTreeMap<usize, f64> = BTreeMap::new();
        let mut pieces = Vec::new();
        for c in &cells {
            let k = (next() * values.len() as f64) as usize;
            *oracle.entry(k).or_default() += c.iter().map(|(a, b)| b - a).product::<f64>() / total;
            let expr = parse_expression(&values[k].to_string(), dims).unwrap();
            pieces.push(Piece::new(AxisBox::new(c.clone()).unwrap(), vec![expr]));
        }
        let f = PiecewiseFunction::new(
            Domain::new(vec![AxisBox::new(domain_box).unwrap()]).unwrap(),
            pieces,
            AxisBox::interval(-1.0, 1.0).unwrap(),
            0.0,
        )
        .unwrap();
        let nu = simple_young_measure(&f).unwrap();
        total_atoms += nu.len();
        if nu.len() != oracle.len() {
            return outcome(false, format!("fixture {fixture}: {} atoms, expected {}", nu.len(), oracle.len()));
        }
        for ((p, w), (&k, &m)) in nu.iter().zip(&oracle) {
            if p[0] != values[k] {
                return outcome(false, format!("fixture {fixture}: atom at {} expected {}", p[0], values[k]));
            }
            max_weight_err = max_weight_err.max((w - m).abs());
        }
        max_sum_err = max_sum_err.max((nu.weights().iter().sum::<f64>() - 1.0).abs());
    }
    let elapsed = start.elapsed();
    let pass = max_weight_err <= 1e-12 && max_sum_err <= 1e-12 && elapsed < Duration::from_secs(1);
    outcome(
        pass,
        format!(
            "100 fixtures, {total_atoms} atoms, max |w - m_i/M| = {max_weight_err:.2e}, max |sum w - 1| = {max_sum_err:.2e}, {:.3} s",
            elapsed.as_secs_f64()
        ),
    )
}

/// Name, function, reference CDF and seed.
type KsFixture = (&'static str, PiecewiseFunction, fn(f64) -> f64, u64);

fn ks_fixtures(masses: &mut Vec<MassRecord>) -> Outcome {
    let pool = parallel::pool().unwrap();
    let n = 1_000_000;
    let harmonic_fn = harmonic_staircase(TRUNCATION).unwrap().into_function();
    let fixtures: [KsFixture; 3] = [
        ("identity", identity(), |y| y.clamp(0.0, 1.0), 0xACCE_0301),
        ("square", square(), |y| y.clamp(0.0, 1.0).sqrt(), 0xACCE_0302),
        ("harmonic", harmonic_fn, staircase_cdf, 0xACCE_0303),
    ];
    let mut pass = true;
    let mut parts = Vec::new();
    for (name, f, cdf, seed) in fixtures {
        let start = Instant::now();
        let e = parallel::empirical_measure(&pool, &f, n, seed).unwrap();
        let d = ks_statistic(&e, cdf);
        let elapsed = start.elapsed();
        let tail = f.tail_mass() / f.domain().measure();
        let bound = 1.63 / (e.len() as f64).sqrt() + tail;
        pass &= d < bound && elapsed < Duration::from_secs(10);
        parts.push(format!("{name} D = {d:.5} < {bound:.5} ({:.2} s)", elapsed.as_secs_f64()));

        let table = density_table(&f, GRID).unwrap();
        let pairs: Vec<(f64, f64)> = table.grid().iter().copied().zip(table.values().iter().copied()).collect();
        masses.push((format!("{name} density"), trapezoid(&pairs), table.tail_bound()));
    }
    outcome(pass, parts.join("; "))
}

fn ladder_gaps() -> Outcome {
    let start = Instant::now();
    let f = identity();
    let suite = probe_suite(SuiteKind::Default, 0.0, 1.0);
    let pi = std::f64::consts::PI;
    // Exact integrals against the uniform law on [0, 1], in suite order.
    let mut exact: Vec<f64> = (0..=6).map(|k| 1.0 / (k as f64 + 1.0)).collect();
    exact.extend([2.0 / pi, 0.0, 0.25]);
    assert_eq!(exact.len(), suite.len());
    let lipschitz = suite.iter().filter_map(TestFunction::lipschitz_bound).fold(0.0, f64::max);

    let mut worst_slack = f64::INFINITY;
    let mut gap20 = f64::NAN;
    let mut pass = true;
    for level in 2..=20u32 {
        let nu: YoungMeasureRepr = simple_approximation(&f, level).unwrap().young_measure().unwrap().into();
        let gap = suite
            .iter()
            .zip(&exact)
            .map(|(t, e)| (integrate_test(&nu, t).unwrap() - e).abs())
            .fold(0.0, f64::max);
        let bound = lipschitz * (-(level as f64)).exp2() + 1e-6;
        worst_slack = worst_slack.min(bound - gap);
        pass &= gap <= bound;
        if level == 20 {
            gap20 = gap;
        }
    }
    let elapsed = start.elapsed();
    pass &= gap20 < 1e-5 && elapsed < Duration::from_secs(30);
    outcome(
        pass,
        format!(
            "Λ = {lipschitz}, min slack of Λ·2^-L + 1e-6 over L = 2..20 is {worst_slack:.2e}, gap(20) = {gap20:.3e}, {:.2} s",
            elapsed.as_secs_f64()
        ),
    )
}

fn functional_agreement() -> Outcome {
    let start = Instant::now();
    let t = TestFunction::beta("s").unwrap();
    let fixtures = [
        ("identity", identity()),
        ("square", square()),
        ("harmonic", harmonic_staircase(TRUNCATION).unwrap().into_function()),
    ];
    let mut pass = true;
    let mut parts = Vec::new();
    for (i, (name, f)) in fixtures.iter().enumerate() {
        let q = young_functional_quadrature(f, &t, ym::cli::QUADRATURE_INTERVALS).unwrap();
        let agreeing = (0..20u64)
            .filter(|s| {
                let mc = young_functional_mc(f, &t, 100_000, 0xACCE_0500 + 100 * i as u64 + s).unwrap();
                (mc.value - q.value).abs() <= 4.0 * mc.stderr
            })
            .count();
        pass &= agreeing >= 19;
        parts.push(format!("{name} {agreeing}/20 (quadrature {:.10})", q.value));
    }
    let elapsed = start.elapsed();
    pass &= elapsed < Duration::from_secs(60);
    outcome(pass, format!("{}, {:.2} s", parts.join("; "), elapsed.as_secs_f64()))
}

fn normalization(masses: &[MassRecord]) -> Outcome {
    let mut pass = !masses.is_empty();
    let mut parts = Vec::new();
    for (label, mass, tail) in masses {
        let ok = *mass >= 1.0 - tail - 1e-6 && *mass <= 1.0 + 1e-6;
        pass &= ok;
        parts.push(format!("{label} {mass:.9} (tail {tail:.6})"));
    }
    outcome(pass, format!("{} tables: {}", masses.len(), parts.join("; ")))
}

fn run_all_outputs(dir: &Path) -> Vec<(String, Vec<u8>)> {
    fs::create_dir_all(dir).unwrap();
    let (spec, _) = run_example(dir);
    run_density(&spec, &dir.join("density.csv"), true);

    let mut c = config(Command::Sample);
    c.input = Some("harmonic".into());
    c.samples = 1_000_000;
    c.seed = 0xACCE_0303;
    c.output = Some(dir.join("samples.csv"));
    c.plot = true;
    run(&c).unwrap();

    let mut c = config(Command::Approx);
    c.input = Some("identity".into());
    c.output = Some(dir.join("approx.csv"));
    run(&c).unwrap();

    let mut c = config(Command::Functional);
    c.input = Some("square".into());
    c.beta = Some("s".into());
    c.samples = 100_000;
    c.output = Some(dir.join("functional.json"));
    run(&c).unwrap();

    let mut files: Vec<(String, Vec<u8>)> = fs::read_dir(dir)
        .unwrap()
        .map(|e| {
            let path = e.unwrap().path();
            (path.file_name().unwrap().to_string_lossy().into_owned(), fs::read(&path).unwrap())
        })
        .collect();
    files.sort();
    files
}

fn determinism(dir: &Path) -> Outcome {
    // Same directory both times, so every flag (paths included) is identical.
    let first = run_all_outputs(dir);
    fs::remove_dir_all(dir).unwrap();
    std::env::set_var(parallel::THREADS_VAR, "1");
    let second = run_all_outputs(dir);
    std::env::remove_var(parallel::THREADS_VAR);
    let names: Vec<&str> = first.iter().map(|(n, _)| n.as_str()).collect();
    let differing: Vec<&str> =
        first.iter().zip(&second).filter(|(a, b)| a != b).map(|(a, _)| a.0.as_str()).collect();
    let pass = first.len() == second.len() && differing.is_empty() && first.len() >= 8;
    outcome(
        pass,
        format!(
            "{} files compared across runs (second run single-threaded): [{}]; differing: [{}]",
            first.len(),
            names.join(", "),
            differing.join(", ")
        ),
    )
}

fn main() -> ExitCode {
    let dir = tempfile::tempdir().expect("temporary directory");
    let mut masses = Vec::new();
    // Evaluated in order; criterion 6 reads the tables recorded by 1 and 3.
    let results: Vec<(&str, Outcome)> = vec![
        ("1 harmonic golden values", harmonic_golden(dir.path(), &mut masses)),
        ("2 simple-function weights", simple_fixtures()),
        ("3 KS against analytic CDFs", ks_fixtures(&mut masses)),
        ("4 ladder weak* gaps", ladder_gaps()),
        ("5 Monte Carlo vs quadrature", functional_agreement()),
        ("6 density normalization", normalization(&masses)),
        ("7 bitwise determinism", determinism(&dir.path().join("determinism"))),
    ];
    let mut failed = 0;
    for (name, o) in &results {
        println!("{} criterion {name}: {}", if o.pass { "PASS" } else { "FAIL" }, o.detail);
        failed += usize::from(!o.pass);
    }
    println!("acceptance: {} passed, {failed} failed", results.len() - failed);
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
