//! Parallel versions of the sampling and ladder engines.
//!
//! Results equal the sequential ones in `ym-core` bit for bit: draws are keyed
//! by index and reassembled in index order. `YM_THREADS` caps the pool size.

use rayon::prelude::*;
use rayon::ThreadPool;
use ym_core::approximation::{gap_row, GapRow};
use ym_core::domain::PiecewiseFunction;
use ym_core::measure::{EmpiricalMeasure, TestFunction, YoungMeasureRepr};
use ym_core::monte_carlo::{draw_value, empirical_from_draws};
use ym_core::Error;

use crate::error::{CliError, Result};

/// Environment variable capping the number of worker threads.
pub const THREADS_VAR: &str = "YM_THREADS";

const CHUNK: u64 = 1 << 16;

/// The `YM_THREADS` value, if set to a positive integer.
pub fn thread_cap() -> Result<Option<usize>> {
    match std::env::var(THREADS_VAR) {
        Err(_) => Ok(None),
        Ok(v) => match v.trim().parse::<usize>() {
            Ok(n) if n > 0 => Ok(Some(n)),
            _ => Err(CliError::Input(format!("{THREADS_VAR} must be a positive integer, got `{v}`"))),
        },
    }
}

pub fn pool() -> Result<ThreadPool> {
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(n) = thread_cap()? {
        builder = builder.num_threads(n);
    }
    builder.build().map_err(|e| CliError::Input(format!("cannot start worker threads: {e}")))
}

/// Same result as [`ym_core::monte_carlo::empirical_measure`].
pub fn empirical_measure(pool: &ThreadPool, f: &PiecewiseFunction, n: usize, seed: u64) -> Result<EmpiricalMeasure> {
    if f.codomain_dim() != 1 {
        return Err(Error::RequiresOneDimension.into());
    }
    let n = n as u64;
    let chunks = n.div_ceil(CHUNK);
    let draws: Vec<Vec<Option<f64>>> = pool.install(|| {
        (0..chunks)
            .into_par_iter()
            .map(|c| {
                let mut x = vec![0.0; f.domain_dim()];
                (c * CHUNK..((c + 1) * CHUNK).min(n)).map(|i| draw_value(f, seed, i, &mut x)).collect()
            })
            .collect::<Result<_, Error>>()
    })?;
    Ok(empirical_from_draws(draws.into_iter().flatten(), seed)?)
}

/// Same result as [`ym_core::approximation::convergence_report`].
pub fn convergence_report(
    pool: &ThreadPool,
    f: &PiecewiseFunction,
    levels: &[u32],
    suite: &[TestFunction],
    reference: &YoungMeasureRepr,
) -> Result<Vec<GapRow>> {
    let mut sorted = levels.to_vec();
    sorted.sort_unstable();
    sorted.dedup();
    let rows = pool.install(|| {
        sorted.par_iter().map(|&level| gap_row(f, level, suite, reference)).collect::<Result<Vec<_>, Error>>()
    })?;
    Ok(rows)
}
