//! Worker pool for independent probe and sample loops.

use rayon::prelude::*;

use crate::error::{Error, Result};

pub const THREADS_ENV: &str = "KRYLOV_GRAD_THREADS";

/// Worker cap from `KRYLOV_GRAD_THREADS`; `None` when unset.
pub fn thread_cap() -> Result<Option<usize>> {
    match std::env::var(THREADS_ENV) {
        Err(std::env::VarError::NotPresent) => Ok(None),
        Err(e) => Err(Error::usage(format!("{THREADS_ENV}: {e}"))),
        Ok(s) => match s.trim().parse::<usize>() {
            Ok(k) if k > 0 => Ok(Some(k)),
            _ => Err(Error::usage(format!(
                "{THREADS_ENV} must be a positive integer, got {s:?}"
            ))),
        },
    }
}

/// Runs `f(0..count)` on a pool capped by [`thread_cap`] and returns the
/// results in index order, so any later reduction is deterministic.
pub fn map_indexed<T, F>(count: usize, f: F) -> Result<Vec<T>>
where
    T: Send,
    F: Fn(usize) -> T + Sync + Send,
{
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(k) = thread_cap()? {
        builder = builder.num_threads(k);
    }
    let pool = builder.build().map_err(|e| Error::Pool(e.to_string()))?;
    Ok(pool.install(|| (0..count).into_par_iter().map(&f).collect()))
}
