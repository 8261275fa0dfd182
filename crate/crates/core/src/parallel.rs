//! Trial scheduling.
//!
//! [`map_trials`] evaluates `f(0..n)` and returns results in index order. With
//! the `parallel` feature the work runs on a dedicated rayon pool of the
//! requested size; otherwise (or with `workers == 1`) it runs on the calling
//! thread. Either way the output vector is identical, since each trial owns
//! its random stream and the reduction happens afterwards in index order.

use std::panic::{catch_unwind, AssertUnwindSafe};

use crate::error::HarnessError;

fn panic_message(payload: Box<dyn std::any::Any + Send>) -> String {
    if let Some(s) = payload.downcast_ref::<&str>() {
        (*s).to_string()
    } else if let Some(s) = payload.downcast_ref::<String>() {
        s.clone()
    } else {
        "non-string panic payload".to_string()
    }
}

fn guarded<T, F>(f: &F, index: usize) -> Result<T, HarnessError>
where
    F: Fn(usize) -> T,
{
    catch_unwind(AssertUnwindSafe(|| f(index))).map_err(|payload| HarnessError::TrialPanicked {
        index,
        message: panic_message(payload),
    })
}

/// Sequential reference path.
pub fn map_trials_sequential<T, F>(n: usize, f: F) -> Result<Vec<T>, HarnessError>
where
    F: Fn(usize) -> T,
{
    (0..n).map(|i| guarded(&f, i)).collect()
}

#[cfg(feature = "parallel")]
pub fn map_trials<T, F>(n: usize, workers: usize, f: F) -> Result<Vec<T>, HarnessError>
where
    T: Send,
    F: Fn(usize) -> T + Sync + Send,
{
    use rayon::prelude::*;

    if workers <= 1 || n <= 1 {
        return map_trials_sequential(n, f);
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map_err(|e| HarnessError::Usage(format!("cannot start worker pool: {e}")))?;
    let results: Vec<Result<T, HarnessError>> =
        pool.install(|| (0..n).into_par_iter().map(|i| guarded(&f, i)).collect());
    // collect() over an indexed parallel iterator preserves order, so the
    // first error reported is the lowest failing trial index
    results.into_iter().collect()
}

#[cfg(not(feature = "parallel"))]
pub fn map_trials<T, F>(n: usize, _workers: usize, f: F) -> Result<Vec<T>, HarnessError>
where
    T: Send,
    F: Fn(usize) -> T + Sync + Send,
{
    map_trials_sequential(n, f)
}

pub fn default_workers() -> usize {
    std::thread::available_parallelism()
        .map(|n| n.get())
        .unwrap_or(1)
}
