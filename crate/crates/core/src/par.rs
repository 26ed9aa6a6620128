//! Deterministic parallel map over fixed-size blocks of trials.
//!
//! Block boundaries depend only on the trial count, never on the worker
//! count, and results come back in block order. Callers fold them serially,
//! so floating-point sums are bit-identical for any number of workers.

use std::ops::Range;

use rayon::prelude::*;

/// Trials per block.
pub const BLOCK: usize = 64;

/// Worker count meaning "use the machine's parallelism".
pub fn default_workers() -> usize {
    std::thread::available_parallelism().map_or(1, |n| n.get())
}

/// Applies `f` to consecutive ranges of `0..n` of length [`BLOCK`] (the last
/// may be shorter) on `workers` threads and returns the results in order.
pub fn map_blocks<T, F>(n: usize, workers: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(Range<usize>) -> T + Sync + Send,
{
    let ranges: Vec<Range<usize>> = (0..n).step_by(BLOCK).map(|s| s..(s + BLOCK).min(n)).collect();
    let workers = if workers == 0 { default_workers() } else { workers };
    if workers == 1 {
        return ranges.into_iter().map(f).collect();
    }
    match rayon::ThreadPoolBuilder::new().num_threads(workers).build() {
        Ok(pool) => pool.install(|| ranges.into_par_iter().map(&f).collect()),
        Err(_) => ranges.into_iter().map(f).collect(),
    }
}
