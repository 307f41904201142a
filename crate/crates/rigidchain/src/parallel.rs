//! Order-preserving parallel map over index ranges.

use std::num::NonZeroUsize;
use std::thread;

/// Worker count used when none is given.
pub fn default_jobs() -> usize {
    thread::available_parallelism().map(NonZeroUsize::get).unwrap_or(1)
}

/// `(0..count).map(f)` evaluated on up to `jobs` threads. Results come back
/// in index order whatever the worker count.
pub fn map_indexed<T, F>(count: usize, jobs: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Sync,
{
    let jobs = jobs.clamp(1, count.max(1));
    if jobs == 1 {
        return (0..count).map(f).collect();
    }
    let chunk = count.div_ceil(jobs);
    let f = &f;
    thread::scope(|scope| {
        let handles: Vec<_> = (0..jobs)
            .map(|j| {
                let range = (j * chunk).min(count)..((j + 1) * chunk).min(count);
                scope.spawn(move || range.map(f).collect::<Vec<T>>())
            })
            .collect();
        handles.into_iter().flat_map(|h| h.join().expect("worker panicked")).collect()
    })
}
