//! Data-parallel helpers with a sequential fallback.
//!
//! With the `parallel` feature, [`Exec::Parallel`] runs on the current rayon
//! pool. Without it, both variants run sequentially. Every helper collects
//! results in input order, so the output never depends on scheduling.

use std::ops::Range;

#[cfg(feature = "parallel")]
use rayon::prelude::*;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Exec {
    Sequential,
    #[default]
    Parallel,
}

impl Exec {
    pub fn is_parallel(self) -> bool {
        cfg!(feature = "parallel") && self == Exec::Parallel
    }
}

/// Map `f` over a slice, preserving order.
pub fn map_slice<T, R, F>(exec: Exec, items: &[T], f: F) -> Vec<R>
where
    T: Sync,
    R: Send,
    F: Fn(&T) -> R + Sync + Send,
{
    #[cfg(feature = "parallel")]
    {
        if exec.is_parallel() {
            return items.par_iter().map(f).collect();
        }
    }
    let _ = exec;
    items.iter().map(f).collect()
}

/// Map `f` over an index range, preserving order.
pub fn map_range<R, F>(exec: Exec, range: Range<u64>, f: F) -> Vec<R>
where
    R: Send,
    F: Fn(u64) -> R + Sync + Send,
{
    #[cfg(feature = "parallel")]
    {
        if exec.is_parallel() {
            return range.into_par_iter().map(f).collect();
        }
    }
    let _ = exec;
    range.map(f).collect()
}

/// Sum of `f` over an index range. Integer addition, so the result is
/// independent of how the range is split.
pub fn sum_range<F>(exec: Exec, range: Range<u64>, f: F) -> u64
where
    F: Fn(u64) -> u64 + Sync + Send,
{
    #[cfg(feature = "parallel")]
    {
        if exec.is_parallel() {
            return range.into_par_iter().map(f).sum();
        }
    }
    let _ = exec;
    range.map(f).sum()
}

/// First index (in range order) for which `f` returns `Some`.
pub fn find_first<R, F>(exec: Exec, range: Range<u64>, f: F) -> Option<R>
where
    R: Send,
    F: Fn(u64) -> Option<R> + Sync + Send,
{
    #[cfg(feature = "parallel")]
    {
        if exec.is_parallel() {
            return range.into_par_iter().map(f).find_first(|r| r.is_some()).flatten();
        }
    }
    let _ = exec;
    range.map(f).find(|r| r.is_some()).flatten()
}

/// Run `f` on a dedicated pool of `workers` threads. `workers == 0` uses the
/// global pool. Without the `parallel` feature the worker count is ignored.
pub fn with_workers<R, F>(workers: usize, f: F) -> R
where
    R: Send,
    F: FnOnce() -> R + Send,
{
    #[cfg(feature = "parallel")]
    {
        if workers > 0 {
            if let Ok(pool) = rayon::ThreadPoolBuilder::new().num_threads(workers).build() {
                return pool.install(f);
            }
        }
    }
    let _ = workers;
    f()
}
