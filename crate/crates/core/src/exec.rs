//! Index-parallel execution with a sequential fallback.
//!
//! All Monte Carlo work is expressed as a pure function of a sample index.
//! Results are collected in index order and reduced with exact integer
//! arithmetic, so the schedule never changes an output bit.

use std::ops::Range;

/// How index ranges are executed.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum Schedule {
    /// Parallel when the `parallel` feature is enabled, sequential otherwise.
    #[default]
    Auto,
    Sequential,
    Parallel,
}

impl Schedule {
    /// Whether this schedule actually runs on the rayon pool in this build.
    pub fn is_parallel(self) -> bool {
        cfg!(feature = "parallel") && self != Schedule::Sequential
    }

    /// `f(i)` for every `i` in `range`, in index order.
    pub fn map<T, F>(self, range: Range<u64>, f: F) -> Vec<T>
    where
        T: Send,
        F: Fn(u64) -> T + Sync + Send,
    {
        #[cfg(feature = "parallel")]
        if self.is_parallel() {
            use rayon::prelude::*;
            let start = range.start;
            let len = usize::try_from(range.end.saturating_sub(start)).expect("range fits usize");
            return (0..len).into_par_iter().map(|off| f(start + off as u64)).collect();
        }
        range.map(f).collect()
    }

    /// Number of indices in `range` for which `pred` holds.
    pub fn count<F>(self, range: Range<u64>, pred: F) -> u64
    where
        F: Fn(u64) -> bool + Sync + Send,
    {
        self.sum(range, |i| pred(i) as u64)
    }

    /// Exact sum of `f(i)` over `range`.
    pub fn sum<F>(self, range: Range<u64>, f: F) -> u64
    where
        F: Fn(u64) -> u64 + Sync + Send,
    {
        #[cfg(feature = "parallel")]
        if self.is_parallel() {
            use rayon::prelude::*;
            return range.into_par_iter().map(f).sum();
        }
        range.map(f).sum()
    }
}

/// Runs `op` on a dedicated pool of `workers` threads (0 = rayon's default).
/// Without the `parallel` feature this simply calls `op`.
pub fn with_workers<R: Send>(workers: usize, op: impl FnOnce() -> R + Send) -> R {
    #[cfg(feature = "parallel")]
    {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(workers)
            .build()
            .expect("thread pool");
        pool.install(op)
    }
    #[cfg(not(feature = "parallel"))]
    {
        let _ = workers;
        op()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn schedules_agree() {
        let f = |i: u64| i.wrapping_mul(0x9E37_79B9_7F4A_7C15) >> 60;
        let seq = Schedule::Sequential.map(3..2000, f);
        let par = Schedule::Parallel.map(3..2000, f);
        assert_eq!(seq, par);
        assert_eq!(seq.len(), 1997);
        assert_eq!(Schedule::Sequential.sum(0..5000, f), Schedule::Parallel.sum(0..5000, f));
        assert_eq!(Schedule::Auto.count(0..100, |i| i % 3 == 0), 34);
    }

    #[test]
    fn empty_range() {
        assert!(Schedule::Parallel.map(5..5, |i| i).is_empty());
        assert_eq!(Schedule::Parallel.sum(5..5, |i| i), 0);
    }

    #[test]
    fn worker_pool_runs_closure() {
        assert_eq!(with_workers(2, || Schedule::Auto.sum(0..10, |i| i)), 45);
    }
}
