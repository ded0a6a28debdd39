//! Execution policy for data-parallel loops.
//!
//! Every parallel loop in the crate is a `map` into an ordered `Vec`; reductions
//! over the result happen sequentially afterwards, so the policy and the worker
//! count never change a result bit.

use std::sync::atomic::{AtomicU8, Ordering};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Policy {
    Sequential,
    Parallel,
}

static POLICY: AtomicU8 = AtomicU8::new(1);

/// Select the policy used by subsequent library calls. Without the
/// `parallel` feature every policy runs sequentially.
pub fn set_policy(p: Policy) {
    POLICY.store(matches!(p, Policy::Parallel) as u8, Ordering::Relaxed);
}

pub fn policy() -> Policy {
    if cfg!(feature = "parallel") && POLICY.load(Ordering::Relaxed) == 1 {
        Policy::Parallel
    } else {
        Policy::Sequential
    }
}

/// `(0..n).map(f).collect()`, possibly in parallel, always in index order.
pub fn map_range<R, F>(n: usize, f: F) -> Vec<R>
where
    R: Send,
    F: Fn(usize) -> R + Sync + Send,
{
    #[cfg(feature = "parallel")]
    {
        if policy() == Policy::Parallel {
            use rayon::prelude::*;
            return (0..n).into_par_iter().map(f).collect();
        }
    }
    (0..n).map(f).collect()
}

/// `items.iter().map(f).collect()`, possibly in parallel, always in order.
pub fn map_slice<T, R, F>(items: &[T], f: F) -> Vec<R>
where
    T: Sync,
    R: Send,
    F: Fn(&T) -> R + Sync + Send,
{
    map_range(items.len(), |i| f(&items[i]))
}

/// Run `f` inside a pool with `workers` threads (ignored without `parallel`).
pub fn with_workers<R: Send>(workers: usize, f: impl FnOnce() -> R + Send) -> R {
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
