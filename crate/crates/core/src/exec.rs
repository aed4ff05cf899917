//! Execution strategy for index-parallel work.
//!
//! Results are always collected in index order, so the output of
//! [`map_indices`] does not depend on the strategy or the worker count.

use crate::error::Result;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Execution {
    Sequential,
    /// Rayon worker pool; `workers == 0` uses the global pool.
    #[cfg(feature = "parallel")]
    Parallel {
        workers: usize,
    },
}

impl Default for Execution {
    /// Parallel on the global pool when available.
    fn default() -> Self {
        Execution::with_workers(0)
    }
}

impl Execution {
    /// `Parallel` with the given worker count when the feature is enabled,
    /// `Sequential` otherwise. A count of 1 is always sequential.
    pub fn with_workers(workers: usize) -> Self {
        #[cfg(feature = "parallel")]
        {
            if workers != 1 {
                return Execution::Parallel { workers };
            }
        }
        let _ = workers;
        Execution::Sequential
    }

    pub fn parallel_available() -> bool {
        cfg!(feature = "parallel")
    }
}

/// Evaluates `f(0), ..., f(len - 1)` and returns the results in index order.
pub fn map_indices<T, F>(len: usize, exec: Execution, f: F) -> Result<Vec<T>>
where
    T: Send,
    F: Fn(usize) -> Result<T> + Sync + Send,
{
    match exec {
        Execution::Sequential => (0..len).map(f).collect(),
        #[cfg(feature = "parallel")]
        Execution::Parallel { workers } => {
            use rayon::prelude::*;
            let run = || (0..len).into_par_iter().map(&f).collect::<Result<Vec<T>>>();
            if workers == 0 {
                run()
            } else {
                rayon::ThreadPoolBuilder::new()
                    .num_threads(workers)
                    .build()
                    .map_err(|e| crate::error::Error::Config(format!("worker pool: {e}")))?
                    .install(run)
            }
        }
    }
}
