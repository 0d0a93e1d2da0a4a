//! Index-ordered parallel map with a sequential fallback.
//!
//! Every data-parallel loop in the crate goes through [`map_indexed`], which
//! always returns results in index order so downstream reductions are
//! independent of the number of workers.

#[cfg(feature = "parallel")]
use rayon::prelude::*;

/// Evaluates `f(0), f(1), ..., f(len - 1)` and returns the results in index order.
#[cfg(feature = "parallel")]
pub fn map_indexed<T, F>(len: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Sync + Send,
{
    (0..len).into_par_iter().map(f).collect()
}

#[cfg(not(feature = "parallel"))]
pub fn map_indexed<T, F>(len: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Sync + Send,
{
    (0..len).map(f).collect()
}

/// Sequential version, always available.
pub fn map_indexed_seq<T, F>(len: usize, f: F) -> Vec<T>
where
    F: Fn(usize) -> T,
{
    (0..len).map(f).collect()
}

/// Number of workers the parallel map will use.
pub fn worker_count() -> usize {
    #[cfg(feature = "parallel")]
    {
        rayon::current_num_threads()
    }
    #[cfg(not(feature = "parallel"))]
    {
        1
    }
}
