//! Data-parallel helpers with a sequential fallback.
//!
//! With the `parallel` feature (default) the `Parallel` mode dispatches to
//! rayon; without it every mode runs sequentially. Both paths produce
//! identical results because callers only combine results in index order or
//! through associative integer merges.

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ExecutionMode {
    Sequential,
    Parallel,
}

impl ExecutionMode {
    /// Whether this mode will actually fan out.
    pub fn is_parallel(self) -> bool {
        cfg!(feature = "parallel") && self == ExecutionMode::Parallel
    }
}

impl Default for ExecutionMode {
    fn default() -> Self {
        if cfg!(feature = "parallel") {
            ExecutionMode::Parallel
        } else {
            ExecutionMode::Sequential
        }
    }
}

/// Maps `f` over `0..n`, collecting results in index order.
pub fn map_indices<R, F>(mode: ExecutionMode, n: usize, f: F) -> Vec<R>
where
    R: Send,
    F: Fn(usize) -> R + Sync + Send,
{
    #[cfg(feature = "parallel")]
    if mode.is_parallel() {
        use rayon::prelude::*;
        return (0..n).into_par_iter().map(f).collect();
    }
    let _ = mode;
    (0..n).map(f).collect()
}

/// Maps `f` over `0..n` and folds the results with an associative `reduce`.
pub fn map_reduce_indices<R, F, ID, RD>(mode: ExecutionMode, n: usize, f: F, identity: ID, reduce: RD) -> R
where
    R: Send,
    F: Fn(usize) -> R + Sync + Send,
    ID: Fn() -> R + Sync + Send,
    RD: Fn(R, R) -> R + Sync + Send,
{
    #[cfg(feature = "parallel")]
    if mode.is_parallel() {
        use rayon::prelude::*;
        return (0..n).into_par_iter().map(f).reduce(identity, reduce);
    }
    let _ = mode;
    (0..n).map(f).fold(identity(), reduce)
}

/// Fallible variant of [`map_indices`]; the first error in index order wins.
pub fn try_map_indices<R, E, F>(mode: ExecutionMode, n: usize, f: F) -> Result<Vec<R>, E>
where
    R: Send,
    E: Send,
    F: Fn(usize) -> Result<R, E> + Sync + Send,
{
    map_indices(mode, n, f).into_iter().collect()
}
