//! Data-parallel helpers with a sequential fallback.
//!
//! With the `rayon` feature (default) [`Execution::Parallel`] fans work out
//! over the global rayon pool; without it every call runs sequentially.

#[cfg(feature = "rayon")]
use rayon::prelude::*;

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub enum Execution {
    Sequential,
    #[default]
    Parallel,
}

impl Execution {
    /// Whether this build can actually run in parallel.
    pub fn parallel_available() -> bool {
        cfg!(feature = "rayon")
    }
}

pub fn map<T, R, F>(exec: Execution, items: &[T], f: F) -> Vec<R>
where
    T: Sync,
    R: Send,
    F: Fn(&T) -> R + Sync + Send,
{
    match exec {
        #[cfg(feature = "rayon")]
        Execution::Parallel => {
            let mut out = Vec::with_capacity(items.len());
            items.par_iter().map(f).collect_into_vec(&mut out);
            out
        }
        _ => items.iter().map(f).collect(),
    }
}

/// Like [`map`] but stops at an error. Under parallel execution the error
/// reported is the one with the lowest index.
pub fn try_map<T, R, E, F>(exec: Execution, items: &[T], f: F) -> Result<Vec<R>, E>
where
    T: Sync,
    R: Send,
    E: Send,
    F: Fn(&T) -> Result<R, E> + Sync + Send,
{
    map(exec, items, f).into_iter().collect()
}
