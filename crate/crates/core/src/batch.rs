//! Data-parallel helpers. With the `parallel` feature (default) work is
//! spread over the rayon pool; without it, or with
//! [`Execution::Sequential`], everything runs on the calling thread.
//! Results always come back in index order, so reductions performed by the
//! caller are deterministic either way.

#[cfg(feature = "parallel")]
use rayon::prelude::*;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Execution {
    Sequential,
    Parallel,
}

impl Default for Execution {
    fn default() -> Self {
        if cfg!(feature = "parallel") {
            Execution::Parallel
        } else {
            Execution::Sequential
        }
    }
}

/// `(0..len).map(f)` collected in order.
pub fn map<R, F>(exec: Execution, len: usize, f: F) -> Vec<R>
where
    R: Send,
    F: Fn(usize) -> R + Sync + Send,
{
    match exec {
        #[cfg(feature = "parallel")]
        Execution::Parallel => (0..len).into_par_iter().map(f).collect(),
        _ => (0..len).map(f).collect(),
    }
}

/// As [`map`] but short-circuits to the first error in index order.
pub fn try_map<R, E, F>(exec: Execution, len: usize, f: F) -> Result<Vec<R>, E>
where
    R: Send,
    E: Send,
    F: Fn(usize) -> Result<R, E> + Sync + Send,
{
    map(exec, len, f).into_iter().collect()
}
