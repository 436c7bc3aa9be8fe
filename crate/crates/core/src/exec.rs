//! Data-parallel fan-out with a sequential fallback.
//!
//! Everything that maps independent cells (days, turbines, random trials)
//! goes through [`Exec::map`]. With the `parallel` feature the work runs on
//! the rayon pool; output order always matches input order, so results are
//! identical regardless of the mode chosen.

#[cfg(feature = "parallel")]
use rayon::prelude::*;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Exec {
    #[cfg_attr(not(feature = "parallel"), default)]
    Sequential,
    #[cfg(feature = "parallel")]
    #[default]
    Parallel,
}

impl Exec {
    /// Picks sequential execution for a single thread, the default otherwise.
    pub fn for_threads(threads: Option<usize>) -> Self {
        match threads {
            Some(1) => Exec::Sequential,
            _ => Exec::default(),
        }
    }

    pub fn map<T, R, F>(self, items: &[T], f: F) -> Vec<R>
    where
        T: Sync,
        R: Send,
        F: Fn(&T) -> R + Sync + Send,
    {
        match self {
            Exec::Sequential => items.iter().map(f).collect(),
            #[cfg(feature = "parallel")]
            Exec::Parallel => items.par_iter().map(f).collect(),
        }
    }

    pub fn map_range<R, F>(self, n: usize, f: F) -> Vec<R>
    where
        R: Send,
        F: Fn(usize) -> R + Sync + Send,
    {
        match self {
            Exec::Sequential => (0..n).map(f).collect(),
            #[cfg(feature = "parallel")]
            Exec::Parallel => (0..n).into_par_iter().map(f).collect(),
        }
    }
}
