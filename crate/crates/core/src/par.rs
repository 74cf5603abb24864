//! Data-parallel helpers with a sequential fallback.
//!
//! Every helper returns results in index order, so the output of a parallel
//! run is identical to the sequential one regardless of the worker count.
//! Without the `parallel` feature, [`Exec::Parallel`] silently runs
//! sequentially.

use serde::{Deserialize, Serialize};

/// Execution strategy for the batch loops of the crate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Exec {
    Sequential,
    Parallel,
}

impl Default for Exec {
    fn default() -> Self {
        if cfg!(feature = "parallel") {
            Exec::Parallel
        } else {
            Exec::Sequential
        }
    }
}

impl Exec {
    /// Whether this strategy actually fans out work in this build.
    pub fn is_parallel(self) -> bool {
        cfg!(feature = "parallel") && self == Exec::Parallel
    }

    /// Evaluates `f(0..n)` and collects the results in index order.
    pub fn map<T, F>(self, n: usize, f: F) -> Vec<T>
    where
        T: Send,
        F: Fn(usize) -> T + Sync + Send,
    {
        #[cfg(feature = "parallel")]
        if self.is_parallel() {
            use rayon::prelude::*;
            return (0..n).into_par_iter().map(f).collect();
        }
        (0..n).map(f).collect()
    }

    /// Fills `out[k] = f(k)` for every slot.
    pub fn fill<T, F>(self, out: &mut [T], f: F)
    where
        T: Send,
        F: Fn(usize) -> T + Sync + Send,
    {
        #[cfg(feature = "parallel")]
        if self.is_parallel() {
            use rayon::prelude::*;
            out.par_iter_mut().enumerate().for_each(|(k, slot)| *slot = f(k));
            return;
        }
        for (k, slot) in out.iter_mut().enumerate() {
            *slot = f(k);
        }
    }

    /// Fallible map; the first error in index order is returned.
    pub fn try_map<T, E, F>(self, n: usize, f: F) -> Result<Vec<T>, E>
    where
        T: Send,
        E: Send,
        F: Fn(usize) -> Result<T, E> + Sync + Send,
    {
        self.map(n, f).into_iter().collect()
    }
}

/// Installs a global rayon pool with `jobs` workers. A no-op without the
/// `parallel` feature or when a pool already exists.
pub fn configure_workers(jobs: usize) {
    #[cfg(feature = "parallel")]
    {
        let _ = rayon::ThreadPoolBuilder::new().num_threads(jobs.max(1)).build_global();
    }
    #[cfg(not(feature = "parallel"))]
    let _ = jobs;
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn map_preserves_order_in_both_modes() {
        let seq = Exec::Sequential.map(100, |k| k * k);
        let par = Exec::Parallel.map(100, |k| k * k);
        assert_eq!(seq, par);
        assert_eq!(seq[7], 49);
    }

    #[test]
    fn try_map_reports_first_error() {
        let r: Result<Vec<usize>, usize> = Exec::Parallel.try_map(10, |k| if k % 4 == 3 { Err(k) } else { Ok(k) });
        assert_eq!(r, Err(3));
    }
}
