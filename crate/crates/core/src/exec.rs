//! Execution policy for the data-parallel kernels.
//!
//! Every heavy loop in the crate is an index map or an index sum. `Exec`
//! dispatches those either to rayon or to a plain iterator. Without the
//! `parallel` feature, `Exec::Parallel` silently runs sequentially, so call
//! sites never need their own `cfg` switches.

use std::ops::{Add, Range};

#[cfg(feature = "parallel")]
use rayon::prelude::*;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Exec {
    Sequential,
    #[default]
    Parallel,
}

impl Exec {
    /// Whether this policy actually fans out to worker threads.
    pub fn is_parallel(self) -> bool {
        cfg!(feature = "parallel") && self == Exec::Parallel
    }

    /// `range.map(f).collect()`, preserving order.
    pub fn map<T, F>(self, range: Range<usize>, f: F) -> Vec<T>
    where
        T: Send,
        F: Fn(usize) -> T + Sync + Send,
    {
        #[cfg(feature = "parallel")]
        if self == Exec::Parallel {
            return range.into_par_iter().map(f).collect();
        }
        range.map(f).collect()
    }

    /// Order-preserving map over a slice.
    pub fn map_slice<S, T, F>(self, items: &[S], f: F) -> Vec<T>
    where
        S: Sync,
        T: Send,
        F: Fn(&S) -> T + Sync + Send,
    {
        #[cfg(feature = "parallel")]
        if self == Exec::Parallel {
            return items.par_iter().map(f).collect();
        }
        items.iter().map(f).collect()
    }

    /// Sum of `f(i)` over `range`.
    ///
    /// Partial sums are formed per index and then added in index order, so
    /// the result is bit-identical between the two policies.
    pub fn sum<T, F>(self, range: Range<usize>, zero: T, f: F) -> T
    where
        T: Send + Copy + Add<Output = T>,
        F: Fn(usize) -> T + Sync + Send,
    {
        self.map(range, f).into_iter().fold(zero, |a, b| a + b)
    }
}
