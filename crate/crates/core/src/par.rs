//! Execution strategy for the data-parallel loops (power iteration, trial
//! batches). With the `parallel` feature disabled everything runs
//! sequentially and [`Execution::Parallel`] falls back to the sequential path.

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum Execution {
    Sequential,
    #[default]
    Parallel,
}

impl Execution {
    /// The best strategy this build supports.
    pub fn auto() -> Self {
        if cfg!(feature = "parallel") {
            Execution::Parallel
        } else {
            Execution::Sequential
        }
    }
}

/// Maps `f` over `0..len`, returning results in index order regardless of
/// the execution strategy.
pub fn map_indexed<T, F>(exec: Execution, len: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Sync + Send,
{
    match exec {
        #[cfg(feature = "parallel")]
        Execution::Parallel => {
            use rayon::prelude::*;
            (0..len).into_par_iter().map(f).collect()
        }
        _ => (0..len).map(f).collect(),
    }
}

/// Fills `out[i] = f(i)`.
pub fn fill_indexed<T, F>(exec: Execution, out: &mut [T], f: F)
where
    T: Send,
    F: Fn(usize) -> T + Sync + Send,
{
    match exec {
        #[cfg(feature = "parallel")]
        Execution::Parallel => {
            use rayon::prelude::*;
            out.par_iter_mut()
                .enumerate()
                .for_each(|(i, slot)| *slot = f(i));
        }
        _ => {
            for (i, slot) in out.iter_mut().enumerate() {
                *slot = f(i);
            }
        }
    }
}

const SUM_CHUNK: usize = 4096;

/// Sums `f(i)` over `0..len` in fixed-size chunks so the floating-point
/// result is identical for both strategies.
pub fn chunked_sum<F>(exec: Execution, len: usize, f: F) -> f64
where
    F: Fn(usize) -> f64 + Sync + Send,
{
    let chunks = len.div_ceil(SUM_CHUNK);
    let partial = map_indexed(exec, chunks, |c| {
        let start = c * SUM_CHUNK;
        let end = (start + SUM_CHUNK).min(len);
        (start..end).map(&f).sum::<f64>()
    });
    partial.into_iter().sum()
}
