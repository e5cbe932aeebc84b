//! Data-parallel helpers with a sequential fallback.
//!
//! With the `parallel` feature the [`Execution::Parallel`] mode runs on the
//! rayon pool; without it every mode runs sequentially. Reductions are done
//! over fixed-size chunks combined in index order, so results are
//! bit-identical across modes and thread counts.

use serde::{Deserialize, Serialize};

#[cfg(feature = "parallel")]
use rayon::prelude::*;

/// Chunk length for deterministic reductions.
pub const REDUCE_CHUNK: usize = 4096;

/// Environment variable holding the worker thread count.
pub const THREADS_ENV: &str = "BOLTZLP_THREADS";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Execution {
    Sequential,
    #[default]
    Parallel,
}

impl Execution {
    /// Reads [`THREADS_ENV`]; a thread count of 1 selects sequential mode.
    pub fn from_env() -> Self {
        match threads_from_env() {
            Some(1) => Execution::Sequential,
            _ => Execution::Parallel,
        }
    }

    pub fn is_parallel(self) -> bool {
        cfg!(feature = "parallel") && self == Execution::Parallel
    }
}

pub fn threads_from_env() -> Option<usize> {
    std::env::var(THREADS_ENV).ok()?.trim().parse().ok()
}

/// Sizes the global rayon pool from [`THREADS_ENV`]. Calling it twice is harmless.
pub fn init_thread_pool() {
    #[cfg(feature = "parallel")]
    if let Some(n) = threads_from_env() {
        let _ = rayon::ThreadPoolBuilder::new()
            .num_threads(n.max(1))
            .build_global();
    }
}

/// `(0..n).map(f).collect()` in the requested mode, preserving order.
pub fn map_indexed<T, F>(exec: Execution, n: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Sync + Send,
{
    #[cfg(feature = "parallel")]
    if exec.is_parallel() {
        return (0..n).into_par_iter().map(f).collect();
    }
    let _ = exec;
    (0..n).map(f).collect()
}

/// Calls `f(chunk_index, chunk)` for every `chunk_len` slice of `out`.
pub fn for_each_chunk<T, F>(exec: Execution, out: &mut [T], chunk_len: usize, f: F)
where
    T: Send,
    F: Fn(usize, &mut [T]) + Sync + Send,
{
    #[cfg(feature = "parallel")]
    if exec.is_parallel() {
        out.par_chunks_mut(chunk_len)
            .enumerate()
            .for_each(|(i, c)| f(i, c));
        return;
    }
    let _ = exec;
    out.chunks_mut(chunk_len)
        .enumerate()
        .for_each(|(i, c)| f(i, c));
}

/// Deterministic `sum_{i<n} f(i)`.
pub fn chunked_sum<F>(exec: Execution, n: usize, f: F) -> f64
where
    F: Fn(usize) -> f64 + Sync + Send,
{
    let chunks = n.div_ceil(REDUCE_CHUNK);
    let partial = map_indexed(exec, chunks, |c| {
        let lo = c * REDUCE_CHUNK;
        let hi = (lo + REDUCE_CHUNK).min(n);
        (lo..hi).map(&f).sum::<f64>()
    });
    partial.into_iter().sum()
}

/// Deterministic arg-max of `f(i)` over `0..n`; ties resolve to the lowest index.
pub fn chunked_argmax<F>(exec: Execution, n: usize, f: F) -> Option<(usize, f64)>
where
    F: Fn(usize) -> f64 + Sync + Send,
{
    let chunks = n.div_ceil(REDUCE_CHUNK);
    let partial = map_indexed(exec, chunks, |c| {
        let lo = c * REDUCE_CHUNK;
        let hi = (lo + REDUCE_CHUNK).min(n);
        let mut best: Option<(usize, f64)> = None;
        for i in lo..hi {
            let y = f(i);
            if best.map_or(true, |(_, b)| y > b) {
                best = Some((i, y));
            }
        }
        best
    });
    partial
        .into_iter()
        .flatten()
        .fold(None, |acc: Option<(usize, f64)>, (i, y)| match acc {
            Some((_, b)) if b >= y => acc,
            _ => Some((i, y)),
        })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sum_matches_across_modes() {
        let f = |i: usize| ((i as f64) * 0.37).sin() * 1e-3 + 1.0 / (1.0 + i as f64);
        let a = chunked_sum(Execution::Sequential, 100_003, f);
        let b = chunked_sum(Execution::Parallel, 100_003, f);
        assert_eq!(a.to_bits(), b.to_bits());
    }

    #[test]
    fn argmax_prefers_first() {
        let v = [1.0, 3.0, 2.0, 3.0];
        let got = chunked_argmax(Execution::Parallel, v.len(), |i| v[i]);
        assert_eq!(got, Some((1, 3.0)));
        assert_eq!(chunked_argmax(Execution::Sequential, 0, |_| 0.0), None);
    }
}
