//! Deterministic data-parallel execution helpers.
//!
//! Reductions over grid points are chunked with a fixed chunk size; chunk
//! partial results are combined in chunk-index order. The result is therefore
//! bit-identical regardless of thread count, and identical between the
//! `parallel` (rayon) build and the sequential fallback.

#[cfg(feature = "parallel")]
use rayon::prelude::*;

/// Fixed reduction chunk. Small grids collapse to a single chunk, so the
/// parallel machinery adds no overhead there.
pub const CHUNK: usize = 4096;

/// Caps the rayon thread pool. No-op on the sequential build or if a global
/// pool already exists.
pub fn init_thread_cap(threads: Option<usize>) {
    #[cfg(feature = "parallel")]
    if let Some(n) = threads {
        let _ = rayon::ThreadPoolBuilder::new()
            .num_threads(n.max(1))
            .build_global();
    }
    #[cfg(not(feature = "parallel"))]
    let _ = threads;
}

fn chunk_bounds(n: usize) -> impl Iterator<Item = (usize, usize)> {
    let chunks = n.div_ceil(CHUNK);
    (0..chunks).map(move |c| (c * CHUNK, ((c + 1) * CHUNK).min(n)))
}

/// Sequential reference reduction; also the fallback when `parallel` is off.
pub fn sum_indexed_seq<F: Fn(usize) -> f64>(n: usize, f: F) -> f64 {
    let mut total = 0.0;
    for (lo, hi) in chunk_bounds(n) {
        let mut partial = 0.0;
        for i in lo..hi {
            partial += f(i);
        }
        total += partial;
    }
    total
}

/// Sums `f(i)` for `i in 0..n` with the fixed chunked order.
#[cfg(feature = "parallel")]
pub fn sum_indexed<F: Fn(usize) -> f64 + Sync + Send>(n: usize, f: F) -> f64 {
    let chunks = n.div_ceil(CHUNK);
    let partials: Vec<f64> = (0..chunks)
        .into_par_iter()
        .map(|c| {
            let lo = c * CHUNK;
            let hi = ((c + 1) * CHUNK).min(n);
            let mut partial = 0.0;
            for i in lo..hi {
                partial += f(i);
            }
            partial
        })
        .collect();
    // same fold as the sequential path, so the two are bit-identical
    let mut total = 0.0;
    for p in partials {
        total += p;
    }
    total
}

#[cfg(not(feature = "parallel"))]
pub fn sum_indexed<F: Fn(usize) -> f64 + Sync + Send>(n: usize, f: F) -> f64 {
    sum_indexed_seq(n, f)
}

/// Sequential elementwise map; fallback for [`map_indexed`].
pub fn map_indexed_seq<T, F: Fn(usize) -> T>(n: usize, f: F) -> Vec<T> {
    (0..n).map(f).collect()
}

/// Builds `[f(0), .., f(n-1)]`, elementwise-parallel when enabled.
#[cfg(feature = "parallel")]
pub fn map_indexed<T: Send, F: Fn(usize) -> T + Sync + Send>(n: usize, f: F) -> Vec<T> {
    (0..n).into_par_iter().map(f).collect()
}

#[cfg(not(feature = "parallel"))]
pub fn map_indexed<T: Send, F: Fn(usize) -> T + Sync + Send>(n: usize, f: F) -> Vec<T> {
    map_indexed_seq(n, f)
}
