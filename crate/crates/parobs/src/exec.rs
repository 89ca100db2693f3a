//! Deterministic execution strategy.
//!
//! Every data-parallel loop in this crate goes through the helpers below.
//! Work is split into fixed-size chunks; each chunk is reduced sequentially
//! and the per-chunk partials are combined in index order. The parallel and
//! sequential paths therefore perform floating-point operations in exactly
//! the same order and produce bit-identical results — parallelism only
//! changes *who* computes a chunk, never the reduction tree.
//!
//! The `parallel` cargo feature selects whether rayon is compiled in at all;
//! [`run_sequential`] additionally forces the sequential path at runtime for
//! the current thread, which is what the benchmark suite and the determinism
//! checks use to compare both modes within one binary.

use std::cell::Cell;

#[cfg(feature = "parallel")]
use rayon::prelude::*;

thread_local! {
    static FORCE_SEQUENTIAL: Cell<bool> = const { Cell::new(false) };
}

/// Runs `f` with all exec helpers on the current thread forced sequential.
pub fn run_sequential<T>(f: impl FnOnce() -> T) -> T {
    let prev = FORCE_SEQUENTIAL.with(|c| c.replace(true));
    let out = f();
    FORCE_SEQUENTIAL.with(|c| c.set(prev));
    out
}

/// True when the calling thread is inside [`run_sequential`] or the crate
/// was built without the `parallel` feature.
pub fn sequential_forced() -> bool {
    if cfg!(not(feature = "parallel")) {
        return true;
    }
    FORCE_SEQUENTIAL.with(|c| c.get())
}

/// Chunk length for all reductions. Fixed so that the reduction tree — and
/// hence the floating-point rounding — is independent of thread count.
const CHUNK: usize = 1024;

/// Sum of `f(i)` for `i in 0..n`, chunked and combined in index order.
pub fn sum_indexed<F>(n: usize, f: F) -> f64
where
    F: Fn(usize) -> f64 + Sync,
{
    let chunks = n.div_ceil(CHUNK);
    let chunk_sum = |c: usize| {
        let lo = c * CHUNK;
        let hi = (lo + CHUNK).min(n);
        let mut acc = 0.0;
        for i in lo..hi {
            acc += f(i);
        }
        acc
    };
    #[cfg(feature = "parallel")]
    if !sequential_forced() && n > CHUNK {
        let partials: Vec<f64> = (0..chunks).into_par_iter().map(chunk_sum).collect();
        return partials.iter().sum();
    }
    (0..chunks).map(chunk_sum).sum()
}

/// `(0..n).map(f)` collected in index order, parallel when allowed.
pub fn map_indexed<T, F>(n: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Sync + Send,
{
    #[cfg(feature = "parallel")]
    if !sequential_forced() && n > 64 {
        return (0..n).into_par_iter().map(f).collect();
    }
    (0..n).map(f).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parallel_and_sequential_sums_are_bit_identical() {
        // Summands with wildly varying magnitude so that any reordering of
        // the floating-point reduction would change the result.
        let f = |i: usize| ((i * 2654435761 % 1000003) as f64).sin() * 1e3_f64.powi((i % 7) as i32 - 3);
        let n = 100_000;
        let par = sum_indexed(n, f);
        let seq = run_sequential(|| sum_indexed(n, f));
        assert_eq!(par.to_bits(), seq.to_bits());
    }

    #[test]
    fn map_preserves_index_order() {
        let v = map_indexed(10_000, |i| i as u64 * 3);
        for (i, x) in v.iter().enumerate() {
            assert_eq!(*x, i as u64 * 3);
        }
    }

    #[test]
    fn run_sequential_restores_previous_mode() {
        assert!(!sequential_forced() || cfg!(not(feature = "parallel")));
        run_sequential(|| {
            assert!(sequential_forced());
            run_sequential(|| assert!(sequential_forced()));
            assert!(sequential_forced());
        });
        assert!(!sequential_forced() || cfg!(not(feature = "parallel")));
    }
}
