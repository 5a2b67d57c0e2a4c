//! Order-insensitive parallel reduction over realizations.
//!
//! Items are grouped into fixed chunks whose boundaries depend only on the
//! chunk size, never on the number of worker threads. Each chunk is folded
//! sequentially and the chunk results are merged pairwise in a fixed tree,
//! so the floating-point result is identical for any thread count.

use rayon::prelude::*;

use crate::error::{invalid, Result};

/// Realizations folded together before chunk results are merged.
pub const DEFAULT_CHUNK: usize = 16;

/// Folds items `0..n` into accumulators created by `init`.
pub fn chunked_reduce<A, I, F, M>(n: usize, chunk: usize, init: I, add: F, merge: M) -> Result<A>
where
    A: Send,
    I: Fn() -> A + Sync,
    F: Fn(&mut A, usize) -> Result<()> + Sync,
    M: Fn(&mut A, A),
{
    if chunk == 0 {
        return invalid("chunk size must be positive");
    }
    if n == 0 {
        return invalid("nothing to reduce");
    }
    let n_chunks = n.div_ceil(chunk);
    let parts: Vec<Result<A>> = (0..n_chunks)
        .into_par_iter()
        .map(|c| {
            let mut acc = init();
            for item in c * chunk..((c + 1) * chunk).min(n) {
                add(&mut acc, item)?;
            }
            Ok(acc)
        })
        .collect();
    let mut level = parts.into_iter().collect::<Result<Vec<A>>>()?;
    while level.len() > 1 {
        let mut next = Vec::with_capacity(level.len().div_ceil(2));
        let mut it = level.into_iter();
        while let Some(mut left) = it.next() {
            if let Some(right) = it.next() {
                merge(&mut left, right);
            }
            next.push(left);
        }
        level = next;
    }
    Ok(level.pop().expect("at least one chunk"))
}

/// Runs `f` on a dedicated pool of `workers` threads (0 keeps the global
/// pool).
pub fn with_workers<R: Send>(workers: usize, f: impl FnOnce() -> R + Send) -> Result<R> {
    if workers == 0 {
        return Ok(f());
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map_err(|e| crate::error::Error::InvalidInput(format!("cannot start {workers} workers: {e}")))?;
    Ok(pool.install(f))
}
