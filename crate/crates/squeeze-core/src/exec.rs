//! Block-parallel execution with a sequential fallback.
//!
//! Batch work (Monte Carlo sample blocks, verification trials) is split into
//! indexed blocks; each block derives its own RNG stream, so the result is
//! identical whether blocks run in parallel, sequentially, or in any order.

#[cfg(feature = "parallel")]
use rayon::prelude::*;

/// How batch work is executed. `Auto` resolves to the rayon pool when the
/// `parallel` feature is enabled and to sequential iteration otherwise.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Execution {
    #[default]
    Auto,
    Sequential,
}

/// Applies `f` to every block index in `0..blocks` and collects the results
/// in index order.
pub fn map_blocks<T, F>(exec: Execution, blocks: u64, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(u64) -> T + Sync + Send,
{
    match exec {
        Execution::Sequential => map_blocks_sequential(blocks, f),
        #[cfg(feature = "parallel")]
        Execution::Auto => (0..blocks).into_par_iter().map(f).collect(),
        #[cfg(not(feature = "parallel"))]
        Execution::Auto => map_blocks_sequential(blocks, f),
    }
}

/// Sequential reference path; always available, used by benches and by the
/// decomposition-independence tests.
pub fn map_blocks_sequential<T, F>(blocks: u64, f: F) -> Vec<T>
where
    F: Fn(u64) -> T,
{
    (0..blocks).map(f).collect()
}

/// Folds every block index into per-worker accumulators and merges them.
/// `merge` must be commutative and associative for the result to be
/// independent of the block decomposition (bitset unions and elementwise
/// min/max are).
pub fn fold_blocks<T, Init, Fold, Merge>(
    exec: Execution,
    blocks: u64,
    init: Init,
    fold: Fold,
    merge: Merge,
) -> T
where
    T: Send,
    Init: Fn() -> T + Sync + Send,
    Fold: Fn(T, u64) -> T + Sync + Send,
    Merge: Fn(T, T) -> T + Sync + Send,
{
    match exec {
        Execution::Sequential => (0..blocks).fold(init(), fold),
        #[cfg(feature = "parallel")]
        Execution::Auto => (0..blocks)
            .into_par_iter()
            .fold(&init, &fold)
            .reduce(&init, &merge),
        #[cfg(not(feature = "parallel"))]
        Execution::Auto => {
            let _ = &merge;
            (0..blocks).fold(init(), fold)
        }
    }
}

/// Caps the rayon worker count from `SQUEEZE_LAB_THREADS` if set. No-op for
/// sequential builds or when a global pool already exists.
pub fn configure_threads_from_env() {
    #[cfg(feature = "parallel")]
    {
        if let Ok(v) = std::env::var("SQUEEZE_LAB_THREADS") {
            if let Ok(n) = v.trim().parse::<usize>() {
                if n > 0 {
                    let _ = rayon::ThreadPoolBuilder::new()
                        .num_threads(n)
                        .build_global();
                }
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parallel_and_sequential_agree() {
        let f = |b: u64| b.wrapping_mul(0x9E37_79B9).rotate_left(7);
        let par = map_blocks(Execution::Auto, 257, f);
        let seq = map_blocks_sequential(257, f);
        assert_eq!(par, seq);
    }
}
