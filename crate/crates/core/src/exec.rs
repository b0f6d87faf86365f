//! Execution mode for the data-parallel inner loops.
//!
//! With the `parallel` feature (on by default) the per-viewer loops run on the
//! rayon pool. Without it, `Parallel` silently runs sequentially. Both modes
//! produce bit-identical results: work is split per viewer and reduced with
//! integer counts before any floating-point division.

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Parallelism {
    Sequential,
    #[default]
    Parallel,
}

impl Parallelism {
    /// True when this mode will actually use more than one thread.
    pub fn is_parallel(self) -> bool {
        cfg!(feature = "parallel") && self == Self::Parallel
    }
}

/// Maps `f` over `0..n` in index order, in parallel when enabled.
pub(crate) fn map_indices<T, F>(mode: Parallelism, n: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Sync + Send,
{
    #[cfg(feature = "parallel")]
    if mode.is_parallel() {
        use rayon::prelude::*;
        return (0..n).into_par_iter().map(f).collect();
    }
    let _ = mode;
    (0..n).map(f).collect()
}

/// Sums per-item count vectors of length `len`.
pub(crate) fn sum_counts<I, F>(mode: Parallelism, items: &[I], len: usize, f: F) -> Vec<u64>
where
    I: Sync,
    F: Fn(&I, &mut Vec<u64>) + Sync + Send,
{
    #[cfg(feature = "parallel")]
    if mode.is_parallel() {
        use rayon::prelude::*;
        return items
            .par_iter()
            .fold(
                || vec![0u64; len],
                |mut acc, item| {
                    f(item, &mut acc);
                    acc
                },
            )
            .reduce(
                || vec![0u64; len],
                |mut a, b| {
                    a.iter_mut().zip(b).for_each(|(x, y)| *x += y);
                    a
                },
            );
    }
    let _ = mode;
    let mut acc = vec![0u64; len];
    for item in items {
        f(item, &mut acc);
    }
    acc
}
