//! Execution strategy for the data-parallel inner loops.
//!
//! Work over an index range is cut into fixed-size chunks. Each chunk is
//! reduced sequentially and chunk results are merged in index order, so the
//! floating point result does not depend on the thread count or on whether
//! rayon is used at all.

use std::cell::Cell;
use std::ops::Range;

/// Chunk length for index-range reductions.
pub const CHUNK: usize = 1 << 12;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Execution {
    Sequential,
    Parallel,
}

thread_local! {
    static FORCE_SEQUENTIAL: Cell<bool> = const { Cell::new(false) };
}

impl Execution {
    /// Strategy in effect on the calling thread.
    pub fn current() -> Execution {
        if cfg!(feature = "parallel") && !FORCE_SEQUENTIAL.with(Cell::get) {
            Execution::Parallel
        } else {
            Execution::Sequential
        }
    }
}

/// Runs `f` with every reduction on this thread forced to be sequential.
pub fn sequential<R>(f: impl FnOnce() -> R) -> R {
    let previous = FORCE_SEQUENTIAL.with(|c| c.replace(true));
    let out = f();
    FORCE_SEQUENTIAL.with(|c| c.set(previous));
    out
}

fn chunk_ranges(n: usize) -> Vec<Range<usize>> {
    (0..n.div_ceil(CHUNK))
        .map(|c| c * CHUNK..((c + 1) * CHUNK).min(n))
        .collect()
}

/// Applies `f` to each chunk of `0..n`, returning results in chunk order.
pub fn map_chunks<T, F>(n: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(Range<usize>) -> T + Sync + Send,
{
    let ranges = chunk_ranges(n);
    match Execution::current() {
        #[cfg(feature = "parallel")]
        Execution::Parallel => {
            use rayon::prelude::*;
            ranges.into_par_iter().map(f).collect()
        }
        _ => ranges.into_iter().map(f).collect(),
    }
}

/// Ordered map over `0..n`; each item is an independent task.
pub fn map_indexed<T, F>(n: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Sync + Send,
{
    match Execution::current() {
        #[cfg(feature = "parallel")]
        Execution::Parallel => {
            use rayon::prelude::*;
            (0..n).into_par_iter().map(f).collect()
        }
        _ => (0..n).map(f).collect(),
    }
}

/// Compensated sum of `f(i)` over `0..n`.
pub fn sum_indexed<F>(n: usize, f: F) -> f64
where
    F: Fn(usize) -> f64 + Sync + Send,
{
    let partial = map_chunks(n, |range| {
        let mut acc = NeumaierSum::default();
        for i in range {
            acc.add(f(i));
        }
        acc.value()
    });
    NeumaierSum::of(partial)
}

/// Neumaier's variant of Kahan summation.
#[derive(Clone, Copy, Debug, Default)]
pub struct NeumaierSum {
    sum: f64,
    compensation: f64,
}

impl NeumaierSum {
    pub fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.compensation += (self.sum - t) + x;
        } else {
            self.compensation += (x - t) + self.sum;
        }
        self.sum = t;
    }

    pub fn value(&self) -> f64 {
        self.sum + self.compensation
    }

    pub fn of(values: impl IntoIterator<Item = f64>) -> f64 {
        let mut acc = NeumaierSum::default();
        for v in values {
            acc.add(v);
        }
        acc.value()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn compensated_sum_recovers_small_terms() {
        let values = [1.0, 1e100, 1.0, -1e100];
        assert_eq!(NeumaierSum::of(values), 2.0);
    }

    #[test]
    fn sequential_and_parallel_sums_agree_bitwise() {
        let f = |i: usize| ((i as f64) * 0.37).sin() / (1.0 + i as f64);
        let par = sum_indexed(100_003, f);
        let seq = sequential(|| sum_indexed(100_003, f));
        assert_eq!(par.to_bits(), seq.to_bits());
    }

    #[test]
    fn sequential_scope_restores_previous_mode() {
        let before = Execution::current();
        sequential(|| assert_eq!(Execution::current(), Execution::Sequential));
        assert_eq!(Execution::current(), before);
    }

    #[test]
    fn map_indexed_preserves_order() {
        let v = map_indexed(10_000, |i| i * 2);
        assert!(v.iter().enumerate().all(|(i, &x)| x == 2 * i));
    }
}
