//! Execution helpers shared by the pixel loops.
//!
//! Every parallel construct in this crate decomposes work by output row, so
//! results are bit-identical for any thread count and for the sequential
//! build (`--no-default-features`). Reductions always sum one row at a time
//! and then fold the per-row partials in index order; they never rely on a
//! thread-dependent reduction tree.

#[cfg(feature = "parallel")]
use rayon::prelude::*;

/// Fill `out` row by row, where each row of `row_len` elements is produced
/// independently by `fill(row_index, row)`.
pub(crate) fn fill_rows<F>(out: &mut [f64], row_len: usize, fill: F)
where
    F: Fn(usize, &mut [f64]) + Send + Sync,
{
    debug_assert!(row_len > 0 && out.len().is_multiple_of(row_len));
    #[cfg(feature = "parallel")]
    out.par_chunks_mut(row_len)
        .enumerate()
        .for_each(|(i, row)| fill(i, row));
    #[cfg(not(feature = "parallel"))]
    out.chunks_mut(row_len)
        .enumerate()
        .for_each(|(i, row)| fill(i, row));
}

/// Sum `per_row(i)` over `rows` rows with a fixed per-row grouping.
pub(crate) fn sum_rows<F>(rows: usize, per_row: F) -> f64
where
    F: Fn(usize) -> f64 + Send + Sync,
{
    #[cfg(feature = "parallel")]
    {
        let partials: Vec<f64> = (0..rows).into_par_iter().map(per_row).collect();
        partials.iter().sum()
    }
    #[cfg(not(feature = "parallel"))]
    {
        (0..rows).map(per_row).sum()
    }
}

/// Run two independent closures, in parallel when the feature allows it.
pub fn join<A, B, RA, RB>(a: A, b: B) -> (RA, RB)
where
    A: FnOnce() -> RA + Send,
    B: FnOnce() -> RB + Send,
    RA: Send,
    RB: Send,
{
    #[cfg(feature = "parallel")]
    {
        rayon::join(a, b)
    }
    #[cfg(not(feature = "parallel"))]
    {
        (a(), b())
    }
}
