//! Chunked loops that run on rayon when the `parallel` feature is enabled.
//!
//! Each chunk is written by exactly one task, so results do not depend on
//! the thread count.

#[cfg(feature = "parallel")]
use rayon::prelude::*;

pub(crate) fn for_each_chunk<T, F>(data: &mut [T], chunk: usize, f: F)
where
    T: Send,
    F: Fn(usize, &mut [T]) + Sync + Send,
{
    #[cfg(feature = "parallel")]
    data.par_chunks_mut(chunk).enumerate().for_each(|(i, c)| f(i, c));
    #[cfg(not(feature = "parallel"))]
    data.chunks_mut(chunk).enumerate().for_each(|(i, c)| f(i, c));
}
