//! Data-parallel helpers with a sequential fallback.
//!
//! With the `parallel` feature the [`Mode::Parallel`] path runs on the rayon
//! global pool; without it both modes execute sequentially.

#[cfg(feature = "parallel")]
use rayon::prelude::*;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    Sequential,
    Parallel,
}

impl Default for Mode {
    fn default() -> Self {
        if cfg!(feature = "parallel") {
            Mode::Parallel
        } else {
            Mode::Sequential
        }
    }
}

/// Evaluate `f(0..n)` and collect the results in index order.
pub fn map<T, F>(mode: Mode, n: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Sync + Send,
{
    match mode {
        #[cfg(feature = "parallel")]
        Mode::Parallel => (0..n).into_par_iter().map(f).collect(),
        _ => (0..n).map(f).collect(),
    }
}

/// Fallible variant of [`map`]; the first error in index order is returned.
pub fn try_map<T, E, F>(mode: Mode, n: usize, f: F) -> Result<Vec<T>, E>
where
    T: Send,
    E: Send,
    F: Fn(usize) -> Result<T, E> + Sync + Send,
{
    map(mode, n, f).into_iter().collect()
}

/// Fill `out` chunk by chunk, `f(chunk_index, chunk)`.
pub fn for_each_chunk<T, F>(mode: Mode, out: &mut [T], chunk: usize, f: F)
where
    T: Send,
    F: Fn(usize, &mut [T]) + Sync + Send,
{
    let chunk = chunk.max(1);
    match mode {
        #[cfg(feature = "parallel")]
        Mode::Parallel => out
            .par_chunks_mut(chunk)
            .enumerate()
            .for_each(|(i, c)| f(i, c)),
        _ => out.chunks_mut(chunk).enumerate().for_each(|(i, c)| f(i, c)),
    }
}

/// Set the parallelism used inside dense factorizations.
pub fn configure_dense(mode: Mode) {
    match mode {
        #[cfg(feature = "parallel")]
        Mode::Parallel => faer::set_global_parallelism(faer::Par::rayon(0)),
        _ => faer::set_global_parallelism(faer::Par::Seq),
    }
}
