//! Data-parallel helpers with a sequential fallback.
//!
//! With the default `parallel` feature the helpers fan out on rayon; without
//! it they run plain iterators. Outputs are collected in input order and any
//! reduction happens over that ordered collection, so results are
//! bit-identical across builds and thread counts. The `*_seq` twins are
//! always sequential and exist so benchmarks can compare both paths in one
//! build.

/// Map `f` over `items`, collecting results in input order.
#[cfg(feature = "parallel")]
pub fn map_collect<T: Sync, U: Send, F>(items: &[T], f: F) -> Vec<U>
where
    F: Fn(&T) -> U + Sync + Send,
{
    use rayon::prelude::*;
    items.par_iter().map(f).collect()
}

/// Map `f` over `items`, collecting results in input order.
#[cfg(not(feature = "parallel"))]
pub fn map_collect<T, U, F>(items: &[T], f: F) -> Vec<U>
where
    F: Fn(&T) -> U,
{
    items.iter().map(f).collect()
}

/// Sequential twin of [`map_collect`].
pub fn map_collect_seq<T, U, F>(items: &[T], f: F) -> Vec<U>
where
    F: Fn(&T) -> U,
{
    items.iter().map(f).collect()
}

/// Map `f` over fixed-size chunks of `items`, in chunk order. Chunk
/// boundaries depend only on `chunk_size`, never on the thread count.
#[cfg(feature = "parallel")]
pub fn map_chunks<T: Sync, U: Send, F>(items: &[T], chunk_size: usize, f: F) -> Vec<U>
where
    F: Fn(&[T]) -> U + Sync + Send,
{
    use rayon::prelude::*;
    items.par_chunks(chunk_size.max(1)).map(f).collect()
}

/// Map `f` over fixed-size chunks of `items`, in chunk order.
#[cfg(not(feature = "parallel"))]
pub fn map_chunks<T, U, F>(items: &[T], chunk_size: usize, f: F) -> Vec<U>
where
    F: Fn(&[T]) -> U,
{
    items.chunks(chunk_size.max(1)).map(f).collect()
}

/// Sequential twin of [`map_chunks`].
pub fn map_chunks_seq<T, U, F>(items: &[T], chunk_size: usize, f: F) -> Vec<U>
where
    F: Fn(&[T]) -> U,
{
    items.chunks(chunk_size.max(1)).map(f).collect()
}
