use alloc::vec::Vec;

/// Evaluates `f` for every index in `0..n`, in order.
///
/// With the `parallel` feature the calls are spread over the rayon pool;
/// output order never depends on scheduling.
pub(crate) fn map_range<T, F>(n: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Sync + Send,
{
    #[cfg(feature = "parallel")]
    {
        use rayon::prelude::*;
        (0..n).into_par_iter().map(f).collect()
    }
    #[cfg(not(feature = "parallel"))]
    {
        (0..n).map(f).collect()
    }
}
