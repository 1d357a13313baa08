//! Work scheduling for the data-parallel kernels.
//!
//! Every bulk computation in this crate maps an index range through a pure
//! function and then reduces in index order, so results are bit-identical
//! regardless of how many workers ran the map. With the `parallel` feature
//! (default) the map runs on the rayon pool; without it, or with
//! [`ExecMode::Sequential`], it runs on the calling thread.

/// How to schedule a bulk map.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ExecMode {
    /// Use the rayon pool when the `parallel` feature is enabled, otherwise
    /// fall back to sequential execution.
    #[default]
    Parallel,
    /// Always run on the calling thread.
    Sequential,
}

/// Map `0..n` through `f`, returning results in index order.
pub fn map_indexed<T, F>(n: usize, mode: ExecMode, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Sync + Send,
{
    match mode {
        ExecMode::Sequential => (0..n).map(f).collect(),
        ExecMode::Parallel => map_parallel(n, f),
    }
}

#[cfg(feature = "parallel")]
fn map_parallel<T, F>(n: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Sync + Send,
{
    use rayon::prelude::*;
    (0..n).into_par_iter().map(f).collect()
}

#[cfg(not(feature = "parallel"))]
fn map_parallel<T, F>(n: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Sync + Send,
{
    (0..n).map(f).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn modes_agree_bitwise() {
        let f = |i: usize| ((i as f64) * 0.1).sin() / ((i + 1) as f64);
        let seq = map_indexed(1000, ExecMode::Sequential, f);
        let par = map_indexed(1000, ExecMode::Parallel, f);
        assert_eq!(seq, par);
    }
}
