//! Data-parallel batch helper with a sequential fallback.
//!
//! With the `parallel` feature the indexed map runs on the rayon pool;
//! without it, or when `Mode::Sequential` is forced, it runs in order.
//! Callers derive per-index RNGs so results are identical either way.

#[cfg(feature = "parallel")]
use rayon::prelude::*;

#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum Mode {
    Sequential,
    /// Rayon when compiled in, otherwise falls back to sequential.
    Parallel,
}

impl Mode {
    /// The default execution mode for batch workloads.
    pub fn auto() -> Mode {
        if cfg!(feature = "parallel") {
            Mode::Parallel
        } else {
            Mode::Sequential
        }
    }
}

/// Maps `f` over `0..n`, preserving index order in the output.
pub fn map_indexed<T, F>(n: u64, mode: Mode, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(u64) -> T + Sync + Send,
{
    match mode {
        Mode::Sequential => (0..n).map(f).collect(),
        Mode::Parallel => {
            #[cfg(feature = "parallel")]
            {
                (0..n).into_par_iter().map(f).collect()
            }
            #[cfg(not(feature = "parallel"))]
            {
                (0..n).map(f).collect()
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn both_modes_agree_and_preserve_order() {
        let seq = map_indexed(100, Mode::Sequential, |i| i * 3);
        let par = map_indexed(100, Mode::Parallel, |i| i * 3);
        assert_eq!(seq, par);
        assert_eq!(seq[7], 21);
    }
}
