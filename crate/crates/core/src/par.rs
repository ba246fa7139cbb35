//! Data-parallel helpers with a sequential fallback.
//!
//! With the `parallel` feature (default) [`Exec::Parallel`] dispatches to
//! rayon; without it every call runs sequentially. Results are returned in
//! input order either way, so callers stay deterministic.

#[cfg(feature = "parallel")]
use rayon::prelude::*;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Exec {
    Sequential,
    Parallel,
}

impl Default for Exec {
    fn default() -> Self {
        if cfg!(feature = "parallel") {
            Exec::Parallel
        } else {
            Exec::Sequential
        }
    }
}

pub fn map<T, R, F>(exec: Exec, items: Vec<T>, f: F) -> Vec<R>
where
    T: Send,
    R: Send,
    F: Fn(T) -> R + Sync + Send,
{
    match exec {
        #[cfg(feature = "parallel")]
        Exec::Parallel => items.into_par_iter().map(f).collect(),
        _ => items.into_iter().map(f).collect(),
    }
}

/// Map over `0..n`, keeping the `Some` results in order.
pub fn filter_map_range<R, F>(exec: Exec, n: u64, f: F) -> Vec<R>
where
    R: Send,
    F: Fn(u64) -> Option<R> + Sync + Send,
{
    match exec {
        #[cfg(feature = "parallel")]
        Exec::Parallel => (0..n).into_par_iter().filter_map(f).collect(),
        _ => (0..n).filter_map(f).collect(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn both_modes_agree_and_keep_order() {
        let seq = filter_map_range(Exec::Sequential, 1000, |x| (x % 7 == 0).then_some(x * 2));
        let par = filter_map_range(Exec::Parallel, 1000, |x| (x % 7 == 0).then_some(x * 2));
        assert_eq!(seq, par);
        let m = map(Exec::Parallel, (0..50).collect::<Vec<u32>>(), |x| x + 1);
        assert_eq!(m, (1..51).collect::<Vec<u32>>());
    }
}
