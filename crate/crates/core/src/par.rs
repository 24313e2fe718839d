//! Data-parallel helpers. Results always come back in input order, so every
//! reduction downstream sees the same sequence regardless of scheduling.

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum Parallelism {
    Sequential,
    /// Worker count; 0 means one per available core.
    Threads(usize),
    #[default]
    Auto,
}

impl Parallelism {
    pub fn from_threads(n: usize) -> Self {
        match n {
            1 => Parallelism::Sequential,
            n => Parallelism::Threads(n),
        }
    }
}

/// Ordered map over `items`.
#[cfg(feature = "parallel")]
pub fn map<T, R, F>(par: Parallelism, items: &[T], f: F) -> Vec<R>
where
    T: Sync,
    R: Send,
    F: Fn(&T) -> R + Sync + Send,
{
    use rayon::prelude::*;
    match par {
        Parallelism::Sequential => items.iter().map(f).collect(),
        // nested call: reuse the pool we are already running on
        _ if rayon::current_thread_index().is_some() => items.par_iter().map(f).collect(),
        Parallelism::Auto => items.par_iter().map(f).collect(),
        Parallelism::Threads(n) => match rayon::ThreadPoolBuilder::new().num_threads(n).build() {
            Ok(pool) => pool.install(|| items.par_iter().map(f).collect()),
            Err(_) => items.iter().map(f).collect(),
        },
    }
}

#[cfg(not(feature = "parallel"))]
pub fn map<T, R, F>(_par: Parallelism, items: &[T], f: F) -> Vec<R>
where
    T: Sync,
    R: Send,
    F: Fn(&T) -> R + Sync + Send,
{
    items.iter().map(f).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn order_is_preserved() {
        let xs: Vec<u64> = (0..1000).collect();
        for par in [Parallelism::Sequential, Parallelism::Threads(4), Parallelism::Auto] {
            let out = map(par, &xs, |x| x * x);
            assert_eq!(out, xs.iter().map(|x| x * x).collect::<Vec<_>>());
        }
    }
}
