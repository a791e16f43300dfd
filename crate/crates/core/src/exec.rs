//! Data-parallel execution with a sequential fallback.
//!
//! With the `parallel` feature (on by default) index maps run on a rayon
//! pool; otherwise, or when [`Exec::Sequential`] is requested, they run on
//! the calling thread. Both paths produce identical output order.

use serde::{Deserialize, Serialize};

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Exec {
    Sequential,
    /// Parallel over the global pool, or a dedicated pool of `workers`
    /// threads when given.
    #[default]
    Parallel,
    Workers(usize),
}

impl Exec {
    pub fn from_workers(workers: Option<usize>) -> Self {
        match workers {
            None => Exec::Parallel,
            Some(0) | Some(1) => Exec::Sequential,
            Some(n) => Exec::Workers(n),
        }
    }

    /// `(0..n).map(f).collect()`, possibly in parallel.
    pub fn map<T, F>(&self, n: usize, f: F) -> Vec<T>
    where
        T: Send,
        F: Fn(usize) -> T + Sync + Send,
    {
        match self {
            Exec::Sequential => (0..n).map(f).collect(),
            #[cfg(feature = "parallel")]
            Exec::Parallel => {
                use rayon::prelude::*;
                (0..n).into_par_iter().map(f).collect()
            }
            #[cfg(feature = "parallel")]
            Exec::Workers(workers) => {
                use rayon::prelude::*;
                match rayon::ThreadPoolBuilder::new().num_threads(*workers).build() {
                    Ok(pool) => pool.install(|| (0..n).into_par_iter().map(f).collect()),
                    Err(_) => (0..n).map(f).collect(),
                }
            }
            #[cfg(not(feature = "parallel"))]
            _ => (0..n).map(f).collect(),
        }
    }

    /// Fill `out` in chunks of `width` values per index.
    pub fn fill_chunks<F>(&self, out: &mut [f64], width: usize, f: F)
    where
        F: Fn(usize, &mut [f64]) + Sync + Send,
    {
        match self {
            Exec::Sequential => out.chunks_mut(width).enumerate().for_each(|(i, c)| f(i, c)),
            #[cfg(feature = "parallel")]
            Exec::Parallel => {
                use rayon::prelude::*;
                out.par_chunks_mut(width).enumerate().for_each(|(i, c)| f(i, c))
            }
            #[cfg(feature = "parallel")]
            Exec::Workers(workers) => {
                use rayon::prelude::*;
                match rayon::ThreadPoolBuilder::new().num_threads(*workers).build() {
                    Ok(pool) => pool.install(|| out.par_chunks_mut(width).enumerate().for_each(|(i, c)| f(i, c))),
                    Err(_) => out.chunks_mut(width).enumerate().for_each(|(i, c)| f(i, c)),
                }
            }
            #[cfg(not(feature = "parallel"))]
            _ => out.chunks_mut(width).enumerate().for_each(|(i, c)| f(i, c)),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn paths_agree() {
        let f = |i: usize| (i as f64).sin();
        let a = Exec::Sequential.map(1000, f);
        let b = Exec::Parallel.map(1000, f);
        let c = Exec::Workers(3).map(1000, f);
        assert_eq!(a, b);
        assert_eq!(a, c);
        let mut x = vec![0.0; 30];
        let mut y = vec![0.0; 30];
        Exec::Sequential.fill_chunks(&mut x, 3, |i, c| c.iter_mut().enumerate().for_each(|(j, v)| *v = (i * 3 + j) as f64));
        Exec::Parallel.fill_chunks(&mut y, 3, |i, c| c.iter_mut().enumerate().for_each(|(j, v)| *v = (i * 3 + j) as f64));
        assert_eq!(x, y);
    }
}
