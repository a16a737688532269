//! Data-parallel map over realization indices.
//!
//! With the `parallel` feature (default) work is spread with rayon; without
//! it every strategy runs sequentially. Output order always follows the
//! index order.

use std::ops::Range;

use serde::{Deserialize, Serialize};

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Execution {
    Sequential,
    /// `threads = None` uses the global rayon pool.
    #[default]
    Parallel,
    ParallelWith {
        threads: usize,
    },
}

impl Execution {
    pub fn with_threads(threads: Option<usize>) -> Self {
        match threads {
            Some(1) => Execution::Sequential,
            Some(t) => Execution::ParallelWith { threads: t },
            None => Execution::Parallel,
        }
    }

    pub fn map<T, F>(self, range: Range<u64>, f: F) -> Vec<T>
    where
        T: Send,
        F: Fn(u64) -> T + Sync + Send,
    {
        match self {
            Execution::Sequential => range.map(f).collect(),
            Execution::Parallel => parallel_map(range, f),
            Execution::ParallelWith { threads } => with_pool(threads, || parallel_map(range, f)),
        }
    }
}

#[cfg(feature = "parallel")]
fn parallel_map<T, F>(range: Range<u64>, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(u64) -> T + Sync + Send,
{
    use rayon::prelude::*;
    range.into_par_iter().map(f).collect()
}

#[cfg(not(feature = "parallel"))]
fn parallel_map<T, F>(range: Range<u64>, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(u64) -> T + Sync + Send,
{
    range.map(f).collect()
}

#[cfg(feature = "parallel")]
fn with_pool<T: Send>(threads: usize, job: impl FnOnce() -> T + Send) -> T {
    match rayon::ThreadPoolBuilder::new().num_threads(threads).build() {
        Ok(pool) => pool.install(job),
        Err(e) => {
            log::warn!("could not build a {threads}-thread pool ({e}); using the global pool");
            job()
        }
    }
}

#[cfg(not(feature = "parallel"))]
fn with_pool<T: Send>(_threads: usize, job: impl FnOnce() -> T + Send) -> T {
    job()
}
