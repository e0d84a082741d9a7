use rayon::prelude::*;
use rayon::ThreadPool;

use raptor_core::train::Executor;

use crate::error::{Error, Result};

/// Executor backed by a dedicated rayon pool. Results come back in index
/// order, so output does not depend on the worker count.
pub struct Pool {
    pool: ThreadPool,
}

impl Pool {
    /// `workers == 0` lets rayon pick the number of threads.
    pub fn new(workers: usize) -> Result<Self> {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(workers)
            .build()
            .map_err(|e| Error::Domain(format!("cannot start worker pool: {e}")))?;
        Ok(Self { pool })
    }

    pub fn workers(&self) -> usize {
        self.pool.current_num_threads()
    }
}

impl Executor for Pool {
    fn map<T, F>(&self, n: usize, f: F) -> Vec<T>
    where
        T: Send,
        F: Fn(usize) -> T + Sync + Send,
    {
        self.pool.install(|| (0..n).into_par_iter().map(f).collect())
    }
}
