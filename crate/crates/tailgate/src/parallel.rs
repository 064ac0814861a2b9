use rayon::prelude::*;
use rayon::ThreadPool;
use tailgate_core::ensemble::Executor;

/// Environment variable capping the number of worker threads.
pub const THREADS_ENV: &str = "TAILGATE_THREADS";

/// Runs ensemble members on a rayon pool. Output order is the index order,
/// so results match [`tailgate_core::ensemble::Serial`] bit for bit.
pub struct Rayon {
    pool: Option<ThreadPool>,
}

impl Rayon {
    /// Global pool, or a private one capped by `TAILGATE_THREADS` when set.
    pub fn from_env() -> Self {
        let threads = std::env::var(THREADS_ENV)
            .ok()
            .and_then(|v| v.parse::<usize>().ok())
            .filter(|&n| n > 0);
        Rayon::with_threads(threads)
    }

    /// `None` uses the global pool.
    pub fn with_threads(threads: Option<usize>) -> Self {
        let pool = threads.and_then(|n| rayon::ThreadPoolBuilder::new().num_threads(n).build().ok());
        Rayon { pool }
    }
}

impl Executor for Rayon {
    fn map<T, F>(&self, n: usize, f: F) -> Vec<T>
    where
        T: Send,
        F: Fn(usize) -> T + Sync + Send,
    {
        let run = || (0..n).into_par_iter().map(&f).collect();
        match &self.pool {
            Some(pool) => pool.install(run),
            None => run(),
        }
    }
}
