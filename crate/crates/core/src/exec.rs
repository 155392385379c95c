//! Per-dialog work scheduling: a rayon pool when the `parallel` feature is on,
//! a plain loop otherwise. Results always come back in index order, so output
//! does not depend on the schedule.

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Execution {
    Sequential,
    #[default]
    Parallel,
}

pub struct Executor {
    mode: Execution,
    #[cfg(feature = "parallel")]
    pool: Option<rayon::ThreadPool>,
    workers: usize,
}

impl std::fmt::Debug for Executor {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Executor")
            .field("mode", &self.mode)
            .field("workers", &self.workers)
            .finish()
    }
}

impl Executor {
    /// `workers` caps concurrency; `None` uses one worker per core.
    pub fn new(mode: Execution, workers: Option<usize>) -> Self {
        #[cfg(feature = "parallel")]
        {
            if mode == Execution::Parallel {
                let pool = workers.and_then(|w| {
                    rayon::ThreadPoolBuilder::new()
                        .num_threads(w.max(1))
                        .build()
                        .map_err(|e| tracing::warn!("falling back to the global pool: {e}"))
                        .ok()
                });
                let workers = pool
                    .as_ref()
                    .map_or_else(rayon::current_num_threads, rayon::ThreadPool::current_num_threads);
                return Self { mode, pool, workers };
            }
            Self { mode: Execution::Sequential, pool: None, workers: 1 }
        }
        #[cfg(not(feature = "parallel"))]
        {
            let _ = (mode, workers);
            Self { mode: Execution::Sequential, workers: 1 }
        }
    }

    pub fn sequential() -> Self {
        Self::new(Execution::Sequential, None)
    }

    pub fn parallel(workers: Option<usize>) -> Self {
        Self::new(Execution::Parallel, workers)
    }

    /// The mode actually in effect; always sequential without the feature.
    pub fn mode(&self) -> Execution {
        self.mode
    }

    pub fn workers(&self) -> usize {
        self.workers
    }

    /// `f(0..n)` in index order.
    pub fn map<R, F>(&self, n: usize, f: F) -> Vec<R>
    where
        R: Send,
        F: Fn(usize) -> R + Sync + Send,
    {
        self.map_range(0, n, &f)
    }

    fn map_range<R, F>(&self, start: usize, end: usize, f: &F) -> Vec<R>
    where
        R: Send,
        F: Fn(usize) -> R + Sync + Send,
    {
        #[cfg(feature = "parallel")]
        if self.mode == Execution::Parallel {
            use rayon::prelude::*;
            let run = || (start..end).into_par_iter().map(f).collect();
            return match &self.pool {
                Some(pool) => pool.install(run),
                None => run(),
            };
        }
        (start..end).map(f).collect()
    }

    /// Computes `f(0..n)` in bounded chunks and hands each result to `sink`
    /// in index order as soon as its chunk is done. `sink` runs on the
    /// calling thread only.
    pub fn for_each_ordered<R, F, E>(&self, n: usize, f: F, mut sink: impl FnMut(usize, R) -> Result<(), E>) -> Result<(), E>
    where
        R: Send,
        F: Fn(usize) -> R + Sync + Send,
    {
        let chunk = (self.workers * 4).max(1);
        let mut start = 0;
        while start < n {
            let end = (start + chunk).min(n);
            for (k, r) in self.map_range(start, end, &f).into_iter().enumerate() {
                sink(start + k, r)?;
            }
            start = end;
        }
        Ok(())
    }
}

impl Default for Executor {
    fn default() -> Self {
        Self::parallel(None)
    }
}
