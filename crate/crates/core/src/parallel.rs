//! Fan-out of independent solves (scenario subproblems, per-generator
//! pricing). Results always come back in input order.

/// How independent work items are executed.
#[derive(Clone)]
pub struct Executor {
    #[cfg(feature = "parallel")]
    pool: Option<std::sync::Arc<rayon::ThreadPool>>,
}

impl std::fmt::Debug for Executor {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "Executor({} workers)", self.workers())
    }
}

impl Default for Executor {
    fn default() -> Self {
        Executor::sequential()
    }
}

impl Executor {
    pub fn sequential() -> Self {
        Executor {
            #[cfg(feature = "parallel")]
            pool: None,
        }
    }

    /// `workers == 0` uses one worker per available core. Without the
    /// `parallel` feature this is always sequential.
    pub fn with_workers(workers: usize) -> Self {
        #[cfg(feature = "parallel")]
        {
            let n = if workers == 0 {
                std::thread::available_parallelism().map_or(1, |n| n.get())
            } else {
                workers
            };
            if n <= 1 {
                return Executor::sequential();
            }
            match rayon::ThreadPoolBuilder::new().num_threads(n).build() {
                Ok(pool) => Executor {
                    pool: Some(std::sync::Arc::new(pool)),
                },
                Err(e) => {
                    log::warn!("falling back to sequential execution: {e}");
                    Executor::sequential()
                }
            }
        }
        #[cfg(not(feature = "parallel"))]
        {
            let _ = workers;
            Executor::sequential()
        }
    }

    pub fn workers(&self) -> usize {
        #[cfg(feature = "parallel")]
        if let Some(pool) = &self.pool {
            return pool.current_num_threads();
        }
        1
    }

    /// Applies `f` to every index in `0..n`, returning results in index order.
    pub fn map<R, F>(&self, n: usize, f: F) -> Vec<R>
    where
        R: Send,
        F: Fn(usize) -> R + Sync + Send,
    {
        #[cfg(feature = "parallel")]
        if let Some(pool) = &self.pool {
            use rayon::prelude::*;
            return pool.install(|| (0..n).into_par_iter().map(&f).collect());
        }
        (0..n).map(f).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn order_is_preserved() {
        for exec in [Executor::sequential(), Executor::with_workers(4)] {
            let out = exec.map(100, |i| i * i);
            assert_eq!(out, (0..100).map(|i| i * i).collect::<Vec<_>>());
        }
    }
}
