//! Rayon-backed task fan-out.

use ptrnet_ea_core::evolution::TaskPool;

/// Runs tasks on a dedicated rayon pool with a fixed thread count. Results
/// come back in task order, so any thread count produces identical output.
pub struct RayonPool {
    pool: rayon::ThreadPool,
}

impl RayonPool {
    /// `threads = 0` means one thread per available core.
    pub fn new(threads: usize) -> Self {
        let builder = rayon::ThreadPoolBuilder::new();
        let builder = if threads > 0 { builder.num_threads(threads) } else { builder };
        RayonPool { pool: builder.build().expect("building a thread pool cannot fail here") }
    }

    pub fn threads(&self) -> usize {
        self.pool.current_num_threads()
    }
}

impl TaskPool for RayonPool {
    fn run<T, F>(&self, count: usize, task: F) -> Vec<T>
    where
        T: Send,
        F: Fn(usize) -> T + Send + Sync,
    {
        use rayon::prelude::*;
        self.pool.install(|| (0..count).into_par_iter().map(task).collect())
    }
}
