use livsic_core::rng::{self, Rng};
use rayon::prelude::*;

use crate::error::LabError;

/// Environment variable holding the worker count.
pub const WORKERS_VAR: &str = "LIVSIC_LAB_WORKERS";

pub fn workers_from_env() -> Result<usize, LabError> {
    match std::env::var(WORKERS_VAR) {
        Ok(s) => match s.trim().parse::<usize>() {
            Ok(n) if n >= 1 => Ok(n),
            _ => Err(LabError::config(WORKERS_VAR, format!("expected a positive integer, got `{s}`"))),
        },
        Err(_) => Ok(std::thread::available_parallelism().map(|n| n.get()).unwrap_or(1)),
    }
}

/// Trials run on a private thread pool; each draws from its own stream and
/// results come back in trial order.
pub struct Pool {
    pool: rayon::ThreadPool,
    workers: usize,
    seed: u64,
}

impl Pool {
    pub fn new(workers: usize, seed: u64) -> Result<Self, LabError> {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(workers.max(1))
            .build()
            .map_err(|e| LabError::Numeric(format!("thread pool: {e}")))?;
        Ok(Self { pool, workers: workers.max(1), seed })
    }

    pub fn workers(&self) -> usize {
        self.workers
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    /// Stream for a named task, disjoint from trial streams.
    pub fn aux_rng(&self, tag: u64) -> Rng {
        rng::stream(self.seed, (1u64 << 63) | tag)
    }

    /// `f(i, rng_i)` for `i` in `0..n`, in order; the first error by index wins.
    pub fn trials<T, F>(&self, n: usize, f: F) -> Result<Vec<T>, LabError>
    where
        T: Send,
        F: Fn(usize, &mut Rng) -> Result<T, LabError> + Sync,
    {
        self.trials_on(0, n, f)
    }

    /// Like [`Pool::trials`] with streams offset by `block << 32`, so separate
    /// suites in one run do not share streams.
    pub fn trials_on<T, F>(&self, block: u64, n: usize, f: F) -> Result<Vec<T>, LabError>
    where
        T: Send,
        F: Fn(usize, &mut Rng) -> Result<T, LabError> + Sync,
    {
        let seed = self.seed;
        let out: Vec<Result<T, LabError>> = self.pool.install(|| {
            (0..n)
                .into_par_iter()
                .map(|i| {
                    let mut r = rng::stream(seed, (block << 32) | i as u64);
                    f(i, &mut r)
                })
                .collect()
        });
        out.into_iter().collect()
    }
}
