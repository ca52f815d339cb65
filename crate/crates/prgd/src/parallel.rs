//! Monte Carlo fan-out over the core crate's chunk plan.

use std::env;

use prgd_core::validation::{chunk_plan, tv_ball, tv_chunk_hits, tv_estimate, MCEstimate};
use rayon::prelude::*;

/// Environment variable holding the Monte Carlo worker count.
pub const WORKERS_ENV: &str = "PRGD_WORKERS";

/// Worker count from [`WORKERS_ENV`]; 1 when unset or unparsable.
pub fn workers_from_env() -> usize {
    env::var(WORKERS_ENV)
        .ok()
        .and_then(|v| v.trim().parse::<usize>().ok())
        .filter(|&n| n >= 1)
        .unwrap_or(1)
}

/// Same result as `prgd_core::validation::mc_tv_distance` for any worker count.
pub fn mc_tv_distance(
    d: usize,
    delta_x: f64,
    radius: f64,
    samples: u64,
    seed: u64,
    workers: usize,
) -> prgd_core::Result<MCEstimate> {
    let ball = tv_ball(d, delta_x, radius, samples)?;
    let chunks: Vec<(u64, u64)> = chunk_plan(samples).collect();
    let count = |c: &[(u64, u64)]| -> u64 {
        c.iter()
            .map(|&(k, n)| tv_chunk_hits(&ball, delta_x, seed, k, n))
            .sum()
    };
    let hits = if workers <= 1 {
        count(&chunks)
    } else {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(workers)
            .build()
            .expect("failed to build Monte Carlo thread pool");
        pool.install(|| {
            chunks
                .par_iter()
                .map(|&(k, n)| tv_chunk_hits(&ball, delta_x, seed, k, n))
                .sum()
        })
    };
    Ok(tv_estimate(hits, samples, seed))
}
