//! Parallel simulation grid.
//!
//! Blocks run on a dedicated rayon pool and are merged in block order, so
//! the aggregate matches [`fairrank_core::sim::run_grid`] bit for bit for
//! any number of workers.

use fairrank_core::sim::{merge_blocks, run_block, Aggregate, ConfigError, SimulationConfig};
use rayon::prelude::*;

/// Runs the grid on `jobs` worker threads.
pub fn run_grid(config: &SimulationConfig, jobs: usize) -> Result<Aggregate, ConfigError> {
    config.validate()?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs.max(1))
        .build()
        .expect("thread pool");
    let blocks: Vec<Aggregate> = pool.install(|| {
        config
            .blocks()
            .into_par_iter()
            .map(|(num_attr, range)| run_block(config, num_attr, range))
            .collect()
    });
    Ok(merge_blocks(&blocks))
}
