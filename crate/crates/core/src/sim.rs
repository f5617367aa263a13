//! Monte-Carlo kernels: random tasks, per-task evaluation and mean
//! aggregation.
//!
//! Work is cut into fixed-size blocks of tasks. Each block is evaluated in
//! task order and blocks are merged in block order, so the aggregate is
//! bit-identical however the blocks are scheduled. The parallel driver lives
//! in the `fairrank` crate; [`run_grid`] here is the sequential reference.
//!
//! Randomness comes from ChaCha8 keyed by the run seed. Every desired
//! distribution and every candidate pool gets its own ChaCha stream whose id
//! packs `(kind, num_attr, replication, distribution)`, so any task can be
//! regenerated in isolation.

use alloc::collections::BTreeMap;
use alloc::vec::Vec;
use core::ops::Range;

use rand::distr::Open01;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::metrics::{MetricError, MetricsReport};
use crate::model::{DesiredDistribution, RankingTask, ScoredPool};
use crate::rerank::{rank, Algorithm, RankError};

/// Tasks per aggregation block.
pub const BLOCK_SIZE: u64 = 256;

const MAX_NUM_ATTR: usize = (1 << 15) - 1;
const MAX_REPLICATIONS: u64 = 1 << 16;
const MAX_DISTRIBUTIONS: u64 = 1 << 32;

/// Invalid simulation parameters.
#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum ConfigError {
    #[error("attribute range {min}..={max} must satisfy 2 <= min <= max <= {MAX_NUM_ATTR}")]
    AttrRange { min: usize, max: usize },
    #[error("pool size {pool_size} x {attr_min} attributes is below k = {k_max}")]
    PoolTooSmall {
        pool_size: usize,
        attr_min: usize,
        k_max: usize,
    },
    #[error("{0} must be at least 1")]
    Zero(&'static str),
    #[error("{name} = {value} exceeds the limit {limit}")]
    TooLarge {
        name: &'static str,
        value: u64,
        limit: u64,
    },
    #[error("no algorithms selected")]
    NoAlgorithms,
}

/// Parameters of a simulation grid.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SimulationConfig {
    /// Smallest number of attribute values.
    pub attr_min: usize,
    /// Largest number of attribute values.
    pub attr_max: usize,
    /// Random desired distributions per attribute count.
    pub num_distributions: u64,
    /// Candidate pools drawn per distribution.
    pub replications: u64,
    /// Candidates per attribute value.
    pub pool_size: usize,
    /// Result length.
    pub k_max: usize,
    /// Algorithms to run on every task.
    pub algorithms: Vec<Algorithm>,
    /// Run seed.
    pub seed: u64,
}

impl Default for SimulationConfig {
    /// Desk scale: 1,000 distributions x 1 pool for 2 to 10 attributes,
    /// 100 candidates per attribute, lists of 100, every algorithm.
    fn default() -> Self {
        Self {
            attr_min: 2,
            attr_max: 10,
            num_distributions: 1_000,
            replications: 1,
            pool_size: 100,
            k_max: 100,
            algorithms: Algorithm::ALL.to_vec(),
            seed: 42,
        }
    }
}

impl SimulationConfig {
    /// Checks ranges and limits.
    pub fn validate(&self) -> Result<(), ConfigError> {
        if self.attr_min < 2 || self.attr_min > self.attr_max || self.attr_max > MAX_NUM_ATTR {
            return Err(ConfigError::AttrRange {
                min: self.attr_min,
                max: self.attr_max,
            });
        }
        if self.num_distributions == 0 {
            return Err(ConfigError::Zero("num_distributions"));
        }
        if self.replications == 0 {
            return Err(ConfigError::Zero("replications"));
        }
        if self.pool_size == 0 {
            return Err(ConfigError::Zero("pool_size"));
        }
        if self.k_max == 0 {
            return Err(ConfigError::Zero("k"));
        }
        if self.num_distributions > MAX_DISTRIBUTIONS {
            return Err(ConfigError::TooLarge {
                name: "num_distributions",
                value: self.num_distributions,
                limit: MAX_DISTRIBUTIONS,
            });
        }
        if self.replications > MAX_REPLICATIONS {
            return Err(ConfigError::TooLarge {
                name: "replications",
                value: self.replications,
                limit: MAX_REPLICATIONS,
            });
        }
        if self.pool_size.saturating_mul(self.attr_min) < self.k_max {
            return Err(ConfigError::PoolTooSmall {
                pool_size: self.pool_size,
                attr_min: self.attr_min,
                k_max: self.k_max,
            });
        }
        if self.algorithms.is_empty() {
            return Err(ConfigError::NoAlgorithms);
        }
        Ok(())
    }

    /// Tasks generated for each attribute count.
    pub fn tasks_per_attr(&self) -> u64 {
        self.num_distributions * self.replications
    }

    /// Algorithms deduplicated, in [`Algorithm`] declaration order.
    pub fn algorithm_set(&self) -> Vec<Algorithm> {
        let mut algos = self.algorithms.clone();
        algos.sort();
        algos.dedup();
        algos
    }

    /// The work split into `(num_attr, task range)` blocks, in merge order.
    pub fn blocks(&self) -> Vec<(usize, Range<u64>)> {
        let total = self.tasks_per_attr();
        let mut out = Vec::new();
        for num_attr in self.attr_min..=self.attr_max {
            let mut start = 0;
            while start < total {
                let end = (start + BLOCK_SIZE).min(total);
                out.push((num_attr, start..end));
                start = end;
            }
        }
        out
    }
}

/// Which kind of draw a stream feeds.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StreamKind {
    /// A desired distribution, shared by all replications.
    Desired,
    /// One replication's candidate pools.
    Pool,
}

/// ChaCha stream id for one draw.
pub fn stream_id(kind: StreamKind, num_attr: usize, distribution: u64, replication: u64) -> u64 {
    let kind_bit = match kind {
        StreamKind::Desired => 0,
        StreamKind::Pool => 1u64 << 63,
    };
    kind_bit
        | ((num_attr as u64 & 0x7fff) << 48)
        | ((replication & 0xffff) << 32)
        | (distribution & 0xffff_ffff)
}

/// Generator for one stream under `seed`.
pub fn stream_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// `num_attr` i.i.d. uniform (0, 1) draws, normalized to sum to one.
pub fn gen_desired<R: Rng + ?Sized>(num_attr: usize, rng: &mut R) -> DesiredDistribution {
    let draws: Vec<f64> = (0..num_attr).map(|_| rng.sample(Open01)).collect();
    let sum: f64 = draws.iter().sum();
    DesiredDistribution::new(draws.into_iter().map(|x| x / sum).collect())
        .expect("normalized positive draws form a distribution")
}

/// `pool_size` i.i.d. uniform (0, 1) scores per attribute, sorted descending.
pub fn gen_pool<R: Rng + ?Sized>(num_attr: usize, pool_size: usize, rng: &mut R) -> ScoredPool {
    let lists = (0..num_attr)
        .map(|_| {
            let mut scores: Vec<f64> = (0..pool_size).map(|_| rng.sample(Open01)).collect();
            scores.sort_by(|a, b| b.total_cmp(a));
            scores
        })
        .collect();
    ScoredPool::new(lists).expect("sorted finite scores")
}

/// Regenerates task `(num_attr, distribution, replication)` of a grid.
pub fn build_task(
    config: &SimulationConfig,
    num_attr: usize,
    distribution: u64,
    replication: u64,
) -> RankingTask {
    let mut rng = stream_rng(
        config.seed,
        stream_id(StreamKind::Desired, num_attr, distribution, 0),
    );
    let desired = gen_desired(num_attr, &mut rng);
    let mut rng = stream_rng(
        config.seed,
        stream_id(StreamKind::Pool, num_attr, distribution, replication),
    );
    let pool = gen_pool(num_attr, config.pool_size, &mut rng);
    RankingTask::new(desired, pool, config.k_max).expect("config validated")
}

/// Why a task was left out of an aggregate.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum TaskError {
    #[error(transparent)]
    Rank(#[from] RankError),
    #[error(transparent)]
    Metric(#[from] MetricError),
}

/// Ranks `task` with each algorithm and measures the result at `k_max`
/// against the task's own desired distribution and merged pool.
pub fn run_task(
    task: &RankingTask,
    algorithms: &[Algorithm],
) -> Vec<(Algorithm, Result<MetricsReport, TaskError>)> {
    let ideal = task.ideal_scores();
    algorithms
        .iter()
        .map(|&algo| {
            let report = rank(task, algo).map_err(TaskError::from).and_then(|list| {
                MetricsReport::evaluate(&list, task.desired(), &ideal, Some(task.k_max()))
                    .map_err(TaskError::from)
            });
            (algo, report)
        })
        .collect()
}

/// Streaming arithmetic mean with an order-sensitive but deterministic merge.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct Mean {
    n: u64,
    mean: f64,
}

impl Mean {
    /// Adds one observation.
    pub fn push(&mut self, x: f64) {
        self.n += 1;
        self.mean += (x - self.mean) / self.n as f64;
    }

    /// Folds `other` into `self`.
    pub fn merge(&mut self, other: &Mean) {
        if other.n == 0 {
            return;
        }
        let n = self.n + other.n;
        self.mean += (other.mean - self.mean) * (other.n as f64 / n as f64);
        self.n = n;
    }

    /// Observations so far.
    pub fn count(&self) -> u64 {
        self.n
    }

    /// Current mean, NaN when empty.
    pub fn value(&self) -> f64 {
        if self.n == 0 {
            f64::NAN
        } else {
            self.mean
        }
    }
}

/// Running means of one (attribute count, algorithm) cell.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct CellStats {
    /// Mean InfeasibleIndex.
    pub infeasible_index: Mean,
    /// Mean InfeasibleCount.
    pub infeasible_count: Mean,
    /// Mean MinSkew@k.
    pub min_skew: Mean,
    /// Mean MaxSkew@k.
    pub max_skew: Mean,
    /// Mean NDKL.
    pub ndkl: Mean,
    /// Mean NDCG@k.
    pub ndcg: Mean,
    /// Tasks whose ranking or measurement failed.
    pub excluded: u64,
    /// First failure seen, for diagnostics.
    pub first_error: Option<TaskError>,
}

impl CellStats {
    /// Adds one task outcome.
    pub fn record(&mut self, outcome: &Result<MetricsReport, TaskError>) {
        match outcome {
            Ok(r) => {
                self.infeasible_index.push(r.infeasible_index as f64);
                self.infeasible_count.push(r.infeasible_count as f64);
                self.min_skew.push(r.min_skew);
                self.max_skew.push(r.max_skew);
                self.ndkl.push(r.ndkl);
                self.ndcg.push(r.ndcg);
            }
            Err(e) => {
                self.excluded += 1;
                if self.first_error.is_none() {
                    self.first_error = Some(e.clone());
                }
            }
        }
    }

    /// Folds `other` into `self`.
    pub fn merge(&mut self, other: &CellStats) {
        self.infeasible_index.merge(&other.infeasible_index);
        self.infeasible_count.merge(&other.infeasible_count);
        self.min_skew.merge(&other.min_skew);
        self.max_skew.merge(&other.max_skew);
        self.ndkl.merge(&other.ndkl);
        self.ndcg.merge(&other.ndcg);
        self.excluded += other.excluded;
        if self.first_error.is_none() {
            self.first_error = other.first_error.clone();
        }
    }
}

/// Cell statistics keyed by `(num_attr, algorithm)`.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Aggregate {
    cells: BTreeMap<(usize, Algorithm), CellStats>,
}

impl Aggregate {
    /// Records every algorithm's outcome on one task.
    pub fn record(
        &mut self,
        num_attr: usize,
        results: &[(Algorithm, Result<MetricsReport, TaskError>)],
    ) {
        for (algo, outcome) in results {
            self.cells
                .entry((num_attr, *algo))
                .or_default()
                .record(outcome);
        }
    }

    /// Folds `other` into `self`, cell by cell.
    pub fn merge(&mut self, other: &Aggregate) {
        for (key, cell) in &other.cells {
            self.cells.entry(*key).or_default().merge(cell);
        }
    }

    /// Cells in `(num_attr, algorithm)` order.
    pub fn cells(&self) -> impl Iterator<Item = (&(usize, Algorithm), &CellStats)> {
        self.cells.iter()
    }

    /// One row per cell, sorted by `(num_attr, algorithm)`.
    pub fn rows(&self) -> Vec<AggregateRow> {
        self.cells
            .iter()
            .map(|(&(num_attr, algorithm), c)| AggregateRow {
                num_attr,
                algorithm,
                mean_infeasible_index: c.infeasible_index.value(),
                mean_infeasible_count: c.infeasible_count.value(),
                mean_min_skew: c.min_skew.value(),
                mean_max_skew: c.max_skew.value(),
                mean_ndkl: c.ndkl.value(),
                mean_ndcg: c.ndcg.value(),
                task_count: c.ndcg.count(),
            })
            .collect()
    }
}

/// Means for one (attribute count, algorithm) pair over `task_count` tasks.
#[derive(Debug, Clone, PartialEq)]
pub struct AggregateRow {
    /// Number of attribute values.
    pub num_attr: usize,
    /// Ranking algorithm.
    pub algorithm: Algorithm,
    /// Mean InfeasibleIndex.
    pub mean_infeasible_index: f64,
    /// Mean InfeasibleCount.
    pub mean_infeasible_count: f64,
    /// Mean MinSkew@k.
    pub mean_min_skew: f64,
    /// Mean MaxSkew@k.
    pub mean_max_skew: f64,
    /// Mean NDKL.
    pub mean_ndkl: f64,
    /// Mean NDCG@k.
    pub mean_ndcg: f64,
    /// Tasks averaged.
    pub task_count: u64,
}

/// Evaluates the tasks in `range` for `num_attr`, in order.
pub fn run_block(config: &SimulationConfig, num_attr: usize, range: Range<u64>) -> Aggregate {
    let algorithms = config.algorithm_set();
    let mut agg = Aggregate::default();
    for t in range {
        let task = build_task(
            config,
            num_attr,
            t / config.replications,
            t % config.replications,
        );
        agg.record(num_attr, &run_task(&task, &algorithms));
    }
    agg
}

/// Merges block aggregates in the order given.
pub fn merge_blocks<'a>(blocks: impl IntoIterator<Item = &'a Aggregate>) -> Aggregate {
    let mut total = Aggregate::default();
    for b in blocks {
        total.merge(b);
    }
    total
}

/// Sequential grid run.
pub fn run_grid(config: &SimulationConfig) -> Result<Aggregate, ConfigError> {
    config.validate()?;
    let blocks: Vec<Aggregate> = config
        .blocks()
        .into_iter()
        .map(|(num_attr, range)| run_block(config, num_attr, range))
        .collect();
    Ok(merge_blocks(&blocks))
}
