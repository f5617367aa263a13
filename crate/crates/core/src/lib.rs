//! Fairness-aware re-ranking of scored candidates.
//!
//! Candidates are described only by a protected attribute value and a
//! relevance score. A [`RankingTask`] pairs per-attribute score pools with a
//! desired categorical distribution over attribute values; the re-rankers in
//! [`rerank`] produce a [`RankedList`] whose prefixes track that distribution,
//! and [`metrics`] quantifies how far any list strays from it.
//!
//! | Measure | Range | Meaning |
//! |---------|-------|---------|
//! | Skew@k | ℝ | ln of top-k share over desired share, per attribute |
//! | MinSkew@k / MaxSkew@k | ≤ 0 / ≥ 0 | worst disadvantage / largest advantage |
//! | NDKL | ≥ 0 | position-discounted KL divergence of every prefix |
//! | NDCG | (0, 1] | score utility against the global score order |
//! | InfeasibleIndex / Count | ℕ | prefixes / (attribute, prefix) pairs below floor quota |
//!
//! The crate is `no_std` and only needs `alloc`. File formats, the parallel
//! simulation driver and the command-line tool live in the `fairrank` crate.
//!
//! ```
//! use fairrank_core::{rerank::{rank, Algorithm}, metrics, TaskInput};
//!
//! let task = TaskInput::new(4)
//!     .attribute("a", 0.5, [0.9, 0.8])
//!     .attribute("b", 0.5, [0.7, 0.6])
//!     .validate()
//!     .unwrap();
//! let ranked = rank(&task, Algorithm::DetGreedy).unwrap();
//! assert_eq!(metrics::infeasible_index(&ranked, task.desired()).unwrap(), 0);
//! ```

#![no_std]

extern crate alloc;
#[cfg(test)]
extern crate std;

pub mod metrics;
pub mod model;
pub mod rerank;
pub mod sim;

pub use metrics::{MetricError, MetricsReport};
pub use model::{
    empirical_distribution, AttrId, DesiredDistribution, ModelError, PrefixCounts, RankedItem,
    RankedList, RankingTask, ScoredPool, TaskInput,
};
pub use rerank::{Algorithm, RankError};
