//! Re-ranking algorithms.
//!
//! Every algorithm consumes each attribute's pool from the top, so within
//! one attribute the emitted scores never increase. Equal scores across
//! attributes go to the lower attribute index.

use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;
use core::fmt;
use core::str::FromStr;

use crate::model::{AttrId, RankedList, RankingTask, ScoredPool};

mod const_sort;
mod greedy;

pub use const_sort::rank_det_const_sort_with;
pub use greedy::{rank_det_cons_with, rank_det_greedy_with, rank_det_relaxed_with};

/// Closed set of ranking strategies.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Algorithm {
    /// Pure descending score order.
    Vanilla,
    /// Floor quota first, otherwise best score below ceiling.
    DetGreedy,
    /// Floor quota first, otherwise the attribute whose floor binds soonest.
    DetCons,
    /// Like [`Algorithm::DetCons`] on integer positions, ties by score.
    DetRelaxed,
    /// Insert on floor increase, then bubble forward within max-index limits.
    DetConstSort,
}

impl Algorithm {
    /// All algorithms in declaration order.
    pub const ALL: [Algorithm; 5] = [
        Algorithm::Vanilla,
        Algorithm::DetGreedy,
        Algorithm::DetCons,
        Algorithm::DetRelaxed,
        Algorithm::DetConstSort,
    ];

    /// Lower-case name used on the command line and in CSV output.
    pub fn name(self) -> &'static str {
        match self {
            Algorithm::Vanilla => "vanilla",
            Algorithm::DetGreedy => "detgreedy",
            Algorithm::DetCons => "detcons",
            Algorithm::DetRelaxed => "detrelaxed",
            Algorithm::DetConstSort => "detconstsort",
        }
    }

    /// Whether the algorithm tries to meet the desired distribution.
    pub fn is_fairness_aware(self) -> bool {
        self != Algorithm::Vanilla
    }
}

impl fmt::Display for Algorithm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Algorithm {
    type Err = RankError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let lower = s.trim().to_ascii_lowercase();
        Algorithm::ALL
            .into_iter()
            .find(|a| a.name() == lower)
            .ok_or_else(|| RankError::UnknownAlgorithm(s.into()))
    }
}

/// Errors raised while ranking.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum RankError {
    #[error("attribute {attr} has no candidates left for position {position}")]
    InsufficientCandidates { attr: AttrId, position: usize },
    #[error("no attribute is eligible at position {position}")]
    EmptyCandidateSets { position: usize },
    #[error("unknown algorithm {0:?}")]
    UnknownAlgorithm(String),
}

/// Knobs shared by all algorithms.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct RerankOptions {
    /// When the chosen attribute is exhausted, pick the next-best attribute
    /// under the same rule instead of failing.
    pub fallback: bool,
}

/// Output of a ranking run.
#[derive(Debug, Clone, PartialEq)]
pub struct Reranked {
    /// The ranked result.
    pub list: RankedList,
    /// Positions where the fallback substituted another attribute.
    pub fallback_events: usize,
}

/// Ranks `task` with `algorithm`, failing on pool exhaustion.
pub fn rank(task: &RankingTask, algorithm: Algorithm) -> Result<RankedList, RankError> {
    rank_with(task, algorithm, RerankOptions::default()).map(|r| r.list)
}

/// Ranks `task` with `algorithm` under `options`.
pub fn rank_with(
    task: &RankingTask,
    algorithm: Algorithm,
    options: RerankOptions,
) -> Result<Reranked, RankError> {
    match algorithm {
        Algorithm::Vanilla => rank_vanilla(task).map(|list| Reranked {
            list,
            fallback_events: 0,
        }),
        Algorithm::DetGreedy => rank_det_greedy_with(task, options),
        Algorithm::DetCons => rank_det_cons_with(task, options),
        Algorithm::DetRelaxed => rank_det_relaxed_with(task, options),
        Algorithm::DetConstSort => rank_det_const_sort_with(task, options),
    }
}

/// Global merge of all pools by descending score, truncated to `k_max`.
pub fn rank_vanilla(task: &RankingTask) -> Result<RankedList, RankError> {
    let mut cursor = Cursor::new(task.pool());
    let mut out = RankedList::with_capacity(task.k_max());
    for position in 1..=task.k_max() {
        let attr = cursor
            .best_of((0..task.num_attrs()).map(AttrId))
            .filter(|&a| cursor.peek(a).is_some())
            .ok_or(RankError::EmptyCandidateSets { position })?;
        let score = cursor.take(attr);
        out.push(attr, score);
    }
    Ok(out)
}

/// Ranks with [`Algorithm::DetGreedy`].
pub fn rank_det_greedy(task: &RankingTask) -> Result<RankedList, RankError> {
    rank(task, Algorithm::DetGreedy)
}

/// Ranks with [`Algorithm::DetCons`].
pub fn rank_det_cons(task: &RankingTask) -> Result<RankedList, RankError> {
    rank(task, Algorithm::DetCons)
}

/// Ranks with [`Algorithm::DetRelaxed`].
pub fn rank_det_relaxed(task: &RankingTask) -> Result<RankedList, RankError> {
    rank(task, Algorithm::DetRelaxed)
}

/// Ranks with [`Algorithm::DetConstSort`].
pub fn rank_det_const_sort(task: &RankingTask) -> Result<RankedList, RankError> {
    rank(task, Algorithm::DetConstSort)
}

/// Per-attribute read position into a pool.
#[derive(Debug, Clone)]
pub(crate) struct Cursor<'a> {
    pool: &'a ScoredPool,
    counts: Vec<usize>,
}

impl<'a> Cursor<'a> {
    pub(crate) fn new(pool: &'a ScoredPool) -> Self {
        Self {
            pool,
            counts: vec![0; pool.len()],
        }
    }

    #[inline]
    pub(crate) fn count(&self, attr: AttrId) -> usize {
        self.counts[attr.0]
    }

    #[inline]
    pub(crate) fn peek(&self, attr: AttrId) -> Option<f64> {
        self.pool.scores(attr).get(self.counts[attr.0]).copied()
    }

    /// Next score, or `-inf` once exhausted so that exhausted attributes
    /// lose every comparison.
    #[inline]
    pub(crate) fn key(&self, attr: AttrId) -> f64 {
        self.peek(attr).unwrap_or(f64::NEG_INFINITY)
    }

    #[inline]
    pub(crate) fn is_exhausted(&self, attr: AttrId) -> bool {
        self.peek(attr).is_none()
    }

    /// Consumes the next candidate of `attr`.
    ///
    /// # Panics
    ///
    /// If `attr` is exhausted.
    pub(crate) fn take(&mut self, attr: AttrId) -> f64 {
        let score = self.peek(attr).expect("take from exhausted attribute");
        self.counts[attr.0] += 1;
        score
    }

    /// Attribute with the highest next score; the first one wins ties.
    pub(crate) fn best_of(&self, attrs: impl Iterator<Item = AttrId>) -> Option<AttrId> {
        let mut best: Option<(AttrId, f64)> = None;
        for a in attrs {
            let s = self.key(a);
            match best {
                Some((_, b)) if s <= b => {}
                _ => best = Some((a, s)),
            }
        }
        best.map(|(a, _)| a)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::TaskInput;

    fn attrs(l: &RankedList) -> Vec<usize> {
        l.attrs().map(|a| a.0).collect()
    }

    #[test]
    fn vanilla_examples() {
        let task = TaskInput::new(4)
            .attribute("a1", 0.4, [0.1])
            .attribute("a2", 0.4, [0.2])
            .attribute("a3", 0.1, [0.3])
            .attribute("a4", 0.1, [0.4])
            .validate()
            .unwrap();
        let l = rank_vanilla(&task).unwrap();
        assert_eq!(attrs(&l), [3, 2, 1, 0]);
        assert_eq!(l.scores().collect::<Vec<_>>(), [0.4, 0.3, 0.2, 0.1]);

        let task = TaskInput::new(2)
            .attribute("a", 1.0, [0.9, 0.8])
            .validate()
            .unwrap();
        assert_eq!(
            rank_vanilla(&task).unwrap().scores().collect::<Vec<_>>(),
            [0.9, 0.8]
        );
    }

    #[test]
    fn vanilla_ties_go_to_lower_index() {
        let task = TaskInput::new(3)
            .attribute("a", 0.5, [0.5, 0.5])
            .attribute("b", 0.5, [0.5])
            .validate()
            .unwrap();
        assert_eq!(attrs(&rank_vanilla(&task).unwrap()), [0, 0, 1]);
    }

    #[test]
    fn algorithm_names_round_trip() {
        for a in Algorithm::ALL {
            assert_eq!(a.name().parse::<Algorithm>().unwrap(), a);
        }
        assert_eq!(
            "DetConstSort".parse::<Algorithm>().unwrap(),
            Algorithm::DetConstSort
        );
        assert_eq!(
            "detfoo".parse::<Algorithm>(),
            Err(RankError::UnknownAlgorithm("detfoo".into()))
        );
    }

    #[test]
    fn dispatch_matches_direct_calls() {
        let task = TaskInput::new(4)
            .attribute("a", 0.5, [0.9, 0.8])
            .attribute("b", 0.5, [0.7, 0.6])
            .validate()
            .unwrap();
        assert_eq!(
            rank(&task, Algorithm::Vanilla).unwrap(),
            rank_vanilla(&task).unwrap()
        );
        assert_eq!(
            rank(&task, Algorithm::DetConstSort).unwrap(),
            rank_det_const_sort(&task).unwrap()
        );
    }
}
