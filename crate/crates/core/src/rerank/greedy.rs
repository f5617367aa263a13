//! DetGreedy, DetCons and DetRelaxed.
//!
//! All three fill one position at a time. If some attribute is below its
//! floor quota `⌊k·p⌋` the best-scoring such attribute is taken. Otherwise
//! the choice is made among attributes strictly below their ceiling quota
//! `⌈k·p⌉`, and that is where the variants differ.

use alloc::vec::Vec;

use super::{Cursor, RankError, RerankOptions, Reranked};
use crate::model::{ceil_quota, floor_quota, AttrId, RankedList, RankingTask};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Rule {
    Greedy,
    Conservative,
    Relaxed,
}

/// DetGreedy with explicit options.
pub fn rank_det_greedy_with(
    task: &RankingTask,
    options: RerankOptions,
) -> Result<Reranked, RankError> {
    run(task, Rule::Greedy, options)
}

/// DetCons with explicit options.
pub fn rank_det_cons_with(
    task: &RankingTask,
    options: RerankOptions,
) -> Result<Reranked, RankError> {
    run(task, Rule::Conservative, options)
}

/// DetRelaxed with explicit options.
pub fn rank_det_relaxed_with(
    task: &RankingTask,
    options: RerankOptions,
) -> Result<Reranked, RankError> {
    run(task, Rule::Relaxed, options)
}

fn run(task: &RankingTask, rule: Rule, options: RerankOptions) -> Result<Reranked, RankError> {
    let p = task.desired().as_slice();
    let all: Vec<AttrId> = (0..p.len()).map(AttrId).collect();
    let mut cursor = Cursor::new(task.pool());
    let mut list = RankedList::with_capacity(task.k_max());
    let mut fallback_events = 0;

    for k in 1..=task.k_max() {
        let chosen = select(rule, k, p, &cursor, &all)
            .ok_or(RankError::EmptyCandidateSets { position: k })?;
        let attr = if !cursor.is_exhausted(chosen) {
            chosen
        } else if options.fallback {
            fallback_events += 1;
            let available: Vec<AttrId> = all
                .iter()
                .copied()
                .filter(|&a| !cursor.is_exhausted(a))
                .collect();
            select(rule, k, p, &cursor, &available)
                .or_else(|| cursor.best_of(available.iter().copied()))
                .ok_or(RankError::InsufficientCandidates {
                    attr: chosen,
                    position: k,
                })?
        } else {
            return Err(RankError::InsufficientCandidates {
                attr: chosen,
                position: k,
            });
        };
        let score = cursor.take(attr);
        list.push(attr, score);
    }
    Ok(Reranked {
        list,
        fallback_events,
    })
}

/// Applies the selection rule for position `k` over `candidates`.
fn select(
    rule: Rule,
    k: usize,
    p: &[f64],
    cursor: &Cursor<'_>,
    candidates: &[AttrId],
) -> Option<AttrId> {
    let below_min = candidates
        .iter()
        .copied()
        .filter(|&a| cursor.count(a) < floor_quota(k, p[a.0]));
    if let Some(a) = cursor.best_of(below_min) {
        return Some(a);
    }
    let below_max = candidates.iter().copied().filter(|&a| {
        let c = cursor.count(a);
        c >= floor_quota(k, p[a.0]) && c < ceil_quota(k, p[a.0])
    });
    match rule {
        Rule::Greedy => cursor.best_of(below_max),
        Rule::Conservative => {
            argmin_then_score(below_max, cursor, |a| ceil_quota(k, p[a.0]) as f64 / p[a.0])
        }
        Rule::Relaxed => argmin_then_score(below_max, cursor, |a| {
            libm::ceil(crate::model::snap(ceil_quota(k, p[a.0]) as f64 / p[a.0]))
        }),
    }
}

/// Minimizes `key`; ties go to the higher next score, then the lower index.
fn argmin_then_score(
    attrs: impl Iterator<Item = AttrId>,
    cursor: &Cursor<'_>,
    key: impl Fn(AttrId) -> f64,
) -> Option<AttrId> {
    let mut best: Option<(AttrId, f64, f64)> = None;
    for a in attrs {
        let (k, s) = (key(a), cursor.key(a));
        let better = match best {
            None => true,
            Some((_, bk, bs)) => k < bk || (k == bk && s > bs),
        };
        if better {
            best = Some((a, k, s));
        }
    }
    best.map(|(a, _, _)| a)
}
