//! DetConstSort: interval-constrained insertion sort.
//!
//! A counter `k` advances until some attribute's floor quota `⌊k·p⌋` grows.
//! Each such attribute contributes its next candidate, placed at the first
//! empty position with max index `k` (the deepest position it may occupy
//! without breaking its floor quota). The new candidate then moves forward
//! past lower-scored neighbours, but a neighbour at position `j` is only
//! pushed to `j + 1` if its max index is at least `j + 1`.
//!
//! Positions and max indices are 1-indexed.

use alloc::vec;
use alloc::vec::Vec;

use super::{Cursor, RankError, RerankOptions, Reranked};
use crate::model::{floor_quota, AttrId, RankedItem, RankedList, RankingTask};

#[derive(Debug, Clone, Copy)]
struct Slot {
    item: RankedItem,
    max_index: usize,
}

/// DetConstSort with explicit options.
///
/// With `fallback` enabled an exhausted attribute simply skips its
/// insertion and the skip is counted; other attributes keep filling.
pub fn rank_det_const_sort_with(
    task: &RankingTask,
    options: RerankOptions,
) -> Result<Reranked, RankError> {
    let p = task.desired().as_slice();
    let k_max = task.k_max();
    let mut cursor = Cursor::new(task.pool());
    let mut min_counts = vec![0usize; p.len()];
    let mut slots: Vec<Slot> = Vec::with_capacity(k_max + p.len());
    let mut changed: Vec<AttrId> = Vec::with_capacity(p.len());
    let mut fallback_events = 0;
    let mut k = 0;

    while slots.len() < k_max {
        if (0..p.len()).all(|a| cursor.is_exhausted(AttrId(a))) {
            return Err(RankError::EmptyCandidateSets {
                position: slots.len() + 1,
            });
        }
        k += 1;
        changed.clear();
        for (a, &share) in p.iter().enumerate() {
            let quota = floor_quota(k, share);
            if quota > min_counts[a] {
                min_counts[a] = quota;
                changed.push(AttrId(a));
            }
        }
        // descending next score, lower index first on ties
        changed.sort_by(|&x, &y| cursor.key(y).total_cmp(&cursor.key(x)).then(x.cmp(&y)));

        for &attr in &changed {
            if cursor.is_exhausted(attr) {
                if options.fallback {
                    fallback_events += 1;
                    continue;
                }
                return Err(RankError::InsufficientCandidates {
                    attr,
                    position: slots.len() + 1,
                });
            }
            let score = cursor.take(attr);
            slots.push(Slot {
                item: RankedItem { attr, score },
                max_index: k,
            });
            bubble_forward(&mut slots);
        }
    }

    slots.truncate(k_max);
    Ok(Reranked {
        list: slots.into_iter().map(|s| s.item).collect::<RankedList>(),
        fallback_events,
    })
}

/// Moves the last slot toward the front while the left neighbour scores
/// lower and may legally sit one position deeper.
fn bubble_forward(slots: &mut [Slot]) {
    // `start` is the 1-indexed position of the moving candidate
    let mut start = slots.len();
    while start > 1 {
        let left = slots[start - 2];
        let right = slots[start - 1];
        if left.max_index >= start && left.item.score < right.item.score {
            slots.swap(start - 2, start - 1);
            start -= 1;
        } else {
            break;
        }
    }
}
