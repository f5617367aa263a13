//! Bias and utility measures of a ranked list against a desired distribution.
//!
//! Skew and KL divergence use natural logarithms. Position discounts in NDKL
//! and NDCG are `1 / log2(i + 1)` for 1-indexed position `i`.

use alloc::vec;
use alloc::vec::Vec;

use crate::model::{floor_quota, AttrId, DesiredDistribution, RankedList};

/// Numerator of the skew floor: top-k proportions below `1e-6 / k` are
/// raised to that value before taking the log ratio.
pub const SKEW_FLOOR: f64 = 1e-6;

/// Evaluation depth used by [`MetricsReport::evaluate`] when none is given.
pub const DEFAULT_DEPTH: usize = 100;

/// Errors from metric evaluation.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum MetricError {
    #[error("k = {k} is outside 1..={len}")]
    KOutOfRange { k: usize, len: usize },
    #[error("desired proportion of attribute {0} is zero")]
    ZeroDesiredProportion(AttrId),
    #[error("attribute {0} is not part of the desired distribution")]
    UnknownAttribute(AttrId),
    #[error("distributions have different support sizes ({left} vs {right})")]
    SupportMismatch { left: usize, right: usize },
    #[error("reference distribution is zero at index {0} where the other is positive")]
    ZeroDenominator(usize),
    #[error("ideal ranking has {ideal} entries, fewer than the {list} being scored")]
    LengthMismatch { list: usize, ideal: usize },
}

fn check_attrs(list: &RankedList, desired: &DesiredDistribution) -> Result<(), MetricError> {
    match list.attrs().find(|a| a.0 >= desired.len()) {
        Some(a) => Err(MetricError::UnknownAttribute(a)),
        None => Ok(()),
    }
}

fn check_k(list: &RankedList, k: usize) -> Result<(), MetricError> {
    if k == 0 || k > list.len() {
        Err(MetricError::KOutOfRange { k, len: list.len() })
    } else {
        Ok(())
    }
}

/// Share of each attribute among the top `k` items.
pub fn proportions_at_k(
    list: &RankedList,
    num_attrs: usize,
    k: usize,
) -> Result<Vec<f64>, MetricError> {
    check_k(list, k)?;
    if let Some(a) = list.attrs().take(k).find(|a| a.0 >= num_attrs) {
        return Err(MetricError::UnknownAttribute(a));
    }
    let counts = list.prefix_counts(num_attrs, k);
    Ok(counts.counts.iter().map(|&c| c as f64 / k as f64).collect())
}

#[inline]
fn skew_value(share: f64, desired: f64, k: usize) -> f64 {
    libm::log(share.max(SKEW_FLOOR / k as f64) / desired)
}

/// `ln(top-k share of attr / desired share of attr)`.
///
/// Negative values mean `attr` is under-represented in the top `k`.
pub fn skew_at_k(
    list: &RankedList,
    desired: &DesiredDistribution,
    attr: AttrId,
    k: usize,
) -> Result<f64, MetricError> {
    if attr.0 >= desired.len() {
        return Err(MetricError::UnknownAttribute(attr));
    }
    let p = desired.get(attr);
    if p <= 0.0 {
        return Err(MetricError::ZeroDesiredProportion(attr));
    }
    check_k(list, k)?;
    let count = list.attrs().take(k).filter(|&a| a == attr).count();
    Ok(skew_value(count as f64 / k as f64, p, k))
}

/// Skew@k of every attribute with a positive desired proportion.
pub fn skews_at_k(
    list: &RankedList,
    desired: &DesiredDistribution,
    k: usize,
) -> Result<Vec<(AttrId, f64)>, MetricError> {
    check_attrs(list, desired)?;
    let shares = proportions_at_k(list, desired.len(), k)?;
    Ok(desired
        .support()
        .map(|a| (a, skew_value(shares[a.0], desired.get(a), k)))
        .collect())
}

/// Smallest skew over all attributes; never positive.
pub fn min_skew_at_k(
    list: &RankedList,
    desired: &DesiredDistribution,
    k: usize,
) -> Result<f64, MetricError> {
    Ok(skews_at_k(list, desired, k)?
        .into_iter()
        .map(|(_, s)| s)
        .fold(f64::INFINITY, f64::min))
}

/// Largest skew over all attributes; never negative.
pub fn max_skew_at_k(
    list: &RankedList,
    desired: &DesiredDistribution,
    k: usize,
) -> Result<f64, MetricError> {
    Ok(skews_at_k(list, desired, k)?
        .into_iter()
        .map(|(_, s)| s)
        .fold(f64::NEG_INFINITY, f64::max))
}

/// `Σ_j d1[j] ln(d1[j] / d2[j])`, with `0 · ln 0 = 0`.
pub fn kl_divergence(d1: &[f64], d2: &[f64]) -> Result<f64, MetricError> {
    if d1.len() != d2.len() {
        return Err(MetricError::SupportMismatch {
            left: d1.len(),
            right: d2.len(),
        });
    }
    let mut total = 0.0;
    for (j, (&p, &q)) in d1.iter().zip(d2).enumerate() {
        if p == 0.0 {
            continue;
        }
        if q <= 0.0 {
            return Err(MetricError::ZeroDenominator(j));
        }
        total += p * libm::log(p / q);
    }
    Ok(total)
}

#[inline]
fn discount(position: usize) -> f64 {
    1.0 / libm::log2(position as f64 + 1.0)
}

/// Normalized discounted cumulative KL divergence over the whole list.
///
/// Every prefix `i` contributes the divergence of its attribute shares from
/// `desired`, weighted by `1 / log2(i + 1)`; the weights are normalized to
/// sum to one. Zero exactly when every prefix matches `desired`.
pub fn ndkl(list: &RankedList, desired: &DesiredDistribution) -> Result<f64, MetricError> {
    check_attrs(list, desired)?;
    if let Some(a) = list.attrs().find(|&a| desired.get(a) <= 0.0) {
        return Err(MetricError::ZeroDesiredProportion(a));
    }
    if list.is_empty() {
        return Ok(0.0);
    }
    let p = desired.as_slice();
    let mut counts = vec![0usize; p.len()];
    let mut weighted = 0.0;
    let mut norm = 0.0;
    for (i, attr) in list.attrs().enumerate() {
        let position = i + 1;
        counts[attr.0] += 1;
        let n = position as f64;
        let kl: f64 = counts
            .iter()
            .zip(p)
            .filter(|(&c, _)| c > 0)
            .map(|(&c, &q)| {
                let share = c as f64 / n;
                share * libm::log(share / q)
            })
            .sum();
        let w = discount(position);
        weighted += w * kl;
        norm += w;
    }
    // rounding can leave a tiny negative KL when a prefix matches exactly
    Ok((weighted / norm).max(0.0))
}

/// Discounted cumulative gain with the score as relevance.
pub fn dcg(scores: impl IntoIterator<Item = f64>) -> f64 {
    scores
        .into_iter()
        .enumerate()
        .map(|(i, s)| s * discount(i + 1))
        .sum()
}

/// DCG of `list` over the DCG of the equally long prefix of `ideal_scores`.
///
/// `ideal_scores` is the best achievable order, normally every pool score
/// sorted descending. Returns 1 when the ideal gain is zero.
pub fn ndcg(list: &RankedList, ideal_scores: &[f64]) -> Result<f64, MetricError> {
    if ideal_scores.len() < list.len() {
        return Err(MetricError::LengthMismatch {
            list: list.len(),
            ideal: ideal_scores.len(),
        });
    }
    let ideal = dcg(ideal_scores[..list.len()].iter().copied());
    if ideal == 0.0 {
        return Ok(1.0);
    }
    Ok(dcg(list.scores()) / ideal)
}

/// Feasibility violations: `(infeasible_index, infeasible_count)`.
///
/// A prefix `k` violates the floor constraint for `a` when it holds fewer
/// than `⌊p_a · k⌋` candidates of `a`.
pub fn infeasibility(
    list: &RankedList,
    desired: &DesiredDistribution,
) -> Result<(usize, usize), MetricError> {
    check_attrs(list, desired)?;
    let p = desired.as_slice();
    let mut counts = vec![0usize; p.len()];
    let mut index = 0;
    let mut count = 0;
    for (i, attr) in list.attrs().enumerate() {
        let k = i + 1;
        counts[attr.0] += 1;
        let violations = counts
            .iter()
            .zip(p)
            .filter(|(&c, &q)| c < floor_quota(k, q))
            .count();
        if violations > 0 {
            index += 1;
            count += violations;
        }
    }
    Ok((index, count))
}

/// Number of prefixes that violate the floor constraint for some attribute.
pub fn infeasible_index(
    list: &RankedList,
    desired: &DesiredDistribution,
) -> Result<usize, MetricError> {
    infeasibility(list, desired).map(|(i, _)| i)
}

/// Number of (attribute, prefix) pairs that violate the floor constraint.
pub fn infeasible_count(
    list: &RankedList,
    desired: &DesiredDistribution,
) -> Result<usize, MetricError> {
    infeasibility(list, desired).map(|(_, c)| c)
}

/// Every measure evaluated on one ranked list.
#[derive(Debug, Clone, PartialEq)]
pub struct MetricsReport {
    /// Skew@k per attribute with positive desired proportion.
    pub skew: Vec<(AttrId, f64)>,
    /// MinSkew@k.
    pub min_skew: f64,
    /// MaxSkew@k.
    pub max_skew: f64,
    /// NDKL over the full list.
    pub ndkl: f64,
    /// NDCG@k.
    pub ndcg: f64,
    /// InfeasibleIndex over the full list.
    pub infeasible_index: usize,
    /// InfeasibleCount over the full list.
    pub infeasible_count: usize,
    /// Depth used for the @k measures.
    pub k: usize,
}

impl MetricsReport {
    /// Evaluates all measures. The @k measures use `depth`, defaulting to
    /// [`DEFAULT_DEPTH`], capped at the list length.
    pub fn evaluate(
        list: &RankedList,
        desired: &DesiredDistribution,
        ideal_scores: &[f64],
        depth: Option<usize>,
    ) -> Result<Self, MetricError> {
        let k = depth.unwrap_or(DEFAULT_DEPTH).min(list.len());
        let skew = skews_at_k(list, desired, k)?;
        let min_skew = skew.iter().map(|s| s.1).fold(f64::INFINITY, f64::min);
        let max_skew = skew.iter().map(|s| s.1).fold(f64::NEG_INFINITY, f64::max);
        let top: RankedList = list.items()[..k].iter().copied().collect();
        let (infeasible_index, infeasible_count) = infeasibility(list, desired)?;
        Ok(Self {
            min_skew,
            max_skew,
            ndkl: ndkl(list, desired)?,
            ndcg: ndcg(&top, ideal_scores)?,
            infeasible_index,
            infeasible_count,
            k,
            skew,
        })
    }

    /// True when no prefix violates the floor constraint.
    pub fn feasible(&self) -> bool {
        self.infeasible_index == 0
    }
}
