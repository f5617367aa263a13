//! Domain types shared by the metrics, re-rankers and simulation kernels.
//!
//! Attribute values are carried as dense indices ([`AttrId`]) internally.
//! String labels only exist on [`RankingTask`] so that callers can map
//! results back to their own vocabulary.

use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;

/// Absolute tolerance on the sum of a desired distribution.
pub const NORMALIZATION_TOLERANCE: f64 = 1e-9;

/// Products `k·p` within this distance of an integer are treated as that
/// integer before taking floor or ceiling.
pub const INTEGRALITY_SNAP: f64 = 1e-12;

/// Dense index of a protected attribute value within one task.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct AttrId(pub usize);

impl AttrId {
    /// The raw index.
    #[inline]
    pub fn index(self) -> usize {
        self.0
    }
}

impl fmt::Display for AttrId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "#{}", self.0)
    }
}

/// Errors raised while building or validating domain values.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ModelError {
    #[error("all attribute counts are zero")]
    AllZeroCounts,
    #[error("desired distribution is empty")]
    EmptyDistribution,
    #[error("desired proportion for {attribute} is {value}; expected a finite value >= 0")]
    InvalidProportion { attribute: String, value: f64 },
    #[error("desired proportions sum to {sum}, expected 1 (tolerance {NORMALIZATION_TOLERANCE})")]
    DistributionNotNormalized { sum: f64 },
    #[error("attribute {0} is listed more than once")]
    DuplicateAttribute(String),
    #[error("pool given for {0}, which has no desired proportion")]
    UnknownPoolAttribute(String),
    #[error("no pool given for {0}, which has a positive desired proportion")]
    MissingPool(String),
    #[error("score {index} of {attribute} is not finite")]
    NonFiniteScore { attribute: String, index: usize },
    #[error("pool for {attribute} is not in non-increasing order at index {index}")]
    PoolNotSorted { attribute: String, index: usize },
    #[error("pool count {pools} does not match distribution size {attributes}")]
    ShapeMismatch { attributes: usize, pools: usize },
    #[error("result length k must be at least 1")]
    InvalidK,
    #[error("{available} candidates available, {required} required")]
    InsufficientCandidates { available: usize, required: usize },
}

/// `⌊k·p⌋` with the integrality snap applied.
#[inline]
pub fn floor_quota(k: usize, p: f64) -> usize {
    libm::floor(snap(k as f64 * p)) as usize
}

/// `⌈k·p⌉` with the integrality snap applied.
#[inline]
pub fn ceil_quota(k: usize, p: f64) -> usize {
    libm::ceil(snap(k as f64 * p)) as usize
}

#[inline]
pub(crate) fn snap(x: f64) -> f64 {
    let r = libm::round(x);
    if libm::fabs(x - r) < INTEGRALITY_SNAP {
        r
    } else {
        x
    }
}

/// Target proportions over attribute values, indexed by [`AttrId`].
#[derive(Debug, Clone, PartialEq)]
pub struct DesiredDistribution {
    proportions: Vec<f64>,
}

impl DesiredDistribution {
    /// Checks that every entry is finite and non-negative, that at least one
    /// is positive, and that the entries sum to 1.
    pub fn new(proportions: Vec<f64>) -> Result<Self, ModelError> {
        if proportions.is_empty() {
            return Err(ModelError::EmptyDistribution);
        }
        for (i, &p) in proportions.iter().enumerate() {
            if !p.is_finite() || p < 0.0 {
                return Err(ModelError::InvalidProportion {
                    attribute: format!("#{i}"),
                    value: p,
                });
            }
        }
        let sum: f64 = proportions.iter().sum();
        if libm::fabs(sum - 1.0) > NORMALIZATION_TOLERANCE {
            return Err(ModelError::DistributionNotNormalized { sum });
        }
        if proportions.iter().all(|&p| p == 0.0) {
            return Err(ModelError::AllZeroCounts);
        }
        Ok(Self { proportions })
    }

    /// Number of attribute values, including any with proportion 0.
    pub fn len(&self) -> usize {
        self.proportions.len()
    }

    /// Always false for a validated distribution.
    pub fn is_empty(&self) -> bool {
        self.proportions.is_empty()
    }

    /// Proportion of `attr`.
    ///
    /// # Panics
    ///
    /// If `attr` is out of range.
    pub fn get(&self, attr: AttrId) -> f64 {
        self.proportions[attr.0]
    }

    /// All proportions in index order.
    pub fn as_slice(&self) -> &[f64] {
        &self.proportions
    }

    /// Attributes with a positive proportion.
    pub fn support(&self) -> impl Iterator<Item = AttrId> + '_ {
        self.proportions
            .iter()
            .enumerate()
            .filter(|(_, &p)| p > 0.0)
            .map(|(i, _)| AttrId(i))
    }
}

/// Builds a desired distribution from per-attribute candidate counts.
///
/// Counts taken over the candidates qualified for a request give the
/// equal-opportunity target; counts over all candidates give demographic
/// parity. The choice of source is the caller's.
pub fn empirical_distribution(counts: &[u64]) -> Result<DesiredDistribution, ModelError> {
    let total: u64 = counts.iter().sum();
    if total == 0 {
        return Err(ModelError::AllZeroCounts);
    }
    let total = total as f64;
    DesiredDistribution::new(counts.iter().map(|&c| c as f64 / total).collect())
}

/// Per-attribute candidate scores, each list in non-increasing order.
#[derive(Debug, Clone, PartialEq)]
pub struct ScoredPool {
    lists: Vec<Vec<f64>>,
}

impl ScoredPool {
    /// Rejects non-finite scores and lists that are not sorted descending.
    pub fn new(lists: Vec<Vec<f64>>) -> Result<Self, ModelError> {
        for (a, list) in lists.iter().enumerate() {
            check_scores(&format!("#{a}"), list, false)?;
        }
        Ok(Self { lists })
    }

    /// Number of attribute pools.
    pub fn len(&self) -> usize {
        self.lists.len()
    }

    /// True when there are no pools at all.
    pub fn is_empty(&self) -> bool {
        self.lists.is_empty()
    }

    /// Scores of `attr`, best first.
    pub fn scores(&self, attr: AttrId) -> &[f64] {
        &self.lists[attr.0]
    }

    /// Total candidates over all attributes.
    pub fn total(&self) -> usize {
        self.lists.iter().map(Vec::len).sum()
    }

    /// Every score in the pool, merged in descending order.
    pub fn merged_descending(&self) -> Vec<f64> {
        let mut all: Vec<f64> = self.lists.iter().flatten().copied().collect();
        all.sort_by(|a, b| b.total_cmp(a));
        all
    }
}

fn check_scores(label: &str, scores: &[f64], allow_resort: bool) -> Result<bool, ModelError> {
    if let Some(index) = scores.iter().position(|s| !s.is_finite()) {
        return Err(ModelError::NonFiniteScore {
            attribute: label.into(),
            index,
        });
    }
    match scores.windows(2).position(|w| w[0] < w[1]) {
        None => Ok(false),
        Some(_) if allow_resort => Ok(true),
        Some(i) => Err(ModelError::PoolNotSorted {
            attribute: label.into(),
            index: i + 1,
        }),
    }
}

/// One validated re-ranking problem.
///
/// Every retained attribute has a strictly positive desired proportion;
/// attributes whose proportion was 0 are removed during validation.
#[derive(Debug, Clone, PartialEq)]
pub struct RankingTask {
    labels: Vec<String>,
    desired: DesiredDistribution,
    pool: ScoredPool,
    k_max: usize,
}

impl RankingTask {
    /// Assembles a task from dense parts, labelling attributes `a1`, `a2`, ...
    pub fn new(
        desired: DesiredDistribution,
        pool: ScoredPool,
        k_max: usize,
    ) -> Result<Self, ModelError> {
        if desired.len() != pool.len() {
            return Err(ModelError::ShapeMismatch {
                attributes: desired.len(),
                pools: pool.len(),
            });
        }
        let mut input = TaskInput::new(k_max);
        for (i, (p, scores)) in desired.proportions.into_iter().zip(pool.lists).enumerate() {
            input = input.attribute(format!("a{}", i + 1), p, scores);
        }
        input.validate()
    }

    /// Attribute labels in index order.
    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    /// Label of `attr`.
    pub fn label(&self, attr: AttrId) -> &str {
        &self.labels[attr.0]
    }

    /// Looks up the dense index of a label.
    pub fn attr_by_label(&self, label: &str) -> Option<AttrId> {
        self.labels.iter().position(|l| l == label).map(AttrId)
    }

    /// Number of retained attributes.
    pub fn num_attrs(&self) -> usize {
        self.labels.len()
    }

    /// Target distribution, strictly positive everywhere.
    pub fn desired(&self) -> &DesiredDistribution {
        &self.desired
    }

    /// Candidate scores per attribute.
    pub fn pool(&self) -> &ScoredPool {
        &self.pool
    }

    /// Requested result length.
    pub fn k_max(&self) -> usize {
        self.k_max
    }

    /// Ideal ordering for NDCG: all pool scores, descending.
    pub fn ideal_scores(&self) -> Vec<f64> {
        self.pool.merged_descending()
    }
}

/// Unvalidated, label-keyed description of a task.
///
/// Entries keep their insertion order, which fixes the dense attribute
/// indices and therefore the tie-breaking order between equal scores.
#[derive(Debug, Clone, Default)]
pub struct TaskInput {
    /// Requested result length.
    pub k_max: usize,
    /// Desired proportion per label.
    pub desired: Vec<(String, f64)>,
    /// Candidate scores per label.
    pub pools: Vec<(String, Vec<f64>)>,
    /// Sort unsorted pools instead of rejecting them.
    pub allow_resort: bool,
}

impl TaskInput {
    /// Empty input for a result of length `k_max`.
    pub fn new(k_max: usize) -> Self {
        Self {
            k_max,
            ..Self::default()
        }
    }

    /// Adds a label with its desired proportion and candidate scores.
    pub fn attribute(
        mut self,
        label: impl Into<String>,
        proportion: f64,
        scores: impl IntoIterator<Item = f64>,
    ) -> Self {
        let label = label.into();
        self.desired.push((label.clone(), proportion));
        self.pools.push((label, scores.into_iter().collect()));
        self
    }

    /// See [`TaskInput::allow_resort`].
    pub fn allow_resort(mut self, yes: bool) -> Self {
        self.allow_resort = yes;
        self
    }

    /// Checks every invariant of [`RankingTask`] and assigns dense indices.
    pub fn validate(self) -> Result<RankingTask, ModelError> {
        if self.k_max == 0 {
            return Err(ModelError::InvalidK);
        }
        if self.desired.is_empty() {
            return Err(ModelError::EmptyDistribution);
        }
        for (i, (label, p)) in self.desired.iter().enumerate() {
            if self.desired[..i].iter().any(|(l, _)| l == label) {
                return Err(ModelError::DuplicateAttribute(label.clone()));
            }
            if !p.is_finite() || *p < 0.0 {
                return Err(ModelError::InvalidProportion {
                    attribute: label.clone(),
                    value: *p,
                });
            }
        }
        let sum: f64 = self.desired.iter().map(|(_, p)| p).sum();
        if libm::fabs(sum - 1.0) > NORMALIZATION_TOLERANCE {
            return Err(ModelError::DistributionNotNormalized { sum });
        }

        let mut pools: Vec<Option<Vec<f64>>> = alloc::vec![None; self.desired.len()];
        for (label, mut scores) in self.pools {
            let slot = self
                .desired
                .iter()
                .position(|(l, _)| *l == label)
                .ok_or_else(|| ModelError::UnknownPoolAttribute(label.clone()))?;
            if pools[slot].is_some() {
                return Err(ModelError::DuplicateAttribute(label));
            }
            if check_scores(&label, &scores, self.allow_resort)? {
                scores.sort_by(|a, b| b.total_cmp(a));
            }
            pools[slot] = Some(scores);
        }

        let mut labels = Vec::new();
        let mut proportions = Vec::new();
        let mut lists = Vec::new();
        for ((label, p), scores) in self.desired.into_iter().zip(pools) {
            if p == 0.0 {
                continue;
            }
            let scores = scores.ok_or_else(|| ModelError::MissingPool(label.clone()))?;
            labels.push(label);
            proportions.push(p);
            lists.push(scores);
        }
        if labels.is_empty() {
            return Err(ModelError::AllZeroCounts);
        }
        let pool = ScoredPool { lists };
        let available = pool.total();
        if available < self.k_max {
            return Err(ModelError::InsufficientCandidates {
                available,
                required: self.k_max,
            });
        }
        Ok(RankingTask {
            labels,
            desired: DesiredDistribution { proportions },
            pool,
            k_max: self.k_max,
        })
    }
}

/// One placed candidate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RankedItem {
    /// Attribute value of the candidate.
    pub attr: AttrId,
    /// Relevance score of the candidate.
    pub score: f64,
}

/// An ordered result list; position `i` (1-indexed) is `items()[i - 1]`.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct RankedList {
    items: Vec<RankedItem>,
}

impl RankedList {
    /// Empty list.
    pub fn new() -> Self {
        Self::default()
    }

    /// Empty list with room for `n` items.
    pub fn with_capacity(n: usize) -> Self {
        Self {
            items: Vec::with_capacity(n),
        }
    }

    /// Appends a candidate at the next position.
    pub fn push(&mut self, attr: AttrId, score: f64) {
        self.items.push(RankedItem { attr, score });
    }

    /// All items, best position first.
    pub fn items(&self) -> &[RankedItem] {
        &self.items
    }

    /// Number of placed candidates.
    pub fn len(&self) -> usize {
        self.items.len()
    }

    /// True when nothing has been placed.
    pub fn is_empty(&self) -> bool {
        self.items.is_empty()
    }

    /// Attribute sequence.
    pub fn attrs(&self) -> impl Iterator<Item = AttrId> + '_ {
        self.items.iter().map(|it| it.attr)
    }

    /// Score sequence.
    pub fn scores(&self) -> impl Iterator<Item = f64> + '_ {
        self.items.iter().map(|it| it.score)
    }

    /// Attribute counts over the top `k` positions.
    ///
    /// Items whose attribute index is `>= num_attrs` are ignored.
    pub fn prefix_counts(&self, num_attrs: usize, k: usize) -> PrefixCounts {
        let mut counts = alloc::vec![0usize; num_attrs];
        for item in self.items.iter().take(k) {
            if let Some(c) = counts.get_mut(item.attr.0) {
                *c += 1;
            }
        }
        PrefixCounts {
            counts,
            k: k.min(self.items.len()),
        }
    }
}

impl FromIterator<RankedItem> for RankedList {
    fn from_iter<I: IntoIterator<Item = RankedItem>>(iter: I) -> Self {
        Self {
            items: iter.into_iter().collect(),
        }
    }
}

impl From<Vec<RankedItem>> for RankedList {
    fn from(items: Vec<RankedItem>) -> Self {
        Self { items }
    }
}

/// Number of candidates per attribute among the top `k`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PrefixCounts {
    /// Count per attribute index.
    pub counts: Vec<usize>,
    /// Prefix length.
    pub k: usize,
}

impl PrefixCounts {
    /// Count for `attr`, 0 if out of range.
    pub fn get(&self, attr: AttrId) -> usize {
        self.counts.get(attr.0).copied().unwrap_or(0)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    fn approx(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol
    }

    #[test]
    fn empirical_from_qualified_counts() {
        let d = empirical_distribution(&[32_000, 48_000]).unwrap();
        assert!(approx(d.get(AttrId(0)), 0.4, 1e-15));
        assert!(approx(d.get(AttrId(1)), 0.6, 1e-15));

        let d = empirical_distribution(&[5]).unwrap();
        assert_eq!(d.as_slice(), &[1.0]);

        let d = empirical_distribution(&[1, 1, 2]).unwrap();
        assert_eq!(d.as_slice(), &[0.25, 0.25, 0.5]);
    }

    #[test]
    fn empirical_rejects_all_zero() {
        assert_eq!(
            empirical_distribution(&[0, 0]),
            Err(ModelError::AllZeroCounts)
        );
        assert_eq!(empirical_distribution(&[]), Err(ModelError::AllZeroCounts));
    }

    #[test]
    fn quota_snap_avoids_float_artifacts() {
        // 0.1 * 30 = 3.0000000000000004 and 0.3 * 10 = 2.9999999999999996 in f64
        assert_eq!(ceil_quota(30, 0.1), 3);
        assert_eq!(floor_quota(10, 0.3), 3);
        assert_eq!(floor_quota(5, 0.4), 2);
        assert_eq!(ceil_quota(3, 0.4), 2);
        assert_eq!(floor_quota(3, 0.4), 1);
    }

    #[test]
    fn well_formed_task_round_trips() {
        let task = TaskInput::new(2)
            .attribute("a", 0.5, [0.9, 0.8])
            .attribute("b", 0.5, [0.7])
            .validate()
            .unwrap();
        assert_eq!(task.labels(), &["a", "b"]);
        assert_eq!(task.desired().as_slice(), &[0.5, 0.5]);
        assert_eq!(task.pool().scores(AttrId(0)), &[0.9, 0.8]);
        assert_eq!(task.k_max(), 2);
        assert_eq!(task.attr_by_label("b"), Some(AttrId(1)));
        assert_eq!(task.ideal_scores(), vec![0.9, 0.8, 0.7]);
    }

    #[test]
    fn unnormalized_distribution_rejected() {
        let err = TaskInput::new(1)
            .attribute("a", 0.49, [0.9])
            .attribute("b", 0.49, [0.7])
            .validate()
            .unwrap_err();
        assert!(matches!(err, ModelError::DistributionNotNormalized { .. }));
    }

    #[test]
    fn insufficient_candidates_rejected() {
        let err = TaskInput::new(4)
            .attribute("a", 0.5, [0.9, 0.8])
            .attribute("b", 0.5, [0.7])
            .validate()
            .unwrap_err();
        assert_eq!(
            err,
            ModelError::InsufficientCandidates {
                available: 3,
                required: 4
            }
        );
    }

    #[test]
    fn unsorted_pool_rejected_unless_resort_allowed() {
        let input = TaskInput::new(2).attribute("a", 1.0, [0.1, 0.5]);
        assert_eq!(
            input.clone().validate().unwrap_err(),
            ModelError::PoolNotSorted {
                attribute: "a".into(),
                index: 1
            }
        );
        let task = input.allow_resort(true).validate().unwrap();
        assert_eq!(task.pool().scores(AttrId(0)), &[0.5, 0.1]);
    }

    #[test]
    fn non_finite_scores_rejected() {
        let err = TaskInput::new(1)
            .attribute("a", 1.0, [f64::NAN])
            .validate()
            .unwrap_err();
        assert!(matches!(err, ModelError::NonFiniteScore { index: 0, .. }));
    }

    #[test]
    fn zero_proportion_attributes_dropped() {
        let task = TaskInput::new(2)
            .attribute("a", 0.0, [0.99])
            .attribute("b", 1.0, [0.5, 0.4])
            .validate()
            .unwrap();
        assert_eq!(task.labels(), &["b"]);
        assert_eq!(task.pool().total(), 2);
    }

    #[test]
    fn zero_proportion_pool_does_not_count_toward_k() {
        let err = TaskInput::new(2)
            .attribute("a", 0.0, [0.99, 0.98])
            .attribute("b", 1.0, [0.5])
            .validate()
            .unwrap_err();
        assert!(matches!(err, ModelError::InsufficientCandidates { .. }));
    }

    #[test]
    fn label_errors() {
        let mut input = TaskInput::new(1).attribute("a", 1.0, [0.5]);
        input.pools.push(("z".into(), vec![0.1]));
        assert_eq!(
            input.validate().unwrap_err(),
            ModelError::UnknownPoolAttribute("z".into())
        );

        let mut input = TaskInput::new(1).attribute("a", 0.5, [0.5]);
        input.desired.push(("b".into(), 0.5));
        assert_eq!(
            input.validate().unwrap_err(),
            ModelError::MissingPool("b".into())
        );

        let err = TaskInput::new(1)
            .attribute("a", 0.5, [0.5])
            .attribute("a", 0.5, [0.5])
            .validate()
            .unwrap_err();
        assert_eq!(err, ModelError::DuplicateAttribute("a".into()));

        assert_eq!(
            TaskInput::new(0)
                .attribute("a", 1.0, [0.5])
                .validate()
                .unwrap_err(),
            ModelError::InvalidK
        );
        let err = TaskInput::new(1)
            .attribute("a", -0.5, [0.5])
            .attribute("b", 1.5, [0.5])
            .validate()
            .unwrap_err();
        assert!(matches!(err, ModelError::InvalidProportion { .. }));
    }

    #[test]
    fn dense_constructor_labels_attributes() {
        let desired = DesiredDistribution::new(vec![0.25, 0.75]).unwrap();
        let pool = ScoredPool::new(vec![vec![0.3], vec![0.2, 0.1]]).unwrap();
        let task = RankingTask::new(desired, pool, 3).unwrap();
        assert_eq!(task.labels(), &["a1", "a2"]);

        let desired = DesiredDistribution::new(vec![1.0]).unwrap();
        let pool = ScoredPool::new(vec![vec![0.3], vec![0.2]]).unwrap();
        assert!(matches!(
            RankingTask::new(desired, pool, 1),
            Err(ModelError::ShapeMismatch { .. })
        ));
    }

    #[test]
    fn prefix_counts_sum_to_k() {
        let list: RankedList = [0, 1, 0, 0]
            .iter()
            .map(|&a| RankedItem {
                attr: AttrId(a),
                score: 0.0,
            })
            .collect();
        let c = list.prefix_counts(2, 3);
        assert_eq!(c.counts, vec![2, 1]);
        assert_eq!(c.k, 3);
        assert_eq!(c.counts.iter().sum::<usize>(), c.k);
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            #[test]
            fn empirical_is_a_distribution(counts in proptest::collection::vec(0u64..1_000_000, 1..12)) {
                prop_assume!(counts.iter().any(|&c| c > 0));
                let d = empirical_distribution(&counts).unwrap();
                let sum: f64 = d.as_slice().iter().sum();
                prop_assert!((sum - 1.0).abs() <= NORMALIZATION_TOLERANCE);
                prop_assert!(d.as_slice().iter().all(|&p| (0.0..=1.0).contains(&p)));
            }

            #[test]
            fn empirical_is_scale_invariant(
                counts in proptest::collection::vec(0u64..100_000, 1..12),
                scale in 1u64..10_000,
            ) {
                prop_assume!(counts.iter().any(|&c| c > 0));
                let scaled: Vec<u64> = counts.iter().map(|c| c * scale).collect();
                let a = empirical_distribution(&counts).unwrap();
                let b = empirical_distribution(&scaled).unwrap();
                for (x, y) in a.as_slice().iter().zip(b.as_slice()) {
                    prop_assert!((x - y).abs() <= 1e-12);
                }
            }
        }
    }
}
