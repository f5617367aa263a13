//! JSON task, ranking and report formats.
//!
//! Task files look like
//! `{"k": 4, "desired": {"a": 0.5, "b": 0.5}, "pools": {"a": [0.9, 0.8], "b": [0.7]}}`.
//! Key order in `desired` fixes the attribute order used to break score ties.

use std::fs;
use std::path::Path;

use indexmap::IndexMap;
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use fairrank_core::metrics::MetricsReport;
use fairrank_core::model::{AttrId, RankedItem, RankedList, RankingTask, TaskInput};

use crate::Error;

/// On-disk task description.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TaskFile {
    /// Result length.
    pub k: usize,
    /// Desired proportion per attribute label.
    pub desired: IndexMap<String, f64>,
    /// Descending scores per attribute label.
    pub pools: IndexMap<String, Vec<f64>>,
}

impl TaskFile {
    /// Converts to the core's unvalidated input.
    pub fn into_input(self, allow_resort: bool) -> TaskInput {
        TaskInput {
            k_max: self.k,
            desired: self.desired.into_iter().collect(),
            pools: self.pools.into_iter().collect(),
            allow_resort,
        }
    }

    /// Validates into a [`RankingTask`].
    pub fn validate(self, allow_resort: bool) -> Result<RankingTask, Error> {
        Ok(self.into_input(allow_resort).validate()?)
    }

    /// Serializable form of a validated task.
    pub fn from_task(task: &RankingTask) -> Self {
        let ids = (0..task.num_attrs()).map(AttrId);
        Self {
            k: task.k_max(),
            desired: ids
                .clone()
                .map(|a| (task.label(a).to_owned(), task.desired().get(a)))
                .collect(),
            pools: ids
                .map(|a| (task.label(a).to_owned(), task.pool().scores(a).to_vec()))
                .collect(),
        }
    }
}

/// One line of a ranked output file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RankedEntry {
    /// 1-indexed position.
    pub position: usize,
    /// Attribute label.
    pub attribute: String,
    /// Candidate score.
    pub score: f64,
}

/// Labels a ranked list for output.
pub fn to_entries(list: &RankedList, label: impl Fn(AttrId) -> String) -> Vec<RankedEntry> {
    list.items()
        .iter()
        .enumerate()
        .map(|(i, it)| RankedEntry {
            position: i + 1,
            attribute: label(it.attr),
            score: it.score,
        })
        .collect()
}

/// Resolves labels back to dense ids.
///
/// Positions must run 1, 2, 3, ... in file order.
pub fn from_entries(
    entries: &[RankedEntry],
    lookup: impl Fn(&str) -> Option<AttrId>,
) -> Result<RankedList, Error> {
    entries
        .iter()
        .enumerate()
        .map(|(i, e)| {
            if e.position != i + 1 {
                return Err(Error::Format(format!(
                    "entry {} has position {}, expected {}",
                    i + 1,
                    e.position,
                    i + 1
                )));
            }
            let attr = lookup(&e.attribute).ok_or_else(|| {
                Error::Format(format!(
                    "attribute {:?} at position {} has no positive desired proportion",
                    e.attribute, e.position
                ))
            })?;
            Ok(RankedItem {
                attr,
                score: e.score,
            })
        })
        .collect()
}

/// JSON form of a [`MetricsReport`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportJson {
    /// Skew@k per attribute label.
    pub skew: IndexMap<String, f64>,
    /// MinSkew@k.
    pub min_skew: f64,
    /// MaxSkew@k.
    pub max_skew: f64,
    /// NDKL over the full list.
    pub ndkl: f64,
    /// NDCG@k.
    pub ndcg: f64,
    /// InfeasibleIndex.
    pub infeasible_index: usize,
    /// InfeasibleCount.
    pub infeasible_count: usize,
    /// Evaluation depth.
    pub k: usize,
    /// No prefix violates a floor quota.
    pub feasible: bool,
}

impl ReportJson {
    /// Labels `report`.
    pub fn new(report: &MetricsReport, label: impl Fn(AttrId) -> String) -> Self {
        Self {
            skew: report.skew.iter().map(|&(a, s)| (label(a), s)).collect(),
            min_skew: report.min_skew,
            max_skew: report.max_skew,
            ndkl: report.ndkl,
            ndcg: report.ndcg,
            infeasible_index: report.infeasible_index,
            infeasible_count: report.infeasible_count,
            k: report.k,
            feasible: report.feasible(),
        }
    }
}

/// Reads and parses a JSON file, reporting line and column on syntax or
/// schema errors.
pub fn read_json<T: DeserializeOwned>(path: &Path) -> Result<T, Error> {
    let text = fs::read_to_string(path).map_err(|source| Error::Io {
        path: path.to_owned(),
        source,
    })?;
    serde_json::from_str(&text).map_err(|e| Error::Json {
        path: path.to_owned(),
        line: e.line(),
        column: e.column(),
        message: e.to_string(),
    })
}

/// Writes `value` as pretty JSON with a trailing newline.
pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<(), Error> {
    let mut text = serde_json::to_string_pretty(value).expect("serializable");
    text.push('\n');
    fs::write(path, text).map_err(|source| Error::Io {
        path: path.to_owned(),
        source,
    })
}
