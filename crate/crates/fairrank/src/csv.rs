//! Aggregate CSV output.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use fairrank_core::sim::{Aggregate, AggregateRow};

use crate::Error;

/// Column header of the aggregate file.
pub const HEADER: &str = "num_attr,algorithm,mean_infeasible_index,mean_infeasible_count,\
mean_min_skew,mean_max_skew,mean_ndkl,mean_ndcg,task_count";

/// Column header of the diagnostics sidecar.
pub const DIAGNOSTICS_HEADER: &str = "num_attr,algorithm,excluded_tasks,first_error";

/// Renders rows sorted by `(num_attr, algorithm)` with six decimals.
pub fn format_csv(rows: &[AggregateRow]) -> Result<String, Error> {
    if rows.is_empty() {
        return Err(Error::EmptyResult);
    }
    let mut sorted: Vec<&AggregateRow> = rows.iter().collect();
    sorted.sort_by_key(|r| (r.num_attr, r.algorithm));
    let mut out = String::with_capacity(64 * (rows.len() + 1));
    out.push_str(HEADER);
    out.push('\n');
    for r in sorted {
        writeln!(
            out,
            "{},{},{:.6},{:.6},{:.6},{:.6},{:.6},{:.6},{}",
            r.num_attr,
            r.algorithm,
            r.mean_infeasible_index,
            r.mean_infeasible_count,
            r.mean_min_skew,
            r.mean_max_skew,
            r.mean_ndkl,
            r.mean_ndcg,
            r.task_count
        )
        .unwrap();
    }
    Ok(out)
}

/// Writes [`format_csv`] output to `path`.
pub fn write_csv(rows: &[AggregateRow], path: &Path) -> Result<(), Error> {
    let text = format_csv(rows)?;
    fs::write(path, text).map_err(|source| Error::Io {
        path: path.to_owned(),
        source,
    })
}

/// Per-cell count of tasks left out of the means, with the first error.
pub fn format_diagnostics(agg: &Aggregate) -> String {
    let mut out = String::from(DIAGNOSTICS_HEADER);
    out.push('\n');
    for (&(num_attr, algo), cell) in agg.cells() {
        let first = cell
            .first_error
            .as_ref()
            .map(|e| e.to_string().replace([',', '"', '\n'], " "))
            .unwrap_or_default();
        writeln!(out, "{num_attr},{algo},{},{first}", cell.excluded).unwrap();
    }
    out
}

/// `grid.csv` becomes `grid.diagnostics.csv`.
pub fn diagnostics_path(output: &Path) -> PathBuf {
    let stem = output.file_stem().unwrap_or_default().to_string_lossy();
    output.with_file_name(format!("{stem}.diagnostics.csv"))
}
