//! `fairrank rerank | measure | simulate`.
//!
//! Exit statuses: 0 success, 1 I/O failure, 2 usage or validation error,
//! 3 not enough candidates. Payloads go to stdout or `--output`;
//! diagnostics go to stderr.

use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};

use fairrank_core::metrics::MetricsReport;
use fairrank_core::model::{AttrId, DesiredDistribution};
use fairrank_core::rerank::{rank_with, Algorithm, RerankOptions};
use fairrank_core::sim::SimulationConfig;

use crate::io::{self, RankedEntry, ReportJson, TaskFile};
use crate::{csv, grid, Error};

#[derive(Debug, Parser)]
#[command(
    name = "fairrank",
    version,
    about = "Fairness-aware re-ranking toolkit"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Re-rank a task file with one algorithm.
    Rerank(RerankArgs),
    /// Measure bias and utility of a ranked list.
    Measure(MeasureArgs),
    /// Run the seeded Monte-Carlo grid and write aggregate CSV.
    Simulate(SimulateArgs),
}

fn parse_algorithm(s: &str) -> Result<Algorithm, String> {
    s.parse::<Algorithm>().map_err(|e| e.to_string())
}

#[derive(Debug, Args)]
struct RerankArgs {
    /// Task JSON: {"k": .., "desired": {..}, "pools": {..}}.
    #[arg(long)]
    input: PathBuf,
    /// vanilla, detgreedy, detcons, detrelaxed or detconstsort.
    #[arg(long, value_parser = parse_algorithm)]
    algorithm: Algorithm,
    /// Substitute the next-best attribute when a pool runs dry.
    #[arg(long)]
    fallback: bool,
    /// Sort unsorted pools instead of rejecting them.
    #[arg(long)]
    resort: bool,
    /// Ranked JSON destination; stdout when omitted.
    #[arg(long)]
    output: Option<PathBuf>,
}

#[derive(Debug, Args)]
#[command(group(clap::ArgGroup::new("reference").required(true).args(["task", "desired"])))]
struct MeasureArgs {
    /// Ranked JSON as written by `rerank`.
    #[arg(long)]
    ranked: PathBuf,
    /// Task JSON supplying the desired distribution and the ideal order.
    #[arg(long)]
    task: Option<PathBuf>,
    /// Desired distribution JSON, {"label": proportion, ...}; the ideal
    /// order is then the ranked list's own scores sorted descending.
    #[arg(long)]
    desired: Option<PathBuf>,
    /// Depth for the @k measures (default 100, capped at the list length).
    #[arg(long)]
    k: Option<usize>,
}

#[derive(Debug, Args)]
struct SimulateArgs {
    #[arg(long, default_value_t = 2)]
    attr_min: usize,
    #[arg(long, default_value_t = 10)]
    attr_max: usize,
    #[arg(long, default_value_t = 1_000)]
    num_distributions: u64,
    #[arg(long, default_value_t = 1)]
    replications: u64,
    /// Candidates per attribute value.
    #[arg(long, default_value_t = 100)]
    pool_size: usize,
    /// Result length.
    #[arg(long, default_value_t = 100)]
    k: usize,
    /// Comma-separated algorithm names; all five when omitted.
    #[arg(long, value_delimiter = ',', value_parser = parse_algorithm)]
    algorithms: Vec<Algorithm>,
    #[arg(long, default_value_t = 42)]
    seed: u64,
    /// Aggregate CSV destination; stdout when omitted. A diagnostics
    /// sidecar `<stem>.diagnostics.csv` is written next to it.
    #[arg(long)]
    output: Option<PathBuf>,
    /// Worker threads (default: available parallelism).
    #[arg(long)]
    jobs: Option<usize>,
}

/// Parses `args` (including the program name) and runs the command.
/// Returns the process exit status.
pub fn run<I, T>(args: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = e.exit_code();
            let text = e.render().to_string();
            if code == 0 {
                let _ = stdout.write_all(text.as_bytes());
            } else {
                let _ = stderr.write_all(text.as_bytes());
            }
            return code;
        }
    };
    let result = match cli.command {
        Command::Rerank(a) => cmd_rerank(a, stdout, stderr),
        Command::Measure(a) => cmd_measure(a, stdout),
        Command::Simulate(a) => cmd_simulate(a, stdout, stderr),
    };
    match result {
        Ok(()) => 0,
        Err(e) => {
            let _ = writeln!(stderr, "error: {e}");
            e.exit_code()
        }
    }
}

fn emit_json<T: serde::Serialize>(
    value: &T,
    output: Option<&Path>,
    stdout: &mut dyn Write,
) -> Result<(), Error> {
    match output {
        Some(path) => io::write_json(path, value),
        None => {
            let text = serde_json::to_string_pretty(value).expect("serializable");
            writeln!(stdout, "{text}").map_err(|source| Error::Io {
                path: "<stdout>".into(),
                source,
            })
        }
    }
}

fn cmd_rerank(
    args: RerankArgs,
    stdout: &mut dyn Write,
    stderr: &mut dyn Write,
) -> Result<(), Error> {
    let task = io::read_json::<TaskFile>(&args.input)?.validate(args.resort)?;
    let options = RerankOptions {
        fallback: args.fallback,
    };
    let ranked = rank_with(&task, args.algorithm, options)?;
    if args.fallback {
        let _ = writeln!(stderr, "fallback events: {}", ranked.fallback_events);
    }
    let entries = io::to_entries(&ranked.list, |a| task.label(a).to_owned());
    emit_json(&entries, args.output.as_deref(), stdout)
}

fn cmd_measure(args: MeasureArgs, stdout: &mut dyn Write) -> Result<(), Error> {
    let entries: Vec<RankedEntry> = io::read_json(&args.ranked)?;
    let (labels, desired, ideal, list) = if let Some(path) = &args.task {
        let task = io::read_json::<TaskFile>(path)?.validate(false)?;
        let list = io::from_entries(&entries, |l| task.attr_by_label(l))?;
        (
            task.labels().to_vec(),
            task.desired().clone(),
            task.ideal_scores(),
            list,
        )
    } else {
        let path = args.desired.as_ref().expect("clap enforces one reference");
        let map: indexmap::IndexMap<String, f64> = io::read_json(path)?;
        let labels: Vec<String> = map.keys().cloned().collect();
        let desired = DesiredDistribution::new(map.values().copied().collect())?;
        let list = io::from_entries(&entries, |l| {
            labels
                .iter()
                .position(|x| x == l)
                .map(AttrId)
                .filter(|&a| desired.get(a) > 0.0)
        })?;
        let mut ideal: Vec<f64> = list.scores().collect();
        ideal.sort_by(|a, b| b.total_cmp(a));
        (labels, desired, ideal, list)
    };
    if list.is_empty() {
        return Err(Error::Format("ranked list is empty".into()));
    }
    let report = MetricsReport::evaluate(&list, &desired, &ideal, args.k)?;
    let json = ReportJson::new(&report, |a| labels[a.0].clone());
    emit_json(&json, None, stdout)
}

fn cmd_simulate(
    args: SimulateArgs,
    stdout: &mut dyn Write,
    stderr: &mut dyn Write,
) -> Result<(), Error> {
    let config = SimulationConfig {
        attr_min: args.attr_min,
        attr_max: args.attr_max,
        num_distributions: args.num_distributions,
        replications: args.replications,
        pool_size: args.pool_size,
        k_max: args.k,
        algorithms: if args.algorithms.is_empty() {
            Algorithm::ALL.to_vec()
        } else {
            args.algorithms
        },
        seed: args.seed,
    };
    let jobs = args
        .jobs
        .unwrap_or_else(|| std::thread::available_parallelism().map_or(1, |n| n.get()));
    let agg = grid::run_grid(&config, jobs)?;
    let rows = agg.rows();

    for num_attr in config.attr_min..=config.attr_max {
        let summary: Vec<String> = rows
            .iter()
            .filter(|r| r.num_attr == num_attr)
            .map(|r| {
                format!(
                    "{}: infeasible {:.3} min_skew {:.3} ndcg {:.4}",
                    r.algorithm, r.mean_infeasible_index, r.mean_min_skew, r.mean_ndcg
                )
            })
            .collect();
        let _ = writeln!(
            stderr,
            "|A|={num_attr} tasks={} | {}",
            config.tasks_per_attr(),
            summary.join(" | ")
        );
    }

    match &args.output {
        Some(path) => {
            csv::write_csv(&rows, path)?;
            let sidecar = csv::diagnostics_path(path);
            std::fs::write(&sidecar, csv::format_diagnostics(&agg)).map_err(|source| {
                Error::Io {
                    path: sidecar.clone(),
                    source,
                }
            })?;
        }
        None => {
            let text = csv::format_csv(&rows)?;
            stdout
                .write_all(text.as_bytes())
                .map_err(|source| Error::Io {
                    path: "<stdout>".into(),
                    source,
                })?;
            let excluded: u64 = agg.cells().map(|(_, c)| c.excluded).sum();
            if excluded > 0 {
                let _ = write!(stderr, "{}", csv::format_diagnostics(&agg));
            }
        }
    }
    Ok(())
}
