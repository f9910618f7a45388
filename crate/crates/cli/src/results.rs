//! Result directory layout and CSV contracts.
//!
//! ```text
//! <out>/plan.json                          resolved plan
//! <out>/trials.csv                         one row per trial
//! <out>/traces/<problem>_<dim>_<strategy>.csv
//!                                          fe,sp,mean_error,std_error,trials
//! <out>/raw/<problem>_<dim>_<strategy>_<sp>_<trial>.csv
//!                                          fe,best_error (with --raw)
//! ```
//!
//! Reals are written in shortest round-trip form; `sp` is `none` for the
//! no-surrogate baselines.

use std::fs;
use std::path::{Path, PathBuf};

use saea_core::runner::{aggregate_traces, checkpoint_grid};
use saea_core::{ConvergenceTrace, ProblemId, StrategyKind, TrialResult};

use crate::error::{LabError, LabResult};
use crate::plan::{parse_plan, plan_to_json, LabPlan};

pub const PLAN_FILE: &str = "plan.json";
pub const TRIALS_FILE: &str = "trials.csv";
pub const TRACES_DIR: &str = "traces";
pub const RAW_DIR: &str = "raw";

const TRIALS_HEADER: [&str; 9] = [
    "problem",
    "dim",
    "strategy",
    "sp",
    "trial",
    "seed",
    "final_error",
    "counted_fe",
    "oracle_calls",
];
pub const TRACE_HEADER: [&str; 5] = ["fe", "sp", "mean_error", "std_error", "trials"];
pub const RAW_HEADER: [&str; 2] = ["fe", "best_error"];

/// One line of `trials.csv`.
#[derive(Debug, Clone, PartialEq)]
pub struct TrialRow {
    pub problem: ProblemId,
    pub dim: usize,
    pub strategy: StrategyKind,
    pub sp: Option<f64>,
    pub trial: usize,
    pub seed: u64,
    pub final_error: f64,
    pub counted_fe: usize,
    pub oracle_calls: u64,
}

impl From<&TrialResult> for TrialRow {
    fn from(r: &TrialResult) -> Self {
        Self {
            problem: r.problem,
            dim: r.dim,
            strategy: r.strategy,
            sp: r.sp,
            trial: r.trial,
            seed: r.seed,
            final_error: r.final_error,
            counted_fe: r.counted_fe,
            oracle_calls: r.oracle_calls,
        }
    }
}

pub fn sp_label(sp: Option<f64>) -> String {
    match sp {
        Some(v) => format!("{v:?}"),
        None => "none".to_string(),
    }
}

pub fn parse_sp(text: &str) -> Option<Option<f64>> {
    if text == "none" {
        Some(None)
    } else {
        text.parse().ok().map(Some)
    }
}

pub fn real(v: f64) -> String {
    format!("{v:e}")
}

fn create_dir(path: &Path) -> LabResult<()> {
    fs::create_dir_all(path).map_err(|e| LabError::io(path, e))
}

fn csv_writer(path: &Path) -> LabResult<csv::Writer<fs::File>> {
    csv::Writer::from_path(path).map_err(|e| LabError::csv(path, e))
}

fn write_rows<I, R>(path: &Path, header: &[&str], rows: I) -> LabResult<()>
where
    I: IntoIterator<Item = R>,
    R: IntoIterator<Item = String>,
{
    let mut w = csv_writer(path)?;
    let fail = |e| LabError::csv(path, e);
    w.write_record(header).map_err(fail)?;
    for row in rows {
        w.write_record(row.into_iter().collect::<Vec<_>>()).map_err(fail)?;
    }
    w.flush().map_err(|e| LabError::io(path, e))
}

fn read_rows(path: &Path, header: &[&str]) -> LabResult<Vec<csv::StringRecord>> {
    let mut r = csv::Reader::from_path(path).map_err(|e| LabError::csv(path, e))?;
    let found = r.headers().map_err(|e| LabError::csv(path, e))?.clone();
    if found.iter().ne(header.iter().copied()) {
        return Err(LabError::Data(format!(
            "{}: header {:?} does not match {:?}",
            path.display(),
            found.iter().collect::<Vec<_>>(),
            header
        )));
    }
    r.records()
        .collect::<Result<Vec<_>, _>>()
        .map_err(|e| LabError::csv(path, e))
}

fn field<T: std::str::FromStr>(path: &Path, record: &csv::StringRecord, index: usize) -> LabResult<T> {
    record.get(index).and_then(|s| s.parse().ok()).ok_or_else(|| {
        LabError::Data(format!(
            "{}: line {}: bad value {:?} in column {index}",
            path.display(),
            record.position().map_or(0, |p| p.line()),
            record.get(index).unwrap_or("")
        ))
    })
}

pub fn write_trials(path: &Path, rows: &[TrialRow]) -> LabResult<()> {
    write_rows(
        path,
        &TRIALS_HEADER,
        rows.iter().map(|r| {
            [
                r.problem.to_string(),
                r.dim.to_string(),
                r.strategy.to_string(),
                sp_label(r.sp),
                r.trial.to_string(),
                r.seed.to_string(),
                real(r.final_error),
                r.counted_fe.to_string(),
                r.oracle_calls.to_string(),
            ]
        }),
    )
}

pub fn read_trials(path: &Path) -> LabResult<Vec<TrialRow>> {
    read_rows(path, &TRIALS_HEADER)?
        .iter()
        .map(|rec| {
            let sp_text: String = field(path, rec, 3)?;
            let sp = parse_sp(&sp_text)
                .ok_or_else(|| LabError::Data(format!("{}: bad sp {sp_text:?}", path.display())))?;
            Ok(TrialRow {
                problem: field(path, rec, 0)?,
                dim: field(path, rec, 1)?,
                strategy: field(path, rec, 2)?,
                sp,
                trial: field(path, rec, 4)?,
                seed: field(path, rec, 5)?,
                final_error: field(path, rec, 6)?,
                counted_fe: field(path, rec, 7)?,
                oracle_calls: field(path, rec, 8)?,
            })
        })
        .collect()
}

pub fn trace_file_name(problem: ProblemId, dim: usize, strategy: StrategyKind) -> String {
    format!("{problem}_{dim}_{strategy}.csv")
}

pub fn raw_file_name(problem: ProblemId, dim: usize, strategy: StrategyKind, sp: Option<f64>, trial: usize) -> String {
    format!("{problem}_{dim}_{strategy}_{}_{trial}.csv", sp_label(sp))
}

/// Writes one summary CSV per (problem, dim, strategy), rows ordered by sp
/// as first seen, then by checkpoint.
pub fn write_trace_summaries(dir: &Path, plan: &LabPlan, results: &[TrialResult]) -> LabResult<Vec<PathBuf>> {
    create_dir(dir)?;
    let mut keys: Vec<(ProblemId, usize, StrategyKind)> = Vec::new();
    for r in results {
        let key = (r.problem, r.dim, r.strategy);
        if !keys.contains(&key) {
            keys.push(key);
        }
    }
    let mut written = Vec::new();
    for (problem, dim, strategy) in keys {
        let subset: Vec<TrialResult> = results
            .iter()
            .filter(|r| (r.problem, r.dim, r.strategy) == (problem, dim, strategy))
            .cloned()
            .collect();
        let grid = checkpoint_grid(dim, plan.experiment.max_fe, plan.checkpoint_step);
        let summaries = aggregate_traces(&subset, &grid)?;
        let path = dir.join(trace_file_name(problem, dim, strategy));
        write_rows(
            &path,
            &TRACE_HEADER,
            summaries.iter().flat_map(|s| {
                s.points.iter().map(move |p| {
                    [
                        p.fe.to_string(),
                        sp_label(s.sp),
                        real(p.mean_error),
                        real(p.std_error),
                        p.trials.to_string(),
                    ]
                })
            }),
        )?;
        written.push(path);
    }
    Ok(written)
}

pub fn write_raw_trace(path: &Path, trace: &ConvergenceTrace) -> LabResult<()> {
    write_rows(
        path,
        &RAW_HEADER,
        trace.points().iter().map(|p| [p.fe.to_string(), real(p.best_error)]),
    )
}

pub fn read_raw_trace(path: &Path) -> LabResult<ConvergenceTrace> {
    let mut trace = ConvergenceTrace::new();
    for rec in read_rows(path, &RAW_HEADER)? {
        trace.record(field(path, &rec, 0)?, field(path, &rec, 1)?);
    }
    if !trace.is_valid() || trace.is_empty() {
        return Err(LabError::Data(format!("{}: not a best-so-far trace", path.display())));
    }
    Ok(trace)
}

/// Writes the whole result directory of a run.
pub fn write_run(out: &Path, plan: &LabPlan, results: &[TrialResult], raw: bool) -> LabResult<()> {
    create_dir(out)?;
    let plan_path = out.join(PLAN_FILE);
    fs::write(&plan_path, plan_to_json(plan)).map_err(|e| LabError::io(&plan_path, e))?;
    let rows: Vec<TrialRow> = results.iter().map(TrialRow::from).collect();
    write_trials(&out.join(TRIALS_FILE), &rows)?;
    write_trace_summaries(&out.join(TRACES_DIR), plan, results)?;
    if raw {
        let dir = out.join(RAW_DIR);
        create_dir(&dir)?;
        for r in results {
            write_raw_trace(&dir.join(raw_file_name(r.problem, r.dim, r.strategy, r.sp, r.trial)), &r.trace)?;
        }
    }
    Ok(())
}

/// Plan and trial table of a result directory.
pub fn load_run(dir: &Path) -> LabResult<(LabPlan, Vec<TrialRow>)> {
    let plan = parse_plan(&dir.join(PLAN_FILE))?;
    let rows = read_trials(&dir.join(TRIALS_FILE))?;
    if rows.is_empty() {
        return Err(LabError::Data(format!("{}: no trials", dir.join(TRIALS_FILE).display())));
    }
    Ok((plan, rows))
}

/// Rebuilds full trial results from `trials.csv` and the raw traces.
pub fn load_raw_results(dir: &Path, rows: &[TrialRow]) -> LabResult<Vec<TrialResult>> {
    let raw = dir.join(RAW_DIR);
    if !raw.is_dir() {
        return Err(LabError::Data(format!(
            "{}: no raw traces; rerun with --raw",
            raw.display()
        )));
    }
    rows.iter()
        .map(|row| {
            let trace = read_raw_trace(&raw.join(raw_file_name(row.problem, row.dim, row.strategy, row.sp, row.trial)))?;
            Ok(TrialResult {
                problem: row.problem,
                dim: row.dim,
                strategy: row.strategy,
                sp: row.sp,
                trial: row.trial,
                seed: row.seed,
                trace,
                final_error: row.final_error,
                counted_fe: row.counted_fe,
                oracle_calls: row.oracle_calls,
            })
        })
        .collect()
}
