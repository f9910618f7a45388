//! Correlation, HSD and Mann-Whitney tables over final errors.

use std::path::{Path, PathBuf};

use log::warn;
use saea_core::stats::{kendall_tau, mann_whitney_u, tukey_hsd, PairwiseVerdictMatrix, Verdict};
use saea_core::{ProblemId, StrategyKind};

use crate::error::{LabError, LabResult};
use crate::results::{real, sp_label, TrialRow};

pub const CORRELATION_FILE: &str = "correlation.csv";
pub const HSD_DIR: &str = "hsd";
pub const MWU_FILE: &str = "mwu.csv";

/// Group label of the no-surrogate baseline in HSD matrices.
pub const BASELINE_LABEL: &str = "NoS";

const SURROGATE_STRATEGIES: [StrategyKind; 3] = [StrategyKind::Ps, StrategyKind::Ib, StrategyKind::Gb];

/// `A-better` when the first (row) group is significantly better.
pub fn verdict_label(v: Verdict) -> &'static str {
    match v {
        Verdict::FirstBetter => "A-better",
        Verdict::SecondBetter => "B-better",
        Verdict::NotSignificant => "none",
    }
}

/// Final errors of one cell, in the order the rows list them.
pub fn final_errors(rows: &[TrialRow], problem: ProblemId, dim: usize, strategy: StrategyKind, sp: Option<f64>) -> Vec<f64> {
    rows.iter()
        .filter(|r| r.problem == problem && r.dim == dim && r.strategy == strategy && r.sp == sp)
        .map(|r| r.final_error)
        .collect()
}

/// Accuracies of a (problem, dim, strategy) cell in first-seen order.
pub fn sp_levels(rows: &[TrialRow], problem: ProblemId, dim: usize, strategy: StrategyKind) -> Vec<f64> {
    let mut levels: Vec<f64> = Vec::new();
    for r in rows {
        if let (true, Some(sp)) = (r.problem == problem && r.dim == dim && r.strategy == strategy, r.sp) {
            if !levels.contains(&sp) {
                levels.push(sp);
            }
        }
    }
    levels
}

fn problems_and_dims(rows: &[TrialRow]) -> (Vec<ProblemId>, Vec<usize>) {
    let mut problems: Vec<ProblemId> = rows.iter().map(|r| r.problem).collect();
    problems.sort_by_key(|p| p.code());
    problems.dedup();
    let mut dims: Vec<usize> = rows.iter().map(|r| r.dim).collect();
    dims.sort_unstable();
    dims.dedup();
    (problems, dims)
}

fn present(rows: &[TrialRow], strategy: StrategyKind) -> bool {
    rows.iter().any(|r| r.strategy == strategy)
}

fn mean(v: &[f64]) -> f64 {
    v.iter().sum::<f64>() / v.len() as f64
}

/// Kendall's tau between accuracy and the negated mean final error, so that
/// `+1` means higher accuracy gives better results. `None` with fewer than
/// two accuracies.
pub fn accuracy_correlation(rows: &[TrialRow], problem: ProblemId, dim: usize, strategy: StrategyKind) -> LabResult<Option<f64>> {
    let levels = sp_levels(rows, problem, dim, strategy);
    if levels.len() < 2 {
        return Ok(None);
    }
    let scores: Vec<f64> = levels
        .iter()
        .map(|&sp| -mean(&final_errors(rows, problem, dim, strategy, Some(sp))))
        .collect();
    Ok(Some(kendall_tau(&levels, &scores)?))
}

#[derive(Debug, Clone, PartialEq)]
pub struct CorrelationRow {
    pub strategy: StrategyKind,
    pub dim: usize,
    /// One entry per column problem.
    pub taus: Vec<Option<f64>>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CorrelationTable {
    pub problems: Vec<ProblemId>,
    pub rows: Vec<CorrelationRow>,
}

pub fn correlation_table(rows: &[TrialRow]) -> LabResult<CorrelationTable> {
    let (problems, dims) = problems_and_dims(rows);
    let mut table = Vec::new();
    for strategy in SURROGATE_STRATEGIES.into_iter().filter(|&s| present(rows, s)) {
        for &dim in &dims {
            let mut taus = Vec::with_capacity(problems.len());
            for &problem in &problems {
                let tau = accuracy_correlation(rows, problem, dim, strategy)?;
                if tau.is_none() && rows.iter().any(|r| r.problem == problem && r.dim == dim && r.strategy == strategy) {
                    warn!("{strategy} {problem} {dim}D: fewer than two accuracies, correlation skipped");
                }
                taus.push(tau);
            }
            table.push(CorrelationRow { strategy, dim, taus });
        }
    }
    Ok(CorrelationTable { problems, rows: table })
}

fn write_csv(path: &Path, header: Vec<String>, rows: Vec<Vec<String>>) -> LabResult<()> {
    let mut w = csv::Writer::from_path(path).map_err(|e| LabError::csv(path, e))?;
    w.write_record(&header).map_err(|e| LabError::csv(path, e))?;
    for row in rows {
        w.write_record(&row).map_err(|e| LabError::csv(path, e))?;
    }
    w.flush().map_err(|e| LabError::io(path, e))
}

/// `strategy,dim,<problem...>`; skipped cells are empty.
pub fn write_correlation(path: &Path, table: &CorrelationTable) -> LabResult<()> {
    let mut header = vec!["strategy".to_string(), "dim".to_string()];
    header.extend(table.problems.iter().map(ToString::to_string));
    let rows = table
        .rows
        .iter()
        .map(|r| {
            let mut row = vec![r.strategy.to_string(), r.dim.to_string()];
            row.extend(r.taus.iter().map(|t| t.map(real).unwrap_or_default()));
            row
        })
        .collect();
    write_csv(path, header, rows)
}

#[derive(Debug, Clone, PartialEq)]
pub struct HsdEntry {
    pub strategy: StrategyKind,
    pub problem: ProblemId,
    pub dim: usize,
    pub matrix: PairwiseVerdictMatrix,
}

/// Per (strategy, problem, dim): Tukey HSD over the accuracy groups plus the
/// matching no-surrogate baseline when the results contain it.
pub fn hsd_matrices(rows: &[TrialRow], alpha: f64) -> LabResult<Vec<HsdEntry>> {
    let (problems, dims) = problems_and_dims(rows);
    let mut entries = Vec::new();
    for strategy in SURROGATE_STRATEGIES.into_iter().filter(|&s| present(rows, s)) {
        for &dim in &dims {
            for &problem in &problems {
                let mut groups: Vec<(String, Vec<f64>)> = sp_levels(rows, problem, dim, strategy)
                    .into_iter()
                    .map(|sp| (sp_label(Some(sp)), final_errors(rows, problem, dim, strategy, Some(sp))))
                    .collect();
                let baseline = final_errors(rows, problem, dim, strategy.baseline(), None);
                if !baseline.is_empty() {
                    groups.push((BASELINE_LABEL.to_string(), baseline));
                }
                if groups.len() < 2 {
                    continue;
                }
                let matrix = tukey_hsd(&groups, alpha).map_err(|e| {
                    LabError::Data(format!("HSD for {strategy} {problem} {dim}D: {e}"))
                })?;
                entries.push(HsdEntry {
                    strategy,
                    problem,
                    dim,
                    matrix,
                });
            }
        }
    }
    Ok(entries)
}

pub fn hsd_file_name(entry: &HsdEntry) -> String {
    format!("{}_{}_{}.csv", entry.strategy, entry.problem, entry.dim)
}

/// One square CSV per entry: `group,<labels...>`, cell `A-better` when the
/// row group is significantly better than the column group.
pub fn write_hsd(dir: &Path, entries: &[HsdEntry]) -> LabResult<Vec<PathBuf>> {
    std::fs::create_dir_all(dir).map_err(|e| LabError::io(dir, e))?;
    let mut written = Vec::new();
    for entry in entries {
        let m = &entry.matrix;
        let mut header = vec!["group".to_string()];
        header.extend(m.labels.iter().cloned());
        let rows = m
            .labels
            .iter()
            .enumerate()
            .map(|(i, label)| {
                let mut row = vec![label.clone()];
                row.extend((0..m.labels.len()).map(|j| verdict_label(m.get(i, j)).to_string()));
                row
            })
            .collect();
        let path = dir.join(hsd_file_name(entry));
        write_csv(&path, header, rows)?;
        written.push(path);
    }
    Ok(written)
}

#[derive(Debug, Clone, PartialEq)]
pub struct MwuEntry {
    pub a: StrategyKind,
    pub b: StrategyKind,
    pub problem: ProblemId,
    pub dim: usize,
    pub sp: f64,
    pub u: f64,
    pub p: f64,
    pub verdict: Verdict,
}

/// Mann-Whitney U between each pair of surrogate strategies at every shared
/// accuracy.
pub fn mwu_comparisons(rows: &[TrialRow], alpha: f64) -> LabResult<Vec<MwuEntry>> {
    let (problems, dims) = problems_and_dims(rows);
    let strategies: Vec<StrategyKind> = SURROGATE_STRATEGIES.into_iter().filter(|&s| present(rows, s)).collect();
    let mut entries = Vec::new();
    for (i, &a) in strategies.iter().enumerate() {
        for &b in &strategies[i + 1..] {
            for &dim in &dims {
                for &problem in &problems {
                    for sp in sp_levels(rows, problem, dim, a) {
                        let xa = final_errors(rows, problem, dim, a, Some(sp));
                        let xb = final_errors(rows, problem, dim, b, Some(sp));
                        if xb.is_empty() {
                            continue;
                        }
                        let r = mann_whitney_u(&xa, &xb, alpha)?;
                        entries.push(MwuEntry {
                            a,
                            b,
                            problem,
                            dim,
                            sp,
                            u: r.u,
                            p: r.p,
                            verdict: r.verdict,
                        });
                    }
                }
            }
        }
    }
    Ok(entries)
}

pub const MWU_HEADER: [&str; 8] = ["strategy_a", "strategy_b", "problem", "dim", "sp", "u", "p", "verdict"];

pub fn write_mwu(path: &Path, entries: &[MwuEntry]) -> LabResult<()> {
    let rows = entries
        .iter()
        .map(|e| {
            vec![
                e.a.to_string(),
                e.b.to_string(),
                e.problem.to_string(),
                e.dim.to_string(),
                sp_label(Some(e.sp)),
                real(e.u),
                real(e.p),
                verdict_label(e.verdict).to_string(),
            ]
        })
        .collect();
    write_csv(path, MWU_HEADER.iter().map(|s| s.to_string()).collect(), rows)
}
