//! Experiment grids: seeds, parallel execution and trace aggregation.

use std::path::PathBuf;

use log::{debug, info};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::benchmark::{build_problem_in, BenchmarkProblem, ProblemData, ProblemId, SearchSpace};
use crate::benchmark::{DEFAULT_LOWER, DEFAULT_UPPER};
use crate::error::{Error, Result};
use crate::seed::derive_seed;
use crate::strategy::{run_strategy, StrategyConfig, StrategyKind};
use crate::trace::ConvergenceTrace;

pub const PAPER_TRIALS: usize = 21;
pub const PAPER_MAX_FE: usize = 2000;
pub const PAPER_DIMS: [usize; 2] = [10, 30];
pub const PAPER_SP_VALUES: [f64; 6] = [0.5, 0.6, 0.7, 0.8, 0.9, 1.0];
pub const DEFAULT_CHECKPOINT_STEP: usize = 10;

/// Seed word standing in for the sp index of cells without an sp axis.
const NO_SP: u64 = u64::MAX;

/// One problem instance of a plan.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProblemSpec {
    pub id: ProblemId,
    pub dim: usize,
    pub lower: f64,
    pub upper: f64,
    /// Optional shift/rotation file replacing the generated instance data.
    pub data: Option<PathBuf>,
}

impl ProblemSpec {
    pub fn new(id: ProblemId, dim: usize) -> Self {
        Self {
            id,
            dim,
            lower: DEFAULT_LOWER,
            upper: DEFAULT_UPPER,
            data: None,
        }
    }

    /// Instantiates the problem. Generated instance data depends only on
    /// `base_seed`, the problem id and the dimension.
    pub fn build(&self, base_seed: u64) -> Result<BenchmarkProblem> {
        let space = SearchSpace::uniform(self.dim, self.lower, self.upper)?;
        let problem = build_problem_in(self.id, space, base_seed)?;
        match &self.data {
            Some(path) => problem.with_data(ProblemData::load(path)?),
            None => Ok(problem),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentPlan {
    pub problems: Vec<ProblemSpec>,
    pub strategies: Vec<StrategyKind>,
    pub sp_values: Vec<f64>,
    pub trials: usize,
    pub max_fe: usize,
    pub base_seed: u64,
    pub config: StrategyConfig,
}

impl ExperimentPlan {
    /// Six problems in 10 and 30 dimensions, every strategy, six accuracies,
    /// 21 trials of 2000 evaluations.
    pub fn paper() -> Self {
        let problems = PAPER_DIMS
            .iter()
            .flat_map(|&dim| ProblemId::ALL.iter().map(move |&id| ProblemSpec::new(id, dim)))
            .collect();
        Self {
            problems,
            strategies: StrategyKind::ALL.to_vec(),
            sp_values: PAPER_SP_VALUES.to_vec(),
            trials: PAPER_TRIALS,
            max_fe: PAPER_MAX_FE,
            base_seed: 0,
            config: StrategyConfig::default(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        let invalid = |msg: String| Err(Error::InvalidConfig(msg));
        if self.problems.is_empty() {
            return invalid("problems: plan lists no problems".into());
        }
        if self.strategies.is_empty() {
            return invalid("strategies: plan lists no strategies".into());
        }
        if self.trials == 0 {
            return invalid("trials: must be positive".into());
        }
        for (i, p) in self.problems.iter().enumerate() {
            if p.dim < 2 {
                return invalid(format!("problems[{i}].dim: {} is below 2", p.dim));
            }
            if !(p.lower.is_finite() && p.upper.is_finite() && p.lower < p.upper) {
                return invalid(format!(
                    "problems[{i}]: bounds [{}, {}] are not a finite interval",
                    p.lower, p.upper
                ));
            }
            if self.max_fe <= 5 * p.dim {
                return invalid(format!(
                    "max_fe: {} does not exceed the initial sample 5 * {} of problems[{i}]",
                    self.max_fe, p.dim
                ));
            }
            if self.problems[..i].iter().any(|q| q.id == p.id && q.dim == p.dim) {
                return invalid(format!("problems[{i}]: {} in {}D is listed twice", p.id, p.dim));
            }
        }
        for (i, s) in self.strategies.iter().enumerate() {
            if self.strategies[..i].contains(s) {
                return invalid(format!("strategies: {s} is listed twice"));
            }
        }
        for (i, &sp) in self.sp_values.iter().enumerate() {
            if !(0.0..=1.0).contains(&sp) {
                return invalid(format!("sp_values[{i}]: {sp} is outside [0, 1]"));
            }
            if self.sp_values[..i].contains(&sp) {
                return invalid(format!("sp_values[{i}]: {sp} is listed twice"));
            }
        }
        if self.sp_values.is_empty() && self.strategies.iter().any(|s| s.uses_surrogate()) {
            return invalid("sp_values: surrogate strategies need at least one accuracy".into());
        }
        self.config.validate()
    }

    /// Grid cells in canonical order: problems, then strategies, then sp.
    pub fn cells(&self) -> Vec<Cell> {
        let mut cells = Vec::new();
        for problem in &self.problems {
            for &strategy in &self.strategies {
                if strategy.uses_surrogate() {
                    for (sp_index, &sp) in self.sp_values.iter().enumerate() {
                        cells.push(Cell {
                            problem: problem.id,
                            dim: problem.dim,
                            strategy,
                            sp: Some(sp),
                            sp_index: Some(sp_index),
                        });
                    }
                } else {
                    cells.push(Cell {
                        problem: problem.id,
                        dim: problem.dim,
                        strategy,
                        sp: None,
                        sp_index: None,
                    });
                }
            }
        }
        cells
    }

    pub fn trial_count(&self) -> usize {
        self.cells().len() * self.trials
    }

    pub fn trial_seed(&self, cell: &Cell, trial: usize) -> u64 {
        derive_seed(&[
            self.base_seed,
            cell.problem.code(),
            cell.dim as u64,
            cell.strategy.code(),
            cell.sp_index.map_or(NO_SP, |i| i as u64),
            trial as u64,
        ])
    }
}

impl Default for ExperimentPlan {
    fn default() -> Self {
        Self::paper()
    }
}

/// One (problem, dimension, strategy, accuracy) combination.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Cell {
    pub problem: ProblemId,
    pub dim: usize,
    pub strategy: StrategyKind,
    /// `None` for strategies without a surrogate.
    pub sp: Option<f64>,
    pub sp_index: Option<usize>,
}

impl Cell {
    fn describe(&self, trial: usize) -> String {
        let sp = self.sp.map_or_else(|| "none".to_string(), |s| s.to_string());
        format!(
            "(problem {}, dim {}, strategy {}, sp {sp}, trial {trial})",
            self.problem, self.dim, self.strategy
        )
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialResult {
    pub problem: ProblemId,
    pub dim: usize,
    pub strategy: StrategyKind,
    pub sp: Option<f64>,
    pub trial: usize,
    pub seed: u64,
    pub trace: ConvergenceTrace,
    pub final_error: f64,
    pub counted_fe: usize,
    pub oracle_calls: u64,
}

/// Runs one trial of `cell` on an already built problem.
pub fn run_trial(
    problem: &BenchmarkProblem,
    cell: &Cell,
    trial: usize,
    seed: u64,
    config: &StrategyConfig,
    max_fe: usize,
) -> Result<TrialResult> {
    let outcome = run_strategy(problem, cell.strategy, config, cell.sp.unwrap_or(1.0), max_fe, seed)
        .map_err(|e| Error::Trial {
            coordinates: cell.describe(trial),
            source: Box::new(e),
        })?;
    Ok(TrialResult {
        problem: cell.problem,
        dim: cell.dim,
        strategy: cell.strategy,
        sp: cell.sp,
        trial,
        seed,
        trace: outcome.trace,
        final_error: outcome.final_error,
        counted_fe: outcome.counted_fe,
        oracle_calls: outcome.oracle_calls,
    })
}

/// Runs every trial of the plan on `threads` workers. Results come back in
/// canonical order (cells as in [`ExperimentPlan::cells`], then trial index)
/// whatever the thread count.
pub fn run_experiment(plan: &ExperimentPlan, threads: usize) -> Result<Vec<TrialResult>> {
    plan.validate()?;
    if threads == 0 {
        return Err(Error::InvalidConfig("threads: must be positive".into()));
    }
    let problems = plan
        .problems
        .iter()
        .map(|p| p.build(plan.base_seed))
        .collect::<Result<Vec<_>>>()?;
    let cells = plan.cells();
    let jobs: Vec<(&Cell, usize)> = cells
        .iter()
        .flat_map(|c| (0..plan.trials).map(move |t| (c, t)))
        .collect();
    info!("running {} trials over {} cells on {threads} threads", jobs.len(), cells.len());

    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| Error::InvalidConfig(format!("threads: {e}")))?;
    pool.install(|| {
        jobs.par_iter()
            .map(|&(cell, trial)| {
                let problem = problems
                    .iter()
                    .find(|p| p.id() == cell.problem && p.dim() == cell.dim)
                    .expect("every cell has a built problem");
                let seed = plan.trial_seed(cell, trial);
                let result = run_trial(problem, cell, trial, seed, &plan.config, plan.max_fe)?;
                debug!(
                    "{} done: error {:e}, fe {}, oracle calls {}",
                    cell.describe(trial),
                    result.final_error,
                    result.counted_fe,
                    result.oracle_calls
                );
                Ok(result)
            })
            .collect()
    })
}

/// Every `step` evaluations from the initial sample `5 * dim` up to
/// `max_fe`, with `max_fe` always included.
pub fn checkpoint_grid(dim: usize, max_fe: usize, step: usize) -> Vec<usize> {
    let start = 5 * dim;
    let mut grid: Vec<usize> = (start..=max_fe).step_by(step.max(1)).collect();
    if grid.last() != Some(&max_fe) && max_fe >= start {
        grid.push(max_fe);
    }
    grid
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SummaryPoint {
    pub fe: usize,
    pub mean_error: f64,
    pub std_error: f64,
    pub trials: usize,
}

/// Mean and spread of the best-so-far error of one cell along a grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceSummary {
    pub problem: ProblemId,
    pub dim: usize,
    pub strategy: StrategyKind,
    pub sp: Option<f64>,
    pub points: Vec<SummaryPoint>,
}

/// Mean and sample standard deviation (`n - 1`; 0 for a single value).
pub fn mean_std(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    if values.len() < 2 {
        return (mean, 0.0);
    }
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, var.sqrt())
}

fn same_cell(a: &TrialResult, b: &TrialResult) -> bool {
    a.problem == b.problem
        && a.dim == b.dim
        && a.strategy == b.strategy
        && a.sp.map(f64::to_bits) == b.sp.map(f64::to_bits)
}

/// Averages the traces of each cell on `grid`, carrying the last value
/// forward between trace points. Cells appear in first-seen order.
pub fn aggregate_traces(results: &[TrialResult], grid: &[usize]) -> Result<Vec<TraceSummary>> {
    let mut groups: Vec<Vec<&TrialResult>> = Vec::new();
    for r in results {
        if r.trace.is_empty() {
            return Err(Error::InvalidInput(format!(
                "trial {} of {} {}D {} has an empty trace",
                r.trial, r.problem, r.dim, r.strategy
            )));
        }
        match groups.iter_mut().find(|g| same_cell(g[0], r)) {
            Some(g) => g.push(r),
            None => groups.push(vec![r]),
        }
    }
    Ok(groups
        .into_iter()
        .map(|group| {
            let points = grid
                .iter()
                .map(|&fe| {
                    let values: Vec<f64> = group
                        .iter()
                        .map(|r| r.trace.value_at(fe).expect("trace is not empty"))
                        .collect();
                    let (mean_error, std_error) = mean_std(&values);
                    SummaryPoint {
                        fe,
                        mean_error,
                        std_error,
                        trials: values.len(),
                    }
                })
                .collect();
            let first = group[0];
            TraceSummary {
                problem: first.problem,
                dim: first.dim,
                strategy: first.strategy,
                sp: first.sp,
                points,
            }
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::collections::HashSet;

    fn small_plan() -> ExperimentPlan {
        ExperimentPlan {
            problems: vec![ProblemSpec::new(ProblemId::F1, 4), ProblemSpec::new(ProblemId::F4, 4)],
            strategies: vec![StrategyKind::Ps, StrategyKind::NosIb],
            sp_values: vec![0.6, 1.0],
            trials: 3,
            max_fe: 120,
            base_seed: 9,
            config: StrategyConfig::default(),
        }
    }

    #[test]
    fn paper_grid_size() {
        let plan = ExperimentPlan::paper();
        assert!(plan.validate().is_ok());
        // 3 surrogate strategies x 6 accuracies + 2 baseline modes
        assert_eq!(plan.cells().len(), 6 * 2 * (3 * 6 + 2));
        assert_eq!(plan.trial_count(), 6 * 2 * 20 * 21);
    }

    #[test]
    fn seeds_are_injective_over_paper_grid() {
        let plan = ExperimentPlan::paper();
        let mut seen = HashSet::new();
        for cell in plan.cells() {
            for t in 0..plan.trials {
                assert!(seen.insert(plan.trial_seed(&cell, t)));
            }
        }
        assert_eq!(seen.len(), plan.trial_count());
    }

    #[test]
    fn validation_names_the_field() {
        let mut plan = small_plan();
        plan.sp_values.push(1.5);
        assert!(plan.validate().unwrap_err().to_string().contains("sp_values[2]"));
        let mut plan = small_plan();
        plan.max_fe = 20;
        assert!(plan.validate().unwrap_err().to_string().contains("max_fe"));
        let mut plan = small_plan();
        plan.problems.push(ProblemSpec::new(ProblemId::F1, 4));
        assert!(plan.validate().unwrap_err().to_string().contains("problems[2]"));
        let mut plan = small_plan();
        plan.sp_values.clear();
        assert!(plan.validate().is_err());
        plan.strategies = vec![StrategyKind::NosPs];
        assert!(plan.validate().is_ok());
    }

    #[test]
    fn results_are_complete_and_canonical() {
        let plan = small_plan();
        let results = run_experiment(&plan, 2).unwrap();
        assert_eq!(results.len(), plan.trial_count());
        let cells = plan.cells();
        for (i, r) in results.iter().enumerate() {
            let cell = &cells[i / plan.trials];
            assert_eq!((r.problem, r.dim, r.strategy, r.sp), (cell.problem, cell.dim, cell.strategy, cell.sp));
            assert_eq!(r.trial, i % plan.trials);
            assert_eq!(r.final_error, r.trace.last().unwrap().best_error);
            assert!(r.counted_fe >= plan.max_fe && r.counted_fe < plan.max_fe + 40);
        }
        assert_eq!(results, run_experiment(&plan, 1).unwrap());
    }

    #[test]
    fn baseline_only_plan() {
        let mut plan = small_plan();
        plan.sp_values.clear();
        plan.strategies = vec![StrategyKind::NosPs];
        let results = run_experiment(&plan, 1).unwrap();
        assert_eq!(results.len(), 2 * 3);
        assert!(results.iter().all(|r| r.sp.is_none() && r.oracle_calls == 0));
    }

    #[test]
    fn trial_errors_carry_coordinates() {
        let mut plan = small_plan();
        plan.config.surrogate_generations = 0;
        plan.strategies = vec![StrategyKind::Gb];
        // An invalid config is caught up front, before any trial runs.
        assert!(matches!(run_experiment(&plan, 1), Err(Error::InvalidConfig(_))));

        let problem = ProblemSpec::new(ProblemId::F1, 4).build(0).unwrap();
        let cell = small_plan().cells()[0];
        let err = run_trial(&problem, &cell, 5, 1, &StrategyConfig::default(), 10).unwrap_err();
        let text = err.to_string();
        assert!(text.contains("problem F1") && text.contains("trial 5"), "{text}");
    }

    #[test]
    fn grid_covers_budget() {
        assert_eq!(checkpoint_grid(30, 2000, 10).first(), Some(&150));
        assert_eq!(checkpoint_grid(30, 2000, 10).last(), Some(&2000));
        assert_eq!(checkpoint_grid(10, 2000, 10).len(), 196);
        assert_eq!(checkpoint_grid(3, 31, 10), vec![15, 25, 31]);
    }

    fn fake(trial: usize, points: &[(usize, f64)]) -> TrialResult {
        let mut trace = ConvergenceTrace::new();
        for &(fe, e) in points {
            trace.record(fe, e);
        }
        TrialResult {
            problem: ProblemId::F2,
            dim: 2,
            strategy: StrategyKind::Ib,
            sp: Some(0.7),
            trial,
            seed: 0,
            final_error: points.last().unwrap().1,
            trace,
            counted_fe: points.last().unwrap().0,
            oracle_calls: 0,
        }
    }

    #[test]
    fn aggregation_carries_forward() {
        let a = fake(0, &[(10, 8.0), (14, 4.0), (30, 1.0)]);
        let b = fake(1, &[(10, 6.0), (22, 2.0), (30, 2.0)]);
        let s = aggregate_traces(&[a.clone(), b], &[10, 20, 30]).unwrap();
        assert_eq!(s.len(), 1);
        let means: Vec<f64> = s[0].points.iter().map(|p| p.mean_error).collect();
        assert_eq!(means, vec![7.0, 5.0, 1.5]);
        assert!((s[0].points[0].std_error - 2f64.sqrt()).abs() < 1e-12);

        let single = aggregate_traces(std::slice::from_ref(&a), &[5, 10, 13, 14, 40]).unwrap();
        let own: Vec<f64> = [5, 10, 13, 14, 40].iter().map(|&fe| a.trace.value_at(fe).unwrap()).collect();
        assert_eq!(single[0].points.iter().map(|p| p.mean_error).collect::<Vec<_>>(), own);
        assert!(single[0].points.iter().all(|p| p.std_error == 0.0 && p.trials == 1));
    }
}
