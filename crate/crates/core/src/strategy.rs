//! Model-management strategies driven by the pseudo-surrogate.
//!
//! * PS: pre-selection. An offspring is evaluated only if predicted to beat
//!   its parent, and replaces the parent only if it actually does.
//! * IB: individual-based. Parents and offspring are noisily sorted, the best
//!   predicted unevaluated fraction is evaluated, the best N survive.
//! * GB: generation-based. `surrogate_generations` generations run on
//!   predictions alone, then one best-predicted individual is evaluated.
//! * NoS: no surrogate; every offspring is evaluated. Its PS mode keeps the
//!   parent/offspring replacement flow, its IB mode truncates parents and
//!   offspring together.

use std::fmt;
use std::str::FromStr;

use log::warn;
use serde::{Deserialize, Serialize};

use crate::benchmark::BenchmarkProblem;
use crate::error::{Error, Result};
use crate::evolution::{generate_offspring, lhs_sample, EvolutionConfig, IdSource, Individual};
use crate::oracle::{exact_sort, noisy_sort, EvaluationLedger, PseudoSurrogate};
use crate::seed::{derive_seed, stream, Stream};
use crate::trace::ConvergenceTrace;

/// Steps without any counted evaluation before a trial is declared stalled.
pub const MAX_IDLE_STEPS: usize = 1_000_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum StrategyKind {
    #[serde(rename = "PS")]
    Ps,
    #[serde(rename = "IB")]
    Ib,
    #[serde(rename = "GB")]
    Gb,
    #[serde(rename = "NoS_PS")]
    NosPs,
    #[serde(rename = "NoS_IB")]
    NosIb,
}

impl StrategyKind {
    pub const ALL: [StrategyKind; 5] = [
        StrategyKind::Ps,
        StrategyKind::Ib,
        StrategyKind::Gb,
        StrategyKind::NosPs,
        StrategyKind::NosIb,
    ];

    pub fn name(self) -> &'static str {
        match self {
            StrategyKind::Ps => "PS",
            StrategyKind::Ib => "IB",
            StrategyKind::Gb => "GB",
            StrategyKind::NosPs => "NoS_PS",
            StrategyKind::NosIb => "NoS_IB",
        }
    }

    pub fn uses_surrogate(self) -> bool {
        matches!(self, StrategyKind::Ps | StrategyKind::Ib | StrategyKind::Gb)
    }

    /// The no-surrogate baseline matching this strategy's selection flow.
    pub fn baseline(self) -> StrategyKind {
        match self {
            StrategyKind::Ps | StrategyKind::NosPs => StrategyKind::NosPs,
            _ => StrategyKind::NosIb,
        }
    }

    pub fn code(self) -> u64 {
        match self {
            StrategyKind::Ps => 1,
            StrategyKind::Ib => 2,
            StrategyKind::Gb => 3,
            StrategyKind::NosPs => 4,
            StrategyKind::NosIb => 5,
        }
    }
}

impl fmt::Display for StrategyKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for StrategyKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        StrategyKind::ALL
            .into_iter()
            .find(|k| k.name().eq_ignore_ascii_case(s))
            .ok_or_else(|| Error::InvalidInput(format!("unknown strategy {s:?}")))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StrategyConfig {
    /// IB: fraction of the population evaluated per generation (`r_sm`).
    pub evaluation_ratio: f64,
    /// GB: surrogate-only generations per counted evaluation (`maxGen`).
    pub surrogate_generations: usize,
    /// IB: sort the pool again after evaluating, before truncation.
    pub resort_after_evaluation: bool,
    pub evolution: EvolutionConfig,
}

impl Default for StrategyConfig {
    fn default() -> Self {
        Self {
            evaluation_ratio: 0.5,
            surrogate_generations: 30,
            resort_after_evaluation: true,
            evolution: EvolutionConfig::default(),
        }
    }
}

impl StrategyConfig {
    pub fn validate(&self) -> Result<()> {
        self.evolution.validate()?;
        if !(self.evaluation_ratio > 0.0 && self.evaluation_ratio <= 1.0) {
            return Err(Error::InvalidConfig(format!(
                "evaluation_ratio = {} is outside (0, 1]",
                self.evaluation_ratio
            )));
        }
        if self.surrogate_generations == 0 {
            return Err(Error::InvalidConfig("surrogate_generations must be positive".into()));
        }
        Ok(())
    }

    /// `ceil(r_sm * N)`, ignoring floating-point dust.
    pub fn evaluations_per_generation(&self) -> usize {
        let x = self.evaluation_ratio * self.evolution.pop_size as f64;
        let r = x.round();
        if (x - r).abs() < 1e-9 {
            r as usize
        } else {
            x.ceil() as usize
        }
    }
}

/// What happened during one generation (or GB cycle).
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct StepReport {
    pub evaluations: usize,
    /// PS: offspring the oracle predicted to beat their parent.
    pub predicted_superior: usize,
    /// PS and NoS(PS): parents replaced by their offspring.
    pub replacements: usize,
}

/// Mutable state of one trial.
#[derive(Debug)]
pub struct TrialState<'p> {
    problem: &'p BenchmarkProblem,
    population: Vec<Individual>,
    ledger: EvaluationLedger,
    evolution_rng: Stream,
    oracle: PseudoSurrogate,
    ids: IdSource,
    trace: ConvergenceTrace,
}

fn count(
    ledger: &mut EvaluationLedger,
    trace: &mut ConvergenceTrace,
    problem: &BenchmarkProblem,
    ind: &mut Individual,
) -> Result<f64> {
    let f = ledger.counted_evaluate(ind, problem)?;
    trace.record(ledger.fe(), problem.error_to_optimum(ledger.best_fitness()));
    Ok(f)
}

/// Evaluates a Latin hypercube sample of `5 * dim` points and seeds the
/// population with the best `N` of them.
///
/// `accuracy` is ignored by the no-surrogate baselines.
pub fn initialize_trial<'p>(
    problem: &'p BenchmarkProblem,
    config: &StrategyConfig,
    accuracy: f64,
    max_fe: usize,
    seed: u64,
) -> Result<TrialState<'p>> {
    config.validate()?;
    let initial = 5 * problem.dim();
    if max_fe <= initial {
        return Err(Error::BudgetTooSmall { max_fe, initial });
    }
    let mut evolution_rng = stream(derive_seed(&[seed, 1]));
    let oracle = PseudoSurrogate::new(accuracy, derive_seed(&[seed, 2]))?;
    let mut ids = IdSource::default();
    let mut ledger = EvaluationLedger::new(max_fe);

    let mut sample: Vec<Individual> = lhs_sample(initial, problem.space(), &mut evolution_rng)
        .into_iter()
        .map(|g| Individual::new(ids.next_id(), g))
        .collect();
    for ind in &mut sample {
        ledger.counted_evaluate(ind, problem)?;
    }
    let mut trace = ConvergenceTrace::new();
    trace.record(ledger.fe(), problem.error_to_optimum(ledger.best_fitness()));

    exact_sort(&mut sample);
    let n = config.evolution.pop_size;
    if sample.len() < n {
        warn!(
            "initial sample of {} is smaller than the population size {n}; padding with copies",
            sample.len()
        );
        let have = sample.len();
        for k in 0..n - have {
            let copy = sample[k % have].duplicate(ids.next_id());
            sample.push(copy);
        }
    }
    sample.truncate(n);

    Ok(TrialState {
        problem,
        population: sample,
        ledger,
        evolution_rng,
        oracle,
        ids,
        trace,
    })
}

impl<'p> TrialState<'p> {
    pub fn problem(&self) -> &BenchmarkProblem {
        self.problem
    }

    pub fn population(&self) -> &[Individual] {
        &self.population
    }

    pub fn ledger(&self) -> &EvaluationLedger {
        &self.ledger
    }

    pub fn fe(&self) -> usize {
        self.ledger.fe()
    }

    pub fn trace(&self) -> &ConvergenceTrace {
        &self.trace
    }

    pub fn oracle_calls(&self) -> u64 {
        self.oracle.calls()
    }

    pub fn best_error(&self) -> f64 {
        self.problem.error_to_optimum(self.ledger.best_fitness())
    }

    pub fn into_trace(self) -> ConvergenceTrace {
        self.trace
    }

    fn offspring(&mut self, config: &StrategyConfig) -> Result<Vec<(Individual, usize)>> {
        generate_offspring(
            &self.population,
            &config.evolution,
            self.problem.space(),
            &mut self.ids,
            &mut self.evolution_rng,
        )
    }

    /// Runs one generation (one cycle for GB) of `kind`.
    pub fn step(&mut self, kind: StrategyKind, config: &StrategyConfig) -> Result<StepReport> {
        match kind {
            StrategyKind::Ps => self.ps_generation(config),
            StrategyKind::Ib => self.ib_generation(config),
            StrategyKind::Gb => self.gb_cycle(config),
            StrategyKind::NosPs => self.nos_ps_generation(config),
            StrategyKind::NosIb => self.nos_ib_generation(config),
        }
    }

    pub fn ps_generation(&mut self, config: &StrategyConfig) -> Result<StepReport> {
        let mut report = StepReport::default();
        for (mut off, p) in self.offspring(config)? {
            if self.ledger.exhausted() {
                break;
            }
            let parent = &mut self.population[p];
            if !self.oracle.compare(&mut off, parent, self.problem) {
                continue;
            }
            report.predicted_superior += 1;
            let f = count(&mut self.ledger, &mut self.trace, self.problem, &mut off)?;
            report.evaluations += 1;
            let parent_f = parent.official_fitness().expect("PS parents are evaluated");
            if f < parent_f {
                *parent = off;
                report.replacements += 1;
            }
        }
        Ok(report)
    }

    fn pool_with(&mut self, offspring: Vec<(Individual, usize)>) -> Vec<Individual> {
        let mut pool = std::mem::take(&mut self.population);
        pool.extend(offspring.into_iter().map(|(o, _)| o));
        pool
    }

    pub fn ib_generation(&mut self, config: &StrategyConfig) -> Result<StepReport> {
        let offspring = self.offspring(config)?;
        let mut pool = self.pool_with(offspring);
        noisy_sort(&mut pool, &mut self.oracle, self.problem);

        let quota = config.evaluations_per_generation();
        let mut report = StepReport::default();
        for ind in pool.iter_mut().filter(|i| !i.is_official()) {
            if report.evaluations == quota || self.ledger.exhausted() {
                break;
            }
            count(&mut self.ledger, &mut self.trace, self.problem, ind)?;
            report.evaluations += 1;
        }
        if config.resort_after_evaluation {
            noisy_sort(&mut pool, &mut self.oracle, self.problem);
        }
        pool.truncate(config.evolution.pop_size);
        self.population = pool;
        Ok(report)
    }

    pub fn gb_cycle(&mut self, config: &StrategyConfig) -> Result<StepReport> {
        for _ in 0..config.surrogate_generations {
            let offspring = self.offspring(config)?;
            let mut pool = self.pool_with(offspring);
            noisy_sort(&mut pool, &mut self.oracle, self.problem);
            pool.truncate(config.evolution.pop_size);
            self.population = pool;
        }
        let mut report = StepReport::default();
        if self.ledger.exhausted() {
            return Ok(report);
        }
        match self.population.iter_mut().find(|i| !i.is_official()) {
            Some(best) => {
                count(&mut self.ledger, &mut self.trace, self.problem, best)?;
                report.evaluations = 1;
            }
            None => warn!("GB cycle ended with an all-evaluated population; nothing to evaluate"),
        }
        Ok(report)
    }

    pub fn nos_ps_generation(&mut self, config: &StrategyConfig) -> Result<StepReport> {
        let mut report = StepReport::default();
        for (mut off, p) in self.offspring(config)? {
            if self.ledger.exhausted() {
                break;
            }
            let f = count(&mut self.ledger, &mut self.trace, self.problem, &mut off)?;
            report.evaluations += 1;
            let parent = &mut self.population[p];
            if f < parent.official_fitness().expect("NoS parents are evaluated") {
                *parent = off;
                report.replacements += 1;
            }
        }
        Ok(report)
    }

    pub fn nos_ib_generation(&mut self, config: &StrategyConfig) -> Result<StepReport> {
        let offspring = self.offspring(config)?;
        let mut report = StepReport::default();
        let mut pool = std::mem::take(&mut self.population);
        for (mut off, _) in offspring {
            if self.ledger.exhausted() {
                break;
            }
            count(&mut self.ledger, &mut self.trace, self.problem, &mut off)?;
            report.evaluations += 1;
            pool.push(off);
        }
        exact_sort(&mut pool);
        pool.truncate(config.evolution.pop_size);
        self.population = pool;
        Ok(report)
    }
}

/// A finished trial.
#[derive(Debug, Clone, PartialEq)]
pub struct TrialOutcome {
    pub trace: ConvergenceTrace,
    pub final_error: f64,
    pub counted_fe: usize,
    pub oracle_calls: u64,
}

/// Initializes a trial and steps `kind` until the budget is spent.
pub fn run_strategy(
    problem: &BenchmarkProblem,
    kind: StrategyKind,
    config: &StrategyConfig,
    accuracy: f64,
    max_fe: usize,
    seed: u64,
) -> Result<TrialOutcome> {
    let mut state = initialize_trial(problem, config, accuracy, max_fe, seed)?;
    let mut idle = 0;
    while !state.ledger.exhausted() {
        let report = state.step(kind, config)?;
        if report.evaluations == 0 {
            idle += 1;
            if idle >= MAX_IDLE_STEPS {
                return Err(Error::Stalled { cycles: idle });
            }
        } else {
            idle = 0;
        }
    }
    let counted_fe = state.fe();
    let oracle_calls = state.oracle_calls();
    let final_error = state.best_error();
    Ok(TrialOutcome {
        trace: state.into_trace(),
        final_error,
        counted_fe,
        oracle_calls,
    })
}
