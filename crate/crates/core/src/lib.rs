//! Pseudo-surrogate laboratory for surrogate-assisted evolutionary algorithms.
//!
//! Learned surrogates are replaced by a comparison oracle whose accuracy is a
//! dial, so the effect of prediction accuracy on pre-selection,
//! individual-based and generation-based model management can be measured
//! directly against a no-surrogate baseline.

pub mod benchmark;
pub mod error;
pub mod evolution;
pub mod oracle;
pub mod runner;
pub mod seed;
pub mod stats;
pub mod strategy;
pub mod trace;

pub use benchmark::{build_problem, BenchmarkProblem, Landscape, ProblemId, SearchSpace};
pub use error::{Error, Result};
pub use evolution::{EvolutionConfig, Individual};
pub use oracle::{noisy_sort, EvaluationLedger, PseudoSurrogate};
pub use strategy::{run_strategy, StrategyConfig, StrategyKind, TrialOutcome};
pub use trace::ConvergenceTrace;
pub use runner::{run_experiment, ExperimentPlan, ProblemSpec, TrialResult};
