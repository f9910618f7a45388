//! JSON plan documents.
//!
//! Every key is optional and falls back to the paper setting; unknown keys
//! are rejected. `schema_version`, when present, must be 1.

use std::fs;
use std::path::{Path, PathBuf};

use saea_core::evolution::{AlphaRange, MutationMode};
use saea_core::runner::DEFAULT_CHECKPOINT_STEP;
use saea_core::{ExperimentPlan, ProblemId, ProblemSpec, StrategyKind};
use serde::{Deserialize, Serialize};

use crate::error::{LabError, LabResult};

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProblemEntry {
    pub id: ProblemId,
    pub dim: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lower: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub upper: Option<f64>,
    /// Shift/rotation data file, relative to the plan file.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub data: Option<PathBuf>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PlanDocument {
    pub schema_version: Option<u32>,
    pub problems: Option<Vec<ProblemEntry>>,
    pub strategies: Option<Vec<StrategyKind>>,
    pub sp_values: Option<Vec<f64>>,
    pub trials: Option<usize>,
    pub max_fe: Option<usize>,
    pub base_seed: Option<u64>,
    pub pop_size: Option<usize>,
    pub crossover_rate: Option<f64>,
    pub mutation_rate: Option<f64>,
    pub gamma: Option<f64>,
    pub alpha_range: Option<AlphaRange>,
    pub mutation_mode: Option<MutationMode>,
    pub evaluation_ratio: Option<f64>,
    pub surrogate_generations: Option<usize>,
    pub resort_after_evaluation: Option<bool>,
    pub checkpoint_step: Option<usize>,
}

/// A validated plan plus output settings.
#[derive(Debug, Clone, PartialEq)]
pub struct LabPlan {
    pub experiment: ExperimentPlan,
    pub checkpoint_step: usize,
}

impl Default for LabPlan {
    fn default() -> Self {
        Self {
            experiment: ExperimentPlan::paper(),
            checkpoint_step: DEFAULT_CHECKPOINT_STEP,
        }
    }
}

impl PlanDocument {
    /// Applies defaults and validates. Relative data paths are resolved
    /// against `base_dir`.
    pub fn resolve(self, base_dir: Option<&Path>) -> LabResult<LabPlan> {
        if let Some(v) = self.schema_version {
            if v != SCHEMA_VERSION {
                return Err(LabError::Plan(format!(
                    "schema_version: {v} is not supported (expected {SCHEMA_VERSION})"
                )));
            }
        }
        let mut plan = LabPlan::default();
        let exp = &mut plan.experiment;
        if let Some(problems) = self.problems {
            exp.problems = problems
                .into_iter()
                .map(|p| {
                    let mut spec = ProblemSpec::new(p.id, p.dim);
                    spec.lower = p.lower.unwrap_or(spec.lower);
                    spec.upper = p.upper.unwrap_or(spec.upper);
                    spec.data = p.data.map(|d| match base_dir {
                        Some(dir) if d.is_relative() => dir.join(d),
                        _ => d,
                    });
                    spec
                })
                .collect();
        }
        if let Some(v) = self.strategies {
            exp.strategies = v;
        }
        if let Some(v) = self.sp_values {
            exp.sp_values = v;
        }
        if let Some(v) = self.trials {
            exp.trials = v;
        }
        if let Some(v) = self.max_fe {
            exp.max_fe = v;
        }
        if let Some(v) = self.base_seed {
            exp.base_seed = v;
        }
        let cfg = &mut exp.config;
        if let Some(v) = self.pop_size {
            cfg.evolution.pop_size = v;
        }
        if let Some(v) = self.crossover_rate {
            cfg.evolution.crossover_rate = v;
        }
        if let Some(v) = self.mutation_rate {
            cfg.evolution.mutation_rate = v;
        }
        if let Some(v) = self.gamma {
            cfg.evolution.gamma = v;
        }
        if let Some(v) = self.alpha_range {
            cfg.evolution.alpha_range = v;
        }
        if let Some(v) = self.mutation_mode {
            cfg.evolution.mutation_mode = v;
        }
        if let Some(v) = self.evaluation_ratio {
            cfg.evaluation_ratio = v;
        }
        if let Some(v) = self.surrogate_generations {
            cfg.surrogate_generations = v;
        }
        if let Some(v) = self.resort_after_evaluation {
            cfg.resort_after_evaluation = v;
        }
        if let Some(v) = self.checkpoint_step {
            if v == 0 {
                return Err(LabError::Plan("checkpoint_step: must be positive".into()));
            }
            plan.checkpoint_step = v;
        }
        plan.experiment.validate().map_err(|e| match e {
            saea_core::Error::InvalidConfig(msg) => LabError::Plan(msg),
            other => LabError::Plan(other.to_string()),
        })?;
        Ok(plan)
    }
}

impl From<&LabPlan> for PlanDocument {
    /// The fully explicit document of a plan.
    fn from(plan: &LabPlan) -> Self {
        let exp = &plan.experiment;
        let cfg = &exp.config;
        PlanDocument {
            schema_version: Some(SCHEMA_VERSION),
            problems: Some(
                exp.problems
                    .iter()
                    .map(|p| ProblemEntry {
                        id: p.id,
                        dim: p.dim,
                        lower: Some(p.lower),
                        upper: Some(p.upper),
                        data: p.data.clone(),
                    })
                    .collect(),
            ),
            strategies: Some(exp.strategies.clone()),
            sp_values: Some(exp.sp_values.clone()),
            trials: Some(exp.trials),
            max_fe: Some(exp.max_fe),
            base_seed: Some(exp.base_seed),
            pop_size: Some(cfg.evolution.pop_size),
            crossover_rate: Some(cfg.evolution.crossover_rate),
            mutation_rate: Some(cfg.evolution.mutation_rate),
            gamma: Some(cfg.evolution.gamma),
            alpha_range: Some(cfg.evolution.alpha_range),
            mutation_mode: Some(cfg.evolution.mutation_mode),
            evaluation_ratio: Some(cfg.evaluation_ratio),
            surrogate_generations: Some(cfg.surrogate_generations),
            resort_after_evaluation: Some(cfg.resort_after_evaluation),
            checkpoint_step: Some(plan.checkpoint_step),
        }
    }
}

/// Parses a plan from JSON text. Blank text is the paper plan.
pub fn parse_plan_str(text: &str, base_dir: Option<&Path>) -> LabResult<LabPlan> {
    let doc: PlanDocument = if text.trim().is_empty() {
        PlanDocument::default()
    } else {
        serde_json::from_str(text).map_err(|e| LabError::Plan(e.to_string()))?
    };
    doc.resolve(base_dir)
}

pub fn parse_plan(path: &Path) -> LabResult<LabPlan> {
    let text = fs::read_to_string(path).map_err(|e| LabError::io(path, e))?;
    parse_plan_str(&text, path.parent())
}

pub fn plan_to_json(plan: &LabPlan) -> String {
    let mut text = serde_json::to_string_pretty(&PlanDocument::from(plan)).expect("plan documents serialize");
    text.push('\n');
    text
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_document_is_paper_plan() {
        let plan = parse_plan_str("{}", None).unwrap();
        assert_eq!(plan, LabPlan::default());
        assert_eq!(parse_plan_str("  \n", None).unwrap(), plan);
        let cfg = &plan.experiment.config;
        assert_eq!(cfg.evolution.pop_size, 40);
        assert_eq!(cfg.evolution.crossover_rate, 0.7);
        assert_eq!(cfg.evolution.mutation_rate, 0.3);
        assert_eq!(cfg.evolution.gamma, 0.4);
        assert_eq!(cfg.evaluation_ratio, 0.5);
        assert_eq!(cfg.surrogate_generations, 30);
        assert_eq!(plan.experiment.max_fe, 2000);
        assert_eq!(plan.experiment.trials, 21);
    }

    #[test]
    fn fine_sweep() {
        let sp: Vec<f64> = (50..=60).map(|k| k as f64 / 100.0).collect();
        let text = serde_json::json!({ "sp_values": sp }).to_string();
        assert_eq!(parse_plan_str(&text, None).unwrap().experiment.sp_values, sp);
    }

    #[test]
    fn errors_name_the_key() {
        for (text, key) in [
            (r#"{"crossover_rate": 1.5}"#, "crossover_rate"),
            (r#"{"colour": 1}"#, "colour"),
            (r#"{"trials": 0}"#, "trials"),
            (r#"{"schema_version": 2}"#, "schema_version"),
            (r#"{"checkpoint_step": 0}"#, "checkpoint_step"),
            (r#"{"problems": [{"id": "F4", "dim": 1}]}"#, "problems[0].dim"),
            (r#"{"problems": [{"id": "F4", "dim": 3, "bias": 2}]}"#, "bias"),
            (r#"{"strategies": ["PS", "XX"]}"#, "XX"),
            (r#"{"evaluation_ratio": 0}"#, "evaluation_ratio"),
        ] {
            let err = parse_plan_str(text, None).unwrap_err();
            assert!(matches!(err, LabError::Plan(_)));
            assert!(err.to_string().contains(key), "{text}: {err}");
        }
    }

    #[test]
    fn relative_data_paths_follow_the_plan() {
        let text = r#"{"problems": [{"id": "F1", "dim": 2, "data": "f1.txt"}]}"#;
        let plan = parse_plan_str(text, Some(Path::new("/plans"))).unwrap();
        assert_eq!(plan.experiment.problems[0].data.as_deref(), Some(Path::new("/plans/f1.txt")));
    }
}
