use proptest::prelude::*;
use saea_core::evolution::{AlphaRange, MutationMode};
use saea_core::{ProblemId, ProblemSpec, StrategyKind};
use saea_lab::{parse_plan_str, plan_to_json, LabPlan};

fn plan_strategy() -> impl Strategy<Value = LabPlan> {
    (
        prop::sample::subsequence(ProblemId::ALL.to_vec(), 1..=6),
        2usize..20,
        prop::sample::subsequence(StrategyKind::ALL.to_vec(), 1..=5),
        prop::collection::btree_set(0u32..=100, 1..8),
        (1usize..30, 0u64..u64::MAX, 1usize..50),
        (2usize..60, 0.0f64..=1.0, 0.0f64..=1.0, 0.0f64..2.0, any::<bool>(), any::<bool>()),
        (0.01f64..=1.0, 1usize..50, any::<bool>()),
    )
        .prop_map(|(problems, dim, strategies, sp, (trials, seed, step), evo, (ratio, gens, resort))| {
            let mut plan = LabPlan::default();
            let exp = &mut plan.experiment;
            exp.problems = problems.into_iter().map(|id| ProblemSpec::new(id, dim)).collect();
            exp.strategies = strategies;
            exp.sp_values = sp.into_iter().map(|v| v as f64 / 100.0).collect();
            exp.trials = trials;
            exp.base_seed = seed;
            exp.max_fe = 5 * dim + 100;
            let (pop, pc, pm, gamma, literal, per_gene) = evo;
            let e = &mut exp.config.evolution;
            e.pop_size = pop;
            e.crossover_rate = pc;
            e.mutation_rate = pm;
            e.gamma = gamma;
            e.alpha_range = if literal { AlphaRange::Literal } else { AlphaRange::Standard };
            e.mutation_mode = if per_gene { MutationMode::PerGene } else { MutationMode::PerIndividual };
            exp.config.evaluation_ratio = ratio;
            exp.config.surrogate_generations = gens;
            exp.config.resort_after_evaluation = resort;
            plan.checkpoint_step = step;
            plan
        })
}

proptest! {
    #[test]
    fn written_plans_parse_back_equal(plan in plan_strategy()) {
        let text = plan_to_json(&plan);
        prop_assert_eq!(parse_plan_str(&text, None).unwrap(), plan);
    }
}

#[test]
fn paper_plan_document_round_trips() {
    let plan = LabPlan::default();
    let text = plan_to_json(&plan);
    assert!(text.contains("\"schema_version\": 1"));
    assert_eq!(parse_plan_str(&text, None).unwrap(), plan);
}
