use std::fs;
use std::path::Path;

use proptest::prelude::*;
use saea_core::{ConvergenceTrace, ProblemId, StrategyKind, TrialResult};
use saea_lab::results::{load_raw_results, read_trials, write_run, TrialRow, RAW_DIR, TRACES_DIR, TRIALS_FILE};
use saea_lab::LabPlan;

fn read_csv(path: &Path) -> (Vec<String>, Vec<Vec<String>>) {
    let mut r = csv::Reader::from_path(path).unwrap();
    let header = r.headers().unwrap().iter().map(String::from).collect();
    let rows = r.records().map(|rec| rec.unwrap().iter().map(String::from).collect()).collect();
    (header, rows)
}

fn trace_from(start: usize, max_fe: usize, steps: &[(usize, f64)], first: f64) -> ConvergenceTrace {
    let mut t = ConvergenceTrace::new();
    let (mut fe, mut err) = (start, first);
    t.record(fe, err);
    for &(gap, factor) in steps {
        fe = (fe + gap).min(max_fe);
        err *= factor;
        t.record(fe, err);
    }
    t.record(max_fe, err);
    t
}

prop_compose! {
    fn result_set()(
        dim in 2usize..6,
        cells in prop::collection::vec(
            (0usize..6, 0usize..5, prop::option::of(0u32..=10)),
            1..5,
        ),
        trials in 1usize..4,
        walks in prop::collection::vec(
            (1e-3f64..1e6, prop::collection::vec((1usize..40, 0.1f64..=1.0), 0..15)),
            60,
        ),
    ) -> (usize, Vec<TrialResult>) {
        let max_fe = 5 * dim + 120;
        let mut seen = Vec::new();
        let mut results = Vec::new();
        for (problem, strategy, sp) in cells {
            let strategy = StrategyKind::ALL[strategy];
            let sp = if strategy.uses_surrogate() { Some(sp.unwrap_or(5) as f64 / 10.0) } else { None };
            let key = (problem, strategy, sp.map(f64::to_bits));
            if seen.contains(&key) {
                continue;
            }
            seen.push(key);
            for trial in 0..trials {
                let (first, steps) = &walks[results.len() % walks.len()];
                let trace = trace_from(5 * dim, max_fe, steps, *first);
                results.push(TrialResult {
                    problem: ProblemId::ALL[problem],
                    dim,
                    strategy,
                    sp,
                    trial,
                    seed: results.len() as u64 * 7919,
                    final_error: trace.last().unwrap().best_error,
                    counted_fe: max_fe,
                    oracle_calls: 3 * results.len() as u64,
                    trace,
                });
            }
        }
        (max_fe, results)
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn emitted_csvs_honour_their_contracts((max_fe, results) in result_set()) {
        let dir = tempfile::tempdir().unwrap();
        let mut plan = LabPlan::default();
        plan.experiment.max_fe = max_fe;
        plan.checkpoint_step = 7;
        write_run(dir.path(), &plan, &results, true).unwrap();

        let rows = read_trials(&dir.path().join(TRIALS_FILE)).unwrap();
        let expected: Vec<TrialRow> = results.iter().map(TrialRow::from).collect();
        prop_assert_eq!(&rows, &expected);
        prop_assert_eq!(load_raw_results(dir.path(), &rows).unwrap(), results.clone());

        let dim = results[0].dim;
        for entry in fs::read_dir(dir.path().join(TRACES_DIR)).unwrap() {
            let (header, body) = read_csv(&entry.unwrap().path());
            prop_assert_eq!(header, vec!["fe", "sp", "mean_error", "std_error", "trials"]);
            prop_assert!(!body.is_empty());
            let mut prev: Option<(String, f64)> = None;
            for row in &body {
                let fe: usize = row[0].parse().unwrap();
                let mean: f64 = row[2].parse().unwrap();
                let std: f64 = row[3].parse().unwrap();
                let n: usize = row[4].parse().unwrap();
                prop_assert!(row[1] == "none" || row[1].parse::<f64>().is_ok());
                prop_assert!(std >= 0.0 && n >= 1 && fe <= max_fe);
                match &prev {
                    Some((sp, last)) if *sp == row[1] => prop_assert!(mean <= *last * (1.0 + 1e-12)),
                    _ => prop_assert_eq!(fe, 5 * dim),
                }
                prev = Some((row[1].clone(), mean));
            }
        }
        let raw_files = fs::read_dir(dir.path().join(RAW_DIR)).unwrap().count();
        prop_assert_eq!(raw_files, results.len());
    }
}
