use std::collections::HashMap;

use proptest::prelude::*;
use saea_core::evolution::lhs_sample;
use saea_core::oracle::exact_sort;
use saea_core::seed::stream;
use saea_core::{build_problem, noisy_sort, BenchmarkProblem, EvaluationLedger, Individual, ProblemId, PseudoSurrogate};

fn population(problem: &BenchmarkProblem, n: usize, seed: u64) -> Vec<Individual> {
    lhs_sample(n, problem.space(), &mut stream(seed))
        .into_iter()
        .enumerate()
        .map(|(i, g)| Individual::new(i as u64, g))
        .collect()
}

fn ids(members: &[Individual]) -> Vec<u64> {
    members.iter().map(Individual::id).collect()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(10_000))]

    #[test]
    fn noisy_sort_permutes(n in 0usize..25, sp in 0.0f64..=1.0, seed in any::<u64>(), evaluated in 0usize..25) {
        let p = build_problem(ProblemId::F4, 3, 0).unwrap();
        let mut members = population(&p, n, seed);
        let mut ledger = EvaluationLedger::new(usize::MAX);
        for m in members.iter_mut().take(evaluated) {
            ledger.counted_evaluate(m, &p).unwrap();
        }
        let mut before = ids(&members);
        let mut oracle = PseudoSurrogate::new(sp, seed ^ 1).unwrap();
        noisy_sort(&mut members, &mut oracle, &p);
        let mut after = ids(&members);
        before.sort_unstable();
        after.sort_unstable();
        prop_assert_eq!(before, after);
        prop_assert_eq!(ledger.fe(), evaluated.min(n));
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(1_000))]

    #[test]
    fn exact_when_truthful_or_all_official(n in 2usize..=100, seed in any::<u64>(), official in any::<bool>()) {
        let p = build_problem(ProblemId::F8, 4, 0).unwrap();
        let mut members = population(&p, n, seed);
        let sp = if official {
            let mut ledger = EvaluationLedger::new(usize::MAX);
            for m in &mut members {
                ledger.counted_evaluate(m, &p).unwrap();
            }
            0.3
        } else {
            1.0
        };
        let mut expected = members.clone();
        for m in &mut expected {
            m.true_fitness(&p);
        }
        expected.sort_by(|a, b| a.cached_fitness().unwrap().total_cmp(&b.cached_fitness().unwrap()));
        let mut oracle = PseudoSurrogate::new(sp, seed).unwrap();
        noisy_sort(&mut members, &mut oracle, &p);
        let got: Vec<f64> = members.iter().map(|m| m.cached_fitness().unwrap()).collect();
        let want: Vec<f64> = expected.iter().map(|m| m.cached_fitness().unwrap()).collect();
        prop_assert_eq!(got, want);
        if official {
            exact_sort(&mut members);
            prop_assert_eq!(oracle.calls(), 0);
        }
    }
}

/// Final orders of a 3-element bubble sort under every sequence of the three
/// comparison outcomes, each sequence equally likely.
fn enumerated_distribution() -> HashMap<[usize; 3], f64> {
    let mut dist = HashMap::new();
    for bits in 0..8u32 {
        let mut order = [0usize, 1, 2];
        let mut k = 0;
        for i in 1..=3 {
            for j in 0..3 - i {
                // bit set: the oracle answers "left is better", no swap
                if bits >> k & 1 == 0 {
                    order.swap(j, j + 1);
                }
                k += 1;
            }
        }
        *dist.entry(order).or_insert(0.0) += 1.0 / 8.0;
    }
    dist
}

#[test]
fn three_element_coin_flip_distribution() {
    let p = build_problem(ProblemId::F1, 2, 0).unwrap();
    let start = population(&p, 3, 4);
    let mut oracle = PseudoSurrogate::new(0.5, 99).unwrap();
    let runs = 1_000_000;
    let mut counts: HashMap<[usize; 3], usize> = HashMap::new();
    for _ in 0..runs {
        let mut members = start.clone();
        noisy_sort(&mut members, &mut oracle, &p);
        let order = [0, 1, 2].map(|k| members[k].id() as usize);
        *counts.entry(order).or_insert(0) += 1;
    }
    let expected = enumerated_distribution();
    let mut keys: Vec<[usize; 3]> = expected.keys().chain(counts.keys()).copied().collect();
    keys.sort_unstable();
    keys.dedup();
    let tv: f64 = keys
        .iter()
        .map(|k| {
            let e = expected.get(k).copied().unwrap_or(0.0);
            let o = counts.get(k).copied().unwrap_or(0) as f64 / runs as f64;
            (e - o).abs()
        })
        .sum::<f64>()
        / 2.0;
    assert!(tv < 0.01, "total variation {tv}");
    assert_eq!(oracle.calls(), 3 * runs as u64);
}
