//! The accuracy-dialable pseudo-surrogate, the noisy bubble sort built on it,
//! and the ledger of counted evaluations.
//!
//! The pseudo-surrogate looks up true fitness values but those lookups are
//! never counted: only [`EvaluationLedger::counted_evaluate`] moves `fe`.

use rand::Rng;

use crate::benchmark::BenchmarkProblem;
use crate::error::{Error, Result};
use crate::evolution::Individual;
use crate::seed::{stream, Stream};

/// Comparison oracle that reports the true ordering of two individuals and
/// then flips it with probability `1 - accuracy`.
#[derive(Debug, Clone)]
pub struct PseudoSurrogate {
    accuracy: f64,
    flip_probability: f64,
    rng: Stream,
    calls: u64,
}

impl PseudoSurrogate {
    pub fn new(accuracy: f64, seed: u64) -> Result<Self> {
        if !(0.0..=1.0).contains(&accuracy) {
            return Err(Error::InvalidConfig(format!(
                "prediction accuracy {accuracy} is outside [0, 1]"
            )));
        }
        Ok(Self {
            accuracy,
            flip_probability: 1.0 - accuracy,
            rng: stream(seed),
            calls: 0,
        })
    }

    pub fn accuracy(&self) -> f64 {
        self.accuracy
    }

    /// Number of comparisons answered so far.
    pub fn calls(&self) -> u64 {
        self.calls
    }

    /// Predicted `f1 < f2`. Ties give `false` before flipping.
    pub fn predict_less(&mut self, f1: f64, f2: f64) -> bool {
        self.calls += 1;
        let label = f1 < f2;
        if self.flip_probability > 0.0 && self.rng.random::<f64>() < self.flip_probability {
            !label
        } else {
            label
        }
    }

    /// Predicts whether `x1` is better (lower) than `x2`. Both true fitness
    /// values get memoized on the individuals; neither is counted.
    pub fn compare(
        &mut self,
        x1: &mut Individual,
        x2: &mut Individual,
        problem: &BenchmarkProblem,
    ) -> bool {
        let f1 = x1.true_fitness(problem);
        let f2 = x2.true_fitness(problem);
        self.predict_less(f1, f2)
    }
}

/// Bubble sort, ascending, with `n` passes of `n - i` adjacent comparisons.
///
/// Pairs of officially evaluated members compare exactly. Any pair with an
/// unevaluated member is swapped when the oracle answers `false` for
/// "left is better than right". Each comparison draws fresh noise.
pub fn noisy_sort(
    members: &mut Vec<Individual>,
    oracle: &mut PseudoSurrogate,
    problem: &BenchmarkProblem,
) {
    let n = members.len();
    let fitness: Vec<f64> = members.iter_mut().map(|m| m.true_fitness(problem)).collect();
    let official: Vec<bool> = members.iter().map(Individual::is_official).collect();
    let mut order: Vec<usize> = (0..n).collect();
    for i in 1..=n {
        for j in 0..n - i {
            let (a, b) = (order[j], order[j + 1]);
            let swap = if official[a] && official[b] {
                fitness[a] > fitness[b]
            } else {
                !oracle.predict_less(fitness[a], fitness[b])
            };
            if swap {
                order.swap(j, j + 1);
            }
        }
    }
    apply_permutation(members, &order);
}

/// Reorders `members` so that position `k` holds the element that was at
/// `order[k]`.
fn apply_permutation(members: &mut Vec<Individual>, order: &[usize]) {
    let mut slots: Vec<Option<Individual>> = std::mem::take(members).into_iter().map(Some).collect();
    *members = order
        .iter()
        .map(|&src| slots[src].take().expect("order is a permutation"))
        .collect();
}

/// Stable ascending sort by official fitness.
///
/// # Panics
///
/// If any member has not been officially evaluated.
pub fn exact_sort(members: &mut [Individual]) {
    members.sort_by(|a, b| {
        let fa = a.official_fitness().expect("exact sort needs official fitness");
        let fb = b.official_fitness().expect("exact sort needs official fitness");
        fa.total_cmp(&fb)
    });
}

/// Counted evaluations (`fe`) and the archive of officially evaluated
/// individuals.
#[derive(Debug, Clone)]
pub struct EvaluationLedger {
    fe: usize,
    max_fe: usize,
    archive: Vec<Individual>,
    best: f64,
}

impl EvaluationLedger {
    pub fn new(max_fe: usize) -> Self {
        Self {
            fe: 0,
            max_fe,
            archive: Vec::new(),
            best: f64::INFINITY,
        }
    }

    pub fn fe(&self) -> usize {
        self.fe
    }

    pub fn max_fe(&self) -> usize {
        self.max_fe
    }

    pub fn exhausted(&self) -> bool {
        self.fe >= self.max_fe
    }

    pub fn archive(&self) -> &[Individual] {
        &self.archive
    }

    /// Lowest official fitness so far (`+inf` before any evaluation).
    pub fn best_fitness(&self) -> f64 {
        self.best
    }

    /// Officially evaluates `ind`: reuses a memoized value if the oracle
    /// already computed one, archives a copy and increments `fe`.
    pub fn counted_evaluate(&mut self, ind: &mut Individual, problem: &BenchmarkProblem) -> Result<f64> {
        if ind.is_official() {
            return Err(Error::LedgerViolation { id: ind.id() });
        }
        let f = ind.true_fitness(problem);
        ind.mark_official();
        self.archive.push(ind.clone());
        self.fe += 1;
        self.best = self.best.min(f);
        Ok(f)
    }
}
