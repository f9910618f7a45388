//! Individuals and variation operators: Latin hypercube initialization,
//! extended intermediate crossover and uniform mutation.

use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::benchmark::{BenchmarkProblem, SearchSpace};
use crate::error::{Error, Result};

/// A candidate solution.
///
/// `fitness` memoizes the true objective value. It may be filled by the
/// pseudo-surrogate without being counted; only the evaluation ledger can mark
/// an individual as officially evaluated.
#[derive(Debug, Clone, PartialEq)]
pub struct Individual {
    id: u64,
    genome: Vec<f64>,
    fitness: Option<f64>,
    official: bool,
}

impl Individual {
    pub fn new(id: u64, genome: Vec<f64>) -> Self {
        Self {
            id,
            genome,
            fitness: None,
            official: false,
        }
    }

    pub fn id(&self) -> u64 {
        self.id
    }

    pub fn genome(&self) -> &[f64] {
        &self.genome
    }

    /// Memoized true fitness, if anything has computed it yet.
    pub fn cached_fitness(&self) -> Option<f64> {
        self.fitness
    }

    /// Fitness known to the algorithm: present only once officially evaluated.
    pub fn official_fitness(&self) -> Option<f64> {
        self.official.then_some(self.fitness).flatten()
    }

    pub fn is_official(&self) -> bool {
        self.official
    }

    /// Returns the true fitness, computing and caching it on first use.
    /// This never touches the evaluation count.
    pub fn true_fitness(&mut self, problem: &BenchmarkProblem) -> f64 {
        match self.fitness {
            Some(f) => f,
            None => {
                let f = problem.evaluate_unchecked(&self.genome);
                self.fitness = Some(f);
                f
            }
        }
    }

    pub(crate) fn mark_official(&mut self) {
        debug_assert!(self.fitness.is_some());
        self.official = true;
    }

    /// Copy with a fresh id, keeping evaluation status.
    pub(crate) fn duplicate(&self, id: u64) -> Self {
        Self { id, ..self.clone() }
    }
}

/// Hands out trial-unique individual ids.
#[derive(Debug, Default, Clone)]
pub struct IdSource(u64);

impl IdSource {
    pub fn next_id(&mut self) -> u64 {
        let id = self.0;
        self.0 += 1;
        id
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AlphaRange {
    /// `alpha ~ U[-gamma, 1 + gamma]`
    Standard,
    /// `alpha ~ U[gamma, 1 + gamma]`
    Literal,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MutationMode {
    /// Every gene is resampled independently with probability `pm`.
    PerGene,
    /// With probability `pm`, one uniformly chosen gene is resampled.
    PerIndividual,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvolutionConfig {
    pub pop_size: usize,
    pub crossover_rate: f64,
    pub mutation_rate: f64,
    pub gamma: f64,
    pub alpha_range: AlphaRange,
    pub mutation_mode: MutationMode,
}

impl Default for EvolutionConfig {
    fn default() -> Self {
        Self {
            pop_size: 40,
            crossover_rate: 0.7,
            mutation_rate: 0.3,
            gamma: 0.4,
            alpha_range: AlphaRange::Standard,
            mutation_mode: MutationMode::PerIndividual,
        }
    }
}

impl EvolutionConfig {
    pub fn validate(&self) -> Result<()> {
        if self.pop_size == 0 {
            return Err(Error::InvalidConfig("pop_size must be positive".into()));
        }
        for (name, v) in [
            ("crossover_rate", self.crossover_rate),
            ("mutation_rate", self.mutation_rate),
        ] {
            if !(0.0..=1.0).contains(&v) {
                return Err(Error::InvalidConfig(format!("{name} = {v} is outside [0, 1]")));
            }
        }
        if !(self.gamma >= 0.0 && self.gamma.is_finite()) {
            return Err(Error::InvalidConfig(format!("gamma = {} must be >= 0", self.gamma)));
        }
        Ok(())
    }

    fn alpha_bounds(&self) -> (f64, f64) {
        match self.alpha_range {
            AlphaRange::Standard => (-self.gamma, 1.0 + self.gamma),
            AlphaRange::Literal => (self.gamma, 1.0 + self.gamma),
        }
    }
}

/// Latin hypercube sample of `n` points: along every axis each of the `n`
/// equal-width strata holds exactly one point, placed uniformly inside it.
pub fn lhs_sample(n: usize, space: &SearchSpace, rng: &mut impl Rng) -> Vec<Vec<f64>> {
    let dim = space.dim();
    let mut points = vec![vec![0.0; dim]; n];
    let mut strata: Vec<usize> = (0..n).collect();
    for j in 0..dim {
        strata.shuffle(rng);
        let (lo, width) = (space.lower()[j], space.width(j));
        for (point, &s) in points.iter_mut().zip(&strata) {
            let u: f64 = rng.random();
            let v = lo + (s as f64 + u) / n as f64 * width;
            point[j] = v.min(space.upper()[j]);
        }
    }
    points
}

/// `t_i = alpha_i v_i + (1 - alpha_i) w_i`, clamped to the box.
pub fn eix_blend(v: &[f64], w: &[f64], alphas: &[f64], space: &SearchSpace) -> Result<Vec<f64>> {
    if v.len() != w.len() || v.len() != alphas.len() {
        return Err(Error::DimensionMismatch {
            expected: v.len(),
            got: if v.len() != w.len() { w.len() } else { alphas.len() },
        });
    }
    let mut child: Vec<f64> = alphas
        .iter()
        .zip(v.iter().zip(w))
        .map(|(a, (vi, wi))| a * vi + (1.0 - a) * wi)
        .collect();
    space.clamp(&mut child);
    Ok(child)
}

/// Extended intermediate crossover with a fresh `alpha_i` per coordinate.
pub fn eix_crossover(
    v: &[f64],
    w: &[f64],
    config: &EvolutionConfig,
    space: &SearchSpace,
    rng: &mut impl Rng,
) -> Result<Vec<f64>> {
    if v.len() != w.len() {
        return Err(Error::DimensionMismatch {
            expected: v.len(),
            got: w.len(),
        });
    }
    let (lo, hi) = config.alpha_bounds();
    let alphas: Vec<f64> = (0..v.len()).map(|_| lo + (hi - lo) * rng.random::<f64>()).collect();
    eix_blend(v, w, &alphas, space)
}

pub fn uniform_mutate(
    x: &[f64],
    pm: f64,
    mode: MutationMode,
    space: &SearchSpace,
    rng: &mut impl Rng,
) -> Vec<f64> {
    let mut out = x.to_vec();
    let mut resample = |i: usize, rng: &mut _| {
        out[i] = space.lower()[i] + space.width(i) * Rng::random::<f64>(rng);
    };
    match mode {
        MutationMode::PerGene => {
            for i in 0..x.len() {
                if rng.random_bool(pm) {
                    resample(i, rng);
                }
            }
        }
        MutationMode::PerIndividual => {
            if rng.random_bool(pm) {
                let i = rng.random_range(0..x.len());
                resample(i, rng);
            }
        }
    }
    out
}

/// One offspring per population slot; slot `i` uses member `i` as its
/// reference parent and, with probability `pc`, a uniformly random distinct
/// mate for crossover. Returned pairs are `(offspring, parent_index)`.
pub fn generate_offspring(
    population: &[Individual],
    config: &EvolutionConfig,
    space: &SearchSpace,
    ids: &mut IdSource,
    rng: &mut impl Rng,
) -> Result<Vec<(Individual, usize)>> {
    let n = population.len();
    if n < 2 && config.crossover_rate > 0.0 {
        return Err(Error::InsufficientPopulation { size: n });
    }
    let mut offspring = Vec::with_capacity(n);
    for (i, parent) in population.iter().enumerate() {
        let base = if rng.random_bool(config.crossover_rate) {
            let mut mate = rng.random_range(0..n - 1);
            if mate >= i {
                mate += 1;
            }
            eix_crossover(parent.genome(), population[mate].genome(), config, space, rng)?
        } else {
            parent.genome().to_vec()
        };
        let genome = uniform_mutate(&base, config.mutation_rate, config.mutation_mode, space, rng);
        offspring.push((Individual::new(ids.next_id(), genome), i));
    }
    Ok(offspring)
}
