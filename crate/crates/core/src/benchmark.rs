//! Benchmark landscapes with known optima.
//!
//! Six problems, one per roster entry, grouped into three landscape classes.
//! Every problem evaluates as `f_star + base(R (x - shift))` with `base >= 0`
//! and `base(0) = 0`, so the optimum value is attained exactly at `shift`.
//! Shift and rotation are generated from a seed and can be replaced with
//! externally supplied data (see [`ProblemData`]).

use std::fmt;
use std::path::Path;
use std::str::FromStr;

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::seed::{derive_seed, stream};

/// Absolute tolerance used for optimum exactness and orthogonality checks.
pub const OPTIMUM_TOLERANCE: f64 = 1e-9;

pub const DEFAULT_LOWER: f64 = -100.0;
pub const DEFAULT_UPPER: f64 = 100.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum ProblemId {
    F1,
    F2,
    F4,
    F8,
    F13,
    F15,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Landscape {
    Unimodal,
    SimpleMultimodal,
    Composition,
}

impl ProblemId {
    pub const ALL: [ProblemId; 6] = [
        ProblemId::F1,
        ProblemId::F2,
        ProblemId::F4,
        ProblemId::F8,
        ProblemId::F13,
        ProblemId::F15,
    ];

    pub fn optimum(self) -> f64 {
        match self {
            ProblemId::F1 => 100.0,
            ProblemId::F2 => 200.0,
            ProblemId::F4 => 400.0,
            ProblemId::F8 => 800.0,
            ProblemId::F13 => 1300.0,
            ProblemId::F15 => 1500.0,
        }
    }

    pub fn landscape(self) -> Landscape {
        match self {
            ProblemId::F1 | ProblemId::F2 => Landscape::Unimodal,
            ProblemId::F4 | ProblemId::F8 => Landscape::SimpleMultimodal,
            ProblemId::F13 | ProblemId::F15 => Landscape::Composition,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            ProblemId::F1 => "F1",
            ProblemId::F2 => "F2",
            ProblemId::F4 => "F4",
            ProblemId::F8 => "F8",
            ProblemId::F13 => "F13",
            ProblemId::F15 => "F15",
        }
    }

    /// Stable numeric code, used when deriving seeds.
    pub fn code(self) -> u64 {
        match self {
            ProblemId::F1 => 1,
            ProblemId::F2 => 2,
            ProblemId::F4 => 4,
            ProblemId::F8 => 8,
            ProblemId::F13 => 13,
            ProblemId::F15 => 15,
        }
    }
}

impl fmt::Display for ProblemId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ProblemId {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        ProblemId::ALL
            .into_iter()
            .find(|id| id.name().eq_ignore_ascii_case(s))
            .ok_or_else(|| Error::InvalidInput(format!("unknown problem id {s:?}")))
    }
}

/// Axis-aligned box of admissible design vectors.
#[derive(Debug, Clone, PartialEq)]
pub struct SearchSpace {
    lower: Vec<f64>,
    upper: Vec<f64>,
}

impl SearchSpace {
    pub fn new(lower: Vec<f64>, upper: Vec<f64>) -> Result<Self> {
        if lower.is_empty() {
            return Err(Error::InvalidBounds("empty search space".into()));
        }
        if lower.len() != upper.len() {
            return Err(Error::DimensionMismatch {
                expected: lower.len(),
                got: upper.len(),
            });
        }
        if let Some(i) = (0..lower.len()).find(|&i| !(lower[i] < upper[i])) {
            return Err(Error::InvalidBounds(format!(
                "lower[{i}] = {} is not below upper[{i}] = {}",
                lower[i], upper[i]
            )));
        }
        Ok(Self { lower, upper })
    }

    /// The same `[lower, upper]` interval on every coordinate.
    pub fn uniform(dim: usize, lower: f64, upper: f64) -> Result<Self> {
        Self::new(vec![lower; dim], vec![upper; dim])
    }

    pub fn dim(&self) -> usize {
        self.lower.len()
    }

    pub fn lower(&self) -> &[f64] {
        &self.lower
    }

    pub fn upper(&self) -> &[f64] {
        &self.upper
    }

    pub fn width(&self, i: usize) -> f64 {
        self.upper[i] - self.lower[i]
    }

    pub fn contains(&self, x: &[f64]) -> bool {
        x.len() == self.dim()
            && x
                .iter()
                .zip(self.lower.iter().zip(&self.upper))
                .all(|(v, (lo, hi))| *lo <= *v && *v <= *hi)
    }

    /// Clamps every coordinate to its nearest bound.
    pub fn clamp(&self, x: &mut [f64]) {
        for (v, (lo, hi)) in x.iter_mut().zip(self.lower.iter().zip(&self.upper)) {
            *v = v.clamp(*lo, *hi);
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum BaseFunction {
    BentCigar,
    Discus,
    Rastrigin,
    GriewankRosenbrock,
}

impl BaseFunction {
    /// Non-negative, zero exactly at `y = 0`.
    fn eval(self, y: &[f64]) -> f64 {
        match self {
            BaseFunction::BentCigar => {
                y[0] * y[0] + 1e6 * y[1..].iter().map(|v| v * v).sum::<f64>()
            }
            BaseFunction::Discus => 1e6 * y[0] * y[0] + y[1..].iter().map(|v| v * v).sum::<f64>(),
            BaseFunction::Rastrigin => y
                .iter()
                .map(|v| {
                    let z = 0.0512 * v;
                    z * z + (10.0 - 10.0 * (2.0 * std::f64::consts::PI * z).cos())
                })
                .sum(),
            BaseFunction::GriewankRosenbrock => {
                let n = y.len();
                (0..n)
                    .map(|i| {
                        let a = 0.05 * y[i] + 1.0;
                        let b = 0.05 * y[(i + 1) % n] + 1.0;
                        let t = 100.0 * (a * a - b).powi(2) + (a - 1.0).powi(2);
                        t * t / 4000.0 + (1.0 - t.cos())
                    })
                    .sum()
            }
        }
    }
}

/// One term of the objective: `lambda * base(R (d - offset)) + bias`, where
/// `d = x - shift`. Single-term problems have a zero offset and no bias.
#[derive(Debug, Clone, PartialEq)]
struct Component {
    base: BaseFunction,
    offset: Vec<f64>,
    sigma: f64,
    lambda: f64,
    bias: f64,
}

/// Shift and rotation loaded from an external data file.
///
/// Text format, whitespace separated: the dimension, then `dim` shift values,
/// then `dim` rows of `dim` rotation entries.
#[derive(Debug, Clone, PartialEq)]
pub struct ProblemData {
    pub shift: Vec<f64>,
    pub rotation: Vec<Vec<f64>>,
}

impl ProblemData {
    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let text = std::fs::read_to_string(path.as_ref())?;
        text.parse()
    }
}

impl FromStr for ProblemData {
    type Err = Error;

    fn from_str(text: &str) -> Result<Self> {
        let mut lines = text.lines().filter(|l| !l.trim().is_empty());
        let parse_row = |line: Option<&str>, what: &str| -> Result<Vec<f64>> {
            let line = line.ok_or_else(|| Error::ProblemData(format!("missing {what}")))?;
            line.split_whitespace()
                .map(|tok| {
                    tok.parse::<f64>()
                        .map_err(|e| Error::ProblemData(format!("bad number {tok:?} in {what}: {e}")))
                })
                .collect()
        };
        let dim_line = lines
            .next()
            .ok_or_else(|| Error::ProblemData("empty data file".into()))?;
        let dim: usize = dim_line
            .trim()
            .parse()
            .map_err(|e| Error::ProblemData(format!("bad dimension {dim_line:?}: {e}")))?;
        let shift = parse_row(lines.next(), "shift line")?;
        if shift.len() != dim {
            return Err(Error::DimensionMismatch {
                expected: dim,
                got: shift.len(),
            });
        }
        let mut rotation = Vec::with_capacity(dim);
        for r in 0..dim {
            let row = parse_row(lines.next(), &format!("rotation row {r}"))?;
            if row.len() != dim {
                return Err(Error::DimensionMismatch {
                    expected: dim,
                    got: row.len(),
                });
            }
            rotation.push(row);
        }
        if lines.next().is_some() {
            return Err(Error::ProblemData("trailing lines after rotation".into()));
        }
        Ok(Self { shift, rotation })
    }
}

/// A deterministic objective with a known optimum.
///
/// Immutable after construction; safe to share across threads.
#[derive(Debug, Clone, PartialEq)]
pub struct BenchmarkProblem {
    id: ProblemId,
    space: SearchSpace,
    f_star: f64,
    shift: Vec<f64>,
    /// Row-major `dim x dim`.
    rotation: Vec<f64>,
    components: Vec<Component>,
}

fn orthogonal_matrix(dim: usize, rng: &mut impl Rng) -> Vec<f64> {
    // Modified Gram-Schmidt over the rows of a Gaussian matrix.
    let mut m: Vec<f64> = (0..dim * dim).map(|_| rng.sample(StandardNormal)).collect();
    for i in 0..dim {
        for j in 0..i {
            let dot: f64 = (0..dim).map(|c| m[i * dim + c] * m[j * dim + c]).sum();
            for c in 0..dim {
                m[i * dim + c] -= dot * m[j * dim + c];
            }
        }
        let norm = (0..dim).map(|c| m[i * dim + c].powi(2)).sum::<f64>().sqrt();
        for c in 0..dim {
            m[i * dim + c] /= norm;
        }
    }
    m
}

fn inner_point(space: &SearchSpace, rng: &mut impl Rng) -> Vec<f64> {
    (0..space.dim())
        .map(|i| space.lower()[i] + (0.1 + 0.8 * rng.random::<f64>()) * space.width(i))
        .collect()
}

fn identity(dim: usize) -> Vec<f64> {
    let mut m = vec![0.0; dim * dim];
    for i in 0..dim {
        m[i * dim + i] = 1.0;
    }
    m
}

/// Builds a problem on the default `[-100, 100]^dim` box.
pub fn build_problem(id: ProblemId, dim: usize, seed: u64) -> Result<BenchmarkProblem> {
    if dim < 2 {
        return Err(Error::InvalidDimension { dim });
    }
    let space = SearchSpace::uniform(dim, DEFAULT_LOWER, DEFAULT_UPPER)?;
    build_problem_in(id, space, seed)
}

/// Builds a problem on a caller-supplied box. The shift (and every
/// composition optimum) lies within the inner 80% of each coordinate range.
pub fn build_problem_in(id: ProblemId, space: SearchSpace, seed: u64) -> Result<BenchmarkProblem> {
    let dim = space.dim();
    if dim < 2 {
        return Err(Error::InvalidDimension { dim });
    }
    let mut rng = stream(derive_seed(&[seed, id.code(), dim as u64]));
    let shift = inner_point(&space, &mut rng);
    let rotation = orthogonal_matrix(dim, &mut rng);

    let single = |base| {
        vec![Component {
            base,
            offset: vec![0.0; dim],
            sigma: 1.0,
            lambda: 1.0,
            bias: 0.0,
        }]
    };
    let components = match id {
        ProblemId::F1 => single(BaseFunction::BentCigar),
        ProblemId::F2 => single(BaseFunction::Discus),
        ProblemId::F4 => single(BaseFunction::Rastrigin),
        ProblemId::F8 => single(BaseFunction::GriewankRosenbrock),
        ProblemId::F13 => composition(
            &[
                (BaseFunction::BentCigar, 10.0, 1e-6, 0.0),
                (BaseFunction::Rastrigin, 20.0, 1.0, 100.0),
                (BaseFunction::Discus, 30.0, 1e-6, 200.0),
            ],
            &shift,
            &space,
            &mut rng,
        ),
        ProblemId::F15 => composition(
            &[
                (BaseFunction::Rastrigin, 10.0, 1.0, 0.0),
                (BaseFunction::GriewankRosenbrock, 20.0, 1e-3, 100.0),
                (BaseFunction::BentCigar, 30.0, 1e-6, 200.0),
            ],
            &shift,
            &space,
            &mut rng,
        ),
    };

    Ok(BenchmarkProblem {
        id,
        space,
        f_star: id.optimum(),
        shift,
        rotation,
        components,
    })
}

fn composition(
    spec: &[(BaseFunction, f64, f64, f64)],
    shift: &[f64],
    space: &SearchSpace,
    rng: &mut impl Rng,
) -> Vec<Component> {
    spec.iter()
        .enumerate()
        .map(|(k, &(base, sigma, lambda, bias))| {
            let offset = if k == 0 {
                vec![0.0; shift.len()]
            } else {
                let opt = inner_point(space, rng);
                opt.iter().zip(shift).map(|(o, s)| o - s).collect()
            };
            Component {
                base,
                offset,
                sigma,
                lambda,
                bias,
            }
        })
        .collect()
}

impl BenchmarkProblem {
    pub fn id(&self) -> ProblemId {
        self.id
    }

    pub fn dim(&self) -> usize {
        self.space.dim()
    }

    pub fn space(&self) -> &SearchSpace {
        &self.space
    }

    pub fn f_star(&self) -> f64 {
        self.f_star
    }

    pub fn landscape(&self) -> Landscape {
        self.id.landscape()
    }

    /// The global optimizer.
    pub fn shift(&self) -> &[f64] {
        &self.shift
    }

    pub fn rotation_row(&self, i: usize) -> &[f64] {
        let d = self.dim();
        &self.rotation[i * d..(i + 1) * d]
    }

    /// Moves the optimum. Composition optima move along with it.
    pub fn with_shift(mut self, shift: Vec<f64>) -> Result<Self> {
        if shift.len() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                got: shift.len(),
            });
        }
        if !self.space.contains(&shift) {
            return Err(Error::ProblemData("shift lies outside the search space".into()));
        }
        self.shift = shift;
        Ok(self)
    }

    pub fn with_rotation(mut self, rows: Vec<Vec<f64>>) -> Result<Self> {
        let d = self.dim();
        if rows.len() != d || rows.iter().any(|r| r.len() != d) {
            return Err(Error::DimensionMismatch {
                expected: d,
                got: rows.len(),
            });
        }
        let flat: Vec<f64> = rows.into_iter().flatten().collect();
        if let Some(err) = orthogonality_error(&flat, d) {
            if err > OPTIMUM_TOLERANCE {
                return Err(Error::ProblemData(format!(
                    "rotation is not orthogonal (max |R^T R - I| = {err:e})"
                )));
            }
        }
        self.rotation = flat;
        Ok(self)
    }

    pub fn with_identity_rotation(mut self) -> Self {
        self.rotation = identity(self.dim());
        self
    }

    pub fn with_data(self, data: ProblemData) -> Result<Self> {
        self.with_shift(data.shift)?.with_rotation(data.rotation)
    }

    /// Largest entry of `|R^T R - I|`.
    pub fn orthogonality_error(&self) -> f64 {
        orthogonality_error(&self.rotation, self.dim()).unwrap_or(f64::INFINITY)
    }

    /// True objective value.
    pub fn evaluate(&self, x: &[f64]) -> Result<f64> {
        if x.len() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                got: x.len(),
            });
        }
        debug_assert!(
            self.space.contains(x),
            "evaluation point outside the search space"
        );
        Ok(self.evaluate_unchecked(x))
    }

    pub(crate) fn evaluate_unchecked(&self, x: &[f64]) -> f64 {
        let d = self.dim();
        let mut diff = vec![0.0; d];
        let mut y = vec![0.0; d];
        if let [only] = self.components.as_slice() {
            for i in 0..d {
                diff[i] = x[i] - self.shift[i];
            }
            self.rotate(&diff, &mut y);
            return self.f_star + only.lambda * only.base.eval(&y);
        }

        // Gaussian mixing weights, computed in the log domain:
        // w_k ~ exp(-|d_k|^2 / (2 D sigma_k^2)) / |d_k|.
        let mut values = Vec::with_capacity(self.components.len());
        let mut log_w = Vec::with_capacity(self.components.len());
        let mut exact = None;
        for (k, c) in self.components.iter().enumerate() {
            for i in 0..d {
                diff[i] = x[i] - self.shift[i] - c.offset[i];
            }
            let dist2: f64 = diff.iter().map(|v| v * v).sum();
            if dist2 == 0.0 && exact.is_none() {
                exact = Some(k);
            }
            self.rotate(&diff, &mut y);
            values.push(c.lambda * c.base.eval(&y) + c.bias);
            log_w.push(-dist2 / (2.0 * d as f64 * c.sigma * c.sigma) - 0.5 * dist2.ln());
        }
        if let Some(k) = exact {
            return self.f_star + values[k];
        }
        let max = log_w.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let weights: Vec<f64> = log_w.iter().map(|l| (l - max).exp()).collect();
        let total: f64 = weights.iter().sum();
        self.f_star
            + weights
                .iter()
                .zip(&values)
                .map(|(w, v)| w / total * v)
                .sum::<f64>()
    }

    fn rotate(&self, v: &[f64], out: &mut [f64]) {
        let d = self.dim();
        for (i, o) in out.iter_mut().enumerate() {
            let row = &self.rotation[i * d..(i + 1) * d];
            *o = row.iter().zip(v).map(|(r, x)| r * x).sum();
        }
    }

    /// `value - f_star`.
    pub fn error_to_optimum(&self, value: f64) -> f64 {
        value - self.f_star
    }
}

fn orthogonality_error(m: &[f64], d: usize) -> Option<f64> {
    if m.len() != d * d {
        return None;
    }
    let mut worst: f64 = 0.0;
    for i in 0..d {
        for j in 0..d {
            let dot: f64 = (0..d).map(|r| m[r * d + i] * m[r * d + j]).sum();
            let target = if i == j { 1.0 } else { 0.0 };
            worst = worst.max((dot - target).abs());
        }
    }
    Some(worst)
}
