//! Rank correlation, two-sample rank test and all-pairs mean comparison.

use std::f64::consts::{FRAC_1_SQRT_2, PI};

use serde::{Deserialize, Serialize};
use statrs::function::erf::erfc;
use statrs::function::gamma::ln_gamma;

use crate::error::{Error, Result};

pub const DEFAULT_ALPHA: f64 = 0.05;

/// Largest smaller-sample size for which Mann-Whitney p-values are exact.
pub const EXACT_MWU_MAX_SMALL: usize = 8;
/// Exact enumeration is also capped by the pooled sample size.
pub const EXACT_MWU_MAX_TOTAL: usize = 200;

/// Outcome of comparing a first group against a second one.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Verdict {
    /// Significant, the first group has lower (better) values.
    FirstBetter,
    /// Significant, the second group has lower (better) values.
    SecondBetter,
    NotSignificant,
}

impl Verdict {
    pub fn reversed(self) -> Self {
        match self {
            Verdict::FirstBetter => Verdict::SecondBetter,
            Verdict::SecondBetter => Verdict::FirstBetter,
            Verdict::NotSignificant => Verdict::NotSignificant,
        }
    }

    pub fn is_significant(self) -> bool {
        self != Verdict::NotSignificant
    }
}

fn sign(v: f64) -> i64 {
    if v > 0.0 {
        1
    } else if v < 0.0 {
        -1
    } else {
        0
    }
}

/// Kendall's tau-b. Returns 0 when either argument is constant.
pub fn kendall_tau(xs: &[f64], ys: &[f64]) -> Result<f64> {
    if xs.len() != ys.len() {
        return Err(Error::InvalidInput(format!(
            "kendall_tau needs equal lengths, got {} and {}",
            xs.len(),
            ys.len()
        )));
    }
    if xs.len() < 2 {
        return Err(Error::InvalidInput("kendall_tau needs at least 2 points".into()));
    }
    let (mut concordant, mut discordant) = (0i64, 0i64);
    let (mut tied_x, mut tied_y) = (0i64, 0i64);
    let n = xs.len();
    for i in 0..n {
        for j in i + 1..n {
            let sx = sign(xs[i] - xs[j]);
            let sy = sign(ys[i] - ys[j]);
            match (sx, sy) {
                (0, 0) => {
                    tied_x += 1;
                    tied_y += 1;
                }
                (0, _) => tied_x += 1,
                (_, 0) => tied_y += 1,
                _ if sx == sy => concordant += 1,
                _ => discordant += 1,
            }
        }
    }
    let pairs = (n * (n - 1) / 2) as i64;
    let denom = (((pairs - tied_x) as f64) * ((pairs - tied_y) as f64)).sqrt();
    if denom == 0.0 {
        return Ok(0.0);
    }
    Ok((concordant - discordant) as f64 / denom)
}

/// Midranks (1-based) of `values`, plus the tie-group sizes.
fn midranks(values: &[f64]) -> (Vec<f64>, Vec<usize>) {
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
    let mut ranks = vec![0.0; values.len()];
    let mut ties = Vec::new();
    let mut start = 0;
    while start < order.len() {
        let mut end = start + 1;
        while end < order.len() && values[order[end]] == values[order[start]] {
            end += 1;
        }
        let rank = (start + end + 1) as f64 / 2.0;
        for &idx in &order[start..end] {
            ranks[idx] = rank;
        }
        ties.push(end - start);
        start = end;
    }
    (ranks, ties)
}

fn median(values: &[f64]) -> f64 {
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum PValueMethod {
    Exact,
    Normal,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MannWhitney {
    /// U statistic of the first sample.
    pub u: f64,
    pub p: f64,
    pub method: PValueMethod,
    pub verdict: Verdict,
}

fn check_samples(a: &[f64], b: &[f64]) -> Result<()> {
    if a.is_empty() || b.is_empty() {
        return Err(Error::InvalidInput("Mann-Whitney U needs non-empty samples".into()));
    }
    if a.iter().chain(b).any(|v| v.is_nan()) {
        return Err(Error::InvalidInput("Mann-Whitney U input contains NaN".into()));
    }
    Ok(())
}

fn u_statistic(a: &[f64], b: &[f64]) -> (f64, Vec<f64>, Vec<usize>) {
    let pooled: Vec<f64> = a.iter().chain(b).copied().collect();
    let (ranks, ties) = midranks(&pooled);
    let na = a.len() as f64;
    let rank_sum: f64 = ranks[..a.len()].iter().sum();
    (rank_sum - na * (na + 1.0) / 2.0, ranks, ties)
}

/// Two-sided p-value from the normal approximation with tie and continuity
/// corrections.
pub fn mann_whitney_normal_p(a: &[f64], b: &[f64]) -> Result<f64> {
    check_samples(a, b)?;
    let (u, _, ties) = u_statistic(a, b);
    let (na, nb) = (a.len() as f64, b.len() as f64);
    let n = na + nb;
    let mean = na * nb / 2.0;
    let tie_term: f64 = ties.iter().map(|&t| (t * t * t - t) as f64).sum();
    let tie_fraction = if n > 1.0 { tie_term / (n * (n - 1.0)) } else { 0.0 };
    let variance = na * nb / 12.0 * ((n + 1.0) - tie_fraction);
    if variance <= 0.0 {
        return Ok(1.0);
    }
    let z = ((u - mean).abs() - 0.5).max(0.0) / variance.sqrt();
    Ok(erfc(z * FRAC_1_SQRT_2).min(1.0))
}

/// Two-sided exact permutation p-value of the rank sum, ties included
/// (midranks), by dynamic programming over subset sums of doubled ranks.
pub fn mann_whitney_exact_p(a: &[f64], b: &[f64]) -> Result<f64> {
    check_samples(a, b)?;
    let (_, ranks, _) = u_statistic(a, b);
    let n = ranks.len();
    // Enumerate subsets of the smaller group's size; the test is symmetric.
    let (k, observed_ranks) = if a.len() <= b.len() {
        (a.len(), &ranks[..a.len()])
    } else {
        (b.len(), &ranks[a.len()..])
    };
    let doubled: Vec<usize> = ranks.iter().map(|r| (2.0 * r).round() as usize).collect();
    let observed: usize = observed_ranks.iter().map(|r| (2.0 * r).round() as usize).sum();
    let max_sum: usize = doubled.iter().sum();

    // counts[j][s]: number of j-subsets of the items seen so far with doubled sum s.
    let mut counts = vec![vec![0.0f64; max_sum + 1]; k + 1];
    counts[0][0] = 1.0;
    for &r in &doubled {
        for j in (1..=k).rev() {
            let (lower, upper) = counts.split_at_mut(j);
            let (src, dst) = (&lower[j - 1], &mut upper[0]);
            for s in (r..=max_sum).rev() {
                dst[s] += src[s - r];
            }
        }
    }
    let expected2 = k * (n + 1); // twice the expected rank sum
    let dev = |s: usize| s.abs_diff(expected2);
    let obs_dev = dev(observed);
    let total: f64 = counts[k].iter().sum();
    let extreme: f64 = counts[k]
        .iter()
        .enumerate()
        .filter(|(s, &c)| c > 0.0 && dev(*s) >= obs_dev)
        .map(|(_, &c)| c)
        .sum();
    Ok((extreme / total).min(1.0))
}

/// Two-sided Mann-Whitney U test. Exact p-values when the smaller sample has
/// at most [`EXACT_MWU_MAX_SMALL`] values, normal approximation otherwise.
/// When significant, the better group is the one with the lower median.
pub fn mann_whitney_u(a: &[f64], b: &[f64], alpha: f64) -> Result<MannWhitney> {
    check_samples(a, b)?;
    let (u, _, _) = u_statistic(a, b);
    let first = a[0];
    if a.iter().chain(b).all(|&v| v == first) {
        return Ok(MannWhitney {
            u,
            p: 1.0,
            method: PValueMethod::Exact,
            verdict: Verdict::NotSignificant,
        });
    }
    let exact = a.len().min(b.len()) <= EXACT_MWU_MAX_SMALL && a.len() + b.len() <= EXACT_MWU_MAX_TOTAL;
    let (p, method) = if exact {
        (mann_whitney_exact_p(a, b)?, PValueMethod::Exact)
    } else {
        (mann_whitney_normal_p(a, b)?, PValueMethod::Normal)
    };
    let verdict = if p < alpha {
        let (ma, mb) = (median(a), median(b));
        let a_better = if ma != mb {
            ma < mb
        } else {
            u < a.len() as f64 * b.len() as f64 / 2.0
        };
        if a_better {
            Verdict::FirstBetter
        } else {
            Verdict::SecondBetter
        }
    } else {
        Verdict::NotSignificant
    };
    Ok(MannWhitney {
        u,
        p,
        method,
        verdict,
    })
}

/// All-pairs verdicts. `cells[i][j]` compares row group `i` (first) against
/// column group `j` (second).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairwiseVerdictMatrix {
    pub labels: Vec<String>,
    pub alpha: f64,
    pub cells: Vec<Vec<Verdict>>,
}

impl PairwiseVerdictMatrix {
    pub fn get(&self, i: usize, j: usize) -> Verdict {
        self.cells[i][j]
    }

    pub fn significant_pairs(&self) -> usize {
        let k = self.labels.len();
        (0..k)
            .flat_map(|i| (i + 1..k).map(move |j| (i, j)))
            .filter(|&(i, j)| self.cells[i][j].is_significant())
            .count()
    }
}

/// Tukey's honestly significant difference test (Tukey-Kramer for unequal
/// group sizes) on a one-way layout.
pub fn tukey_hsd(groups: &[(String, Vec<f64>)], alpha: f64) -> Result<PairwiseVerdictMatrix> {
    let k = groups.len();
    if k < 2 {
        return Err(Error::InvalidInput("Tukey HSD needs at least 2 groups".into()));
    }
    if let Some((name, _)) = groups.iter().find(|(_, v)| v.len() < 2) {
        return Err(Error::InvalidInput(format!(
            "Tukey HSD group {name:?} has fewer than 2 values"
        )));
    }
    let means: Vec<f64> = groups
        .iter()
        .map(|(_, v)| v.iter().sum::<f64>() / v.len() as f64)
        .collect();
    let total: usize = groups.iter().map(|(_, v)| v.len()).sum();
    let df = total - k;
    let sse: f64 = groups
        .iter()
        .zip(&means)
        .map(|((_, v), m)| v.iter().map(|x| (x - m).powi(2)).sum::<f64>())
        .sum();
    let mse = sse / df as f64;

    let mut cells = vec![vec![Verdict::NotSignificant; k]; k];
    let q_crit = if mse > 0.0 {
        Some(studentized_range_quantile(k, df, alpha)?)
    } else {
        None
    };
    for i in 0..k {
        for j in i + 1..k {
            let diff = means[i] - means[j];
            let significant = match q_crit {
                Some(q) => {
                    let (ni, nj) = (groups[i].1.len() as f64, groups[j].1.len() as f64);
                    let se = (mse / 2.0 * (1.0 / ni + 1.0 / nj)).sqrt();
                    diff.abs() / se > q
                }
                None => diff != 0.0,
            };
            if significant {
                let v = if diff < 0.0 {
                    Verdict::FirstBetter
                } else {
                    Verdict::SecondBetter
                };
                cells[i][j] = v;
                cells[j][i] = v.reversed();
            }
        }
    }
    Ok(PairwiseVerdictMatrix {
        labels: groups.iter().map(|(n, _)| n.clone()).collect(),
        alpha,
        cells,
    })
}

/// Gauss-Legendre nodes and weights on [-1, 1].
fn gauss_legendre(order: usize) -> (Vec<f64>, Vec<f64>) {
    let mut nodes = vec![0.0; order];
    let mut weights = vec![0.0; order];
    let m = order.div_ceil(2);
    for i in 0..m {
        let mut x = (PI * (i as f64 + 0.75) / (order as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, x);
            for j in 2..=order {
                let p2 = ((2 * j - 1) as f64 * x * p1 - (j - 1) as f64 * p0) / j as f64;
                p0 = p1;
                p1 = p2;
            }
            dp = order as f64 * (x * p1 - p0) / (x * x - 1.0);
            let dx = p1 / dp;
            x -= dx;
            if dx.abs() < 1e-15 {
                break;
            }
        }
        nodes[i] = -x;
        nodes[order - 1 - i] = x;
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        weights[i] = w;
        weights[order - 1 - i] = w;
    }
    (nodes, weights)
}

/// Composite Gauss-Legendre rule on `[lo, hi]`.
fn composite_rule(lo: f64, hi: f64, panels: usize, order: usize) -> Vec<(f64, f64)> {
    let (nodes, weights) = gauss_legendre(order);
    let h = (hi - lo) / panels as f64;
    (0..panels)
        .flat_map(|p| {
            let mid = lo + (p as f64 + 0.5) * h;
            nodes
                .iter()
                .zip(&weights)
                .map(move |(x, w)| (mid + 0.5 * h * x, 0.5 * h * w))
                .collect::<Vec<_>>()
        })
        .collect()
}

fn normal_cdf(x: f64) -> f64 {
    0.5 * erfc(-x * FRAC_1_SQRT_2)
}

/// Numerical CDF of the studentized range distribution.
struct StudentizedRange {
    k: usize,
    /// `(z, weight * phi(z), Phi(z))`
    inner: Vec<(f64, f64, f64)>,
    /// `(s, weight * chi_density(s))`
    outer: Vec<(f64, f64)>,
}

impl StudentizedRange {
    fn new(k: usize, df: usize) -> Self {
        let inner = composite_rule(-8.5, 8.5, 24, 20)
            .into_iter()
            .map(|(z, w)| {
                let phi = (-0.5 * z * z).exp() / (2.0 * PI).sqrt();
                (z, w * phi, normal_cdf(z))
            })
            .collect();

        // Density of s = sqrt(chi2_df / df).
        let nu = df as f64;
        let half = nu / 2.0;
        let log_norm = 2f64.ln() + half * half.ln() - ln_gamma(half);
        let mode = ((nu - 1.0) / nu).sqrt();
        let spread = 1.0 / (2.0 * nu).sqrt();
        let lo = (mode - 12.0 * spread).max(0.0);
        let hi = mode + 12.0 * spread + 1.0 / nu;
        let outer = composite_rule(lo, hi, 60, 20)
            .into_iter()
            .map(|(s, w)| {
                let log_f = log_norm + (nu - 1.0) * s.ln() - half * s * s;
                (s, w * log_f.exp())
            })
            .collect();
        Self { k, inner, outer }
    }

    /// `P(range of k standard normals <= w)`
    fn range_cdf(&self, w: f64) -> f64 {
        if w <= 0.0 {
            return 0.0;
        }
        let km1 = (self.k - 1) as i32;
        let s: f64 = self
            .inner
            .iter()
            .map(|&(z, wphi, cdf_z)| wphi * (cdf_z - normal_cdf(z - w)).max(0.0).powi(km1))
            .sum();
        self.k as f64 * s
    }

    fn cdf(&self, q: f64) -> f64 {
        self.outer
            .iter()
            .map(|&(s, wf)| wf * self.range_cdf(q * s))
            .sum()
    }
}

/// CDF of the studentized range `Q(k, df)` at `q`.
pub fn studentized_range_cdf(q: f64, k: usize, df: usize) -> Result<f64> {
    if k < 2 || df < 1 {
        return Err(Error::InvalidInput(format!(
            "studentized range needs k >= 2 and df >= 1 (k = {k}, df = {df})"
        )));
    }
    Ok(StudentizedRange::new(k, df).cdf(q))
}

/// Upper-`alpha` quantile of the studentized range distribution, found by
/// bisection on the numerically integrated CDF.
pub fn studentized_range_quantile(k: usize, df: usize, alpha: f64) -> Result<f64> {
    if k < 2 || df < 1 {
        return Err(Error::InvalidInput(format!(
            "studentized range needs k >= 2 and df >= 1 (k = {k}, df = {df})"
        )));
    }
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::InvalidInput(format!("alpha = {alpha} is outside (0, 1)")));
    }
    let dist = StudentizedRange::new(k, df);
    let target = 1.0 - alpha;

    let total = dist.cdf(1e4);
    if !((1.0 - total).abs() < 1e-6) {
        return Err(Error::Numerical(format!(
            "studentized range CDF integrates to {total} (k = {k}, df = {df})"
        )));
    }
    let (mut lo, mut hi) = (0.0, 1.0);
    while dist.cdf(hi) < target {
        hi *= 2.0;
        if hi > 1e4 {
            return Err(Error::Numerical(format!(
                "no upper bracket for the {target} quantile (k = {k}, df = {df})"
            )));
        }
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if dist.cdf(mid) < target {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo <= 1e-10 * hi {
            return Ok(0.5 * (lo + hi));
        }
    }
    Err(Error::Numerical(format!(
        "bisection did not converge: bracket [{lo}, {hi}] (k = {k}, df = {df}, alpha = {alpha})"
    )))
}
