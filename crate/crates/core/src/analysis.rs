//! Inequality metrics, Sobol indices and cross-regime summaries.

use alloc::vec::Vec;

use rand::Rng;
use rand_distr::{Distribution, Normal};

use crate::error::{Error, Result};
use crate::experiments::{RegimeTag, RunRecord};
use crate::params::{ModelParams, ParamBounds};
use crate::rng::rng_from_seed;
use crate::social_graph::CommunityAssignment;
use crate::stats::{histogram, mean, pearson, quantile_sorted, sample_sd, variance, Bin};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GiniLevel {
    Agents,
    Communities,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GiniReport {
    pub value: f64,
    pub population: GiniLevel,
}

/// Mean absolute pairwise difference over twice the mean; zero when the
/// mean is zero.
pub fn gini(values: &[f64]) -> Result<f64> {
    if values.iter().any(|v| !(v.is_finite() && *v >= 0.0)) {
        return Err(Error::InvalidInput("gini needs finite non-negative values"));
    }
    let n = values.len();
    let total: f64 = values.iter().sum();
    if n == 0 || total <= 0.0 {
        return Ok(0.0);
    }
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    // sum_ij |x_i - x_j| = 2 * sum_i (2i - n - 1) x_(i), i 1-based
    let weighted: f64 = sorted
        .iter()
        .enumerate()
        .map(|(i, x)| (2.0 * (i + 1) as f64 - n as f64 - 1.0) * x)
        .sum();
    Ok((weighted / (n as f64 * total)).max(0.0))
}

pub fn gini_report(values: &[f64], population: GiniLevel) -> Result<GiniReport> {
    Ok(GiniReport {
        value: gini(values)?,
        population,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct InequalityReport {
    /// Gini over community totals.
    pub horizontal: f64,
    /// Population-weighted mean of within-community Ginis.
    pub vertical: f64,
    pub within: Vec<f64>,
}

pub fn horizontal_vertical_inequality(wealth: &[f64], communities: &CommunityAssignment) -> InequalityReport {
    let totals = crate::experiments::community_totals(wealth, communities);
    let horizontal = gini(&totals).unwrap_or(0.0);
    let n = wealth.len() as f64;
    let mut vertical = 0.0;
    let mut within = Vec::with_capacity(communities.n_communities());
    for members in &communities.members {
        let vals: Vec<f64> = members.iter().map(|&i| wealth[i]).collect();
        let g = gini(&vals).unwrap_or(0.0);
        vertical += g * members.len() as f64 / n;
        within.push(g);
    }
    InequalityReport {
        horizontal,
        vertical,
        within,
    }
}

/// Pearson r between total final wealth and final Gini over SomeRich runs.
pub fn wealth_gini_correlation(records: &[RunRecord]) -> Result<f64> {
    let (w, g): (Vec<f64>, Vec<f64>) = records
        .iter()
        .filter(|r| r.individual == RegimeTag::SomeRich)
        .map(|r| (r.total_final_wealth, r.final_gini))
        .unzip();
    if w.len() < 3 {
        return Err(Error::Degenerate("fewer than three SomeRich runs"));
    }
    pearson(&w, &g)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Interval {
    pub lo: f64,
    pub hi: f64,
}

impl Interval {
    pub fn contains(&self, x: f64) -> bool {
        self.lo <= x && x <= self.hi
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SobolIndex {
    pub first: f64,
    pub first_ci: Interval,
    pub total: f64,
    pub total_ci: Interval,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SobolReport {
    pub indices: Vec<SobolIndex>,
    /// Total-order estimates per bootstrap resample, `[resample][param]`.
    pub total_resamples: Vec<Vec<f64>>,
}

impl SobolReport {
    /// Point estimate and percentile interval of `S_T[a] - S_T[b]`.
    pub fn total_gap(&self, a: usize, b: usize) -> (f64, Interval) {
        let point = self.indices[a].total - self.indices[b].total;
        let gaps: Vec<f64> = self.total_resamples.iter().map(|r| r[a] - r[b]).collect();
        (point, percentile_interval(gaps))
    }

    /// Index of the largest total-order estimate.
    pub fn top_total(&self) -> usize {
        (0..self.indices.len())
            .max_by(|&a, &b| self.indices[a].total.total_cmp(&self.indices[b].total))
            .unwrap_or(0)
    }
}

fn percentile_interval(mut xs: Vec<f64>) -> Interval {
    xs.sort_by(f64::total_cmp);
    Interval {
        lo: quantile_sorted(&xs, 0.025),
        hi: quantile_sorted(&xs, 0.975),
    }
}

/// Jansen first/total estimates for the base samples listed in `idx`.
fn jansen(y: &[f64], dim: usize, idx: &[usize]) -> (Vec<f64>, Vec<f64>) {
    let stride = dim + 2;
    let mut pooled = Vec::with_capacity(2 * idx.len());
    for &i in idx {
        pooled.push(y[i * stride]);
        pooled.push(y[i * stride + dim + 1]);
    }
    let v = variance(&pooled);
    let n = idx.len() as f64;
    let mut first = Vec::with_capacity(dim);
    let mut total = Vec::with_capacity(dim);
    for j in 0..dim {
        let (mut sb, mut sa) = (0.0, 0.0);
        for &i in idx {
            let a = y[i * stride];
            let ab = y[i * stride + 1 + j];
            let b = y[i * stride + dim + 1];
            sb += (b - ab) * (b - ab);
            sa += (a - ab) * (a - ab);
        }
        if v > 0.0 {
            first.push((v - sb / (2.0 * n)) / v);
            total.push(sa / (2.0 * n) / v);
        } else {
            first.push(0.0);
            total.push(0.0);
        }
    }
    (first, total)
}

/// First- and total-order indices from per-row model outputs laid out as
/// produced by [`crate::experiments::saltelli_unit`], with bootstrap
/// intervals over base samples.
pub fn sobol_from_rows(y: &[f64], dim: usize, n_boot: usize, seed: u64) -> Result<SobolReport> {
    let stride = dim + 2;
    if y.is_empty() || !y.len().is_multiple_of(stride) {
        return Err(Error::DimensionMismatch {
            expected: stride * (y.len() / stride).max(1),
            found: y.len(),
        });
    }
    if y.iter().any(|v| !v.is_finite()) {
        return Err(Error::InvalidInput("sobol output contains non-finite values"));
    }
    let base_n = y.len() / stride;
    let all: Vec<usize> = (0..base_n).collect();
    let (first, total) = jansen(y, dim, &all);
    let mut rng = rng_from_seed(seed);
    let mut first_boot = Vec::with_capacity(n_boot);
    let mut total_resamples = Vec::with_capacity(n_boot);
    let mut idx = alloc::vec![0usize; base_n];
    for _ in 0..n_boot {
        for k in idx.iter_mut() {
            *k = rng.random_range(0..base_n);
        }
        let (f, t) = jansen(y, dim, &idx);
        first_boot.push(f);
        total_resamples.push(t);
    }
    let indices = (0..dim)
        .map(|j| SobolIndex {
            first: first[j],
            first_ci: percentile_interval(first_boot.iter().map(|r| r[j]).collect()),
            total: total[j],
            total_ci: percentile_interval(total_resamples.iter().map(|r| r[j]).collect()),
        })
        .collect();
    Ok(SobolReport {
        indices,
        total_resamples,
    })
}

/// Sobol indices of a per-run quantity over a five-parameter design.
///
/// `qoi` holds `rows * reps` values in row-major order; repetitions are
/// averaged per row before estimation.
pub fn sobol_indices(n_rows: usize, reps: usize, qoi: &[f64], n_boot: usize, seed: u64) -> Result<SobolReport> {
    if qoi.len() != n_rows * reps || reps == 0 {
        return Err(Error::DimensionMismatch {
            expected: n_rows * reps,
            found: qoi.len(),
        });
    }
    let per_row: Vec<f64> = qoi.chunks(reps).map(mean).collect();
    sobol_from_rows(&per_row, crate::experiments::N_PARAMS, n_boot, seed)
}

#[derive(Debug, Clone, PartialEq)]
pub struct RegimeProfile {
    pub tag: RegimeTag,
    pub count: usize,
    /// Min-max normalized parameter means, in `PARAM_NAMES` order.
    pub mean: [f64; 5],
    pub sd: [f64; 5],
}

#[derive(Debug, Clone, PartialEq)]
pub struct ProfileReport {
    pub profiles: Vec<RegimeProfile>,
    /// Regimes with no runs.
    pub missing: Vec<RegimeTag>,
}

impl ProfileReport {
    pub fn get(&self, tag: RegimeTag) -> Option<&RegimeProfile> {
        self.profiles.iter().find(|p| p.tag == tag)
    }
}

/// Normalized parameter means and sds per regime (radar-plot data).
pub fn regime_parameter_profile(runs: &[(ModelParams, RegimeTag)], bounds: &ParamBounds) -> ProfileReport {
    let mut profiles = Vec::new();
    let mut missing = Vec::new();
    for tag in RegimeTag::ALL {
        let unit: Vec<[f64; 5]> = runs
            .iter()
            .filter(|(_, t)| *t == tag)
            .map(|(p, _)| bounds.normalize(p))
            .collect();
        if unit.is_empty() {
            missing.push(tag);
            continue;
        }
        let mut m = [0.0; 5];
        let mut s = [0.0; 5];
        for d in 0..5 {
            let col: Vec<f64> = unit.iter().map(|u| u[d]).collect();
            m[d] = mean(&col);
            s[d] = sample_sd(&col);
        }
        profiles.push(RegimeProfile {
            tag,
            count: unit.len(),
            mean: m,
            sd: s,
        });
    }
    ProfileReport { profiles, missing }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ProjectReturnGroup {
    pub tag: RegimeTag,
    /// Mean realized factor of every project in every run of the regime.
    pub averages: Vec<f64>,
    pub histogram: Vec<Bin>,
}

/// Per-regime distribution of average realized project factors.
pub fn project_return_summary(records: &[RunRecord], bins: usize) -> Vec<ProjectReturnGroup> {
    RegimeTag::ALL
        .into_iter()
        .map(|tag| {
            let averages: Vec<f64> = records
                .iter()
                .filter(|r| r.individual == tag)
                .flat_map(|r| r.projects.iter().map(|p| p.mean_factor))
                .collect();
            let histogram = histogram(&averages, bins);
            ProjectReturnGroup {
                tag,
                averages,
                histogram,
            }
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct BimodalDemo {
    pub samples: Vec<f64>,
    pub histogram: Vec<Bin>,
    pub mean: f64,
}

const BIMODAL_DRAWS: usize = 1000;

/// Pools `k` bimodal samples, each two normals of 1000 draws with means
/// `U(500, 800)` and sds `U(10, 50)`.
pub fn bimodal_sum_demo(k: usize, bins: usize, seed: u64) -> Result<BimodalDemo> {
    if k == 0 {
        return Err(Error::InvalidInput("bimodal demo needs k >= 1"));
    }
    let mut rng = rng_from_seed(seed);
    let mut samples = Vec::with_capacity(2 * k * BIMODAL_DRAWS);
    for _ in 0..2 * k {
        let mu = rng.random_range(500.0..800.0);
        let sd = rng.random_range(10.0..50.0);
        let normal = Normal::new(mu, sd).map_err(|_| Error::InvalidInput("bad normal parameters"))?;
        samples.extend((0..BIMODAL_DRAWS).map(|_| normal.sample(&mut rng)));
    }
    let histogram = histogram(&samples, bins);
    let mean = mean(&samples);
    Ok(BimodalDemo {
        samples,
        histogram,
        mean,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct DegreeGroup {
    pub memberships: usize,
    pub count: usize,
    /// Final-wealth quantiles at 0, 0.25, 0.5, 0.75 and 1.
    pub quantiles: [f64; 5],
}

/// Final-wealth quantiles grouped by extended-membership count, ascending.
pub fn degree_wealth_summary(memberships: &[usize], final_wealth: &[f64]) -> Vec<DegreeGroup> {
    let mut pairs: Vec<(usize, f64)> = memberships.iter().copied().zip(final_wealth.iter().copied()).collect();
    pairs.sort_by(|a, b| a.0.cmp(&b.0).then(a.1.total_cmp(&b.1)));
    pairs
        .chunk_by(|a, b| a.0 == b.0)
        .map(|grp| {
            let vals: Vec<f64> = grp.iter().map(|p| p.1).collect();
            let q = [0.0, 0.25, 0.5, 0.75, 1.0].map(|q| quantile_sorted(&vals, q));
            DegreeGroup {
                memberships: grp[0].0,
                count: vals.len(),
                quantiles: q,
            }
        })
        .collect()
}

/// [`degree_wealth_summary`] over all agents of all runs in one regime.
pub fn degree_wealth_by_regime(records: &[RunRecord], tag: RegimeTag) -> Vec<DegreeGroup> {
    let (m, w): (Vec<usize>, Vec<f64>) = records
        .iter()
        .filter(|r| r.individual == tag)
        .flat_map(|r| r.agents.iter().map(|a| (a.memberships, a.final_wealth)))
        .unzip();
    degree_wealth_summary(&m, &w)
}
