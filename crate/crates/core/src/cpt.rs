//! Cumulative prospect theory (CPT) portfolio choice.
//!
//! Utilities are evaluated on *net* returns (factor - 1) so that losses fall
//! in the convex branch. A portfolio's CPT value over an empirical return
//! matrix is the rank-weighted sum of gain utilities minus the rank-weighted
//! sum of loss disutilities, with decision weights obtained by differencing a
//! probability-weighting function and repairing them to be non-decreasing.
//!
//! Two evaluators are provided. [`cpt_utility`] follows the definition
//! literally on the full scenario list. [`CptObjective`] collapses identical
//! scenarios and uses closed-form cumulative weights; the optimizer runs on
//! it because simulated return matrices have very few distinct rows.

use alloc::vec;
use alloc::vec::Vec;

use rand::Rng;
use rand_distr::{Distribution, Poisson};

use crate::error::{Error, Result};
use crate::rng::rng_from_seed;

/// Tolerance on the sum of portfolio weights.
pub const SIMPLEX_TOL: f64 = 1e-9;

/// Curvature and probability-weighting exponents of one agent.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CptParams {
    pub gamma_plus: f64,
    pub gamma_minus: f64,
    pub delta_plus: f64,
    pub delta_minus: f64,
}

impl CptParams {
    pub fn new(gamma_plus: f64, gamma_minus: f64, delta_plus: f64, delta_minus: f64) -> Result<Self> {
        if !(gamma_plus > 0.0 && gamma_minus > gamma_plus) {
            return Err(Error::InvalidInput("require gamma_minus > gamma_plus > 0"));
        }
        for d in [delta_plus, delta_minus] {
            if !(d > 0.0 && d <= 1.0) {
                return Err(Error::InvalidInput("delta must lie in (0, 1]"));
            }
        }
        Ok(CptParams {
            gamma_plus,
            gamma_minus,
            delta_plus,
            delta_minus,
        })
    }
}

#[inline]
pub fn gain_utility(x: f64, gamma_plus: f64) -> f64 {
    1.0 - libm::exp(-x * gamma_plus)
}

#[inline]
pub fn loss_utility(x: f64, gamma_minus: f64) -> f64 {
    libm::exp(x * gamma_minus) - 1.0
}

/// Piecewise exponential utility: concave for gains, convex for losses.
pub fn prospect_utility(x: f64, params: &CptParams) -> f64 {
    if x >= 0.0 {
        gain_utility(x, params.gamma_plus)
    } else {
        loss_utility(x, params.gamma_minus)
    }
}

/// Inverse-S probability weighting `p^d / (p^d + (1-p)^d)^(1/d)`.
pub fn probability_weight(p: f64, delta: f64) -> f64 {
    if p <= 0.0 {
        return 0.0;
    }
    if p >= 1.0 {
        return 1.0;
    }
    let a = libm::pow(p, delta);
    let b = libm::pow(1.0 - p, delta);
    a / libm::pow(a + b, 1.0 / delta)
}

/// Decision weights for the `n_side` outcomes of one sign out of `n_total`,
/// ordered from the least to the most extreme outcome.
///
/// Entry `j` (1-based) is `w((n_side-j+1)/N) - w((n_side-j)/N)`, the last one
/// `w(1/N)`. Entries before the (first) minimum are replaced by the minimum,
/// which makes the sequence non-decreasing.
pub fn side_weights(n_side: usize, n_total: usize, delta: f64) -> Vec<f64> {
    if n_side == 0 {
        return Vec::new();
    }
    let nf = n_total as f64;
    let mut pi: Vec<f64> = (1..=n_side)
        .map(|j| {
            if j == n_side {
                probability_weight(1.0 / nf, delta)
            } else {
                probability_weight((n_side - j + 1) as f64 / nf, delta)
                    - probability_weight((n_side - j) as f64 / nf, delta)
            }
        })
        .collect();
    let mut argmin = 0;
    for (j, &v) in pi.iter().enumerate() {
        if v < pi[argmin] {
            argmin = j;
        }
    }
    let min = pi[argmin];
    for v in pi.iter_mut().take(argmin) {
        *v = min;
    }
    pi
}

/// Zero-padded decision weights over all `N = n_pos + n_neg` sorted outcomes.
#[derive(Debug, Clone, PartialEq)]
pub struct DecisionWeights {
    /// `(0^{n_neg}, pi'_+)`
    pub plus: Vec<f64>,
    /// `(0^{n_pos}, pi'_-)`
    pub minus: Vec<f64>,
}

pub fn decision_weights(n_pos: usize, n_neg: usize, params: &CptParams) -> DecisionWeights {
    let n = n_pos + n_neg;
    let mut plus = vec![0.0; n_neg];
    plus.extend(side_weights(n_pos, n, params.delta_plus));
    let mut minus = vec![0.0; n_pos];
    minus.extend(side_weights(n_neg, n, params.delta_minus));
    DecisionWeights { plus, minus }
}

/// Scenario-by-asset matrix of net returns, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct ReturnMatrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl ReturnMatrix {
    pub fn new(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        if rows == 0 || cols == 0 {
            return Err(Error::InvalidInput("return matrix needs a scenario and an asset"));
        }
        if data.len() != rows * cols {
            return Err(Error::DimensionMismatch {
                expected: rows * cols,
                found: data.len(),
            });
        }
        if data.iter().any(|x| !x.is_finite()) {
            return Err(Error::InvalidInput("returns must be finite"));
        }
        Ok(ReturnMatrix { rows, cols, data })
    }

    /// Builds a matrix from per-asset columns of gross factors.
    pub fn from_factor_columns(columns: &[&[f64]]) -> Result<Self> {
        let cols = columns.len();
        let rows = columns.first().map_or(0, |c| c.len());
        if columns.iter().any(|c| c.len() != rows) {
            return Err(Error::InvalidInput("factor columns differ in length"));
        }
        let mut data = Vec::with_capacity(rows * cols);
        for r in 0..rows {
            for c in columns {
                data.push(c[r] - 1.0);
            }
        }
        Self::new(rows, cols, data)
    }

    pub fn n_scenarios(&self) -> usize {
        self.rows
    }

    pub fn n_assets(&self) -> usize {
        self.cols
    }

    pub fn row(&self, r: usize) -> &[f64] {
        &self.data[r * self.cols..(r + 1) * self.cols]
    }

    pub fn get(&self, r: usize, c: usize) -> f64 {
        self.data[r * self.cols + c]
    }

    pub fn portfolio_returns(&self, weights: &[f64]) -> Vec<f64> {
        (0..self.rows)
            .map(|r| self.row(r).iter().zip(weights).map(|(x, w)| x * w).sum())
            .collect()
    }
}

/// Non-negative weights summing to one.
#[derive(Debug, Clone, PartialEq)]
pub struct Portfolio(Vec<f64>);

impl Portfolio {
    pub fn new(weights: Vec<f64>) -> Result<Self> {
        if weights.is_empty() {
            return Err(Error::InvalidInput("empty portfolio"));
        }
        if weights.iter().any(|w| !(*w >= 0.0) || !w.is_finite()) {
            return Err(Error::InvalidInput("portfolio weights must be non-negative"));
        }
        let s: f64 = weights.iter().sum();
        if libm::fabs(s - 1.0) > SIMPLEX_TOL {
            return Err(Error::InvalidInput("portfolio weights must sum to one"));
        }
        Ok(Portfolio(weights))
    }

    pub fn uniform(n: usize) -> Self {
        Portfolio(vec![1.0 / n as f64; n])
    }

    pub fn vertex(n: usize, i: usize) -> Self {
        let mut w = vec![0.0; n];
        w[i] = 1.0;
        Portfolio(w)
    }

    pub fn weights(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn into_inner(self) -> Vec<f64> {
        self.0
    }

    /// Clips tiny negatives and renormalizes; used after floating-point
    /// weight transfers.
    fn from_raw(mut w: Vec<f64>) -> Self {
        for x in w.iter_mut() {
            if *x < 0.0 {
                *x = 0.0;
            }
        }
        let s: f64 = w.iter().sum();
        for x in w.iter_mut() {
            *x /= s;
        }
        Portfolio(w)
    }
}

/// Weighted ordered sum: `sum_i pi_i * x_(i)` with `x` sorted ascending.
fn weighted_ordered_sum(pi: &[f64], mut x: Vec<f64>) -> f64 {
    x.sort_by(f64::total_cmp);
    pi.iter().zip(&x).map(|(p, v)| p * v).sum()
}

/// CPT value of a portfolio, computed literally from the definition.
pub fn cpt_utility(p: &Portfolio, r: &ReturnMatrix, params: &CptParams) -> Result<f64> {
    if p.len() != r.n_assets() {
        return Err(Error::DimensionMismatch {
            expected: r.n_assets(),
            found: p.len(),
        });
    }
    let rp = r.portfolio_returns(p.weights());
    let n_neg = rp.iter().filter(|&&x| x < 0.0).count();
    let n_pos = rp.len() - n_neg;
    let dw = decision_weights(n_pos, n_neg, params);
    let gains: Vec<f64> = rp
        .iter()
        .map(|&x| gain_utility(x, params.gamma_plus).max(0.0))
        .collect();
    let losses: Vec<f64> = rp
        .iter()
        .map(|&x| -(loss_utility(x, params.gamma_minus).min(0.0)))
        .collect();
    Ok(weighted_ordered_sum(&dw.plus, gains) - weighted_ordered_sum(&dw.minus, losses))
}

/// Distinct scenario rows with their multiplicities.
#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioSet {
    n_assets: usize,
    n_scenarios: usize,
    rows: Vec<f64>,
    counts: Vec<usize>,
}

impl ScenarioSet {
    pub fn from_matrix(r: &ReturnMatrix) -> Self {
        let mut idx: Vec<usize> = (0..r.n_scenarios()).collect();
        idx.sort_by(|&a, &b| {
            r.row(a)
                .iter()
                .zip(r.row(b))
                .map(|(x, y)| x.total_cmp(y))
                .find(|o| o.is_ne())
                .unwrap_or(core::cmp::Ordering::Equal)
        });
        let mut rows: Vec<f64> = Vec::new();
        let mut counts: Vec<usize> = Vec::new();
        let mut last: Option<usize> = None;
        for &i in &idx {
            match last {
                Some(l) if r.row(l) == r.row(i) => *counts.last_mut().unwrap() += 1,
                _ => {
                    rows.extend_from_slice(r.row(i));
                    counts.push(1);
                    last = Some(i);
                }
            }
        }
        ScenarioSet {
            n_assets: r.n_assets(),
            n_scenarios: r.n_scenarios(),
            rows,
            counts,
        }
    }

    pub fn n_assets(&self) -> usize {
        self.n_assets
    }

    pub fn n_scenarios(&self) -> usize {
        self.n_scenarios
    }

    pub fn n_distinct(&self) -> usize {
        self.counts.len()
    }

    fn row(&self, g: usize) -> &[f64] {
        &self.rows[g * self.n_assets..(g + 1) * self.n_assets]
    }
}

/// Cumulative repaired decision weights of one sign for a fixed `N`.
#[derive(Debug, Clone)]
struct SideTable {
    n: usize,
    exponent: f64,
    /// `w(m / N)` for `m = 0..=N`, filled on first use (NaN until then).
    w: Vec<f64>,
    /// Argmin of `delta(k) = w((k+1)/N) - w(k/N)` over `k < N`, largest
    /// index on ties.
    kstar: usize,
}

impl SideTable {
    fn new(n: usize, exponent: f64) -> Self {
        let mut t = SideTable {
            n,
            exponent,
            w: vec![f64::NAN; n + 1],
            kstar: 0,
        };
        if n > 0 {
            // The weighting function is inverse-S shaped, so delta falls
            // then rises: find the first k after which it strictly rises.
            let (mut lo, mut hi) = (0, n - 1);
            while lo < hi {
                let mid = lo + (hi - lo) / 2;
                if t.delta(mid + 1) > t.delta(mid) {
                    hi = mid;
                } else {
                    lo = mid + 1;
                }
            }
            t.kstar = lo;
        }
        t
    }

    #[inline]
    fn w(&mut self, m: usize) -> f64 {
        let v = self.w[m];
        if !v.is_nan() {
            return v;
        }
        let v = probability_weight(m as f64 / self.n as f64, self.exponent);
        self.w[m] = v;
        v
    }

    #[inline]
    fn delta(&mut self, k: usize) -> f64 {
        self.w(k + 1) - self.w(k)
    }

    /// Total repaired weight of the `m` most extreme of `n_side` outcomes.
    #[inline]
    fn cumulative(&mut self, n_side: usize, m: usize) -> f64 {
        if m == 0 {
            return 0.0;
        }
        // delta is decreasing on [0, kstar], so the argmin over the first
        // n_side entries is the last of them until kstar is reached
        let kmin = self.kstar.min(n_side - 1);
        if m <= kmin + 1 {
            self.w(m)
        } else {
            self.w(kmin + 1) + (m - kmin - 1) as f64 * self.delta(kmin)
        }
    }
}

/// CPT objective over a [`ScenarioSet`], for repeated evaluation.
#[derive(Debug, Clone)]
pub struct CptObjective<'a> {
    set: &'a ScenarioSet,
    params: CptParams,
    plus: SideTable,
    minus: SideTable,
    order: Vec<usize>,
}

impl<'a> CptObjective<'a> {
    pub fn new(set: &'a ScenarioSet, params: CptParams) -> Self {
        let n = set.n_scenarios();
        CptObjective {
            set,
            params,
            plus: SideTable::new(n, params.delta_plus),
            minus: SideTable::new(n, params.delta_minus),
            order: (0..set.n_distinct()).collect(),
        }
    }

    pub fn n_assets(&self) -> usize {
        self.set.n_assets()
    }

    /// Per-group portfolio returns.
    pub fn group_returns(&self, weights: &[f64], out: &mut Vec<f64>) {
        out.clear();
        for g in 0..self.set.n_distinct() {
            out.push(self.set.row(g).iter().zip(weights).map(|(x, w)| x * w).sum());
        }
    }

    pub fn value(&mut self, weights: &[f64]) -> f64 {
        let mut rp = Vec::with_capacity(self.set.n_distinct());
        self.group_returns(weights, &mut rp);
        self.value_from_returns(&rp)
    }

    /// CPT value given the portfolio return of every scenario group.
    pub fn value_from_returns(&mut self, rp: &[f64]) -> f64 {
        let counts = &self.set.counts;
        self.order
            .sort_unstable_by(|&a, &b| rp[a].total_cmp(&rp[b]));
        let n_neg: usize = self
            .order
            .iter()
            .take_while(|&&g| rp[g] < 0.0)
            .map(|&g| counts[g])
            .sum();
        let n_pos = self.set.n_scenarios() - n_neg;
        let mut total = 0.0;
        // losses, most extreme first
        let (mut seen, mut cum) = (0, 0.0);
        for &g in &self.order {
            let x = rp[g];
            if x >= 0.0 {
                break;
            }
            seen += counts[g];
            let next = self.minus.cumulative(n_neg, seen);
            total -= (next - cum) * (1.0 - libm::exp(x * self.params.gamma_minus));
            cum = next;
        }
        // gains, most extreme first
        let (mut seen, mut cum) = (0, 0.0);
        for &g in self.order.iter().rev() {
            let x = rp[g];
            if x < 0.0 {
                break;
            }
            seen += counts[g];
            let next = self.plus.cumulative(n_pos, seen);
            total += (next - cum) * gain_utility(x, self.params.gamma_plus);
            cum = next;
        }
        total
    }
}

/// Settings of the multi-start local search.
#[derive(Debug, Clone, PartialEq)]
pub struct OptimizerConfig {
    /// Random simplex points added to the vertices and the barycentre.
    pub random_starts: usize,
    /// How many of the best candidates are refined by local search.
    pub refine_top: usize,
    pub initial_step: f64,
    /// Smallest transfer size tried.
    pub min_step: f64,
    /// A transfer is accepted only if it improves the value by this much.
    pub min_improvement: f64,
}

impl Default for OptimizerConfig {
    fn default() -> Self {
        OptimizerConfig {
            random_starts: 20,
            refine_top: 4,
            initial_step: 0.25,
            min_step: 1e-4,
            min_improvement: 1e-9,
        }
    }
}

/// Maximizes CPT utility over the simplex.
///
/// The candidates are every vertex, the barycentre and
/// `config.random_starts` uniform random simplex points. The best
/// `config.refine_top` of them are polished by pairwise weight transfers
/// with a halving step size. The result is never worse than the best
/// candidate.
pub fn optimize_portfolio(
    r: &ReturnMatrix,
    params: &CptParams,
    seed: u64,
    config: &OptimizerConfig,
) -> Result<Portfolio> {
    if r.n_assets() < 2 {
        return Err(Error::InvalidInput("need at least two assets"));
    }
    let set = ScenarioSet::from_matrix(r);
    let mut obj = CptObjective::new(&set, *params);
    Ok(optimize_objective(&mut obj, seed, config).0)
}

/// [`optimize_portfolio`] on a prepared objective; also returns the value.
pub fn optimize_objective(
    obj: &mut CptObjective<'_>,
    seed: u64,
    config: &OptimizerConfig,
) -> (Portfolio, f64) {
    let n = obj.n_assets();
    let mut rng = rng_from_seed(seed);
    let mut candidates: Vec<Vec<f64>> = Vec::with_capacity(n + 1 + config.random_starts);
    for i in 0..n {
        candidates.push(Portfolio::vertex(n, i).into_inner());
    }
    candidates.push(Portfolio::uniform(n).into_inner());
    for _ in 0..config.random_starts {
        // normalized exponentials are uniform on the simplex
        let mut w: Vec<f64> = (0..n)
            .map(|_| {
                let u: f64 = rng.random();
                -libm::log(1.0 - u)
            })
            .collect();
        let s: f64 = w.iter().sum();
        if s > 0.0 {
            w.iter_mut().for_each(|x| *x /= s);
            candidates.push(w);
        }
    }
    let mut scored: Vec<(f64, usize)> = candidates
        .iter()
        .enumerate()
        .map(|(i, w)| (obj.value(w), i))
        .collect();
    scored.sort_by(|a, b| b.0.total_cmp(&a.0).then(a.1.cmp(&b.1)));

    let mut best_w = candidates[scored[0].1].clone();
    let mut best_v = scored[0].0;
    let mut search = LocalSearch::new(n, obj.set.n_distinct());
    for &(_, i) in scored.iter().take(config.refine_top.max(1)) {
        let (w, v) = search.run(obj, candidates[i].clone(), config);
        if v > best_v {
            best_v = v;
            best_w = w;
        }
    }
    (Portfolio::from_raw(best_w), best_v)
}

struct LocalSearch {
    rp: Vec<f64>,
    trial: Vec<f64>,
    n_assets: usize,
}

impl LocalSearch {
    fn new(n_assets: usize, n_groups: usize) -> Self {
        LocalSearch {
            rp: Vec::with_capacity(n_groups),
            trial: Vec::with_capacity(n_groups),
            n_assets,
        }
    }

    fn run(
        &mut self,
        obj: &mut CptObjective<'_>,
        mut w: Vec<f64>,
        config: &OptimizerConfig,
    ) -> (Vec<f64>, f64) {
        let n = self.n_assets;
        obj.group_returns(&w, &mut self.rp);
        let mut current = obj.value_from_returns(&self.rp);
        let mut step = config.initial_step;
        while step >= config.min_step {
            let mut improved = false;
            for i in 0..n {
                for j in 0..n {
                    if i == j || w[i] <= 0.0 {
                        continue;
                    }
                    let amount = step.min(w[i]);
                    self.trial.clear();
                    for g in 0..self.rp.len() {
                        let row = obj.set.row(g);
                        self.trial.push(self.rp[g] + amount * (row[j] - row[i]));
                    }
                    let v = obj.value_from_returns(&self.trial);
                    if v > current + config.min_improvement {
                        current = v;
                        if amount >= w[i] {
                            w[j] += w[i];
                            w[i] = 0.0;
                        } else {
                            w[i] -= amount;
                            w[j] += amount;
                        }
                        core::mem::swap(&mut self.rp, &mut self.trial);
                        improved = true;
                    }
                }
            }
            if !improved {
                step *= 0.5;
            }
        }
        (w, current)
    }
}

/// Convex combination `(1 - a) * initial + a * observed`.
pub fn attention_update(initial: &Portfolio, observed: &Portfolio, a: f64) -> Result<Portfolio> {
    if initial.len() != observed.len() {
        return Err(Error::DimensionMismatch {
            expected: initial.len(),
            found: observed.len(),
        });
    }
    if !(0.0..=1.0).contains(&a) {
        return Err(Error::InvalidInput("attention must lie in [0, 1]"));
    }
    let w = initial
        .weights()
        .iter()
        .zip(observed.weights())
        .map(|(x, y)| (1.0 - a) * x + a * y)
        .collect();
    Ok(Portfolio::from_raw(w))
}

/// Portfolio update steps: partial sums of Poisson(`rate`) gaps (zero gaps
/// count as one), kept inside `(warmup, horizon]`.
pub fn sample_update_times(rate: f64, horizon: usize, warmup: usize, seed: u64) -> Result<Vec<usize>> {
    let poisson = Poisson::new(rate).map_err(|_| Error::InvalidInput("update rate must be positive"))?;
    let mut rng = rng_from_seed(seed);
    let mut t = 0usize;
    let mut out = Vec::new();
    loop {
        let gap = (poisson.sample(&mut rng) as usize).max(1);
        t += gap;
        if t > horizon {
            break;
        }
        if t > warmup {
            out.push(t);
        }
    }
    Ok(out)
}
