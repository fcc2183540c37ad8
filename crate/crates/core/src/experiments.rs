//! Saltelli designs, ensemble execution, regime classification and the
//! capital-injection experiment.

use alloc::vec::Vec;

use crate::analysis::{gini, horizontal_vertical_inequality};
use crate::economy::{SimOptions, Simulation, SimulationResult};
use crate::error::{Error, Result};
use crate::params::{FixedParams, ModelParams, ParamBounds};
use crate::rng::{child_seed, derive_seed};
use crate::social_graph::CommunityAssignment;
use crate::sobol_seq::sobol_points;

/// Number of swept parameters.
pub const N_PARAMS: usize = 5;
/// Design rows generated per base sample: A, the D mixed rows, B.
pub const ROWS_PER_BASE: usize = N_PARAMS + 2;

const DESIGN_SEED_TAG: u64 = 0x5a17;

/// Saltelli design over the five swept parameters.
///
/// Rows are grouped per base sample `i` as `A_i, AB_1_i, .., AB_5_i, B_i`,
/// where `AB_j` is `A` with column `j` taken from `B`.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentDesign {
    pub rows: Vec<ModelParams>,
    pub base_sample_count: usize,
    pub rep_count: usize,
    pub master_seed: u64,
}

impl ExperimentDesign {
    pub fn n_rows(&self) -> usize {
        self.rows.len()
    }

    pub fn n_runs(&self) -> usize {
        self.rows.len() * self.rep_count
    }

    /// Checks the row count against the block layout and every row against
    /// `bounds`.
    pub fn validate(&self, bounds: &ParamBounds) -> Result<()> {
        let expected = self.base_sample_count * ROWS_PER_BASE;
        if self.rows.len() != expected {
            return Err(Error::DimensionMismatch {
                expected,
                found: self.rows.len(),
            });
        }
        if self.rep_count == 0 {
            return Err(Error::InvalidInput("rep_count must be positive"));
        }
        self.rows.iter().try_for_each(|r| r.validate(bounds))
    }

    /// Seed of run `(row, rep)`.
    pub fn run_seed(&self, row: usize, rep: usize) -> u64 {
        child_seed(self.master_seed, row as u32, rep as u32)
    }
}

/// Unit-cube Saltelli rows for `dim` factors: `base_n * (dim + 2)` points.
///
/// The underlying `2 * dim` dimensional Sobol sequence gets a digital shift
/// derived from `seed`, so different seeds give different, equally
/// stratified designs.
pub fn saltelli_unit(base_n: usize, dim: usize, seed: u64) -> Result<Vec<Vec<f64>>> {
    if base_n == 0 || !base_n.is_power_of_two() {
        return Err(Error::InvalidInput("base_n must be a power of two"));
    }
    let shift: Vec<u32> = (0..2 * dim)
        .map(|d| (derive_seed(seed, DESIGN_SEED_TAG, d as u64) >> 32) as u32)
        .collect();
    let pts = sobol_points(base_n, 2 * dim, &shift)?;
    let mut rows = Vec::with_capacity(base_n * (dim + 2));
    for p in &pts {
        let (a, b) = p.split_at(dim);
        rows.push(a.to_vec());
        for j in 0..dim {
            let mut ab = a.to_vec();
            ab[j] = b[j];
            rows.push(ab);
        }
        rows.push(b.to_vec());
    }
    Ok(rows)
}

/// Saltelli design scaled to `bounds`.
pub fn saltelli_design(
    base_n: usize,
    bounds: &ParamBounds,
    rep_count: usize,
    master_seed: u64,
) -> Result<ExperimentDesign> {
    let unit = saltelli_unit(base_n, N_PARAMS, master_seed)?;
    let rows = unit
        .iter()
        .map(|u| bounds.scale([u[0], u[1], u[2], u[3], u[4]]))
        .collect();
    let design = ExperimentDesign {
        rows,
        base_sample_count: base_n,
        rep_count,
        master_seed,
    };
    design.validate(bounds)?;
    Ok(design)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum RegimeTag {
    AllPoor,
    SomeRich,
    AllRich,
}

impl RegimeTag {
    pub const ALL: [RegimeTag; 3] = [RegimeTag::AllPoor, RegimeTag::SomeRich, RegimeTag::AllRich];

    pub fn as_str(self) -> &'static str {
        match self {
            RegimeTag::AllPoor => "AllPoor",
            RegimeTag::SomeRich => "SomeRich",
            RegimeTag::AllRich => "AllRich",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        RegimeTag::ALL.into_iter().find(|t| t.as_str() == s)
    }

    pub fn index(self) -> usize {
        self as usize
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum RegimeLevel {
    Individual,
    Community,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct RegimeLabel {
    pub level: RegimeLevel,
    pub tag: RegimeTag,
}

/// Trichotomy over paired start/end values. Equality counts as not richer.
pub fn classify_values(initial: &[f64], last: &[f64]) -> RegimeTag {
    let richer = initial.iter().zip(last).filter(|(a, b)| b > a).count();
    if richer == 0 {
        RegimeTag::AllPoor
    } else if richer == initial.len() {
        RegimeTag::AllRich
    } else {
        RegimeTag::SomeRich
    }
}

pub fn classify_individual(result: &SimulationResult) -> RegimeLabel {
    RegimeLabel {
        level: RegimeLevel::Individual,
        tag: classify_values(&result.initial_wealth(), &result.final_wealth()),
    }
}

/// Sums `values` over the core partition.
pub fn community_totals(values: &[f64], communities: &CommunityAssignment) -> Vec<f64> {
    let mut totals = alloc::vec![0.0; communities.n_communities()];
    for (i, &c) in communities.core_label.iter().enumerate() {
        totals[c] += values[i];
    }
    totals
}

pub fn classify_community(result: &SimulationResult, communities: &CommunityAssignment) -> RegimeLabel {
    let start = community_totals(&result.initial_wealth(), communities);
    let end = community_totals(&result.final_wealth(), communities);
    RegimeLabel {
        level: RegimeLevel::Community,
        tag: classify_values(&start, &end),
    }
}

/// Per-agent end state kept for the degree/wealth analysis.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AgentOutcome {
    /// Number of communities the agent can invest in.
    pub memberships: usize,
    pub initial_wealth: f64,
    pub final_wealth: f64,
}

/// Per-project figures kept for the return analysis.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProjectOutcome {
    pub expected_factor: f64,
    /// Mean realized factor over all steps, unfunded steps counting as 0.
    pub mean_factor: f64,
    pub funded_steps: usize,
}

/// Everything the analyses need from one run.
#[derive(Debug, Clone, PartialEq)]
pub struct RunRecord {
    pub row_id: usize,
    pub rep: usize,
    pub seed: u64,
    pub params: ModelParams,
    pub individual: RegimeTag,
    pub community: RegimeTag,
    pub final_gini: f64,
    pub total_initial_wealth: f64,
    pub total_final_wealth: f64,
    pub fraction_richer: f64,
    pub horizontal_gini: f64,
    pub vertical_gini: f64,
    pub n_communities: usize,
    pub projects: Vec<ProjectOutcome>,
    pub agents: Vec<AgentOutcome>,
}

impl RunRecord {
    pub fn from_result(row_id: usize, rep: usize, result: &SimulationResult) -> Self {
        let w0 = result.initial_wealth();
        let wk = result.final_wealth();
        let communities = &result.communities;
        let richer = w0.iter().zip(&wk).filter(|(a, b)| b > a).count();
        let ineq = horizontal_vertical_inequality(&wk, communities);
        let projects = result
            .projects
            .iter()
            .enumerate()
            .map(|(k, p)| {
                let realized = &result.project_returns[k];
                let mean_factor = if realized.is_empty() {
                    0.0
                } else {
                    realized.iter().sum::<f64>() / realized.len() as f64
                };
                ProjectOutcome {
                    expected_factor: p.expected_factor(),
                    mean_factor,
                    funded_steps: result.funded[k].iter().filter(|&&f| f).count(),
                }
            })
            .collect();
        let agents = (0..w0.len())
            .map(|i| AgentOutcome {
                memberships: communities.extended_membership[i].len(),
                initial_wealth: w0[i],
                final_wealth: wk[i],
            })
            .collect();
        RunRecord {
            row_id,
            rep,
            seed: result.seed,
            params: result.params,
            individual: classify_values(&w0, &wk),
            community: classify_community(result, communities).tag,
            final_gini: gini(&wk).expect("wealth stays non-negative"),
            total_initial_wealth: w0.iter().sum(),
            total_final_wealth: wk.iter().sum(),
            fraction_richer: richer as f64 / w0.len() as f64,
            horizontal_gini: ineq.horizontal,
            vertical_gini: ineq.vertical,
            n_communities: communities.n_communities(),
            projects,
            agents,
        }
    }
}

/// Outcome of one `(row, rep)` job.
#[derive(Debug, Clone, PartialEq)]
pub struct RunOutcome {
    pub row_id: usize,
    pub rep: usize,
    pub seed: u64,
    pub record: core::result::Result<RunRecord, Error>,
}

/// Runs a single design cell.
pub fn run_job(design: &ExperimentDesign, fixed: &FixedParams, row: usize, rep: usize, options: &SimOptions) -> RunOutcome {
    let seed = design.run_seed(row, rep);
    let record = Simulation::new(design.rows[row], fixed, seed, options.clone()).map(|mut sim| {
        sim.run_to(fixed.steps);
        RunRecord::from_result(row, rep, &sim.into_result())
    });
    RunOutcome {
        row_id: row,
        rep,
        seed,
        record,
    }
}

/// Every `(row, rep)` job in row-major order. Failures are kept in place.
pub fn run_ensemble(design: &ExperimentDesign, fixed: &FixedParams, options: &SimOptions) -> Vec<RunOutcome> {
    let mut out = Vec::with_capacity(design.n_runs());
    for row in 0..design.n_rows() {
        for rep in 0..design.rep_count {
            out.push(run_job(design, fixed, row, rep, options));
        }
    }
    out
}

/// Individual x community contingency table, indexed `[community][individual]`.
pub fn joint_regime_counts(records: &[RunRecord]) -> [[usize; 3]; 3] {
    let mut t = [[0usize; 3]; 3];
    for r in records {
        t[r.community.index()][r.individual.index()] += 1;
    }
    t
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InterventionSpec {
    pub inject_step: usize,
    pub amount: f64,
    pub target_count: usize,
    pub extra_steps: usize,
    pub reps: usize,
}

impl Default for InterventionSpec {
    fn default() -> Self {
        InterventionSpec {
            inject_step: 100,
            amount: 10.0,
            target_count: 100,
            extra_steps: 100,
            reps: 20,
        }
    }
}

impl InterventionSpec {
    pub fn validate(&self, n_agents: usize) -> Result<()> {
        if self.inject_step == 0 || self.target_count == 0 || self.extra_steps == 0 || self.reps == 0 {
            return Err(Error::InvalidInput("intervention counts must be positive"));
        }
        if !(self.amount.is_finite() && self.amount >= 0.0) {
            return Err(Error::InvalidInput("injection amount must be finite and non-negative"));
        }
        if self.target_count > n_agents {
            return Err(Error::InvalidInput("target_count exceeds population"));
        }
        Ok(())
    }

    pub fn horizon(&self) -> usize {
        self.inject_step + self.extra_steps
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct InterventionRep {
    pub rep: usize,
    pub seed: u64,
    /// Agents that received the injection, poorest first.
    pub targeted: Vec<usize>,
    /// Richest of the `target_count` poorest agents at the end.
    pub poverty_line: f64,
    pub escape_fraction: f64,
    /// Largest final wealth among targeted agents.
    pub max_targeted_final: f64,
    /// Wealth paths of the targeted agents over the whole horizon.
    pub trajectories: Vec<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct InterventionReport {
    pub params: ModelParams,
    pub spec: InterventionSpec,
    pub reps: Vec<InterventionRep>,
}

impl InterventionReport {
    pub fn escape_fractions(&self) -> Vec<f64> {
        self.reps.iter().map(|r| r.escape_fraction).collect()
    }
}

/// Indices of the `k` smallest values, ties broken by index.
pub fn poorest(values: &[f64], k: usize) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..values.len()).collect();
    idx.sort_by(|&a, &b| values[a].total_cmp(&values[b]).then(a.cmp(&b)));
    idx.truncate(k);
    idx
}

/// Gives `spec.amount` to the `spec.target_count` poorest agents after
/// `spec.inject_step` steps and tracks them for `spec.extra_steps` more.
///
/// The poverty line is the final wealth of the richest agent among the
/// `target_count` poorest of the whole population at the end; a targeted
/// agent escapes when it ends strictly above that line.
pub fn run_intervention(
    params: ModelParams,
    fixed: &FixedParams,
    spec: &InterventionSpec,
    master_seed: u64,
    options: &SimOptions,
) -> Result<InterventionReport> {
    spec.validate(fixed.n_agents)?;
    let mut options = options.clone();
    options.horizon = Some(spec.horizon());
    let mut reps = Vec::with_capacity(spec.reps);
    for rep in 0..spec.reps {
        let seed = child_seed(master_seed, 0, rep as u32);
        let mut sim = Simulation::new(params, fixed, seed, options.clone())?;
        sim.run_to(spec.inject_step);
        let targeted = poorest(sim.current_wealth(), spec.target_count);
        for &i in &targeted {
            sim.inject(i, spec.amount);
        }
        sim.run_to(spec.horizon());
        let result = sim.into_result();
        let last = result.final_wealth();
        let poor_end = poorest(&last, spec.target_count);
        let line = poor_end.iter().map(|&i| last[i]).fold(f64::NEG_INFINITY, f64::max);
        let escaped = targeted.iter().filter(|&&i| last[i] > line).count();
        let max_targeted_final = targeted.iter().map(|&i| last[i]).fold(f64::NEG_INFINITY, f64::max);
        let trajectories = targeted.iter().map(|&i| result.wealth.trajectory(i).to_vec()).collect();
        reps.push(InterventionRep {
            rep,
            seed,
            targeted,
            poverty_line: line,
            escape_fraction: escaped as f64 / spec.target_count as f64,
            max_targeted_final,
            trajectories,
        });
    }
    Ok(InterventionReport {
        params,
        spec: *spec,
        reps,
    })
}
