//! One function per subcommand. Each writes its files under `cfg.out` and
//! returns what it computed so callers and tests can inspect it.

use std::fs;
use std::path::{Path, PathBuf};

use povtrap_core::analysis::{
    bimodal_sum_demo, degree_wealth_by_regime, project_return_summary, regime_parameter_profile,
    sobol_indices, wealth_gini_correlation, BimodalDemo, ProfileReport, SobolReport,
};
use povtrap_core::economy::{simulate_with, SimOptions};
use povtrap_core::experiments::{
    joint_regime_counts, run_intervention, saltelli_design, ExperimentDesign, InterventionReport, RegimeTag,
    RunRecord,
};
use povtrap_core::rng::derive_seed;
use povtrap_core::social_graph::graph_distribution_summary;
use povtrap_core::stats::{mean, median};
use povtrap_core::{ModelParams, PARAM_NAMES};

use crate::config::RunConfig;
use crate::error::{CliError, Result};
use crate::io::{
    community_csv, design_csv, edge_list, read_design, read_results, run_metadata, wealth_csv, write_atomic,
    ResultLine, ResultsHeader, Table,
};
use crate::runner::{run_resumable, RunSummary, RESULTS_FORMAT};

const INTERVENTION_TAG: u64 = 0x1e7e;
const ROW_PICK_TAG: u64 = 0x9c4;
const SOBOL_TAG: u64 = 0x50b0;
const BIMODAL_TAG: u64 = 0xb1;

/// Names of the scalar outputs used for sensitivity analysis.
pub const QOI_NAMES: [&str; 3] = ["final_gini", "total_final_wealth", "fraction_richer"];

pub fn design_path(cfg: &RunConfig) -> PathBuf {
    cfg.out.join("design.csv")
}

pub fn results_path(cfg: &RunConfig) -> PathBuf {
    cfg.out.join("results.jsonl")
}

pub fn analysis_dir(cfg: &RunConfig) -> PathBuf {
    cfg.out.join("analysis")
}

fn sim_options(cfg: &RunConfig) -> SimOptions {
    SimOptions {
        optimizer: cfg.optimizer.clone(),
        bounds: Some(cfg.bounds),
        ..SimOptions::default()
    }
}

fn build_design(cfg: &RunConfig) -> Result<ExperimentDesign> {
    Ok(saltelli_design(cfg.base_n, &cfg.bounds, cfg.reps, cfg.seed()?)?)
}

pub fn cmd_design(cfg: &RunConfig) -> Result<ExperimentDesign> {
    cfg.validate()?;
    let design = build_design(cfg)?;
    design_csv(&design, &cfg.provenance("design")).save(&design_path(cfg))?;
    Ok(design)
}

/// Runs the ensemble, resuming from `results.jsonl` when present. The first
/// `export_runs` jobs in row-major order also get full per-run exports.
pub fn cmd_run(cfg: &RunConfig, export_runs: usize, quiet: bool) -> Result<RunSummary> {
    cfg.validate()?;
    let design = build_design(cfg)?;
    let dpath = design_path(cfg);
    if dpath.exists() {
        let on_disk = read_design(&dpath)?;
        if on_disk != design {
            return Err(CliError::Data(format!(
                "{} does not match the configured design; remove it or change --out",
                dpath.display()
            )));
        }
    } else {
        design_csv(&design, &cfg.provenance("design")).save(&dpath)?;
    }
    let header = ResultsHeader {
        povtrap_results: RESULTS_FORMAT.into(),
        config_digest: cfg.digest(),
        master_seed: cfg.seed()?,
    };
    let options = sim_options(cfg);
    let summary = run_resumable(
        &design,
        &cfg.fixed,
        &options,
        &header,
        &results_path(cfg),
        cfg.workers,
        |done, total| {
            if !quiet {
                eprintln!("run: {done}/{total}");
            }
        },
    )?;
    for job in 0..export_runs.min(design.n_runs()) {
        let (row, rep) = (job / design.rep_count, job % design.rep_count);
        export_run(cfg, &design, row, rep, &options)?;
    }
    let failed = summary.convergence_failures();
    if failed > 0 {
        return Err(CliError::Convergence(format!(
            "{failed} run(s) hit the label-propagation cap; their records carry the error"
        )));
    }
    Ok(summary)
}

fn export_run(cfg: &RunConfig, design: &ExperimentDesign, row: usize, rep: usize, options: &SimOptions) -> Result<()> {
    let seed = design.run_seed(row, rep);
    let Ok(result) = simulate_with(design.rows[row], &cfg.fixed, seed, options.clone()) else {
        return Ok(());
    };
    let dir = cfg.out.join("runs").join(format!("row{row}_rep{rep}"));
    let prov = format!("{} row_id={row} rep={rep} seed={seed}", cfg.provenance("run"));
    wealth_csv(&result, &prov).save(&dir.join("wealth.csv"))?;
    let meta = serde_json::to_string(&run_metadata(&result))
        .map_err(|e| CliError::Data(format!("cannot encode metadata: {e}")))?;
    write_atomic(&dir.join("metadata.jsonl"), format!("{meta}\n").as_bytes())?;
    write_atomic(
        &dir.join("graph.txt"),
        format!("# {prov}\n{}", edge_list(&result.graph)).as_bytes(),
    )?;
    community_csv(&result.communities, &prov).save(&dir.join("communities.csv"))?;
    let summary = graph_distribution_summary(&result.communities, &result.graph);
    let mut t = Table::new(&prov, &["quantity", "value", "count"]);
    for (size, n) in &summary.size_histogram {
        t.row(["community_size".to_string(), size.to_string(), n.to_string()]);
    }
    for (deg, n) in &summary.degree_histogram {
        t.row(["community_degree".to_string(), deg.to_string(), n.to_string()]);
    }
    t.save(&dir.join("graph_summary.csv"))
}

/// Successful records plus the number of failed runs.
pub fn load_records(cfg: &RunConfig) -> Result<(Vec<RunRecord>, usize)> {
    let path = results_path(cfg);
    if !path.exists() {
        return Err(CliError::Data(format!(
            "{} not found; run `povtrap run` first",
            path.display()
        )));
    }
    let (_, lines) = read_results(&path)?;
    let failed = lines.iter().filter(|l| !l.is_ok()).count();
    let records = lines
        .iter()
        .filter_map(|l| l.to_record().ok().flatten())
        .collect();
    Ok((records, failed))
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RegimeCounts {
    pub individual: [usize; 3],
    pub community: [usize; 3],
    /// `[community][individual]`.
    pub joint: [[usize; 3]; 3],
    pub failed: usize,
}

pub fn regime_counts(records: &[RunRecord], failed: usize) -> RegimeCounts {
    let joint = joint_regime_counts(records);
    let mut individual = [0; 3];
    let mut community = [0; 3];
    for (c, row) in joint.iter().enumerate() {
        for (i, n) in row.iter().enumerate() {
            individual[i] += n;
            community[c] += n;
        }
    }
    RegimeCounts {
        individual,
        community,
        joint,
        failed,
    }
}

pub fn cmd_classify(cfg: &RunConfig) -> Result<RegimeCounts> {
    let (records, failed) = load_records(cfg)?;
    let counts = regime_counts(&records, failed);
    let prov = format!("{} failed_runs={failed}", cfg.provenance("classify"));
    let total = records.len().max(1) as f64;
    let mut t = Table::new(&prov, &["level", "regime", "count", "proportion"]);
    for (level, row) in [("individual", counts.individual), ("community", counts.community)] {
        for tag in RegimeTag::ALL {
            let n = row[tag.index()];
            t.row([level.to_string(), tag.as_str().into(), n.to_string(), (n as f64 / total).to_string()]);
        }
    }
    t.save(&cfg.out.join("regime_counts.csv"))?;
    let mut j = Table::new(&prov, &["community_regime", "individual_regime", "count"]);
    for c in RegimeTag::ALL {
        for i in RegimeTag::ALL {
            j.row([c.as_str(), i.as_str(), &counts.joint[c.index()][i.index()].to_string()]);
        }
    }
    j.save(&cfg.out.join("regime_joint.csv"))?;
    Ok(counts)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum InterventionTarget {
    Row(usize),
    /// A row whose every repetition was classified with this regime.
    Regime(RegimeTag),
}

/// Rows whose repetitions all completed and all carry `tag`.
pub fn confirmed_rows(lines: &[ResultLine], reps: usize, tag: RegimeTag) -> Vec<usize> {
    let mut by_row: std::collections::BTreeMap<usize, Vec<&ResultLine>> = Default::default();
    for l in lines {
        by_row.entry(l.row_id).or_default().push(l);
    }
    by_row
        .into_iter()
        .filter(|(_, ls)| {
            ls.len() == reps && ls.iter().all(|l| l.individual_regime.as_deref() == Some(tag.as_str()))
        })
        .map(|(r, _)| r)
        .collect()
}

pub struct InterventionOutcome {
    pub row_id: usize,
    pub report: InterventionReport,
}

pub fn cmd_intervene(cfg: &RunConfig, target: InterventionTarget) -> Result<InterventionOutcome> {
    cfg.validate()?;
    cfg.intervention
        .validate(cfg.fixed.n_agents)
        .map_err(|e| CliError::Usage(e.to_string()))?;
    let seed = cfg.seed()?;
    let design = if design_path(cfg).exists() {
        read_design(&design_path(cfg))?
    } else {
        build_design(cfg)?
    };
    let row_id = match target {
        InterventionTarget::Row(r) if r < design.n_rows() => r,
        InterventionTarget::Row(r) => {
            return Err(CliError::Usage(format!("row {r} is outside the {}-row design", design.n_rows())))
        }
        InterventionTarget::Regime(tag) => {
            let (_, lines) = read_results(&results_path(cfg))?;
            let rows = confirmed_rows(&lines, design.rep_count, tag);
            if rows.is_empty() {
                return Err(CliError::Data(format!("no row is {} in every repetition", tag.as_str())));
            }
            rows[(derive_seed(seed, ROW_PICK_TAG, tag.index() as u64) % rows.len() as u64) as usize]
        }
    };
    let params: ModelParams = design.rows[row_id];
    let report = run_intervention(
        params,
        &cfg.fixed,
        &cfg.intervention,
        derive_seed(seed, INTERVENTION_TAG, row_id as u64),
        &sim_options(cfg),
    )?;
    let prov = format!("{} row_id={row_id}", cfg.provenance("intervene"));
    let mut t = Table::new(
        &prov,
        &["rep", "seed", "poverty_line", "escape_fraction", "max_targeted_final"],
    );
    for r in &report.reps {
        t.row([
            r.rep.to_string(),
            r.seed.to_string(),
            r.poverty_line.to_string(),
            r.escape_fraction.to_string(),
            r.max_targeted_final.to_string(),
        ]);
    }
    let stem = format!("intervention_row{row_id}");
    t.save(&cfg.out.join(format!("{stem}.csv")))?;
    let horizon = cfg.intervention.horizon();
    let mut cols = vec!["rep".to_string(), "agent".to_string()];
    cols.extend((0..=horizon).map(|s| format!("t{s}")));
    let cols: Vec<&str> = cols.iter().map(String::as_str).collect();
    let mut traj = Table::new(&prov, &cols);
    for r in &report.reps {
        for (agent, path) in r.targeted.iter().zip(&r.trajectories) {
            traj.row([r.rep.to_string(), agent.to_string()].into_iter().chain(path.iter().map(f64::to_string)));
        }
    }
    traj.save(&cfg.out.join(format!("{stem}_trajectories.csv")))?;
    Ok(InterventionOutcome { row_id, report })
}

fn fmt_opt(x: Option<f64>) -> String {
    x.map_or_else(|| "NA".into(), |v| v.to_string())
}

fn profile_rows(t: &mut Table, level: &str, report: &ProfileReport) {
    for tag in RegimeTag::ALL {
        match report.get(tag) {
            Some(p) => {
                for (d, name) in PARAM_NAMES.iter().enumerate() {
                    t.row([
                        level.to_string(),
                        tag.as_str().into(),
                        p.count.to_string(),
                        name.to_string(),
                        p.mean[d].to_string(),
                        p.sd[d].to_string(),
                    ]);
                }
            }
            None => {
                for name in PARAM_NAMES {
                    t.row([level, tag.as_str(), "0", name, "NA", "NA"]);
                }
            }
        }
    }
}

/// Everything `analyze` computes, for callers that want the numbers.
pub struct Analysis {
    pub records: Vec<RunRecord>,
    pub individual_profile: ProfileReport,
    pub community_profile: ProfileReport,
    pub wealth_gini_r: Option<f64>,
}

pub fn cmd_analyze(cfg: &RunConfig) -> Result<Analysis> {
    cfg.validate()?;
    let (records, failed) = load_records(cfg)?;
    let dir = analysis_dir(cfg);
    let prov = format!("{} failed_runs={failed}", cfg.provenance("analyze"));

    let mut runs = Table::new(
        &prov,
        &[
            "row_id",
            "rep",
            "seed",
            "individual_regime",
            "community_regime",
            "final_gini",
            "total_final_wealth",
            "fraction_richer",
            "horizontal_gini",
            "vertical_gini",
            "n_communities",
        ],
    );
    for r in &records {
        runs.row([
            r.row_id.to_string(),
            r.rep.to_string(),
            r.seed.to_string(),
            r.individual.as_str().into(),
            r.community.as_str().into(),
            r.final_gini.to_string(),
            r.total_final_wealth.to_string(),
            r.fraction_richer.to_string(),
            r.horizontal_gini.to_string(),
            r.vertical_gini.to_string(),
            r.n_communities.to_string(),
        ]);
    }
    runs.save(&dir.join("runs.csv"))?;

    let mut gini = Table::new(
        &prov,
        &["regime", "runs", "median_gini", "mean_gini", "mean_horizontal", "mean_vertical"],
    );
    for tag in RegimeTag::ALL {
        let sel: Vec<&RunRecord> = records.iter().filter(|r| r.individual == tag).collect();
        let col = |f: fn(&RunRecord) -> f64| -> Vec<f64> { sel.iter().map(|r| f(r)).collect() };
        let g = col(|r| r.final_gini);
        let (med, h, v) = if g.is_empty() {
            (None, None, None)
        } else {
            (Some(median(&g)), Some(mean(&col(|r| r.horizontal_gini))), Some(mean(&col(|r| r.vertical_gini))))
        };
        gini.row([
            tag.as_str().to_string(),
            g.len().to_string(),
            fmt_opt(med),
            fmt_opt((!g.is_empty()).then(|| mean(&g))),
            fmt_opt(h),
            fmt_opt(v),
        ]);
    }
    gini.save(&dir.join("gini_by_regime.csv"))?;

    let ind: Vec<(ModelParams, RegimeTag)> = records.iter().map(|r| (r.params, r.individual)).collect();
    let com: Vec<(ModelParams, RegimeTag)> = records.iter().map(|r| (r.params, r.community)).collect();
    let individual_profile = regime_parameter_profile(&ind, &cfg.bounds);
    let community_profile = regime_parameter_profile(&com, &cfg.bounds);
    let mut prof = Table::new(&prov, &["level", "regime", "runs", "param", "mean", "sd"]);
    profile_rows(&mut prof, "individual", &individual_profile);
    profile_rows(&mut prof, "community", &community_profile);
    prof.save(&dir.join("regime_profiles.csv"))?;

    let groups = project_return_summary(&records, cfg.bins);
    let mut hist = Table::new(&prov, &["regime", "bin_left", "bin_right", "count"]);
    let mut stats = Table::new(
        &prov,
        &["regime", "projects", "min_average", "median_average", "max_average", "min_funded_average"],
    );
    for g in &groups {
        for b in &g.histogram {
            hist.row([g.tag.as_str().to_string(), b.left.to_string(), b.right.to_string(), b.count.to_string()]);
        }
        let funded: Vec<f64> = records
            .iter()
            .filter(|r| r.individual == g.tag)
            .flat_map(|r| r.projects.iter().filter(|p| p.funded_steps > 0).map(|p| p.mean_factor))
            .collect();
        let min = |v: &[f64]| v.iter().copied().reduce(f64::min);
        let max = |v: &[f64]| v.iter().copied().reduce(f64::max);
        stats.row([
            g.tag.as_str().to_string(),
            g.averages.len().to_string(),
            fmt_opt(min(&g.averages)),
            fmt_opt((!g.averages.is_empty()).then(|| median(&g.averages))),
            fmt_opt(max(&g.averages)),
            fmt_opt(min(&funded)),
        ]);
    }
    hist.save(&dir.join("project_returns_hist.csv"))?;
    stats.save(&dir.join("project_returns.csv"))?;

    let some_rich = records.iter().filter(|r| r.individual == RegimeTag::SomeRich).count();
    let wealth_gini_r = wealth_gini_correlation(&records).ok();
    let mut wg = Table::new(&prov, &["some_rich_runs", "pearson_r"]);
    wg.row([some_rich.to_string(), fmt_opt(wealth_gini_r)]);
    wg.save(&dir.join("wealth_gini_correlation.csv"))?;

    let mut deg = Table::new(&prov, &["regime", "memberships", "agents", "q0", "q25", "q50", "q75", "q100"]);
    for tag in RegimeTag::ALL {
        for g in degree_wealth_by_regime(&records, tag) {
            deg.row(
                [tag.as_str().to_string(), g.memberships.to_string(), g.count.to_string()]
                    .into_iter()
                    .chain(g.quantiles.iter().map(f64::to_string)),
            );
        }
    }
    deg.save(&dir.join("degree_wealth.csv"))?;

    Ok(Analysis {
        records,
        individual_profile,
        community_profile,
        wealth_gini_r,
    })
}

/// Per-run values of each sensitivity output, row-major over `(row, rep)`.
pub fn qoi_columns(records: &[RunRecord]) -> [Vec<f64>; 3] {
    [
        records.iter().map(|r| r.final_gini).collect(),
        records.iter().map(|r| r.total_final_wealth).collect(),
        records.iter().map(|r| r.fraction_richer).collect(),
    ]
}

pub fn cmd_sobol(cfg: &RunConfig) -> Result<Vec<SobolReport>> {
    cfg.validate()?;
    let seed = cfg.seed()?;
    let design = read_design(&design_path(cfg))?;
    let (records, failed) = load_records(cfg)?;
    if failed > 0 || records.len() != design.n_runs() {
        return Err(CliError::Data(format!(
            "Sobol indices need every run: {} of {} available",
            records.len(),
            design.n_runs()
        )));
    }
    let prov = cfg.provenance("sobol");
    let mut reports = Vec::new();
    let mut t = Table::new(&prov, &["qoi", "param", "index", "estimate", "ci_lo", "ci_hi"]);
    let mut rank = Table::new(
        &prov,
        &["qoi", "top_param", "runner_up", "gap", "gap_ci_lo", "gap_ci_hi", "verdict"],
    );
    for (q, col) in qoi_columns(&records).iter().enumerate() {
        let rep = sobol_indices(
            design.n_rows(),
            design.rep_count,
            col,
            cfg.bootstrap,
            derive_seed(seed, SOBOL_TAG, q as u64),
        )?;
        for (d, idx) in rep.indices.iter().enumerate() {
            t.row([QOI_NAMES[q], PARAM_NAMES[d], "first", &idx.first.to_string(), &idx.first_ci.lo.to_string(), &idx.first_ci.hi.to_string()]);
            t.row([QOI_NAMES[q], PARAM_NAMES[d], "total", &idx.total.to_string(), &idx.total_ci.lo.to_string(), &idx.total_ci.hi.to_string()]);
        }
        let top = rep.top_total();
        let runner = (0..rep.indices.len())
            .filter(|&d| d != top)
            .max_by(|&a, &b| rep.indices[a].total.total_cmp(&rep.indices[b].total))
            .unwrap_or(top);
        let (gap, ci) = rep.total_gap(top, runner);
        let verdict = if ci.lo > 0.0 { "conclusive" } else { "inconclusive" };
        rank.row([
            QOI_NAMES[q],
            PARAM_NAMES[top],
            PARAM_NAMES[runner],
            &gap.to_string(),
            &ci.lo.to_string(),
            &ci.hi.to_string(),
            verdict,
        ]);
        reports.push(rep);
    }
    t.save(&cfg.out.join("sobol.csv"))?;
    rank.save(&cfg.out.join("sobol_ranking.csv"))?;
    Ok(reports)
}

pub fn cmd_demo_bimodal(cfg: &RunConfig) -> Result<BimodalDemo> {
    let seed = cfg.seed()?;
    let demo = bimodal_sum_demo(cfg.bimodal_k, cfg.bins, derive_seed(seed, BIMODAL_TAG, 0))?;
    let prov = format!(
        "{} k={} draws={} mean={}",
        cfg.provenance("demo-bimodal"),
        cfg.bimodal_k,
        demo.samples.len(),
        demo.mean
    );
    let mut t = Table::new(&prov, &["bin_left", "bin_right", "count"]);
    for b in &demo.histogram {
        t.row([b.left.to_string(), b.right.to_string(), b.count.to_string()]);
    }
    t.save(&cfg.out.join("bimodal_demo.csv"))?;
    Ok(demo)
}

/// Data files under `dir`, relative paths sorted, for reproducibility checks.
pub fn data_files(dir: &Path) -> Result<Vec<PathBuf>> {
    fn walk(base: &Path, dir: &Path, out: &mut Vec<PathBuf>) -> Result<()> {
        for e in fs::read_dir(dir).map_err(|e| CliError::io(dir, e))? {
            let p = e.map_err(|e| CliError::io(dir, e))?.path();
            if p.is_dir() {
                walk(base, &p, out)?;
            } else if let Ok(rel) = p.strip_prefix(base) {
                out.push(rel.to_path_buf());
            }
        }
        Ok(())
    }
    let mut out = Vec::new();
    walk(dir, dir, &mut out)?;
    out.sort();
    Ok(out)
}
