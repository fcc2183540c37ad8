//! Acceptance suite. Runs the desk pipeline twice, then checks each
//! criterion and prints one PASS/FAIL line for it. Exits non-zero if any
//! criterion fails.

use std::fs;
use std::path::Path;
use std::process::ExitCode;

use povtrap::commands::{
    cmd_analyze, cmd_classify, cmd_demo_bimodal, cmd_design, cmd_intervene, cmd_run, cmd_sobol, data_files,
    Analysis, InterventionOutcome, InterventionTarget, RegimeCounts,
};
use povtrap::{Preset, RunConfig};
use povtrap_core::analysis::{sobol_from_rows, SobolReport};
use povtrap_core::cpt::{decision_weights, gain_utility, loss_utility, optimize_portfolio, CptParams, OptimizerConfig, ReturnMatrix};
use povtrap_core::economy::RiskyProject;
use povtrap_core::experiments::{saltelli_unit, RegimeTag};
use povtrap_core::rng::rng_from_seed;
use povtrap_core::stats::median;
use povtrap_core::{FixedParams, ParamBounds};
use rand::Rng;
use tempfile::TempDir;

const SEED: u64 = 20_240_917;
const THETA: usize = 3;
const FRACTION_RICHER: usize = 2;

struct Pipeline {
    counts: RegimeCounts,
    analysis: Analysis,
    sobol: Vec<SobolReport>,
    poor: povtrap::Result<InterventionOutcome>,
    rich: povtrap::Result<InterventionOutcome>,
}

fn pipeline(out: &Path, workers: usize) -> povtrap::Result<Pipeline> {
    let mut cfg = RunConfig::preset(Preset::Desk);
    cfg.master_seed = Some(SEED);
    cfg.out = out.to_path_buf();
    cfg.workers = workers;
    cmd_design(&cfg)?;
    cmd_run(&cfg, 1, true)?;
    let counts = cmd_classify(&cfg)?;
    let analysis = cmd_analyze(&cfg)?;
    let sobol = cmd_sobol(&cfg)?;
    cmd_demo_bimodal(&cfg)?;
    let poor = cmd_intervene(&cfg, InterventionTarget::Regime(RegimeTag::AllPoor));
    let rich = cmd_intervene(&cfg, InterventionTarget::Regime(RegimeTag::SomeRich));
    Ok(Pipeline {
        counts,
        analysis,
        sobol,
        poor,
        rich,
    })
}

type Verdict = (bool, String);

fn share(counts: &[usize; 3], tag: RegimeTag) -> f64 {
    counts[tag.index()] as f64 / counts.iter().sum::<usize>().max(1) as f64
}

fn c1_regime_ordering(p: &Pipeline) -> Verdict {
    let c = &p.counts.individual;
    let (poor, some, all) = (
        share(c, RegimeTag::AllPoor),
        share(c, RegimeTag::SomeRich),
        share(c, RegimeTag::AllRich),
    );
    (
        some > 0.5 && all < 0.05 && all < poor && poor < some,
        format!("AllPoor {poor:.4}, SomeRich {some:.4}, AllRich {all:.4}"),
    )
}

fn c2_community_inflation(p: &Pipeline) -> Verdict {
    let ind = share(&p.counts.individual, RegimeTag::AllRich);
    let com = share(&p.counts.community, RegimeTag::AllRich);
    (com > ind, format!("AllRich community {com:.4} vs individual {ind:.4}"))
}

fn c3_impossible_cells(p: &Pipeline) -> Verdict {
    use RegimeTag::*;
    let cells = [(AllPoor, AllRich), (SomeRich, AllPoor), (SomeRich, AllRich), (AllRich, AllPoor)];
    let counts: Vec<usize> = cells
        .iter()
        .map(|(c, i)| p.counts.joint[c.index()][i.index()])
        .collect();
    (counts.iter().all(|&n| n == 0), format!("forbidden cells {counts:?}"))
}

fn median_gini(p: &Pipeline, tag: RegimeTag) -> Option<f64> {
    let g: Vec<f64> = p
        .analysis
        .records
        .iter()
        .filter(|r| r.individual == tag)
        .map(|r| r.final_gini)
        .collect();
    (!g.is_empty()).then(|| median(&g))
}

fn c4_gini_separation(p: &Pipeline) -> Verdict {
    let some = median_gini(p, RegimeTag::SomeRich);
    let poor = median_gini(p, RegimeTag::AllPoor);
    let all = median_gini(p, RegimeTag::AllRich);
    let ok = some.is_some_and(|g| g > 0.6) && poor.is_some_and(|g| g < 0.3) && all.is_some_and(|g| g < 0.3);
    (ok, format!("median Gini SomeRich {some:?}, AllPoor {poor:?}, AllRich {all:?} (None = no runs)"))
}

fn c5_wealth_gini(p: &Pipeline) -> Verdict {
    let r = p.analysis.wealth_gini_r;
    (r.is_some_and(|r| r < -0.8), format!("Pearson r over SomeRich runs {r:?}"))
}

fn c6_single_trap(p: &Pipeline) -> Verdict {
    match &p.poor {
        Err(e) => (false, format!("no intervention: {e}")),
        Ok(o) => {
            let worst = o.report.reps.iter().map(|r| r.max_targeted_final).fold(0.0, f64::max);
            let zero = o.report.reps.iter().all(|r| r.escape_fraction == 0.0);
            (
                worst < 1e-8 && zero && o.report.reps.len() == 20,
                format!(
                    "row {}: largest targeted final wealth {worst:.3e}, escape fractions all zero: {zero}",
                    o.row_id
                ),
            )
        }
    }
}

fn c7_double_trap(p: &Pipeline) -> Verdict {
    match &p.rich {
        Err(e) => (false, format!("no intervention: {e}")),
        Ok(o) => {
            let f = o.report.escape_fractions();
            let mean = f.iter().sum::<f64>() / f.len() as f64;
            let positive = f.iter().filter(|&&x| x > 0.0).count();
            (
                mean > 0.05 && mean < 0.60 && positive >= 15 && f.len() == 20,
                format!("row {}: mean escape {mean:.4}, positive in {positive}/{} reps", o.row_id, f.len()),
            )
        }
    }
}

fn c8_sensitivity(p: &Pipeline) -> Verdict {
    let r = &p.sobol[FRACTION_RICHER];
    let top = r.top_total();
    let totals: Vec<String> = r.indices.iter().map(|i| format!("{:.3}", i.total)).collect();
    if top != THETA {
        return (false, format!("largest total-order index is {} (totals {totals:?})", povtrap_core::PARAM_NAMES[top]));
    }
    let runner = (0..5)
        .filter(|&d| d != THETA)
        .max_by(|&a, &b| r.indices[a].total.total_cmp(&r.indices[b].total))
        .unwrap();
    let (gap, ci) = r.total_gap(THETA, runner);
    let conclusive = ci.lo > 0.0;
    (
        conclusive,
        format!(
            "theta leads {} by {gap:.4}, 95% CI [{:.4}, {:.4}]{}",
            povtrap_core::PARAM_NAMES[runner],
            ci.lo,
            ci.hi,
            if conclusive { "" } else { ": inconclusive" }
        ),
    )
}

fn c9_radar_direction(p: &Pipeline) -> Verdict {
    let bounds = ParamBounds::default();
    let theta_mean = |keep: &dyn Fn(RegimeTag, RegimeTag) -> bool| -> Option<f64> {
        let v: Vec<f64> = p
            .analysis
            .records
            .iter()
            .filter(|r| keep(r.individual, r.community))
            .map(|r| bounds.normalize(&r.params)[THETA])
            .collect();
        (!v.is_empty()).then(|| v.iter().sum::<f64>() / v.len() as f64)
    };
    let poor = theta_mean(&|i, _| i == RegimeTag::AllPoor);
    let some = theta_mean(&|i, _| i == RegimeTag::SomeRich);
    let rich = theta_mean(&|i, c| i == RegimeTag::AllRich || c == RegimeTag::AllRich);
    let ok = matches!((poor, some, rich), (Some(a), Some(b), Some(c)) if a > b && b > c);
    (ok, format!("normalized theta AllPoor {poor:?}, SomeRich {some:?}, any AllRich {rich:?}"))
}

fn c10_project_bound(p: &Pipeline) -> Verdict {
    let fixed = FixedParams::desk();
    let n: usize = p.analysis.records.iter().map(|r| r.projects.len()).sum();
    let worst = p
        .analysis
        .records
        .iter()
        .flat_map(|r| r.projects.iter().map(|q| q.expected_factor))
        .fold(f64::INFINITY, f64::min);
    let corner = RiskyProject {
        community: 0,
        p_loss: 1.0 - ParamBounds::default().ell.0,
        loss_factor: fixed.loss_lower,
        gain_factor: fixed.gain_lower,
        min_investment: 0.0,
    }
    .expected_factor();
    (
        n > 0 && worst >= fixed.safe_gain && (corner - 1.11).abs() < 1e-12,
        format!("{n} projects, smallest expected factor {worst:.4}, worst corner {corner:.6}"),
    )
}

/// Rank-dependent CPT value from the definition, independent of the crate.
fn cpt_oracle(returns: &[f64], p: &CptParams) -> f64 {
    fn w(q: f64, d: f64) -> f64 {
        let (a, b) = (q.powf(d), (1.0 - q).powf(d));
        a / (a + b).powf(1.0 / d)
    }
    // Weights for `k` outcomes of one sign, least extreme first, repaired.
    fn side(k: usize, n: usize, d: f64) -> Vec<f64> {
        let nf = n as f64;
        let mut pi: Vec<f64> = (1..=k)
            .map(|j| w((k - j + 1) as f64 / nf, d) - if j == k { 0.0 } else { w((k - j) as f64 / nf, d) })
            .collect();
        if let Some(m) = (0..k).reduce(|a, b| if pi[b] < pi[a] { b } else { a }) {
            let low = pi[m];
            pi[..m].iter_mut().for_each(|v| *v = low);
        }
        pi
    }
    let n = returns.len();
    let mut gains: Vec<f64> = returns.iter().copied().filter(|&x| x >= 0.0).collect();
    let mut losses: Vec<f64> = returns.iter().map(|x| -x).filter(|&x| x > 0.0).collect();
    gains.sort_by(f64::total_cmp);
    losses.sort_by(f64::total_cmp);
    let up: f64 = side(gains.len(), n, p.delta_plus)
        .iter()
        .zip(&gains)
        .map(|(pi, x)| pi * (1.0 - (-p.gamma_plus * x).exp()))
        .sum();
    let down: f64 = side(losses.len(), n, p.delta_minus)
        .iter()
        .zip(&losses)
        .map(|(pi, x)| pi * (1.0 - (-p.gamma_minus * x).exp()))
        .sum();
    up - down
}

fn portfolio_returns(r: &[[f64; 3]], w: &[f64]) -> Vec<f64> {
    r.iter().map(|row| row.iter().zip(w).map(|(a, b)| a * b).sum()).collect()
}

fn c11_optimizer_vs_grid() -> Verdict {
    let fixed = FixedParams::desk();
    let bounds = ParamBounds::default();
    let mut rng = rng_from_seed(SEED ^ 0x11);
    let mut worst_gap = f64::NEG_INFINITY;
    let mut failures = 0;
    for inst in 0..50 {
        let params = CptParams::new(
            rng.random_range(fixed.gamma_plus.0..fixed.gamma_plus.1),
            rng.random_range(fixed.gamma_minus.0..fixed.gamma_minus.1),
            rng.random_range(fixed.delta_plus.0..fixed.delta_plus.1),
            rng.random_range(fixed.delta_minus.0..fixed.delta_minus.1),
        )
        .unwrap();
        let ell = rng.random_range(bounds.ell.0..bounds.ell.1);
        let g_up = rng.random_range(bounds.g_upper.0..bounds.g_upper.1);
        let projects: Vec<(f64, f64, f64)> = (0..2)
            .map(|_| {
                (
                    rng.random_range(ell..1.0 - ell),
                    rng.random_range(fixed.loss_lower..fixed.loss_upper),
                    rng.random_range(fixed.gain_lower..g_up),
                )
            })
            .collect();
        let rows: Vec<[f64; 3]> = (0..60)
            .map(|_| {
                let mut row = [fixed.safe_gain - 1.0; 3];
                for (k, &(pl, lo, hi)) in projects.iter().enumerate() {
                    row[k] = if rng.random::<f64>() < pl { lo } else { hi } - 1.0;
                }
                row
            })
            .collect();
        let m = ReturnMatrix::new(rows.len(), 3, rows.iter().flatten().copied().collect()).unwrap();
        let opt = optimize_portfolio(&m, &params, SEED + inst, &OptimizerConfig::default()).unwrap();
        let got = cpt_oracle(&portfolio_returns(&rows, opt.weights()), &params);
        let mut best = f64::NEG_INFINITY;
        for i in 0..=50 {
            for j in 0..=(50 - i) {
                let w = [i as f64 / 50.0, j as f64 / 50.0, (50 - i - j) as f64 / 50.0];
                best = best.max(cpt_oracle(&portfolio_returns(&rows, &w), &params));
            }
        }
        worst_gap = worst_gap.max(best - got);
        if got < best - 1e-6 {
            failures += 1;
        }
    }
    (
        failures == 0,
        format!("{failures}/50 instances below the 0.02 grid; largest shortfall {worst_gap:.3e}"),
    )
}

fn c12_cpt_analytics() -> Verdict {
    let fixed = FixedParams::desk();
    let mut rng = rng_from_seed(SEED ^ 0x12);
    let mut bad_weights = 0;
    for _ in 0..1000 {
        let np = rng.random_range(0..=300usize);
        let nn = rng.random_range(0..=300usize);
        if np + nn == 0 {
            continue;
        }
        let p = CptParams::new(
            20.0,
            50.0,
            rng.random_range(fixed.delta_plus.0..fixed.delta_plus.1),
            rng.random_range(fixed.delta_minus.0..fixed.delta_minus.1),
        )
        .unwrap();
        let dw = decision_weights(np, nn, &p);
        let mono = |v: &[f64]| v.len() == np + nn && v.windows(2).all(|w| w[0] <= w[1]) && v.iter().all(|&x| x >= 0.0);
        if !(mono(&dw.plus) && mono(&dw.minus)) {
            bad_weights += 1;
        }
    }
    let h = 1e-3;
    let mut bad_curv = 0;
    for _ in 0..100 {
        let gp = rng.random_range(fixed.gamma_plus.0..fixed.gamma_plus.1);
        let gm = rng.random_range(fixed.gamma_minus.0..fixed.gamma_minus.1);
        let x = rng.random_range(h..0.5);
        if gain_utility(x + h, gp) - 2.0 * gain_utility(x, gp) + gain_utility(x - h, gp) >= 0.0 {
            bad_curv += 1;
        }
        let y = -rng.random_range(h..0.1);
        if loss_utility(y + h, gm) - 2.0 * loss_utility(y, gm) + loss_utility(y - h, gm) <= 0.0 {
            bad_curv += 1;
        }
    }
    (
        bad_weights == 0 && bad_curv == 0,
        format!("{bad_weights} decreasing weight vectors in 1000 draws, {bad_curv} curvature violations in 200 points"),
    )
}

fn c13_determinism(a: &Path, b: &Path) -> Verdict {
    let (fa, fb) = match (data_files(a), data_files(b)) {
        (Ok(x), Ok(y)) => (x, y),
        _ => return (false, "cannot list outputs".into()),
    };
    if fa != fb {
        return (false, format!("file sets differ: {} vs {}", fa.len(), fb.len()));
    }
    let differing: Vec<String> = fa
        .iter()
        .filter(|f| fs::read(a.join(f)).ok() != fs::read(b.join(f)).ok())
        .map(|f| f.display().to_string())
        .collect();
    (differing.is_empty(), format!("{} files compared, differing: {differing:?}", fa.len()))
}

fn c14_sobol_oracle() -> Verdict {
    let unit = saltelli_unit(1024, 2, SEED).unwrap();
    let y: Vec<f64> = unit.iter().map(|x| x[0] + 2.0 * x[1]).collect();
    let r = sobol_from_rows(&y, 2, 500, SEED).unwrap();
    let (s1, s2) = (&r.indices[0], &r.indices[1]);
    (
        s1.first_ci.contains(0.2) && s2.first_ci.contains(0.8),
        format!(
            "S1 {:.4} [{:.4}, {:.4}], S2 {:.4} [{:.4}, {:.4}]",
            s1.first, s1.first_ci.lo, s1.first_ci.hi, s2.first, s2.first_ci.lo, s2.first_ci.hi
        ),
    )
}

fn c15_project_averages(p: &Pipeline) -> Verdict {
    let recs = &p.analysis.records;
    let rich: Vec<f64> = recs
        .iter()
        .filter(|r| r.individual == RegimeTag::AllRich)
        .flat_map(|r| r.projects.iter().filter(|q| q.funded_steps > 0).map(|q| q.mean_factor))
        .collect();
    let poor_max = recs
        .iter()
        .filter(|r| r.individual == RegimeTag::AllPoor)
        .flat_map(|r| r.projects.iter().map(|q| q.mean_factor))
        .fold(f64::NEG_INFINITY, f64::max);
    let rich_min = rich.iter().copied().fold(f64::INFINITY, f64::min);
    (
        !rich.is_empty() && rich_min >= 1.0 && poor_max < 2.5,
        format!(
            "{} funded projects in AllRich runs (min average {rich_min:.4}), AllPoor max average {poor_max:.4}",
            rich.len()
        ),
    )
}

fn main() -> ExitCode {
    let first = TempDir::new().unwrap();
    let second = TempDir::new().unwrap();
    let runs = pipeline(first.path(), 0).and_then(|p| pipeline(second.path(), 2).map(|_| p));
    let p = match runs {
        Ok(p) => p,
        Err(e) => {
            println!("desk pipeline failed: {e}");
            return ExitCode::FAILURE;
        }
    };
    let results: Vec<(&str, Verdict)> = vec![
        ("regime ordering", c1_regime_ordering(&p)),
        ("community AllRich inflation", c2_community_inflation(&p)),
        ("impossible joint cells", c3_impossible_cells(&p)),
        ("Gini separation", c4_gini_separation(&p)),
        ("wealth-Gini anti-correlation", c5_wealth_gini(&p)),
        ("intervention, single-equilibrium trap", c6_single_trap(&p)),
        ("intervention, double-equilibrium trap", c7_double_trap(&p)),
        ("theta leads total-order sensitivity", c8_sensitivity(&p)),
        ("radar profile direction", c9_radar_direction(&p)),
        ("project expected-return bound", c10_project_bound(&p)),
        ("optimizer vs grid oracle", c11_optimizer_vs_grid()),
        ("CPT weights and curvature", c12_cpt_analytics()),
        ("byte-identical reruns", c13_determinism(first.path(), second.path())),
        ("Sobol estimator on Y = X1 + 2 X2", c14_sobol_oracle()),
        ("project averages by regime", c15_project_averages(&p)),
    ];
    let mut failed = 0;
    for (i, (name, (ok, detail))) in results.iter().enumerate() {
        println!("criterion {:>2} {}: {name}: {detail}", i + 1, if *ok { "PASS" } else { "FAIL" });
        failed += usize::from(!ok);
    }
    println!("{} of {} criteria pass", results.len() - failed, results.len());
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
