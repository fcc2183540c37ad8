//! Command-line surface: flag parsing and dispatch.

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};
use povtrap_core::experiments::RegimeTag;

use crate::commands::{self, InterventionTarget};
use crate::config::{Preset, RunConfig};
use crate::error::{CliError, Result};

#[derive(Debug, Parser)]
#[command(name = "povtrap", version, about = "Multi-level poverty-trap agent-based model")]
pub struct Cli {
    #[command(flatten)]
    pub common: Common,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args)]
pub struct Common {
    /// Flat `key = value` configuration file.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Master seed for every stochastic step.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Built-in scale preset: desk or paper.
    #[arg(long, global = true)]
    pub preset: Option<String>,
    /// Worker threads for `run` (0 = one per core).
    #[arg(long, global = true)]
    pub workers: Option<usize>,
    /// Output directory.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// Extra `key=value` override, applied after the config file.
    #[arg(long = "set", global = true, value_name = "KEY=VALUE")]
    pub set: Vec<String>,
    /// Suppress progress output.
    #[arg(long, short, global = true)]
    pub quiet: bool,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Write the Saltelli design.
    Design,
    /// Run (or resume) the ensemble over the design.
    Run {
        /// Jobs, in row-major order, that also get wealth, graph and community exports.
        #[arg(long, default_value_t = 1)]
        export_runs: usize,
    },
    /// Count individual and community regimes.
    Classify,
    /// Capital-injection experiment on one design row.
    Intervene {
        #[arg(long, conflicts_with = "regime")]
        row: Option<usize>,
        /// Pick a row classified with this regime in every repetition.
        #[arg(long)]
        regime: Option<String>,
    },
    /// Inequality, profile, project-return and degree summaries.
    Analyze,
    /// First- and total-order Sobol indices.
    Sobol,
    /// Pooled sum of bimodal samples.
    DemoBimodal,
}

/// Builds the configuration from the file, the preset and the flags.
pub fn resolve_config(c: &Common) -> Result<RunConfig> {
    let preset = c.preset.as_deref().map(str::parse::<Preset>).transpose()?;
    let mut cfg = match &c.config {
        Some(path) => RunConfig::from_file(path, preset)?,
        None => RunConfig::preset(preset.unwrap_or(Preset::Desk)),
    };
    for kv in &c.set {
        let (k, v) = kv
            .split_once('=')
            .ok_or_else(|| CliError::Usage(format!("--set expects KEY=VALUE, got `{kv}`")))?;
        cfg.set(k.trim(), v.trim())?;
    }
    if let Some(s) = c.seed {
        cfg.master_seed = Some(s);
    }
    if let Some(w) = c.workers {
        cfg.workers = w;
    }
    if let Some(o) = &c.out {
        cfg.out = o.clone();
    }
    Ok(cfg)
}

pub fn execute(cli: &Cli) -> Result<()> {
    let cfg = resolve_config(&cli.common)?;
    cfg.seed()?;
    match &cli.command {
        Command::Design => {
            let d = commands::cmd_design(&cfg)?;
            println!("design: {} rows -> {}", d.n_rows(), commands::design_path(&cfg).display());
        }
        Command::Run { export_runs } => {
            let s = commands::cmd_run(&cfg, *export_runs, cli.common.quiet)?;
            println!(
                "run: {} records ({} new) -> {}",
                s.lines.len(),
                s.executed,
                commands::results_path(&cfg).display()
            );
        }
        Command::Classify => {
            let c = commands::cmd_classify(&cfg)?;
            for tag in RegimeTag::ALL {
                println!(
                    "{:<9} individual {:>6}  community {:>6}",
                    tag.as_str(),
                    c.individual[tag.index()],
                    c.community[tag.index()]
                );
            }
        }
        Command::Intervene { row, regime } => {
            let target = match (row, regime) {
                (Some(r), _) => InterventionTarget::Row(*r),
                (None, Some(t)) => InterventionTarget::Regime(
                    RegimeTag::parse(t).ok_or_else(|| CliError::Usage(format!("unknown regime `{t}`")))?,
                ),
                (None, None) => return Err(CliError::Usage("intervene needs --row or --regime".into())),
            };
            let o = commands::cmd_intervene(&cfg, target)?;
            let f = o.report.escape_fractions();
            println!(
                "intervene: row {} mean escape fraction {:.4} over {} reps",
                o.row_id,
                f.iter().sum::<f64>() / f.len() as f64,
                f.len()
            );
        }
        Command::Analyze => {
            let a = commands::cmd_analyze(&cfg)?;
            println!(
                "analyze: {} runs -> {}",
                a.records.len(),
                commands::analysis_dir(&cfg).display()
            );
        }
        Command::Sobol => {
            let reports = commands::cmd_sobol(&cfg)?;
            for (name, r) in commands::QOI_NAMES.iter().zip(&reports) {
                println!("{name}: largest total-order index {}", povtrap_core::PARAM_NAMES[r.top_total()]);
            }
        }
        Command::DemoBimodal => {
            let d = commands::cmd_demo_bimodal(&cfg)?;
            println!("demo-bimodal: {} draws, mean {:.3}", d.samples.len(), d.mean);
        }
    }
    Ok(())
}
