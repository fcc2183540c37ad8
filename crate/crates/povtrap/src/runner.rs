//! Parallel, resumable ensemble execution.

use std::collections::BTreeMap;
use std::path::Path;

use povtrap_core::economy::SimOptions;
use povtrap_core::experiments::{run_job, ExperimentDesign};
use povtrap_core::FixedParams;
use rayon::prelude::*;

use crate::error::{CliError, Result};
use crate::io::{read_results, results_jsonl, write_atomic, ResultLine, ResultsHeader};

/// Jobs finished between two rewrites of the result file.
pub const CHUNK: usize = 64;

pub const RESULTS_FORMAT: &str = "povtrap-results-v1";

pub struct RunSummary {
    pub lines: Vec<ResultLine>,
    /// Jobs executed by this call, as opposed to found on disk.
    pub executed: usize,
}

impl RunSummary {
    pub fn convergence_failures(&self) -> usize {
        self.lines
            .iter()
            .filter(|l| l.convergence_failure == Some(true))
            .count()
    }
}

/// Thread pool with `workers` threads, or one per core when zero.
pub fn pool(workers: usize) -> Result<rayon::ThreadPool> {
    rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map_err(|e| CliError::Usage(format!("cannot start {workers} workers: {e}")))
}

/// Runs every `(row, rep)` job of `design` not already present in
/// `results`. The file is rewritten, sorted by `(row, rep)`, after each
/// chunk so an interrupted run loses at most one chunk.
pub fn run_resumable(
    design: &ExperimentDesign,
    fixed: &FixedParams,
    options: &SimOptions,
    header: &ResultsHeader,
    results: &Path,
    workers: usize,
    mut progress: impl FnMut(usize, usize),
) -> Result<RunSummary> {
    let mut done: BTreeMap<(usize, usize), ResultLine> = BTreeMap::new();
    if results.exists() {
        let (old_header, lines) = read_results(results)?;
        if old_header.as_ref() != Some(header) {
            return Err(CliError::Data(format!(
                "{} was written under a different configuration; remove it or change --out",
                results.display()
            )));
        }
        for l in lines {
            let valid = l.row_id < design.n_rows()
                && l.rep < design.rep_count
                && l.seed == design.run_seed(l.row_id, l.rep);
            if !valid {
                return Err(CliError::Data(format!(
                    "{}: record ({}, {}) does not belong to this design",
                    results.display(),
                    l.row_id,
                    l.rep
                )));
            }
            done.insert((l.row_id, l.rep), l);
        }
    }

    let pending: Vec<(usize, usize)> = (0..design.n_rows())
        .flat_map(|r| (0..design.rep_count).map(move |k| (r, k)))
        .filter(|key| !done.contains_key(key))
        .collect();
    let total = design.n_runs();
    let pool = pool(workers)?;
    for chunk in pending.chunks(CHUNK) {
        let fresh: Vec<ResultLine> = pool.install(|| {
            chunk
                .par_iter()
                .map(|&(row, rep)| {
                    let out = run_job(design, fixed, row, rep, options);
                    match &out.record {
                        Ok(rec) => ResultLine::ok(rec),
                        Err(e) => ResultLine::failed(row, rep, out.seed, design.rows[row], e),
                    }
                })
                .collect()
        });
        for l in fresh {
            done.insert((l.row_id, l.rep), l);
        }
        let lines: Vec<ResultLine> = done.values().cloned().collect();
        write_atomic(results, results_jsonl(header, &lines)?.as_bytes())?;
        progress(done.len(), total);
    }
    Ok(RunSummary {
        lines: done.into_values().collect(),
        executed: pending.len(),
    })
}
