//! File formats. Every writer goes through [`write_atomic`] and every CSV
//! starts with a `#` provenance line.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use povtrap_core::economy::SimulationResult;
use povtrap_core::experiments::{AgentOutcome, ExperimentDesign, ProjectOutcome, RegimeTag, RunRecord};
use povtrap_core::social_graph::{CommunityAssignment, SocialGraph};
use povtrap_core::ModelParams;
use serde::{Deserialize, Serialize};

use crate::error::{CliError, Result};

/// Writes to a sibling temporary file, then renames over `path`.
pub fn write_atomic(path: &Path, contents: &[u8]) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))?;
    }
    let mut tmp = path.as_os_str().to_owned();
    tmp.push(".tmp");
    fs::write(&tmp, contents).map_err(|e| CliError::io(&tmp, e))?;
    fs::rename(&tmp, path).map_err(|e| CliError::io(path, e))
}

/// CSV text with a provenance comment, a header row and data rows.
pub struct Table {
    buf: String,
}

impl Table {
    pub fn new(provenance: &str, columns: &[&str]) -> Self {
        let mut buf = String::new();
        let _ = writeln!(buf, "# {provenance}");
        buf.push_str(&columns.join(","));
        buf.push('\n');
        Table { buf }
    }

    pub fn row<I, T>(&mut self, cells: I)
    where
        I: IntoIterator<Item = T>,
        T: std::fmt::Display,
    {
        let mut first = true;
        for c in cells {
            if !first {
                self.buf.push(',');
            }
            first = false;
            let _ = write!(self.buf, "{c}");
        }
        self.buf.push('\n');
    }

    pub fn as_str(&self) -> &str {
        &self.buf
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        write_atomic(path, self.buf.as_bytes())
    }
}

/// Data lines of a CSV produced by [`Table`]: comments skipped, header
/// checked. Yields `(line_number, fields)`.
pub fn read_csv(path: &Path, expected_header: &[&str]) -> Result<Vec<(usize, Vec<String>)>> {
    let text = fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    let mut lines = text
        .lines()
        .enumerate()
        .filter(|(_, l)| !l.starts_with('#') && !l.trim().is_empty());
    let header = lines
        .next()
        .ok_or_else(|| CliError::Data(format!("{}: missing header", path.display())))?;
    let got: Vec<&str> = header.1.split(',').map(str::trim).collect();
    if got != expected_header {
        return Err(CliError::Data(format!(
            "{}:{}: expected header `{}`",
            path.display(),
            header.0 + 1,
            expected_header.join(",")
        )));
    }
    Ok(lines
        .map(|(i, l)| (i + 1, l.split(',').map(|s| s.trim().to_string()).collect()))
        .collect())
}

pub const DESIGN_HEADER: [&str; 6] = ["row_id", "ell", "g_upper", "beta", "theta", "alpha"];

pub fn design_csv(design: &ExperimentDesign, provenance: &str) -> Table {
    let mut t = Table::new(
        &format!(
            "{provenance} base_n={} reps={}",
            design.base_sample_count, design.rep_count
        ),
        &DESIGN_HEADER,
    );
    for (i, r) in design.rows.iter().enumerate() {
        t.row([
            i.to_string(),
            r.ell.to_string(),
            r.g_upper.to_string(),
            r.beta.to_string(),
            r.theta.to_string(),
            r.alpha.to_string(),
        ]);
    }
    t
}

/// Reads a design CSV. Block size, repetitions and seed come from the
/// provenance line written by [`design_csv`].
pub fn read_design(path: &Path) -> Result<ExperimentDesign> {
    let text = fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    let meta: BTreeMap<&str, &str> = text
        .lines()
        .take_while(|l| l.starts_with('#'))
        .flat_map(|l| l.split_whitespace())
        .filter_map(|tok| tok.split_once('='))
        .collect();
    let field = |k: &str| -> Result<u64> {
        meta.get(k)
            .and_then(|v| v.parse().ok())
            .ok_or_else(|| CliError::Data(format!("{}: provenance line lacks `{k}`", path.display())))
    };
    let base_n = field("base_n")? as usize;
    let reps = field("reps")? as usize;
    let seed = field("master_seed")?;
    let mut rows = Vec::new();
    for (line, cells) in read_csv(path, &DESIGN_HEADER)? {
        let bad = || CliError::Data(format!("{}:{line}: malformed design row", path.display()));
        if cells.len() != 6 || cells[0].parse::<usize>().ok() != Some(rows.len()) {
            return Err(bad());
        }
        let v: Vec<f64> = cells[1..]
            .iter()
            .map(|c| c.parse::<f64>().map_err(|_| bad()))
            .collect::<Result<_>>()?;
        rows.push(ModelParams::from_array([v[0], v[1], v[2], v[3], v[4]]));
    }
    let design = ExperimentDesign {
        rows,
        base_sample_count: base_n,
        rep_count: reps,
        master_seed: seed,
    };
    if design.n_rows() != base_n * povtrap_core::experiments::ROWS_PER_BASE {
        return Err(CliError::Data(format!(
            "{}: {} rows do not match base_n={base_n}",
            path.display(),
            design.n_rows()
        )));
    }
    Ok(design)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParamsLine {
    pub ell: f64,
    pub g_upper: f64,
    pub beta: f64,
    pub theta: f64,
    pub alpha: f64,
}

impl From<ModelParams> for ParamsLine {
    fn from(p: ModelParams) -> Self {
        ParamsLine {
            ell: p.ell,
            g_upper: p.g_upper,
            beta: p.beta,
            theta: p.theta,
            alpha: p.alpha,
        }
    }
}

impl From<&ParamsLine> for ModelParams {
    fn from(p: &ParamsLine) -> Self {
        ModelParams::from_array([p.ell, p.g_upper, p.beta, p.theta, p.alpha])
    }
}

/// One line of `results.jsonl`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResultLine {
    pub row_id: usize,
    pub rep: usize,
    pub seed: u64,
    pub params: ParamsLine,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub convergence_failure: Option<bool>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub individual_regime: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub community_regime: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub final_gini: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub total_initial_wealth: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub total_final_wealth: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub fraction_richer: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub horizontal_gini: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub vertical_gini: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n_communities: Option<usize>,
    /// `[expected_factor, mean_realized_factor, funded_steps]` per project.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub projects: Option<Vec<(f64, f64, usize)>>,
    /// `[memberships, initial_wealth, final_wealth]` per agent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub agents: Option<Vec<(usize, f64, f64)>>,
}

impl ResultLine {
    pub fn ok(r: &RunRecord) -> Self {
        ResultLine {
            row_id: r.row_id,
            rep: r.rep,
            seed: r.seed,
            params: r.params.into(),
            error: None,
            convergence_failure: None,
            individual_regime: Some(r.individual.as_str().into()),
            community_regime: Some(r.community.as_str().into()),
            final_gini: Some(r.final_gini),
            total_initial_wealth: Some(r.total_initial_wealth),
            total_final_wealth: Some(r.total_final_wealth),
            fraction_richer: Some(r.fraction_richer),
            horizontal_gini: Some(r.horizontal_gini),
            vertical_gini: Some(r.vertical_gini),
            n_communities: Some(r.n_communities),
            projects: Some(
                r.projects
                    .iter()
                    .map(|p| (p.expected_factor, p.mean_factor, p.funded_steps))
                    .collect(),
            ),
            agents: Some(
                r.agents
                    .iter()
                    .map(|a| (a.memberships, a.initial_wealth, a.final_wealth))
                    .collect(),
            ),
        }
    }

    pub fn failed(row_id: usize, rep: usize, seed: u64, params: ModelParams, err: &povtrap_core::Error) -> Self {
        ResultLine {
            row_id,
            rep,
            seed,
            params: params.into(),
            error: Some(err.to_string()),
            convergence_failure: Some(matches!(err, povtrap_core::Error::Convergence { .. })),
            individual_regime: None,
            community_regime: None,
            final_gini: None,
            total_initial_wealth: None,
            total_final_wealth: None,
            fraction_richer: None,
            horizontal_gini: None,
            vertical_gini: None,
            n_communities: None,
            projects: None,
            agents: None,
        }
    }

    pub fn is_ok(&self) -> bool {
        self.error.is_none()
    }

    /// Rebuilds the run record; `None` for failed runs.
    pub fn to_record(&self) -> std::result::Result<Option<RunRecord>, String> {
        if self.error.is_some() {
            return Ok(None);
        }
        let missing = |f: &str| format!("successful record lacks `{f}`");
        let tag = |s: &Option<String>, f: &str| -> std::result::Result<RegimeTag, String> {
            let s = s.as_deref().ok_or_else(|| missing(f))?;
            RegimeTag::parse(s).ok_or_else(|| format!("unknown regime `{s}`"))
        };
        Ok(Some(RunRecord {
            row_id: self.row_id,
            rep: self.rep,
            seed: self.seed,
            params: (&self.params).into(),
            individual: tag(&self.individual_regime, "individual_regime")?,
            community: tag(&self.community_regime, "community_regime")?,
            final_gini: self.final_gini.ok_or_else(|| missing("final_gini"))?,
            total_initial_wealth: self.total_initial_wealth.ok_or_else(|| missing("total_initial_wealth"))?,
            total_final_wealth: self.total_final_wealth.ok_or_else(|| missing("total_final_wealth"))?,
            fraction_richer: self.fraction_richer.ok_or_else(|| missing("fraction_richer"))?,
            horizontal_gini: self.horizontal_gini.ok_or_else(|| missing("horizontal_gini"))?,
            vertical_gini: self.vertical_gini.ok_or_else(|| missing("vertical_gini"))?,
            n_communities: self.n_communities.ok_or_else(|| missing("n_communities"))?,
            projects: self
                .projects
                .as_ref()
                .ok_or_else(|| missing("projects"))?
                .iter()
                .map(|&(expected_factor, mean_factor, funded_steps)| ProjectOutcome {
                    expected_factor,
                    mean_factor,
                    funded_steps,
                })
                .collect(),
            agents: self
                .agents
                .as_ref()
                .ok_or_else(|| missing("agents"))?
                .iter()
                .map(|&(memberships, initial_wealth, final_wealth)| AgentOutcome {
                    memberships,
                    initial_wealth,
                    final_wealth,
                })
                .collect(),
        }))
    }
}

/// First line of `results.jsonl`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResultsHeader {
    pub povtrap_results: String,
    pub config_digest: String,
    pub master_seed: u64,
}

pub fn results_jsonl(header: &ResultsHeader, lines: &[ResultLine]) -> Result<String> {
    let enc = |e: serde_json::Error| CliError::Data(format!("cannot encode result: {e}"));
    let mut out = serde_json::to_string(header).map_err(enc)?;
    out.push('\n');
    for l in lines {
        out.push_str(&serde_json::to_string(l).map_err(enc)?);
        out.push('\n');
    }
    Ok(out)
}

/// Parses `results.jsonl`; a malformed line is reported by number.
pub fn read_results(path: &Path) -> Result<(Option<ResultsHeader>, Vec<ResultLine>)> {
    let text = fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    parse_results(&text).map_err(|e| CliError::Data(format!("{}:{e}", path.display())))
}

pub fn parse_results(text: &str) -> std::result::Result<(Option<ResultsHeader>, Vec<ResultLine>), String> {
    let mut header = None;
    let mut lines = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        if raw.trim().is_empty() {
            continue;
        }
        if i == 0 {
            if let Ok(h) = serde_json::from_str::<ResultsHeader>(raw) {
                header = Some(h);
                continue;
            }
        }
        let line: ResultLine = serde_json::from_str(raw).map_err(|e| format!("{}: corrupted record: {e}", i + 1))?;
        line.to_record().map_err(|e| format!("{}: {e}", i + 1))?;
        lines.push(line);
    }
    Ok((header, lines))
}

/// Wealth matrix, one row per agent and one column per step.
pub fn wealth_csv(result: &SimulationResult, provenance: &str) -> Table {
    let cols = result.wealth.n_cols();
    let mut header = vec!["agent".to_string()];
    header.extend((0..cols).map(|t| format!("t{t}")));
    let header: Vec<&str> = header.iter().map(String::as_str).collect();
    let mut t = Table::new(provenance, &header);
    for i in 0..result.n_agents() {
        t.row(std::iter::once(i.to_string()).chain(result.wealth.trajectory(i).iter().map(|w| w.to_string())));
    }
    t
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProjectLine {
    pub community: usize,
    pub p_loss: f64,
    pub loss_factor: f64,
    pub gain_factor: f64,
    pub min_investment: f64,
    pub expected_factor: f64,
}

/// JSON metadata companion of [`wealth_csv`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunMetadata {
    pub seed: u64,
    pub params: ParamsLine,
    pub individual_regime: String,
    pub community_regime: String,
    pub projects: Vec<ProjectLine>,
}

pub fn run_metadata(result: &SimulationResult) -> RunMetadata {
    RunMetadata {
        seed: result.seed,
        params: result.params.into(),
        individual_regime: povtrap_core::experiments::classify_individual(result).tag.as_str().into(),
        community_regime: povtrap_core::experiments::classify_community(result, &result.communities)
            .tag
            .as_str()
            .into(),
        projects: result
            .projects
            .iter()
            .map(|p| ProjectLine {
                community: p.community,
                p_loss: p.p_loss,
                loss_factor: p.loss_factor,
                gain_factor: p.gain_factor,
                min_investment: p.min_investment,
                expected_factor: p.expected_factor(),
            })
            .collect(),
    }
}

/// One `i j` pair per line, `i < j`, 0-based.
pub fn edge_list(graph: &SocialGraph) -> String {
    let mut s = String::new();
    for (a, b) in graph.edges() {
        let _ = writeln!(s, "{a} {b}");
    }
    s
}

pub fn parse_edge_list(text: &str, n_nodes: usize) -> Result<SocialGraph> {
    let mut edges = Vec::new();
    for (i, line) in text.lines().enumerate() {
        if line.trim().is_empty() || line.starts_with('#') {
            continue;
        }
        let mut it = line.split_whitespace().map(str::parse::<usize>);
        match (it.next(), it.next(), it.next()) {
            (Some(Ok(a)), Some(Ok(b)), None) => edges.push((a, b)),
            _ => return Err(CliError::Data(format!("edge list line {}: expected `i j`", i + 1))),
        }
    }
    if let Some(&(a, b)) = edges.iter().find(|(a, b)| a == b || *a >= n_nodes || *b >= n_nodes) {
        return Err(CliError::Data(format!("edge list: invalid edge `{a} {b}` for {n_nodes} nodes")));
    }
    Ok(SocialGraph::from_edges(n_nodes, &edges))
}

/// `node_id,core_label,extended_labels` with extended labels joined by `;`.
pub fn community_csv(c: &CommunityAssignment, provenance: &str) -> Table {
    let mut t = Table::new(provenance, &["node_id", "core_label", "extended_labels"]);
    for i in 0..c.n_nodes() {
        let ext: Vec<String> = c.extended_membership[i].iter().map(|l| l.to_string()).collect();
        t.row([i.to_string(), c.core_label[i].to_string(), ext.join(";")]);
    }
    t
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn table_layout() {
        let mut t = Table::new("prov", &["a", "b"]);
        t.row([1, 2]);
        assert_eq!(t.as_str(), "# prov\na,b\n1,2\n");
    }

    #[test]
    fn corrupted_line_is_named() {
        let text = "{\"povtrap_results\":\"v1\",\"config_digest\":\"x\",\"master_seed\":1}\n{not json\n";
        let err = parse_results(text).unwrap_err();
        assert!(err.starts_with("2:"), "{err}");
    }
}
