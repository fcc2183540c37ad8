//! Run configuration: built-in presets, flat `key = value` files and
//! command-line overrides.

use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use povtrap_core::cpt::OptimizerConfig;
use povtrap_core::experiments::InterventionSpec;
use povtrap_core::{FixedParams, ParamBounds};
use sha2::{Digest, Sha256};

use crate::error::{CliError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Preset {
    Desk,
    Paper,
}

impl FromStr for Preset {
    type Err = CliError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "desk" => Ok(Preset::Desk),
            "paper" => Ok(Preset::Paper),
            other => Err(CliError::Usage(format!("unknown preset `{other}` (expected desk or paper)"))),
        }
    }
}

impl fmt::Display for Preset {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Preset::Desk => "desk",
            Preset::Paper => "paper",
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub preset: Preset,
    pub master_seed: Option<u64>,
    pub fixed: FixedParams,
    pub bounds: ParamBounds,
    /// Allows parameter ranges outside the default bounds.
    pub allow_unsafe: bool,
    pub base_n: usize,
    pub reps: usize,
    pub optimizer: OptimizerConfig,
    pub intervention: InterventionSpec,
    pub bootstrap: usize,
    pub bins: usize,
    pub bimodal_k: usize,
    /// Worker threads; 0 means one per core.
    pub workers: usize,
    pub out: PathBuf,
}

impl RunConfig {
    pub fn preset(preset: Preset) -> Self {
        let (fixed, base_n, reps) = match preset {
            Preset::Desk => (FixedParams::desk(), 64, 5),
            Preset::Paper => (FixedParams::paper(), 1024, 20),
        };
        RunConfig {
            preset,
            master_seed: None,
            fixed,
            bounds: ParamBounds::default(),
            allow_unsafe: false,
            base_n,
            reps,
            optimizer: OptimizerConfig::default(),
            intervention: InterventionSpec::default(),
            bootstrap: 500,
            bins: 40,
            bimodal_k: 200,
            workers: 0,
            out: PathBuf::from("out"),
        }
    }

    /// Loads `path` on top of a preset. A `preset` key inside the file is
    /// honoured unless `preset` is given.
    pub fn from_file(path: &Path, preset: Option<Preset>) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        let entries = parse_entries(&text).map_err(|e| CliError::Usage(format!("{}: {e}", path.display())))?;
        let file_preset = entries
            .iter()
            .find(|(k, _)| k == "preset")
            .map(|(_, v)| v.parse::<Preset>())
            .transpose()?;
        let mut cfg = RunConfig::preset(preset.or(file_preset).unwrap_or(Preset::Desk));
        for (k, v) in &entries {
            if k != "preset" {
                cfg.set(k, v)?;
            }
        }
        Ok(cfg)
    }

    /// Applies one `key = value` setting.
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        fn num<T: FromStr>(key: &str, value: &str) -> Result<T> {
            value
                .parse()
                .map_err(|_| CliError::Usage(format!("invalid value `{value}` for `{key}`")))
        }
        let f = &mut self.fixed;
        let b = &mut self.bounds;
        match key {
            "seed" | "master_seed" => self.master_seed = Some(num(key, value)?),
            "n_agents" => f.n_agents = num(key, value)?,
            "steps" => f.steps = num(key, value)?,
            "update_rate" => f.update_rate = num(key, value)?,
            "wealth_mean" => f.wealth_mean = num(key, value)?,
            "wealth_sd" => f.wealth_sd = num(key, value)?,
            "initial_returns" => f.initial_returns = num(key, value)?,
            "loss_lower" => f.loss_lower = num(key, value)?,
            "loss_upper" => f.loss_upper = num(key, value)?,
            "gain_lower" => f.gain_lower = num(key, value)?,
            "safe_gain" => f.safe_gain = num(key, value)?,
            "gamma_plus_lower" => f.gamma_plus.0 = num(key, value)?,
            "gamma_plus_upper" => f.gamma_plus.1 = num(key, value)?,
            "gamma_minus_lower" => f.gamma_minus.0 = num(key, value)?,
            "gamma_minus_upper" => f.gamma_minus.1 = num(key, value)?,
            "delta_plus_lower" => f.delta_plus.0 = num(key, value)?,
            "delta_plus_upper" => f.delta_plus.1 = num(key, value)?,
            "delta_minus_lower" => f.delta_minus.0 = num(key, value)?,
            "delta_minus_upper" => f.delta_minus.1 = num(key, value)?,
            "warmup_steps" => f.warmup_steps = num(key, value)?,
            "distance_divisor" => f.distance_divisor = num(key, value)?,
            "ell_lower" => b.ell.0 = num(key, value)?,
            "ell_upper" => b.ell.1 = num(key, value)?,
            "g_upper_lower" => b.g_upper.0 = num(key, value)?,
            "g_upper_upper" => b.g_upper.1 = num(key, value)?,
            "beta_lower" => b.beta.0 = num(key, value)?,
            "beta_upper" => b.beta.1 = num(key, value)?,
            "theta_lower" => b.theta.0 = num(key, value)?,
            "theta_upper" => b.theta.1 = num(key, value)?,
            "alpha_lower" => b.alpha.0 = num(key, value)?,
            "alpha_upper" => b.alpha.1 = num(key, value)?,
            "unsafe" => self.allow_unsafe = num(key, value)?,
            "base_n" => self.base_n = num(key, value)?,
            "reps" => self.reps = num(key, value)?,
            "random_starts" => self.optimizer.random_starts = num(key, value)?,
            "refine_top" => self.optimizer.refine_top = num(key, value)?,
            "min_improvement" => self.optimizer.min_improvement = num(key, value)?,
            "inject_step" => self.intervention.inject_step = num(key, value)?,
            "inject_amount" => self.intervention.amount = num(key, value)?,
            "target_count" => self.intervention.target_count = num(key, value)?,
            "extra_steps" => self.intervention.extra_steps = num(key, value)?,
            "intervention_reps" => self.intervention.reps = num(key, value)?,
            "bootstrap" => self.bootstrap = num(key, value)?,
            "bins" => self.bins = num(key, value)?,
            "bimodal_k" => self.bimodal_k = num(key, value)?,
            "workers" => self.workers = num(key, value)?,
            "out" => self.out = PathBuf::from(value),
            "preset" => {
                return Err(CliError::Usage("`preset` can only be chosen before other settings".into()))
            }
            other => return Err(CliError::Usage(format!("unknown setting `{other}`"))),
        }
        Ok(())
    }

    pub fn seed(&self) -> Result<u64> {
        self.master_seed
            .ok_or_else(|| CliError::Usage("a master seed is required (--seed or `seed =` in the config)".into()))
    }

    pub fn validate(&self) -> Result<()> {
        self.fixed.validate().map_err(|e| CliError::Usage(e.to_string()))?;
        if !self.allow_unsafe {
            let table = ParamBounds::default().as_array();
            let ours = self.bounds.as_array();
            for (i, ((lo, hi), (tlo, thi))) in ours.iter().zip(table.iter()).enumerate() {
                if lo > hi || lo < tlo || hi > thi {
                    return Err(CliError::Usage(format!(
                        "range for {} [{lo}, {hi}] leaves the default bounds [{tlo}, {thi}]; set unsafe = true to allow",
                        povtrap_core::PARAM_NAMES[i]
                    )));
                }
            }
        }
        if self.base_n == 0 || !self.base_n.is_power_of_two() {
            return Err(CliError::Usage(format!("base_n = {} is not a power of two", self.base_n)));
        }
        if self.reps == 0 || self.bootstrap == 0 || self.bins == 0 || self.bimodal_k == 0 {
            return Err(CliError::Usage("reps, bootstrap, bins and bimodal_k must be positive".into()));
        }
        Ok(())
    }

    /// Every setting that influences data files, in a fixed order.
    pub fn canonical_entries(&self) -> Vec<(&'static str, String)> {
        let f = &self.fixed;
        let b = &self.bounds;
        let o = &self.optimizer;
        let iv = &self.intervention;
        vec![
            ("preset", self.preset.to_string()),
            ("seed", self.master_seed.map_or("none".into(), |s| s.to_string())),
            ("n_agents", f.n_agents.to_string()),
            ("steps", f.steps.to_string()),
            ("update_rate", f.update_rate.to_string()),
            ("wealth_mean", f.wealth_mean.to_string()),
            ("wealth_sd", f.wealth_sd.to_string()),
            ("initial_returns", f.initial_returns.to_string()),
            ("loss_lower", f.loss_lower.to_string()),
            ("loss_upper", f.loss_upper.to_string()),
            ("gain_lower", f.gain_lower.to_string()),
            ("safe_gain", f.safe_gain.to_string()),
            ("gamma_plus", format!("{},{}", f.gamma_plus.0, f.gamma_plus.1)),
            ("gamma_minus", format!("{},{}", f.gamma_minus.0, f.gamma_minus.1)),
            ("delta_plus", format!("{},{}", f.delta_plus.0, f.delta_plus.1)),
            ("delta_minus", format!("{},{}", f.delta_minus.0, f.delta_minus.1)),
            ("warmup_steps", f.warmup_steps.to_string()),
            ("distance_divisor", f.distance_divisor.to_string()),
            ("ell", format!("{},{}", b.ell.0, b.ell.1)),
            ("g_upper", format!("{},{}", b.g_upper.0, b.g_upper.1)),
            ("beta", format!("{},{}", b.beta.0, b.beta.1)),
            ("theta", format!("{},{}", b.theta.0, b.theta.1)),
            ("alpha", format!("{},{}", b.alpha.0, b.alpha.1)),
            ("unsafe", self.allow_unsafe.to_string()),
            ("base_n", self.base_n.to_string()),
            ("reps", self.reps.to_string()),
            ("random_starts", o.random_starts.to_string()),
            ("refine_top", o.refine_top.to_string()),
            ("min_improvement", o.min_improvement.to_string()),
            ("inject_step", iv.inject_step.to_string()),
            ("inject_amount", iv.amount.to_string()),
            ("target_count", iv.target_count.to_string()),
            ("extra_steps", iv.extra_steps.to_string()),
            ("intervention_reps", iv.reps.to_string()),
            ("bootstrap", self.bootstrap.to_string()),
            ("bins", self.bins.to_string()),
            ("bimodal_k", self.bimodal_k.to_string()),
        ]
    }

    /// SHA-256 over the canonical entries, hex encoded.
    pub fn digest(&self) -> String {
        let mut h = Sha256::new();
        for (k, v) in self.canonical_entries() {
            h.update(k.as_bytes());
            h.update(b"=");
            h.update(v.as_bytes());
            h.update(b"\n");
        }
        h.finalize().iter().map(|b| format!("{b:02x}")).collect()
    }

    /// Header line stamped on every output file.
    pub fn provenance(&self, command: &str) -> String {
        format!(
            "povtrap {command} config_digest={} master_seed={}",
            self.digest(),
            self.master_seed.map_or("none".into(), |s| s.to_string())
        )
    }
}

/// Splits `key = value` lines; `#` starts a comment.
pub fn parse_entries(text: &str) -> std::result::Result<Vec<(String, String)>, String> {
    let mut out = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (k, v) = line
            .split_once('=')
            .ok_or_else(|| format!("line {}: expected `key = value`", i + 1))?;
        let (k, v) = (k.trim(), v.trim());
        if k.is_empty() {
            return Err(format!("line {}: empty key", i + 1));
        }
        out.push((k.to_string(), v.to_string()));
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn presets() {
        let d = RunConfig::preset(Preset::Desk);
        assert_eq!((d.fixed.n_agents, d.base_n, d.reps), (225, 64, 5));
        let p = RunConfig::preset(Preset::Paper);
        assert_eq!((p.fixed.n_agents, p.base_n, p.reps), (1225, 1024, 20));
        assert!(d.validate().is_ok());
    }

    #[test]
    fn parses_comments_and_rejects_junk() {
        let e = parse_entries("# top\nseed = 7 # trailing\n\nreps=3\n").unwrap();
        assert_eq!(e, vec![("seed".into(), "7".into()), ("reps".into(), "3".into())]);
        assert!(parse_entries("novalue\n").is_err());
    }

    #[test]
    fn unknown_key_is_usage_error() {
        let mut c = RunConfig::preset(Preset::Desk);
        assert_eq!(c.set("bogus", "1").unwrap_err().exit_code(), 1);
        assert_eq!(c.set("reps", "x").unwrap_err().exit_code(), 1);
    }

    #[test]
    fn widened_bounds_need_unsafe() {
        let mut c = RunConfig::preset(Preset::Desk);
        c.set("theta_upper", "0.5").unwrap();
        assert!(c.validate().is_err());
        c.set("unsafe", "true").unwrap();
        assert!(c.validate().is_ok());
        let mut narrow = RunConfig::preset(Preset::Desk);
        narrow.set("theta_upper", "0.1").unwrap();
        assert!(narrow.validate().is_ok());
    }

    #[test]
    fn digest_tracks_data_settings_only() {
        let mut a = RunConfig::preset(Preset::Desk);
        let mut b = a.clone();
        b.workers = 8;
        b.out = "elsewhere".into();
        assert_eq!(a.digest(), b.digest());
        a.set("seed", "1").unwrap();
        assert_ne!(a.digest(), b.digest());
        assert_eq!(a.digest().len(), 64);
    }

    #[test]
    fn missing_seed_is_usage_error() {
        assert_eq!(RunConfig::preset(Preset::Desk).seed().unwrap_err().exit_code(), 1);
    }
}
