//! Model parameters: the five swept parameters and the fixed constants.

use crate::error::{Error, Result};

/// Names of the swept parameters in design-column order.
pub const PARAM_NAMES: [&str; 5] = ["ell", "g_upper", "beta", "theta", "alpha"];

/// The five parameters varied across experiments.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ModelParams {
    /// Loss probabilities are drawn from `U(ell, 1 - ell)`.
    pub ell: f64,
    /// Upper bound of the project gain factor.
    pub g_upper: f64,
    /// Saving propensity: the invested share of wealth.
    pub beta: f64,
    /// Funding threshold as a fraction of eligible initial wealth.
    pub theta: f64,
    /// Homophily exponent of the SDA graph.
    pub alpha: f64,
}

impl ModelParams {
    pub fn to_array(&self) -> [f64; 5] {
        [self.ell, self.g_upper, self.beta, self.theta, self.alpha]
    }

    pub fn from_array(v: [f64; 5]) -> Self {
        ModelParams {
            ell: v[0],
            g_upper: v[1],
            beta: v[2],
            theta: v[3],
            alpha: v[4],
        }
    }

    pub fn validate(&self, bounds: &ParamBounds) -> Result<()> {
        for (i, (&value, &(lo, hi))) in self
            .to_array()
            .iter()
            .zip(bounds.as_array().iter())
            .enumerate()
        {
            if !(value >= lo && value <= hi) {
                return Err(Error::OutOfBounds {
                    name: PARAM_NAMES[i],
                    value,
                    lo,
                    hi,
                });
            }
        }
        Ok(())
    }
}

/// Closed intervals over which each swept parameter is sampled.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ParamBounds {
    pub ell: (f64, f64),
    pub g_upper: (f64, f64),
    pub beta: (f64, f64),
    pub theta: (f64, f64),
    pub alpha: (f64, f64),
}

impl Default for ParamBounds {
    fn default() -> Self {
        ParamBounds {
            ell: (0.30, 0.45),
            g_upper: (1.70, 8.00),
            beta: (0.70, 0.80),
            theta: (0.01, 0.20),
            alpha: (2.0, 12.0),
        }
    }
}

impl ParamBounds {
    pub fn as_array(&self) -> [(f64, f64); 5] {
        [self.ell, self.g_upper, self.beta, self.theta, self.alpha]
    }

    pub fn from_array(v: [(f64, f64); 5]) -> Self {
        ParamBounds {
            ell: v[0],
            g_upper: v[1],
            beta: v[2],
            theta: v[3],
            alpha: v[4],
        }
    }

    /// Maps a unit-cube point onto the parameter box.
    pub fn scale(&self, unit: [f64; 5]) -> ModelParams {
        let b = self.as_array();
        let mut out = [0.0; 5];
        for d in 0..5 {
            out[d] = b[d].0 + unit[d] * (b[d].1 - b[d].0);
        }
        ModelParams::from_array(out)
    }

    /// Min-max normalization of a parameter vector to `[0, 1]^5`.
    pub fn normalize(&self, p: &ModelParams) -> [f64; 5] {
        let b = self.as_array();
        let v = p.to_array();
        let mut out = [0.0; 5];
        for d in 0..5 {
            out[d] = (v[d] - b[d].0) / (b[d].1 - b[d].0);
        }
        out
    }
}

/// Constants held fixed across all runs.
#[derive(Debug, Clone, PartialEq)]
pub struct FixedParams {
    pub n_agents: usize,
    pub steps: usize,
    /// Poisson rate of the gaps between portfolio updates.
    pub update_rate: f64,
    pub wealth_mean: f64,
    pub wealth_sd: f64,
    /// Number of synthetic returns used for the initial portfolio.
    pub initial_returns: usize,
    pub loss_lower: f64,
    pub loss_upper: f64,
    pub gain_lower: f64,
    pub safe_gain: f64,
    pub gamma_plus: (f64, f64),
    pub gamma_minus: (f64, f64),
    pub delta_plus: (f64, f64),
    pub delta_minus: (f64, f64),
    /// Portfolio updates are only allowed after this many steps.
    pub warmup_steps: usize,
    /// `b` is the mean pairwise wealth distance divided by this.
    pub distance_divisor: f64,
}

impl FixedParams {
    /// Values used in the published experiments (1225 agents).
    pub fn paper() -> Self {
        FixedParams {
            n_agents: 1225,
            steps: 100,
            update_rate: 10.0,
            wealth_mean: 10.0,
            wealth_sd: 1.0,
            initial_returns: 2000,
            loss_lower: 0.90,
            loss_upper: 0.95,
            gain_lower: 1.60,
            safe_gain: 1.10,
            gamma_plus: (5.0, 30.0),
            gamma_minus: (31.0, 70.0),
            delta_plus: (0.50, 0.70),
            delta_minus: (0.71, 0.90),
            warmup_steps: 5,
            distance_divisor: 15.0,
        }
    }

    /// Same constants with a 225-agent population.
    pub fn desk() -> Self {
        FixedParams {
            n_agents: 225,
            ..Self::paper()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_agents < 2 {
            return Err(Error::InvalidInput("n_agents must be at least 2"));
        }
        if self.initial_returns == 0 {
            return Err(Error::InvalidInput("initial_returns must be positive"));
        }
        if !(self.update_rate > 0.0) {
            return Err(Error::InvalidInput("update_rate must be positive"));
        }
        if !(self.wealth_sd > 0.0) {
            return Err(Error::InvalidInput("wealth_sd must be positive"));
        }
        if !(self.loss_lower <= self.loss_upper
            && self.loss_upper < 1.0
            && 1.0 < self.gain_lower
            && self.safe_gain > 1.0)
        {
            return Err(Error::InvalidInput(
                "require loss_lower <= loss_upper < 1 < gain_lower and safe_gain > 1",
            ));
        }
        if !(self.gamma_plus.0 > 0.0
            && self.gamma_plus.1 < self.gamma_minus.0
            && self.gamma_minus.0 <= self.gamma_minus.1)
        {
            return Err(Error::InvalidInput("require 0 < gamma_plus < gamma_minus"));
        }
        for d in [self.delta_plus, self.delta_minus] {
            if !(d.0 > 0.0 && d.0 <= d.1 && d.1 <= 1.0) {
                return Err(Error::InvalidInput("delta bounds must lie in (0, 1]"));
            }
        }
        Ok(())
    }
}

impl Default for FixedParams {
    fn default() -> Self {
        Self::paper()
    }
}
