//! Agent-based model of multi-level poverty traps.
//!
//! The crate is `no_std` (it needs `alloc`) and contains every algorithmic
//! piece of the model:
//!
//! * [`social_graph`]: Social Distance Attachment networks, connectivity
//!   repair, semi-synchronous label propagation and extended membership.
//! * [`cpt`]: cumulative prospect theory utility over empirical returns,
//!   a multi-start simplex optimizer and the attention update.
//! * [`economy`]: risky community projects, the safe asset and the full
//!   wealth recursion.
//! * [`experiments`]: Saltelli designs, ensembles, regime classification and
//!   capital-injection interventions.
//! * [`analysis`]: Gini indices, Sobol indices and the regime summaries.
//!
//! Every stochastic operation takes an explicit seed, so identical inputs
//! always give bit-identical outputs. IO, configuration and parallel
//! execution live in the companion `povtrap` crate.

#![no_std]
// NaN must fail these checks, so `!(x > 0.0)` is deliberate.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

extern crate alloc;

#[cfg(test)]
extern crate std;

pub mod analysis;
pub mod cpt;
pub mod economy;
pub mod error;
pub mod experiments;
pub mod params;
pub mod rng;
pub mod social_graph;
pub mod sobol_seq;
pub mod stats;

pub use error::{Error, Result};
pub use params::{FixedParams, ModelParams, ParamBounds, PARAM_NAMES};
