//! Sequential job search with expiring unemployment benefits that may be
//! extended at the policymaker's discretion.
//!
//! * [`dist`]: offer distributions.
//! * [`schedule`]: reservation-wage fixed points and schedules, with
//!   [`closed_form`] as the uniform-offer oracle.
//! * [`evaluate`]: exact welfare, duration and accepted wage of a belief
//!   policy under the true extension process.
//! * [`montecarlo`]: reproducible parallel spell simulation.
//! * [`experiments`]: calibration and belief sweeps.
//! * [`config`] and [`cli`]: the `uisearch` command line.

// `!(x > 0.0)` is used deliberately so that NaN is rejected too.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cli;
pub mod closed_form;
pub mod config;
pub mod dist;
pub mod error;
pub mod evaluate;
pub mod experiments;
pub mod kahan;
pub mod montecarlo;
pub mod params;
pub mod schedule;

pub use dist::{OfferDistribution, Uniform};
pub use error::{Error, Result};
pub use evaluate::{evaluate_policy, welfare_loss, PolicyEvaluation, PolicyProfile};
pub use params::{ExtensionSpec, MarketParams};
pub use schedule::{ReservationSchedule, SolverOptions};
