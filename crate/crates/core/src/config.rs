//! Run configuration: a flat JSON file, optionally overridden field by
//! field from the command line.
//!
//! ```json
//! {
//!   "beta": 0.95, "z": 0.4025, "c": 0.4025, "N": 10,
//!   "delta_true": 0.5, "len_true": 25,
//!   "delta_belief": 0.1, "len_belief": 25,
//!   "distribution": {"type": "uniform", "low": 0.0, "high": 1.0},
//!   "tol": 1e-12, "max_iter": 100000, "max_periods": 2000,
//!   "seed": 1, "spells": 1000000
//! }
//! ```
//!
//! Every key is optional. Missing `z` or `c` default to half the nonwork
//! income that gives a 10-period spell without benefits at the configured
//! `beta`; beliefs default to the truth.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::dist::{validate_assumptions, DistributionSpec, OfferDistribution};
use crate::error::Error;
use crate::experiments::{
    calibrate_z, Calibration, REFERENCE_BETA, REFERENCE_DELTA, REFERENCE_DURATION,
    REFERENCE_ENTITLEMENT, REFERENCE_LEN,
};
use crate::montecarlo::{SimulationOptions, DEFAULT_MAX_PERIODS};
use crate::params::{ExtensionSpec, MarketParams};
use crate::schedule::SolverOptions;

pub const DEFAULT_SEED: u64 = 1;
pub const DEFAULT_SPELLS: u64 = 1_000_000;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read config {path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("malformed config {path}: {message}")]
    Json { path: PathBuf, message: String },
    #[error("invalid `{field}`: {message}")]
    Invalid { field: String, message: String },
}

impl ConfigError {
    fn invalid(field: &str, message: impl Into<String>) -> Self {
        ConfigError::Invalid {
            field: field.to_string(),
            message: message.into(),
        }
    }

    /// Offending field, when the error is about one.
    pub fn field(&self) -> Option<&str> {
        match self {
            ConfigError::Invalid { field, .. } => Some(field),
            _ => None,
        }
    }
}

/// Unvalidated configuration; every field optional.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PartialConfig {
    pub beta: Option<f64>,
    pub z: Option<f64>,
    pub c: Option<f64>,
    #[serde(rename = "N", alias = "n")]
    pub entitlement: Option<usize>,
    pub delta_true: Option<f64>,
    pub len_true: Option<usize>,
    pub delta_belief: Option<f64>,
    pub len_belief: Option<usize>,
    pub distribution: Option<DistributionSpec>,
    pub tol: Option<f64>,
    pub max_iter: Option<usize>,
    pub max_periods: Option<u64>,
    pub seed: Option<u64>,
    pub spells: Option<u64>,
}

impl PartialConfig {
    /// Fields set in `overrides` win.
    pub fn merge(self, overrides: PartialConfig) -> PartialConfig {
        PartialConfig {
            beta: overrides.beta.or(self.beta),
            z: overrides.z.or(self.z),
            c: overrides.c.or(self.c),
            entitlement: overrides.entitlement.or(self.entitlement),
            delta_true: overrides.delta_true.or(self.delta_true),
            len_true: overrides.len_true.or(self.len_true),
            delta_belief: overrides.delta_belief.or(self.delta_belief),
            len_belief: overrides.len_belief.or(self.len_belief),
            distribution: overrides.distribution.or(self.distribution),
            tol: overrides.tol.or(self.tol),
            max_iter: overrides.max_iter.or(self.max_iter),
            max_periods: overrides.max_periods.or(self.max_periods),
            seed: overrides.seed.or(self.seed),
            spells: overrides.spells.or(self.spells),
        }
    }
}

/// Fully validated configuration.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunConfig {
    pub beta: f64,
    pub z: f64,
    pub c: f64,
    #[serde(rename = "N")]
    pub entitlement: usize,
    pub delta_true: f64,
    pub len_true: usize,
    pub delta_belief: f64,
    pub len_belief: usize,
    pub distribution: DistributionSpec,
    pub tol: f64,
    pub max_iter: usize,
    pub max_periods: u64,
    pub seed: u64,
    pub spells: u64,
}

fn field_error(field: &str) -> impl Fn(Error) -> ConfigError + '_ {
    move |e| match e {
        Error::InvalidParam { reason, .. } => ConfigError::invalid(field, reason),
        other => ConfigError::invalid(field, other.to_string()),
    }
}

impl RunConfig {
    pub fn from_partial(p: PartialConfig) -> Result<Self, ConfigError> {
        let distribution = p.distribution.unwrap_or_default();
        let dist = distribution.build().map_err(field_error("distribution"))?;

        let beta = p.beta.unwrap_or(REFERENCE_BETA);
        if !(beta > 0.0 && beta < 1.0) {
            return Err(ConfigError::invalid("beta", format!("must lie in (0, 1), got {beta}")));
        }
        let (z, c) = match (p.z, p.c) {
            (Some(z), Some(c)) => (z, c),
            (z, c) => {
                let half = calibrate_z(dist.as_ref(), beta, REFERENCE_DURATION)
                    .map_err(field_error("z"))?
                    / 2.0;
                (z.unwrap_or(half), c.unwrap_or(half))
            }
        };
        let entitlement = p.entitlement.unwrap_or(REFERENCE_ENTITLEMENT);
        let params = MarketParams::new(beta, z, c, entitlement).map_err(|e| match e {
            Error::InvalidParam { field, reason } => ConfigError::invalid(field, reason),
            other => ConfigError::invalid("params", other.to_string()),
        })?;
        if let Some(v) = validate_assumptions(dist.as_ref(), &params).first() {
            return Err(ConfigError::invalid(
                v.field(),
                format!("model assumption `{}` fails", v.describe()),
            ));
        }

        let delta_true = p.delta_true.unwrap_or(REFERENCE_DELTA);
        let len_true = p.len_true.unwrap_or(REFERENCE_LEN);
        let delta_belief = p.delta_belief.unwrap_or(delta_true);
        let len_belief = p.len_belief.unwrap_or(len_true);
        ExtensionSpec::new(delta_true, 1).map_err(field_error("delta_true"))?;
        ExtensionSpec::new(0.0, len_true).map_err(field_error("len_true"))?;
        ExtensionSpec::new(delta_belief, 1).map_err(field_error("delta_belief"))?;
        ExtensionSpec::new(0.0, len_belief).map_err(field_error("len_belief"))?;

        let defaults = SolverOptions::default();
        let tol = p.tol.unwrap_or(defaults.tol);
        if !(tol > 0.0 && tol.is_finite()) {
            return Err(ConfigError::invalid("tol", format!("must be positive, got {tol}")));
        }
        let max_iter = p.max_iter.unwrap_or(defaults.max_iter);
        if max_iter == 0 {
            return Err(ConfigError::invalid("max_iter", "must be at least 1"));
        }
        let max_periods = p.max_periods.unwrap_or(DEFAULT_MAX_PERIODS);
        if max_periods == 0 {
            return Err(ConfigError::invalid("max_periods", "must be at least 1"));
        }
        let spells = p.spells.unwrap_or(DEFAULT_SPELLS);
        if spells == 0 {
            return Err(ConfigError::invalid("spells", "must be at least 1"));
        }

        Ok(Self {
            beta,
            z,
            c,
            entitlement,
            delta_true,
            len_true,
            delta_belief,
            len_belief,
            distribution,
            tol,
            max_iter,
            max_periods,
            seed: p.seed.unwrap_or(DEFAULT_SEED),
            spells,
        })
    }

    pub fn params(&self) -> MarketParams {
        MarketParams::new(self.beta, self.z, self.c, self.entitlement).expect("validated")
    }

    pub fn truth(&self) -> ExtensionSpec {
        ExtensionSpec::new(self.delta_true, self.len_true).expect("validated")
    }

    pub fn belief(&self) -> ExtensionSpec {
        ExtensionSpec::new(self.delta_belief, self.len_belief).expect("validated")
    }

    pub fn offers(&self) -> Box<dyn OfferDistribution> {
        self.distribution.build().expect("validated")
    }

    pub fn solver_options(&self) -> SolverOptions {
        SolverOptions {
            tol: self.tol,
            max_iter: self.max_iter,
        }
    }

    pub fn simulation_options(&self) -> SimulationOptions {
        SimulationOptions {
            max_periods: self.max_periods,
            threads: None,
        }
    }

    pub fn calibration(&self) -> Calibration {
        Calibration {
            params: self.params(),
            truth: self.truth(),
            z_full: self.z + self.c,
        }
    }
}

pub fn read_partial(path: &Path) -> Result<PartialConfig, ConfigError> {
    let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    serde_json::from_str(&text).map_err(|e| ConfigError::Json {
        path: path.to_path_buf(),
        message: e.to_string(),
    })
}

/// Reads `path` (when given), applies `overrides` and validates.
pub fn parse_config(
    path: Option<&Path>,
    overrides: PartialConfig,
) -> Result<RunConfig, ConfigError> {
    let base = match path {
        Some(p) => read_partial(p)?,
        None => PartialConfig::default(),
    };
    RunConfig::from_partial(base.merge(overrides))
}
