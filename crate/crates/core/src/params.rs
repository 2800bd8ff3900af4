use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Labor-market primitives shared by every model variant.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MarketParams {
    beta: f64,
    z: f64,
    c: f64,
    entitlement: usize,
}

impl MarketParams {
    /// `beta` in (0, 1), nonwork flow `z > 0`, benefit flow `c >= 0`,
    /// entitlement `n` periods.
    ///
    /// `c = 0` is accepted here (it gives a flat schedule) but is reported
    /// by [`crate::dist::validate_assumptions`].
    pub fn new(beta: f64, z: f64, c: f64, entitlement: usize) -> Result<Self> {
        if !(beta > 0.0 && beta < 1.0) {
            return Err(Error::param("beta", format!("must lie in (0, 1), got {beta}")));
        }
        if !(z.is_finite() && z > 0.0) {
            return Err(Error::param("z", format!("must be positive and finite, got {z}")));
        }
        if !(c.is_finite() && c >= 0.0) {
            return Err(Error::param("c", format!("must be nonnegative and finite, got {c}")));
        }
        Ok(Self::unchecked(beta, z, c, entitlement))
    }

    pub(crate) fn unchecked(beta: f64, z: f64, c: f64, entitlement: usize) -> Self {
        Self {
            beta,
            z,
            c,
            entitlement,
        }
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    pub fn z(&self) -> f64 {
        self.z
    }

    pub fn c(&self) -> f64 {
        self.c
    }

    /// Maximum periods of benefit entitlement, `N`.
    pub fn entitlement(&self) -> usize {
        self.entitlement
    }

    /// Implied per-period interest rate `1/β - 1`.
    pub fn interest_rate(&self) -> f64 {
        1.0 / self.beta - 1.0
    }

    /// Per-period income while unemployed with `n` periods of benefits left.
    pub fn flow(&self, n: usize) -> f64 {
        if n > 0 {
            self.z + self.c
        } else {
            self.z
        }
    }

    pub fn with_entitlement(self, entitlement: usize) -> Self {
        Self {
            entitlement,
            ..self
        }
    }

    pub fn with_benefit(self, c: f64) -> Result<Self> {
        Self::new(self.beta, self.z, c, self.entitlement)
    }
}

/// One-time extension of benefits: with probability `delta` per period,
/// entitlement grows by `len` periods.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ExtensionSpec {
    delta: f64,
    len: usize,
}

#[allow(clippy::len_without_is_empty)]
impl ExtensionSpec {
    pub fn new(delta: f64, len: usize) -> Result<Self> {
        if !(0.0..=1.0).contains(&delta) {
            return Err(Error::param("delta", format!("must lie in [0, 1], got {delta}")));
        }
        if len == 0 {
            return Err(Error::param("len", "extension length must be at least 1"));
        }
        Ok(Self { delta, len })
    }

    /// Probability of extension per period.
    pub fn delta(&self) -> f64 {
        self.delta
    }

    /// Extension length in periods.
    pub fn len(&self) -> usize {
        self.len
    }

    /// Entitlement reached at the next offer when benefits are extended while
    /// `n` periods remain. From `n = 0` the worker lands on `len`.
    pub fn extended_state(&self, n: usize) -> usize {
        if n == 0 {
            self.len
        } else {
            n - 1 + self.len
        }
    }
}

/// Basic-schedule horizon needed so that `w_R(n + Δ)` is defined for every
/// `n <= N` and every extension length in `lens`.
pub fn required_horizon(entitlement: usize, lens: impl IntoIterator<Item = usize>) -> usize {
    entitlement + lens.into_iter().max().unwrap_or(0)
}
