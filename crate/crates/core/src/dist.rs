//! Wage-offer distributions.
//!
//! The solver only touches the offer distribution through a handful of
//! analytic operations: the CDF, the mean, the partial expectation
//! `∫_a^b w dF(w)` and the quantile function used for inverse-CDF sampling.
//! [`OfferDistribution`] is the extension point; [`Uniform`] is the only
//! built-in instance.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::params::MarketParams;

/// Continuous wage-offer distribution on a bounded support.
pub trait OfferDistribution: Send + Sync + std::fmt::Debug {
    fn support_low(&self) -> f64;
    fn support_high(&self) -> f64;
    fn mean(&self) -> f64;

    /// CDF; clamps to 0 below the support and to 1 above it.
    fn cdf(&self, x: f64) -> f64;

    /// `∫_a^b w dF(w)` for `a <= b`. Limits outside the support are clamped.
    fn partial_expectation(&self, a: f64, b: f64) -> Result<f64>;

    /// Inverse CDF for `u` in `[0, 1)`.
    fn quantile(&self, u: f64) -> Result<f64>;

    /// Returns the distribution as a uniform when it is one.
    fn as_uniform(&self) -> Option<&Uniform> {
        None
    }
}

/// Uniform offers on `[low, high]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Uniform {
    low: f64,
    high: f64,
}

impl Uniform {
    pub fn new(low: f64, high: f64) -> Result<Self> {
        if !low.is_finite() || !high.is_finite() {
            return Err(Error::param("distribution", "uniform bounds must be finite"));
        }
        if low >= high {
            return Err(Error::param(
                "distribution",
                format!("uniform requires low < high (got {low} >= {high})"),
            ));
        }
        Ok(Self { low, high })
    }

    /// Uniform on `[0, 1]`, for which `F(w) = w`.
    pub fn standard() -> Self {
        Self { low: 0.0, high: 1.0 }
    }

    pub fn is_standard(&self) -> bool {
        self.low == 0.0 && self.high == 1.0
    }
}

impl Default for Uniform {
    fn default() -> Self {
        Self::standard()
    }
}

impl OfferDistribution for Uniform {
    fn support_low(&self) -> f64 {
        self.low
    }

    fn support_high(&self) -> f64 {
        self.high
    }

    fn mean(&self) -> f64 {
        0.5 * (self.low + self.high)
    }

    fn cdf(&self, x: f64) -> f64 {
        if x <= self.low {
            0.0
        } else if x >= self.high {
            1.0
        } else {
            (x - self.low) / (self.high - self.low)
        }
    }

    fn partial_expectation(&self, a: f64, b: f64) -> Result<f64> {
        if a > b || a.is_nan() || b.is_nan() {
            return Err(Error::InvalidInterval { a, b });
        }
        let a = a.clamp(self.low, self.high);
        let b = b.clamp(self.low, self.high);
        // (b² - a²) / 2 over the width, factored to avoid cancellation.
        Ok((b - a) * (b + a) / (2.0 * (self.high - self.low)))
    }

    fn quantile(&self, u: f64) -> Result<f64> {
        if !(0.0..1.0).contains(&u) {
            return Err(Error::InvalidVariate(u));
        }
        Ok(self.low + u * (self.high - self.low))
    }

    fn as_uniform(&self) -> Option<&Uniform> {
        Some(self)
    }
}

/// Draws one offer by inverse-CDF sampling.
pub fn sample_offer<D: OfferDistribution + ?Sized>(d: &D, u: f64) -> Result<f64> {
    d.quantile(u)
}

/// Serializable distribution descriptor, e.g.
/// `{"type": "uniform", "low": 0.0, "high": 1.0}`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "lowercase", deny_unknown_fields)]
pub enum DistributionSpec {
    Uniform {
        #[serde(default)]
        low: f64,
        #[serde(default = "one")]
        high: f64,
    },
}

fn one() -> f64 {
    1.0
}

impl Default for DistributionSpec {
    fn default() -> Self {
        DistributionSpec::Uniform { low: 0.0, high: 1.0 }
    }
}

impl DistributionSpec {
    pub fn build(&self) -> Result<Box<dyn OfferDistribution>> {
        match *self {
            DistributionSpec::Uniform { low, high } => Ok(Box::new(Uniform::new(low, high)?)),
        }
    }
}

/// A model assumption that a parameter set fails to satisfy.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub enum Violation {
    /// `w̲ < (1-β) z + β μ_w` fails: reservation wages would not exist.
    LowerBound,
    /// `z > 0` fails.
    NonworkPositive,
    /// `z + c < w̄` fails.
    UpperBound,
    /// `0 < β < 1` fails.
    Discount,
    /// `c > 0` fails.
    BenefitPositive,
}

impl Violation {
    /// Config field most directly responsible for the violation.
    pub fn field(&self) -> &'static str {
        match self {
            Violation::LowerBound | Violation::NonworkPositive => "z",
            Violation::UpperBound | Violation::BenefitPositive => "c",
            Violation::Discount => "beta",
        }
    }

    pub fn describe(&self) -> &'static str {
        match self {
            Violation::LowerBound => "support_low < (1-beta)*z + beta*mean",
            Violation::NonworkPositive => "z > 0",
            Violation::UpperBound => "z + c < support_high",
            Violation::Discount => "0 < beta < 1",
            Violation::BenefitPositive => "c > 0",
        }
    }
}

impl std::fmt::Display for Violation {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.describe())
    }
}

/// Lists every model assumption violated by `(d, p)`; empty means ok.
pub fn validate_assumptions<D: OfferDistribution + ?Sized>(
    d: &D,
    p: &MarketParams,
) -> Vec<Violation> {
    let mut out = Vec::new();
    let (beta, z, c) = (p.beta(), p.z(), p.c());
    if !(d.support_low() < (1.0 - beta) * z + beta * d.mean()) {
        out.push(Violation::LowerBound);
    }
    if !(z > 0.0) {
        out.push(Violation::NonworkPositive);
    }
    if !(z + c < d.support_high()) {
        out.push(Violation::UpperBound);
    }
    if !(beta > 0.0 && beta < 1.0) {
        out.push(Violation::Discount);
    }
    if !(c > 0.0) {
        out.push(Violation::BenefitPositive);
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn params(beta: f64, z: f64, c: f64) -> MarketParams {
        MarketParams::unchecked(beta, z, c, 10)
    }

    #[test]
    fn uniform_cdf_values() {
        let u = Uniform::standard();
        assert_eq!(u.cdf(0.0), 0.0);
        assert_eq!(u.cdf(1.0), 1.0);
        assert_eq!(u.cdf(0.42), 0.42);
        assert_eq!(u.cdf(-3.0), 0.0);
        assert_eq!(u.cdf(7.0), 1.0);
    }

    #[test]
    fn uniform_partial_expectation() {
        let u = Uniform::standard();
        assert_eq!(u.partial_expectation(0.0, 1.0).unwrap(), 0.5);
        assert!((u.partial_expectation(0.5, 1.0).unwrap() - 0.375).abs() < 1e-15);
        assert_eq!(u.partial_expectation(0.3, 0.3).unwrap(), 0.0);
        assert_eq!(
            u.partial_expectation(0.6, 0.2),
            Err(Error::InvalidInterval { a: 0.6, b: 0.2 })
        );
    }

    #[test]
    fn full_support_partial_expectation_is_mean() {
        let u = Uniform::new(2.0, 5.0).unwrap();
        assert!((u.partial_expectation(2.0, 5.0).unwrap() - u.mean()).abs() < 1e-15);
    }

    #[test]
    fn sampling_is_identity_quantile() {
        let u = Uniform::standard();
        assert_eq!(sample_offer(&u, 0.0).unwrap(), 0.0);
        assert_eq!(sample_offer(&u, 0.75).unwrap(), 0.75);
        assert_eq!(sample_offer(&u, 0.999).unwrap(), 0.999);
        assert_eq!(sample_offer(&u, 1.0), Err(Error::InvalidVariate(1.0)));
        assert_eq!(sample_offer(&u, -0.1), Err(Error::InvalidVariate(-0.1)));
    }

    #[test]
    fn bad_uniform_bounds() {
        assert!(Uniform::new(1.0, 1.0).is_err());
        assert!(Uniform::new(0.0, f64::INFINITY).is_err());
    }

    #[test]
    fn assumptions() {
        let u = Uniform::standard();
        assert!(validate_assumptions(&u, &params(0.95, 0.42, 0.42)).is_empty());
        assert_eq!(
            validate_assumptions(&u, &params(0.95, 1.2, 0.42)),
            vec![Violation::UpperBound]
        );
        assert_eq!(
            validate_assumptions(&u, &params(1.0, 0.4, 0.4)),
            vec![Violation::Discount]
        );
        assert_eq!(
            validate_assumptions(&u, &params(0.95, 0.4, 0.0)),
            vec![Violation::BenefitPositive]
        );
    }

    #[test]
    fn descriptor_round_trip() {
        let spec: DistributionSpec =
            serde_json::from_str(r#"{"type": "uniform", "low": 0.0, "high": 1.0}"#).unwrap();
        assert_eq!(spec, DistributionSpec::default());
        let d = spec.build().unwrap();
        assert!(d.as_uniform().unwrap().is_standard());
        assert!(serde_json::from_str::<DistributionSpec>(r#"{"type": "lognormal"}"#).is_err());
    }
}
