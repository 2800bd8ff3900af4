//! Calibration and misperception sweeps.
//!
//! The reference calibration uses uniform[0, 1] offers, `β = 0.95` and
//! `N = 10`, and sets nonwork income so that a worker with neither benefits
//! nor any chance of extension expects a 10-period spell. That income is
//! then split evenly into `z` and `c`. The true extension process is
//! `δ* = 0.5`, `Δ* = 25`.

use rayon::prelude::*;
use serde::Serialize;

use crate::dist::OfferDistribution;
use crate::error::{Error, Result};
use crate::evaluate::{evaluate_belief, loss_pct, PolicyEvaluation, PolicyProfile};
use crate::montecarlo::{simulate_many, SimulationOptions};
use crate::params::{ExtensionSpec, MarketParams};
use crate::schedule::{expected_max, SolverOptions};

pub const REFERENCE_BETA: f64 = 0.95;
pub const REFERENCE_DURATION: f64 = 10.0;
pub const REFERENCE_ENTITLEMENT: usize = 10;
pub const REFERENCE_DELTA: f64 = 0.5;
pub const REFERENCE_LEN: usize = 25;

/// Nonwork income `z` at which the no-benefit, no-extension worker expects
/// `target_duration` offers before accepting.
///
/// The duration fixes the acceptance probability, hence `w_R(0)` through the
/// quantile function; the state-0 fixed-point equation is then linear in `z`.
pub fn calibrate_z<D: OfferDistribution + ?Sized>(
    d: &D,
    beta: f64,
    target_duration: f64,
) -> Result<f64> {
    if !(beta > 0.0 && beta < 1.0) {
        return Err(Error::param("beta", format!("must lie in (0, 1), got {beta}")));
    }
    if !(target_duration > 1.0) || !target_duration.is_finite() {
        return Err(Error::Infeasible(format!(
            "target duration must exceed 1, got {target_duration}"
        )));
    }
    let w0 = d.quantile(1.0 - 1.0 / target_duration)?;
    let z = (w0 - beta * expected_max(d, w0)) / (1.0 - beta);
    if !(z > 0.0) {
        return Err(Error::Infeasible(format!(
            "duration {target_duration} implies nonwork income {z} <= 0"
        )));
    }
    Ok(z)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Calibration {
    pub params: MarketParams,
    pub truth: ExtensionSpec,
    /// Full nonwork income before the even split into `z` and `c`.
    pub z_full: f64,
}

impl Calibration {
    pub fn new<D: OfferDistribution + ?Sized>(
        d: &D,
        beta: f64,
        entitlement: usize,
        truth: ExtensionSpec,
        target_duration: f64,
    ) -> Result<Self> {
        let z_full = calibrate_z(d, beta, target_duration)?;
        let params = MarketParams::new(beta, z_full / 2.0, z_full / 2.0, entitlement)?;
        Ok(Self {
            params,
            truth,
            z_full,
        })
    }

    /// `β = 0.95`, `N = 10`, 10-period target, `δ* = 0.5`, `Δ* = 25`.
    pub fn reference<D: OfferDistribution + ?Sized>(d: &D) -> Result<Self> {
        Self::new(
            d,
            REFERENCE_BETA,
            REFERENCE_ENTITLEMENT,
            ExtensionSpec::new(REFERENCE_DELTA, REFERENCE_LEN)?,
            REFERENCE_DURATION,
        )
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Vary {
    Delta,
    Len,
}

impl Vary {
    pub fn column(&self) -> &'static str {
        match self {
            Vary::Delta => "delta_b",
            Vary::Len => "len_b",
        }
    }

    pub fn default_grid(&self) -> Vec<f64> {
        match self {
            Vary::Delta => linear_grid(0.1, 0.9, 0.05),
            Vary::Len => linear_grid(5.0, 45.0, 5.0),
        }
    }

    fn belief(&self, truth: &ExtensionSpec, value: f64) -> Result<ExtensionSpec> {
        match self {
            Vary::Delta => ExtensionSpec::new(value, truth.len()),
            Vary::Len => {
                if value.fract() != 0.0 || value < 1.0 {
                    return Err(Error::param(
                        "grid",
                        format!("extension lengths must be integers >= 1, got {value}"),
                    ));
                }
                ExtensionSpec::new(truth.delta(), value as usize)
            }
        }
    }

    fn truth_value(&self, truth: &ExtensionSpec) -> f64 {
        match self {
            Vary::Delta => truth.delta(),
            Vary::Len => truth.len() as f64,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Mode {
    Exact,
    MonteCarlo {
        spells: u64,
        seed: u64,
        sim: SimulationOptions,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepRow {
    pub varied_param: &'static str,
    pub belief_value: f64,
    pub misperception: f64,
    pub loss_pct: f64,
    /// Expected duration relative to the truthful worker's.
    pub duration_ratio: f64,
    /// Percent gap of the expected accepted wage from the truthful worker's.
    pub wage_gap_pct: f64,
}

/// Inclusive `start, start + step, ..., end`, rounded to 12 decimals so
/// that grid points land exactly on values like 0.5.
pub fn linear_grid(start: f64, end: f64, step: f64) -> Vec<f64> {
    let count = ((end - start) / step).round() as i64;
    (0..=count.max(0))
        .map(|i| ((start + i as f64 * step) * 1e12).round() / 1e12)
        .collect()
}

/// Parses `start:end:step` into a [`linear_grid`].
pub fn parse_grid(s: &str) -> Result<Vec<f64>> {
    let parts: Vec<&str> = s.split(':').collect();
    let bad = || Error::param("grid", format!("expected start:end:step, got `{s}`"));
    if parts.len() != 3 {
        return Err(bad());
    }
    let nums = parts
        .iter()
        .map(|p| p.trim().parse::<f64>().map_err(|_| bad()))
        .collect::<Result<Vec<_>>>()?;
    let (start, end, step) = (nums[0], nums[1], nums[2]);
    if !(step > 0.0) || end < start || !start.is_finite() || !end.is_finite() {
        return Err(bad());
    }
    Ok(linear_grid(start, end, step))
}

struct Outcome {
    welfare: f64,
    duration: f64,
    wage: f64,
}

impl From<PolicyEvaluation> for Outcome {
    fn from(e: PolicyEvaluation) -> Self {
        Self {
            welfare: e.welfare,
            duration: e.duration,
            wage: e.accepted_wage,
        }
    }
}

fn outcome<D: OfferDistribution + ?Sized>(
    d: &D,
    cal: &Calibration,
    belief: &ExtensionSpec,
    mode: Mode,
    opts: SolverOptions,
) -> Result<Outcome> {
    match mode {
        Mode::Exact => Ok(evaluate_belief(d, &cal.params, belief, &cal.truth, opts)?.into()),
        Mode::MonteCarlo { spells, seed, sim } => {
            let policy = PolicyProfile::from_belief(d, &cal.params, belief, &cal.truth, opts)?;
            let s = simulate_many(&policy, &cal.truth, &cal.params, d, spells, seed, sim);
            Ok(Outcome {
                welfare: s.welfare.mean,
                duration: s.duration.mean,
                wage: s.accepted_wage.mean,
            })
        }
    }
}

/// One row per grid value, varying one belief parameter while the other
/// stays at its true value. Rows keep grid order. In Monte Carlo mode every
/// belief shares the seed of the truthful baseline.
pub fn sweep_beliefs<D: OfferDistribution + ?Sized>(
    d: &D,
    cal: &Calibration,
    vary: Vary,
    grid: &[f64],
    mode: Mode,
    opts: SolverOptions,
) -> Result<Vec<SweepRow>> {
    let beliefs = grid
        .iter()
        .map(|&v| vary.belief(&cal.truth, v))
        .collect::<Result<Vec<_>>>()?;
    let base = outcome(d, cal, &cal.truth, mode, opts)?;
    let truth_value = vary.truth_value(&cal.truth);
    beliefs
        .par_iter()
        .zip(grid.par_iter())
        .map(|(belief, &value)| {
            let o = outcome(d, cal, belief, mode, opts)?;
            Ok(SweepRow {
                varied_param: vary.column(),
                belief_value: value,
                misperception: value - truth_value,
                loss_pct: loss_pct(base.welfare, o.welfare),
                duration_ratio: o.duration / base.duration,
                wage_gap_pct: 100.0 * (o.wage - base.wage) / base.wage,
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::closed_form::uniform_w0;
    use crate::dist::Uniform;

    #[test]
    fn calibrate_reference_points() {
        let u = Uniform::standard();
        let z10 = calibrate_z(&u, 0.95, 10.0).unwrap();
        assert!((z10 - 0.805).abs() < 1e-12);
        assert!((uniform_w0(0.95, z10) - 0.9).abs() < 1e-12);
        let z5 = calibrate_z(&u, 0.95, 5.0).unwrap();
        assert!((z5 - 0.42).abs() < 1e-12);
    }

    #[test]
    fn calibrate_infeasible_targets() {
        let u = Uniform::standard();
        assert!(matches!(calibrate_z(&u, 0.95, 1.0), Err(Error::Infeasible(_))));
        assert!(matches!(calibrate_z(&u, 0.95, 0.5), Err(Error::Infeasible(_))));
        assert!(matches!(calibrate_z(&u, 0.95, 1.01), Err(Error::Infeasible(_))));
    }

    #[test]
    fn reference_calibration() {
        let cal = Calibration::reference(&Uniform::standard()).unwrap();
        assert!((cal.params.z() - 0.4025).abs() < 1e-12);
        assert_eq!(cal.params.z(), cal.params.c());
        assert_eq!(cal.params.entitlement(), 10);
        assert_eq!(cal.truth.len(), 25);
    }

    #[test]
    fn grids() {
        let g = linear_grid(0.1, 0.9, 0.05);
        assert_eq!(g.len(), 17);
        assert_eq!(g[8], 0.5);
        assert_eq!(g[16], 0.9);
        assert_eq!(parse_grid("5:45:5").unwrap(), Vary::Len.default_grid());
        assert!(parse_grid("0.1:0.9").is_err());
        assert!(parse_grid("0.1:0.9:0").is_err());
        assert!(parse_grid("a:b:c").is_err());
    }

    #[test]
    fn truth_only_grid_has_no_loss() {
        let u = Uniform::standard();
        let cal = Calibration::reference(&u).unwrap();
        let rows =
            sweep_beliefs(&u, &cal, Vary::Delta, &[0.5], Mode::Exact, SolverOptions::default())
                .unwrap();
        assert_eq!(rows.len(), 1);
        assert!(rows[0].loss_pct.abs() < 1e-12);
        assert_eq!(rows[0].misperception, 0.0);
    }

    #[test]
    fn fractional_lengths_are_rejected() {
        let u = Uniform::standard();
        let cal = Calibration::reference(&u).unwrap();
        assert!(
            sweep_beliefs(&u, &cal, Vary::Len, &[2.5], Mode::Exact, SolverOptions::default())
                .is_err()
        );
    }
}
