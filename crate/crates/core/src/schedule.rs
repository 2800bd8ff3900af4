//! Reservation-wage schedules.
//!
//! Two sequences are solved here. The *basic* schedule `w_R(0..=M)` governs
//! search once no further extension is possible (either it already happened
//! or it never could). The *pre-extension* schedule `w_R^δ(0..=N)` governs
//! search while an extension of length `Δ` may still arrive with per-period
//! probability `δ`.
//!
//! Both start from a state-0 fixed point and then recurse upward through
//! [`upsilon`], the expected value of `max(x, w)` under the offer
//! distribution.

use serde::Serialize;

use crate::dist::OfferDistribution;
use crate::error::{Error, Result};
use crate::params::{required_horizon, ExtensionSpec, MarketParams};

/// Picard iteration controls.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SolverOptions {
    pub tol: f64,
    pub max_iter: usize,
}

impl Default for SolverOptions {
    fn default() -> Self {
        Self {
            tol: 1e-12,
            max_iter: 100_000,
        }
    }
}

/// `Υ(x) = x·F(x) + ∫_x^{w̄} w dF(w)`, i.e. `E[max(x, w)]`.
pub fn upsilon<D: OfferDistribution + ?Sized>(d: &D, x: f64) -> Result<f64> {
    let (low, high) = (d.support_low(), d.support_high());
    if !(low..=high).contains(&x) {
        return Err(Error::Domain { value: x, low, high });
    }
    Ok(expected_max(d, x))
}

/// `E[max(x, w)]` for any real `x`; equals [`upsilon`] on the support.
pub(crate) fn expected_max<D: OfferDistribution + ?Sized>(d: &D, x: f64) -> f64 {
    let high = d.support_high();
    if x >= high {
        x
    } else if x <= d.support_low() {
        d.mean()
    } else {
        x * d.cdf(x) + d.partial_expectation(x, high).expect("x < high")
    }
}

fn picard(map: impl Fn(f64) -> f64, x0: f64, opts: SolverOptions) -> Result<f64> {
    let mut x = x0;
    let mut residual = f64::INFINITY;
    for _ in 0..opts.max_iter {
        let next = map(x);
        residual = (next - x).abs();
        if residual < opts.tol {
            return Ok(x);
        }
        if !residual.is_finite() {
            break;
        }
        x = next;
    }
    Err(Error::NonConvergence {
        iterations: opts.max_iter,
        residual,
    })
}

/// Fixed point of `x ↦ flow·(1-β) + β·Υ(x)`, iterated from `w̲`.
///
/// With `flow = z` this is `w_R(0)`; with `flow = z + c` it is the
/// reservation wage under benefits paid indefinitely.
pub fn solve_w0_basic<D: OfferDistribution + ?Sized>(
    d: &D,
    p: &MarketParams,
    flow: f64,
    opts: SolverOptions,
) -> Result<f64> {
    let beta = p.beta();
    picard(
        |x| flow * (1.0 - beta) + beta * expected_max(d, x),
        d.support_low(),
        opts,
    )
}

/// Extends `w_R(0) = w0` to `w_R(0..=horizon)` via
/// `w_R(n) = (z+c)(1-β) + β·Υ(w_R(n-1))`.
pub fn build_basic_schedule<D: OfferDistribution + ?Sized>(
    d: &D,
    p: &MarketParams,
    w0: f64,
    horizon: usize,
) -> Vec<f64> {
    let beta = p.beta();
    let head = (p.z() + p.c()) * (1.0 - beta);
    let mut out = Vec::with_capacity(horizon + 1);
    out.push(w0);
    for n in 1..=horizon {
        out.push(head + beta * expected_max(d, out[n - 1]));
    }
    out
}

/// `w_R^δ(0)`: fixed point of `x ↦ z(1-β) + βδ·Υ(w_R(Δ)) + β(1-δ)·Υ(x)`.
pub fn solve_w0_extension<D: OfferDistribution + ?Sized>(
    d: &D,
    p: &MarketParams,
    belief: &ExtensionSpec,
    wr_at_len: f64,
    opts: SolverOptions,
) -> Result<f64> {
    let beta = p.beta();
    let delta = belief.delta();
    let head = p.z() * (1.0 - beta) + beta * delta * expected_max(d, wr_at_len);
    picard(
        |x| head + beta * (1.0 - delta) * expected_max(d, x),
        d.support_low(),
        opts,
    )
}

/// Extends `w_R^δ(0) = w0` to `w_R^δ(0..=N)` using the basic schedule for
/// the extended branch.
pub fn build_extension_schedule<D: OfferDistribution + ?Sized>(
    d: &D,
    p: &MarketParams,
    belief: &ExtensionSpec,
    basic: &[f64],
    w0: f64,
) -> Result<Vec<f64>> {
    let n_max = p.entitlement();
    let needed = belief.extended_state(n_max);
    if basic.len() <= needed {
        return Err(Error::Precondition(format!(
            "basic schedule has {} entries but index {} is required",
            basic.len(),
            needed
        )));
    }
    let beta = p.beta();
    let delta = belief.delta();
    let head = (p.z() + p.c()) * (1.0 - beta);
    let mut out = Vec::with_capacity(n_max + 1);
    out.push(w0);
    for n in 1..=n_max {
        let extended = expected_max(d, basic[n - 1 + belief.len()]);
        let not_extended = expected_max(d, out[n - 1]);
        out.push(head + beta * delta * extended + beta * (1.0 - delta) * not_extended);
    }
    Ok(out)
}

/// Reservation wage when benefits never run out; the limit of `w_R(n)`.
pub fn indefinite_benefit_wage<D: OfferDistribution + ?Sized>(
    d: &D,
    p: &MarketParams,
    opts: SolverOptions,
) -> Result<f64> {
    solve_w0_basic(d, p, p.z() + p.c(), opts)
}

/// Solved basic and pre-extension schedules for one belief.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ReservationSchedule {
    basic: Vec<f64>,
    with_extension: Vec<f64>,
    params: MarketParams,
    belief: ExtensionSpec,
    tol: f64,
}

impl ReservationSchedule {
    /// Solves both schedules with the smallest basic horizon that covers the
    /// belief, `N + Δ`.
    pub fn solve<D: OfferDistribution + ?Sized>(
        d: &D,
        p: &MarketParams,
        belief: &ExtensionSpec,
        opts: SolverOptions,
    ) -> Result<Self> {
        Self::solve_with_horizon(d, p, belief, 0, opts)
    }

    /// Like [`solve`](Self::solve) but the basic schedule runs to at least
    /// `horizon`, so it can be shared with another extension length.
    pub fn solve_with_horizon<D: OfferDistribution + ?Sized>(
        d: &D,
        p: &MarketParams,
        belief: &ExtensionSpec,
        horizon: usize,
        opts: SolverOptions,
    ) -> Result<Self> {
        let horizon = horizon.max(required_horizon(p.entitlement(), [belief.len()]));
        let w0 = solve_w0_basic(d, p, p.z(), opts)?;
        let basic = build_basic_schedule(d, p, w0, horizon);
        let w0_ext = solve_w0_extension(d, p, belief, basic[belief.len()], opts)?;
        let with_extension = build_extension_schedule(d, p, belief, &basic, w0_ext)?;
        Ok(Self {
            basic,
            with_extension,
            params: *p,
            belief: *belief,
            tol: opts.tol,
        })
    }

    pub(crate) fn from_parts(
        basic: Vec<f64>,
        with_extension: Vec<f64>,
        params: MarketParams,
        belief: ExtensionSpec,
        tol: f64,
    ) -> Self {
        Self {
            basic,
            with_extension,
            params,
            belief,
            tol,
        }
    }

    /// `w_R(0..=M)`.
    pub fn basic(&self) -> &[f64] {
        &self.basic
    }

    /// `w_R^δ(0..=N)`.
    pub fn with_extension(&self) -> &[f64] {
        &self.with_extension
    }

    pub fn params(&self) -> &MarketParams {
        &self.params
    }

    pub fn belief(&self) -> &ExtensionSpec {
        &self.belief
    }

    pub fn tol(&self) -> f64 {
        self.tol
    }

    /// Value of a job paying `w` forever.
    pub fn job_value(&self, w: f64) -> f64 {
        w / (1.0 - self.params.beta())
    }

    /// `U(n)`, value of unemployment once no extension is possible.
    pub fn unemployment_value(&self, n: usize) -> f64 {
        self.job_value(self.basic[n])
    }

    /// `U^δ(n)`, value of unemployment while an extension may still come.
    pub fn unemployment_value_pre(&self, n: usize) -> f64 {
        self.job_value(self.with_extension[n])
    }

    /// Largest violation of the search cost/benefit identity over both
    /// schedules. See [`reservation_identity_residual`].
    pub fn identity_residual<D: OfferDistribution + ?Sized>(&self, d: &D) -> f64 {
        reservation_identity_residual(d, &self.params, &self.belief, &self.basic, &self.with_extension)
    }
}

/// Checks each reservation wage against the cost/benefit form of its
/// defining equation:
///
/// ```text
/// w(n) - x(n) = δ/r · ∫ [max(w_R(n-1+Δ), w) - w(n)] dF
///             + (1-δ)/r · ∫ [max(w(n-1), w) - w(n)] dF
/// ```
///
/// where `x(n)` is the flow income, `r = 1/β - 1`, and at `n = 0` the
/// previous-state wage is `w(0)` itself and the extended state is `Δ`. The
/// basic schedule is checked with `δ = 0`. Returns the maximum absolute
/// difference between the two sides.
pub fn reservation_identity_residual<D: OfferDistribution + ?Sized>(
    d: &D,
    p: &MarketParams,
    belief: &ExtensionSpec,
    basic: &[f64],
    with_extension: &[f64],
) -> f64 {
    let r = p.interest_rate();
    let high = d.support_high();

    // ∫ [max(keep, w) - offer] dF, split at `keep` the way the identity is
    // usually written: hold `keep` below it, take `w` above it.
    let gain = |keep: f64, offer: f64| -> f64 {
        let f = d.cdf(keep);
        let upper = if keep < high {
            d.partial_expectation(keep.max(d.support_low()), high).unwrap_or(0.0)
        } else {
            0.0
        };
        (keep - offer) * f + upper - offer * (1.0 - f)
    };

    let mut worst: f64 = 0.0;
    for (n, &w) in basic.iter().enumerate() {
        let prev = if n == 0 { w } else { basic[n - 1] };
        let lhs = w - p.flow(n);
        let rhs = gain(prev, w) / r;
        worst = worst.max((lhs - rhs).abs());
    }
    let delta = belief.delta();
    for (n, &w) in with_extension.iter().enumerate() {
        let prev = if n == 0 { w } else { with_extension[n - 1] };
        let Some(&ext) = basic.get(belief.extended_state(n)) else {
            return f64::INFINITY;
        };
        let lhs = w - p.flow(n);
        let rhs = delta / r * gain(ext, w) + (1.0 - delta) / r * gain(prev, w);
        worst = worst.max((lhs - rhs).abs());
    }
    worst
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dist::Uniform;

    fn uniform_w0(beta: f64, z: f64) -> f64 {
        (1.0 - ((1.0 - beta) * (1.0 + beta - 2.0 * beta * z)).sqrt()) / beta
    }

    fn fig3(delta: f64) -> (MarketParams, ExtensionSpec) {
        (
            MarketParams::new(0.95, 0.42, 0.42, 15).unwrap(),
            ExtensionSpec::new(delta, 13).unwrap(),
        )
    }

    #[test]
    fn upsilon_values() {
        let u = Uniform::standard();
        assert_eq!(upsilon(&u, 0.0).unwrap(), 0.5);
        assert_eq!(upsilon(&u, 1.0).unwrap(), 1.0);
        assert!((upsilon(&u, 0.5).unwrap() - 0.625).abs() < 1e-15);
        assert!(matches!(upsilon(&u, 1.5), Err(Error::Domain { .. })));
        assert!(matches!(upsilon(&u, -0.1), Err(Error::Domain { .. })));
    }

    #[test]
    fn w0_basic_matches_closed_form() {
        let u = Uniform::standard();
        let opts = SolverOptions::default();
        let p = MarketParams::new(0.95, 0.42, 0.42, 0).unwrap();
        let w0 = solve_w0_basic(&u, &p, 0.42, opts).unwrap();
        assert!((w0 - 0.8).abs() < 1e-9);
        assert!((uniform_w0(0.95, 0.42) - 0.8).abs() < 1e-12);

        let w0 = solve_w0_basic(&u, &p, 0.805, opts).unwrap();
        assert!((w0 - uniform_w0(0.95, 0.805)).abs() < 1e-9);
        assert!((w0 - 0.9).abs() < 1e-9);
    }

    #[test]
    fn w0_basic_myopic_limit() {
        let u = Uniform::standard();
        let p = MarketParams::new(1e-12, 0.3, 0.1, 0).unwrap();
        let w0 = solve_w0_basic(&u, &p, 0.3, SolverOptions::default()).unwrap();
        assert!((w0 - 0.3).abs() < 1e-9);
    }

    #[test]
    fn w0_basic_reports_nonconvergence() {
        let u = Uniform::standard();
        let p = MarketParams::new(0.95, 0.42, 0.42, 0).unwrap();
        let opts = SolverOptions {
            tol: 1e-12,
            max_iter: 3,
        };
        match solve_w0_basic(&u, &p, 0.42, opts) {
            Err(Error::NonConvergence { iterations, residual }) => {
                assert_eq!(iterations, 3);
                assert!(residual > 1e-12);
            }
            other => panic!("expected nonconvergence, got {other:?}"),
        }
    }

    #[test]
    fn basic_schedule_first_steps() {
        let u = Uniform::standard();
        let p = MarketParams::new(0.95, 0.42, 0.42, 3).unwrap();
        let w = build_basic_schedule(&u, &p, 0.8, 5);
        assert_eq!(w.len(), 6);
        assert!((w[1] - 0.821).abs() < 1e-12);
        assert!((w[1] - w[0] - 0.42 * 0.05).abs() < 1e-10);
    }

    #[test]
    fn zero_benefit_flattens_schedule() {
        let u = Uniform::standard();
        let p = MarketParams::new(0.95, 0.42, 0.0, 3).unwrap();
        let w0 = solve_w0_basic(&u, &p, p.z(), SolverOptions::default()).unwrap();
        for w in build_basic_schedule(&u, &p, w0, 20) {
            assert!((w - w0).abs() < 1e-11);
        }
    }

    #[test]
    fn extension_zero_delta_is_basic() {
        let u = Uniform::standard();
        let (p, _) = fig3(0.0);
        let belief = ExtensionSpec::new(0.0, 13).unwrap();
        let s = ReservationSchedule::solve(&u, &p, &belief, SolverOptions::default()).unwrap();
        for (a, b) in s.with_extension().iter().zip(s.basic()) {
            assert!((a - b).abs() < 1e-10);
        }
    }

    #[test]
    fn extension_full_delta_collapses() {
        let u = Uniform::standard();
        let (p, belief) = fig3(1.0);
        let s = ReservationSchedule::solve(&u, &p, &belief, SolverOptions::default()).unwrap();
        for n in 1..=p.entitlement() {
            assert!((s.with_extension()[n] - s.basic()[n + 13]).abs() < 1e-10);
        }
    }

    #[test]
    fn fig3_anchor_values() {
        let u = Uniform::standard();
        let opts = SolverOptions::default();
        let (p, hi) = fig3(0.5);
        let (_, lo) = fig3(0.1);
        let a = ReservationSchedule::solve(&u, &p, &hi, opts).unwrap();
        let b = ReservationSchedule::solve(&u, &p, &lo, opts).unwrap();
        assert!((a.with_extension()[0] - 0.864).abs() < 5e-3);
        assert!((b.with_extension()[0] - 0.825).abs() < 5e-3);
    }

    #[test]
    fn fig3_ordering_in_delta() {
        let u = Uniform::standard();
        let opts = SolverOptions::default();
        let (p, lo) = fig3(0.1);
        let (_, hi) = fig3(0.9);
        let lo = ReservationSchedule::solve(&u, &p, &lo, opts).unwrap();
        let hi = ReservationSchedule::solve(&u, &p, &hi, opts).unwrap();
        for (a, b) in hi.with_extension().iter().zip(lo.with_extension()) {
            assert!(a > b);
        }
    }

    #[test]
    fn short_basic_schedule_is_rejected() {
        let u = Uniform::standard();
        let (p, belief) = fig3(0.5);
        let basic = build_basic_schedule(&u, &p, 0.8, 10);
        assert!(matches!(
            build_extension_schedule(&u, &p, &belief, &basic, 0.85),
            Err(Error::Precondition(_))
        ));
    }

    #[test]
    fn zero_entitlement_is_legal() {
        let u = Uniform::standard();
        let p = MarketParams::new(0.95, 0.42, 0.42, 0).unwrap();
        let belief = ExtensionSpec::new(0.5, 4).unwrap();
        let s = ReservationSchedule::solve(&u, &p, &belief, SolverOptions::default()).unwrap();
        assert_eq!(s.with_extension().len(), 1);
        assert_eq!(s.basic().len(), 5);
        assert!(s.identity_residual(&u) < 1e-8);
    }

    #[test]
    fn value_accessors_agree() {
        let u = Uniform::standard();
        let (p, belief) = fig3(0.5);
        let s = ReservationSchedule::solve(&u, &p, &belief, SolverOptions::default()).unwrap();
        assert_eq!(s.job_value(s.basic()[3]), s.unemployment_value(3));
        assert!((s.unemployment_value(0) - 16.0).abs() < 1e-8);
        assert_eq!(s.unemployment_value_pre(2), s.job_value(s.with_extension()[2]));
    }

    #[test]
    fn identity_residual_has_power() {
        let u = Uniform::standard();
        let (p, belief) = fig3(0.5);
        let s = ReservationSchedule::solve(&u, &p, &belief, SolverOptions::default()).unwrap();
        assert!(s.identity_residual(&u) < 1e-8);

        let mut bumped = s.with_extension().to_vec();
        bumped[0] += 0.01;
        let r = reservation_identity_residual(&u, &p, &belief, s.basic(), &bumped);
        assert!(r > 1e-4, "residual {r}");
    }

    #[test]
    fn indefinite_benefit_bounds_schedule() {
        let u = Uniform::standard();
        let (p, belief) = fig3(0.5);
        let opts = SolverOptions::default();
        let w_inf = indefinite_benefit_wage(&u, &p, opts).unwrap();
        let mut prev_gap = f64::INFINITY;
        let s = ReservationSchedule::solve_with_horizon(&u, &p, &belief, 60, opts).unwrap();
        for &w in s.basic() {
            assert!(w < w_inf);
            let gap = w_inf - w;
            assert!(gap < prev_gap);
            prev_gap = gap;
        }
    }
}
