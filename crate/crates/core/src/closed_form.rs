//! Closed-form schedules under uniform[0, 1] offers.
//!
//! With `F(w) = w`, `Υ(x) = (1 + x²)/2` and every recursion becomes a
//! quadratic. These formulas serve as an oracle for the iterative solver.

use crate::dist::OfferDistribution;
use crate::error::{Error, Result};
use crate::params::{required_horizon, ExtensionSpec, MarketParams};
use crate::schedule::ReservationSchedule;

/// Economic root of `β/2·x² - x + z(1-β) + β/2 = 0`.
pub fn uniform_w0(beta: f64, z: f64) -> f64 {
    (1.0 - ((1.0 - beta) * (1.0 + beta - 2.0 * beta * z)).sqrt()) / beta
}

/// `w_R^δ(0)` given `w_R(Δ)`. Reduces to [`uniform_w0`] at `δ = 0`.
pub fn uniform_w0_extension(beta: f64, z: f64, delta: f64, wr_at_len: f64) -> f64 {
    let a = beta * (1.0 - delta);
    let disc = 1.0 - a * (beta + 2.0 * z * (1.0 - beta) + beta * delta * wr_at_len * wr_at_len);
    (1.0 - disc.sqrt()) / a
}

/// Builds both schedules from the uniform[0, 1] closed forms. Without a
/// belief the pre-extension schedule is the basic one (`δ = 0`).
pub fn uniform_closed_form<D: OfferDistribution + ?Sized>(
    d: &D,
    p: &MarketParams,
    belief: Option<&ExtensionSpec>,
    horizon: usize,
) -> Result<ReservationSchedule> {
    match d.as_uniform() {
        Some(u) if u.is_standard() => {}
        _ => {
            return Err(Error::Unsupported(
                "closed forms require uniform offers on [0, 1]".into(),
            ))
        }
    }
    let belief = match belief {
        Some(b) => *b,
        None => ExtensionSpec::new(0.0, 1)?,
    };
    let (beta, z, c) = (p.beta(), p.z(), p.c());
    let horizon = horizon.max(required_horizon(p.entitlement(), [belief.len()]));

    let mut basic = Vec::with_capacity(horizon + 1);
    basic.push(uniform_w0(beta, z));
    for n in 1..=horizon {
        let prev: f64 = basic[n - 1];
        basic.push((z + c) * (1.0 - beta) + 0.5 * beta * (1.0 + prev * prev));
    }

    let delta = belief.delta();
    let w0_ext = if delta < 1.0 {
        uniform_w0_extension(beta, z, delta, basic[belief.len()])
    } else {
        // The quadratic degenerates to a linear equation.
        let a = basic[belief.len()];
        z * (1.0 - beta) + 0.5 * beta * (1.0 + a * a)
    };
    let mut ext = Vec::with_capacity(p.entitlement() + 1);
    ext.push(w0_ext);
    for n in 1..=p.entitlement() {
        let post: f64 = basic[n - 1 + belief.len()];
        let prev: f64 = ext[n - 1];
        ext.push(
            (z + c) * (1.0 - beta)
                + 0.5 * beta * (1.0 + delta * post * post + (1.0 - delta) * prev * prev),
        );
    }
    Ok(ReservationSchedule::from_parts(basic, ext, *p, belief, 0.0))
}
