//! Exact evaluation of a threshold policy under the true extension process.
//!
//! A worker solves for reservation wages under a believed extension
//! `(δ_b, Δ_b)` but lives in a world where the extension follows
//! `(δ*, Δ*)`. Welfare, expected duration and the expected accepted wage of
//! that policy satisfy linear recursions over the entitlement state; the
//! only self-reference is at state 0, which is solved in closed form. No
//! simulation is needed.
//!
//! Timing follows the Bellman equations: a *value node* `n` collects the
//! period flow, the extension is realised or not, and an *offer node* is
//! reached next period at state `n-1+Δ*` (extended; `Δ*` from `n = 0`) or
//! `max(n-1, 0)` (not extended). Spells start at value node `N`.

use serde::Serialize;

use crate::dist::OfferDistribution;
use crate::error::{Error, Result};
use crate::params::{required_horizon, ExtensionSpec, MarketParams};
use crate::schedule::{expected_max, ReservationSchedule, SolverOptions};

/// Thresholds a worker follows before and after an extension.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PolicyProfile {
    pre: Vec<f64>,
    post: Vec<f64>,
}

impl PolicyProfile {
    /// `pre` indexed by remaining entitlement `0..=N`, `post` by remaining
    /// entitlement after an extension. Both must be finite and nondecreasing.
    pub fn new(pre: Vec<f64>, post: Vec<f64>) -> Result<Self> {
        check_thresholds("pre_thresholds", &pre)?;
        check_thresholds("post_thresholds", &post)?;
        Ok(Self { pre, post })
    }

    /// Policy of a worker holding `belief`, with post-extension thresholds
    /// long enough for both the belief and `truth`.
    pub fn from_belief<D: OfferDistribution + ?Sized>(
        d: &D,
        p: &MarketParams,
        belief: &ExtensionSpec,
        truth: &ExtensionSpec,
        opts: SolverOptions,
    ) -> Result<Self> {
        let horizon = required_horizon(p.entitlement(), [belief.len(), truth.len()]);
        let s = ReservationSchedule::solve_with_horizon(d, p, belief, horizon, opts)?;
        Ok(Self::from_schedule(&s))
    }

    pub fn from_schedule(s: &ReservationSchedule) -> Self {
        Self {
            pre: s.with_extension().to_vec(),
            post: s.basic().to_vec(),
        }
    }

    pub fn pre_thresholds(&self) -> &[f64] {
        &self.pre
    }

    pub fn post_thresholds(&self) -> &[f64] {
        &self.post
    }

    /// Threshold applied to an offer at state `n`.
    pub fn threshold(&self, extended: bool, n: usize) -> f64 {
        if extended {
            self.post[n]
        } else {
            self.pre[n]
        }
    }
}

fn check_thresholds(field: &'static str, xs: &[f64]) -> Result<()> {
    if xs.is_empty() {
        return Err(Error::param(field, "must not be empty"));
    }
    if xs.iter().any(|x| !x.is_finite()) {
        return Err(Error::param(field, "must be finite"));
    }
    if xs.windows(2).any(|w| w[1] < w[0]) {
        return Err(Error::param(field, "must be nondecreasing"));
    }
    Ok(())
}

/// Expected outcomes of following a policy from each pre-extension state.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PolicyEvaluation {
    /// Expected discounted income from spell start, `J_pre(N)`.
    pub welfare: f64,
    /// Expected number of offers up to and including the accepted one.
    pub duration: f64,
    pub accepted_wage: f64,
    /// `J_pre(0..=N)` at value nodes.
    pub values: Vec<f64>,
    /// `D_pre(0..=N)`.
    pub durations: Vec<f64>,
    /// `M_pre(0..=N)`.
    pub wages: Vec<f64>,
    /// Expected value on reaching a pre-extension offer node, `0..=N`.
    pub offer_values: Vec<f64>,
}

/// `U(n) = w_R(n)/(1-β)` for optimal post-extension search.
pub fn value_post_extension(s: &ReservationSchedule, n: usize) -> f64 {
    s.unemployment_value(n)
}

/// `E[max(U(n), W(w))] = Υ(w_R(n))/(1-β)`.
pub fn offer_value_post_extension<D: OfferDistribution + ?Sized>(
    d: &D,
    s: &ReservationSchedule,
    n: usize,
) -> f64 {
    expected_max(d, s.basic()[n]) / (1.0 - s.params().beta())
}

struct Node {
    value: f64,
    duration: f64,
    wage: f64,
}

/// Offer-node statistics given the value node reached on rejection.
fn offer_node<D: OfferDistribution + ?Sized>(d: &D, beta: f64, threshold: f64, reject: &Node) -> Node {
    let f = d.cdf(threshold);
    let pe = accepted_mass(d, threshold);
    Node {
        value: f * reject.value + pe / (1.0 - beta),
        duration: 1.0 + f * reject.duration,
        wage: pe + f * reject.wage,
    }
}

/// `∫_τ^{w̄} w dF(w)`.
fn accepted_mass<D: OfferDistribution + ?Sized>(d: &D, threshold: f64) -> f64 {
    let high = d.support_high();
    if threshold >= high {
        0.0
    } else {
        d.partial_expectation(threshold.max(d.support_low()), high)
            .expect("threshold below support high")
    }
}

/// Value nodes `0..=upto` of the no-extension chain under `thresholds`.
fn post_chain<D: OfferDistribution + ?Sized>(
    d: &D,
    p: &MarketParams,
    thresholds: &[f64],
    upto: usize,
) -> Result<Vec<Node>> {
    let beta = p.beta();
    let f0 = d.cdf(thresholds[0]);
    if f0 >= 1.0 {
        return Err(Error::Divergence("post-extension duration"));
    }
    let pe0 = accepted_mass(d, thresholds[0]);
    let mut out = Vec::with_capacity(upto + 1);
    out.push(Node {
        value: (p.z() + beta * pe0 / (1.0 - beta)) / (1.0 - beta * f0),
        duration: 1.0 / (1.0 - f0),
        wage: pe0 / (1.0 - f0),
    });
    for m in 1..=upto {
        let next = offer_node(d, beta, thresholds[m - 1], &out[m - 1]);
        out.push(Node {
            value: p.flow(m) + beta * next.value,
            duration: next.duration,
            wage: next.wage,
        });
    }
    Ok(out)
}

/// Evaluates `policy` when extensions truly arrive per `truth`.
pub fn evaluate_policy<D: OfferDistribution + ?Sized>(
    policy: &PolicyProfile,
    truth: &ExtensionSpec,
    p: &MarketParams,
    d: &D,
) -> Result<PolicyEvaluation> {
    let n_max = p.entitlement();
    if policy.pre.len() <= n_max {
        return Err(Error::Precondition(format!(
            "pre-extension thresholds cover {} states, need {}",
            policy.pre.len(),
            n_max + 1
        )));
    }
    let deepest = truth.extended_state(n_max);
    if policy.post.len() <= deepest {
        return Err(Error::Precondition(format!(
            "post-extension thresholds cover {} states, need {}",
            policy.post.len(),
            deepest + 1
        )));
    }

    let beta = p.beta();
    let delta = truth.delta();
    let post_values = post_chain(d, p, &policy.post, deepest)?;
    let post_offer = |m: usize| offer_node(d, beta, policy.post[m], &post_values[m]);

    let mut values = Vec::with_capacity(n_max + 1);
    let mut durations = Vec::with_capacity(n_max + 1);
    let mut wages = Vec::with_capacity(n_max + 1);
    let mut offer_values = Vec::with_capacity(n_max + 1);

    // State 0 returns to itself when no extension arrives.
    let ext = post_offer(truth.extended_state(0));
    let f0 = d.cdf(policy.pre[0]);
    let pe0 = accepted_mass(d, policy.pre[0]);
    let stay = (1.0 - delta) * f0;
    if stay >= 1.0 {
        return Err(Error::Divergence("pre-extension duration"));
    }
    let j0 = (p.z() + beta * delta * ext.value + beta * (1.0 - delta) * pe0 / (1.0 - beta))
        / (1.0 - beta * stay);
    let d0 = (delta * ext.duration + (1.0 - delta)) / (1.0 - stay);
    let m0 = (delta * ext.wage + (1.0 - delta) * pe0) / (1.0 - stay);
    values.push(j0);
    durations.push(d0);
    wages.push(m0);

    for n in 0..=n_max {
        let here = Node {
            value: values[n],
            duration: durations[n],
            wage: wages[n],
        };
        let offer = offer_node(d, beta, policy.pre[n], &here);
        offer_values.push(offer.value);
        if n == n_max {
            break;
        }
        let next = n + 1;
        let ext = post_offer(truth.extended_state(next));
        values.push(p.flow(next) + beta * (delta * ext.value + (1.0 - delta) * offer.value));
        durations.push(delta * ext.duration + (1.0 - delta) * offer.duration);
        wages.push(delta * ext.wage + (1.0 - delta) * offer.wage);
    }

    Ok(PolicyEvaluation {
        welfare: values[n_max],
        duration: durations[n_max],
        accepted_wage: wages[n_max],
        values,
        durations,
        wages,
        offer_values,
    })
}

/// Evaluates the policy implied by `belief` under `truth`.
pub fn evaluate_belief<D: OfferDistribution + ?Sized>(
    d: &D,
    p: &MarketParams,
    belief: &ExtensionSpec,
    truth: &ExtensionSpec,
    opts: SolverOptions,
) -> Result<PolicyEvaluation> {
    let policy = PolicyProfile::from_belief(d, p, belief, truth, opts)?;
    evaluate_policy(&policy, truth, p, d)
}

/// Percent welfare shortfall of the `belief` policy relative to the policy
/// of a worker who knows `truth`.
pub fn welfare_loss<D: OfferDistribution + ?Sized>(
    d: &D,
    p: &MarketParams,
    belief: &ExtensionSpec,
    truth: &ExtensionSpec,
    opts: SolverOptions,
) -> Result<f64> {
    let best = evaluate_belief(d, p, truth, truth, opts)?;
    let held = evaluate_belief(d, p, belief, truth, opts)?;
    Ok(loss_pct(best.welfare, held.welfare))
}

pub(crate) fn loss_pct(best: f64, held: f64) -> f64 {
    100.0 * (best - held) / best
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dist::Uniform;

    fn calibrated() -> MarketParams {
        MarketParams::new(0.95, 0.4025, 0.4025, 10).unwrap()
    }

    fn spec(delta: f64, len: usize) -> ExtensionSpec {
        ExtensionSpec::new(delta, len).unwrap()
    }

    #[test]
    fn post_extension_values() {
        let u = Uniform::standard();
        let p = MarketParams::new(0.95, 0.42, 0.42, 3).unwrap();
        let s = ReservationSchedule::solve(&u, &p, &spec(0.5, 5), SolverOptions::default()).unwrap();
        assert!((value_post_extension(&s, 0) - 16.0).abs() < 1e-8);
        assert!((offer_value_post_extension(&u, &s, 0) - 16.4).abs() < 1e-8);
    }

    #[test]
    fn post_chain_recovers_bellman_values() {
        let u = Uniform::standard();
        let p = calibrated();
        let s = ReservationSchedule::solve(&u, &p, &spec(0.5, 25), SolverOptions::default()).unwrap();
        let chain = post_chain(&u, &p, s.basic(), s.basic().len() - 1).unwrap();
        for (m, node) in chain.iter().enumerate() {
            assert!((node.value - value_post_extension(&s, m)).abs() < 1e-9);
        }
    }

    #[test]
    fn truthful_belief_attains_bellman_value() {
        let u = Uniform::standard();
        let p = calibrated();
        let truth = spec(0.5, 25);
        let opts = SolverOptions::default();
        let s = ReservationSchedule::solve(&u, &p, &truth, opts).unwrap();
        let e = evaluate_policy(&PolicyProfile::from_schedule(&s), &truth, &p, &u).unwrap();
        for n in 0..=p.entitlement() {
            assert!((e.values[n] - s.unemployment_value_pre(n)).abs() < 1e-9);
        }
        assert!(e.duration >= 1.0);
        assert!((0.0..=1.0).contains(&e.accepted_wage));
    }

    #[test]
    fn pessimism_costs_welfare() {
        let u = Uniform::standard();
        let p = calibrated();
        let truth = spec(0.5, 25);
        let opts = SolverOptions::default();
        let best = evaluate_belief(&u, &p, &truth, &truth, opts).unwrap();
        let held = evaluate_belief(&u, &p, &spec(0.1, 25), &truth, opts).unwrap();
        assert!(held.welfare < best.welfare);
        assert!(welfare_loss(&u, &p, &truth, &truth, opts).unwrap().abs() < 1e-10);
        let lo = welfare_loss(&u, &p, &spec(0.1, 25), &truth, opts).unwrap();
        let hi = welfare_loss(&u, &p, &spec(0.9, 25), &truth, opts).unwrap();
        assert!(lo > hi && hi > 0.0);
    }

    #[test]
    fn constant_threshold_duration_is_geometric() {
        let u = Uniform::standard();
        let p = MarketParams::new(0.95, 0.805, 0.0, 4).unwrap();
        let tau = 0.9;
        let policy = PolicyProfile::new(vec![tau; 5], vec![tau; 10]).unwrap();
        let e = evaluate_policy(&policy, &spec(0.0, 3), &p, &u).unwrap();
        assert!((e.duration - 10.0).abs() < 1e-10);
        assert!((e.accepted_wage - 0.95).abs() < 1e-10);
    }

    #[test]
    fn never_accepting_diverges() {
        let u = Uniform::standard();
        let p = MarketParams::new(0.95, 0.4, 0.4, 2).unwrap();
        let policy = PolicyProfile::new(vec![1.0; 3], vec![0.5; 10]).unwrap();
        assert!(matches!(
            evaluate_policy(&policy, &spec(0.0, 3), &p, &u),
            Err(Error::Divergence(_))
        ));
    }

    #[test]
    fn undersized_policy_is_rejected() {
        let u = Uniform::standard();
        let p = MarketParams::new(0.95, 0.4, 0.4, 2).unwrap();
        let policy = PolicyProfile::new(vec![0.8; 3], vec![0.8; 4]).unwrap();
        assert!(matches!(
            evaluate_policy(&policy, &spec(0.5, 3), &p, &u),
            Err(Error::Precondition(_))
        ));
        assert!(PolicyProfile::new(vec![0.9, 0.8], vec![0.8]).is_err());
    }
}
